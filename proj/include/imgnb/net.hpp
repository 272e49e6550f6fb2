#ifndef IMGNB_NET_HPP
#define IMGNB_NET_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "imgnb/matrix.hpp"
#include "imgnb/rng.hpp"

namespace imgnb {

/// Fully connected network without bias terms: J weight matrices chained as
/// y = x W_1 ... W_J, rectifier on every hidden layer, identity on the
/// output layer. Weight matrix l has shape (in_l x out_l) and inputs are row
/// vectors, so a forward pass is a chain of row-vector/matrix products.
class EstimatorNet {
public:
    /// layer_dims = (input dim, hidden dims..., output dim); needs at least
    /// one hidden layer. Weights drawn uniform in +-sqrt(3)/sqrt(fan_in),
    /// i.e. zero mean with standard deviation 1/sqrt(fan_in).
    EstimatorNet(std::vector<std::size_t> layer_dims, Rng& rng);

    /// All-zero weights; mostly for tests and explicit setups.
    static EstimatorNet zeros(std::vector<std::size_t> layer_dims);

    std::size_t input_dim() const { return dims_.front(); }
    std::size_t output_dim() const { return dims_.back(); }
    std::size_t num_layers() const { return weights_.size(); }  // J
    std::size_t param_count() const;

    const std::vector<std::size_t>& layer_dims() const { return dims_; }
    DenseMatrix& layer(std::size_t l) { return weights_[l]; }
    const DenseMatrix& layer(std::size_t l) const { return weights_[l]; }

private:
    EstimatorNet() = default;
    std::vector<std::size_t> dims_;
    std::vector<DenseMatrix> weights_;
};

/// Gradient of a network output w.r.t. every parameter, flattened in layer
/// order (layer 0 first) and row-major within each layer. The length always
/// equals the network's param_count().
struct FlatGradient {
    std::vector<double> values;
};

/// Parameter count of a network with the given layer dims.
std::size_t param_count_for(const std::vector<std::size_t>& layer_dims);

/// Forward pass; rejects inputs whose length differs from the input dim.
std::vector<double> fc_forward(const EstimatorNet& net, std::span<const double> x);

/// One full-gradient descent step on the squared loss sum((y - target)^2)
/// for this sample. Returns the pre-update loss. Throws std::runtime_error
/// if the loss is non-finite.
double sgd_step(EstimatorNet& net, std::span<const double> x, std::span<const double> target,
                double lr);

/// d(sum of outputs)/d(params) at x, without modifying the net. For the
/// scalar-output nets used as h and f tails this is the plain output
/// gradient.
FlatGradient grad_wrt_params(const EstimatorNet& net, std::span<const double> x);

/// Mean over windows of `step` consecutive entries; a trailing partial
/// window is averaged over its own length. Output length ceil(n/step).
std::vector<double> avg_pool(std::span<const double> v, std::size_t step);

/// Per-round training schedule: plain GD, `epochs` full passes over the
/// retained samples, one sgd_step per sample in insertion order.
struct TrainConfig {
    double lr = 0.01;
    std::size_t epochs = 10;
    std::size_t buffer = 256;  // most recent samples kept
};

struct Sample {
    std::vector<double> x;
    std::vector<double> target;
};

/// Keeps the `cap` most recent samples in insertion order.
class ReplayBuffer {
public:
    void push(Sample s, std::size_t cap);
    const std::vector<Sample>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }

private:
    std::vector<Sample> items_;
};

/// Runs the schedule on the buffer; returns the mean pre-update loss of the
/// final pass (0 when the buffer is empty).
double train_on_buffer(EstimatorNet& net, const ReplayBuffer& buf, const TrainConfig& cfg);

}  // namespace imgnb

#endif  // IMGNB_NET_HPP
