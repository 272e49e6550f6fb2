#include "imgnb/net.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace imgnb {

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
    if (dims.size() < 3)
        throw std::invalid_argument("EstimatorNet: need at least one hidden layer");
    for (std::size_t d : dims)
        if (d == 0) throw std::invalid_argument("EstimatorNet: zero layer dimension");
}

// Forward keeping pre-activations of each layer; acts[l] is the input to
// layer l, acts.back() the network output.
struct ForwardTrace {
    std::vector<std::vector<double>> acts;
};

ForwardTrace forward_trace(const EstimatorNet& net, std::span<const double> x) {
    if (x.size() != net.input_dim())
        throw std::invalid_argument("fc_forward: input length " + std::to_string(x.size()) +
                                    " != input dim " + std::to_string(net.input_dim()));
    ForwardTrace tr;
    tr.acts.reserve(net.num_layers() + 1);
    tr.acts.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const DenseMatrix& w = net.layer(l);
        const std::vector<double>& in = tr.acts.back();
        std::vector<double> out(w.cols(), 0.0);
        for (std::size_t i = 0; i < w.rows(); ++i) {
            const double xi = in[i];
            if (xi == 0.0) continue;
            for (std::size_t j = 0; j < w.cols(); ++j) out[j] += xi * w(i, j);
        }
        if (l + 1 < net.num_layers())
            for (double& v : out)
                if (v < 0.0) v = 0.0;
        tr.acts.push_back(std::move(out));
    }
    return tr;
}

// Backprop from dL/dy. Accumulates layer gradients into grads (same shapes
// as the weights) when grads != nullptr.
void backward_from(const EstimatorNet& net, const ForwardTrace& tr, std::vector<double> delta,
                   std::vector<DenseMatrix>* grads) {
    for (std::size_t l = net.num_layers(); l-- > 0;) {
        const DenseMatrix& w = net.layer(l);
        const std::vector<double>& in = tr.acts[l];
        if (grads) {
            DenseMatrix& g = (*grads)[l];
            for (std::size_t i = 0; i < w.rows(); ++i) {
                const double xi = in[i];
                if (xi == 0.0) continue;
                for (std::size_t j = 0; j < w.cols(); ++j) g(i, j) += xi * delta[j];
            }
        }
        if (l == 0) break;
        std::vector<double> prev(w.rows(), 0.0);
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < w.cols(); ++j) s += w(i, j) * delta[j];
            prev[i] = s;
        }
        // rectifier subgradient: 0 at 0
        const std::vector<double>& act = tr.acts[l];
        for (std::size_t i = 0; i < prev.size(); ++i)
            if (act[i] <= 0.0) prev[i] = 0.0;
        delta = std::move(prev);
    }
}

}  // namespace

EstimatorNet::EstimatorNet(std::vector<std::size_t> layer_dims, Rng& rng) {
    check_dims(layer_dims);
    dims_ = std::move(layer_dims);
    weights_.reserve(dims_.size() - 1);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        DenseMatrix w(dims_[l], dims_[l + 1]);
        const double a = std::sqrt(3.0) / std::sqrt(static_cast<double>(dims_[l]));
        for (double& v : w.data()) v = rng.uniform(-a, a);
        weights_.push_back(std::move(w));
    }
}

EstimatorNet EstimatorNet::zeros(std::vector<std::size_t> layer_dims) {
    check_dims(layer_dims);
    EstimatorNet net;
    net.dims_ = std::move(layer_dims);
    for (std::size_t l = 0; l + 1 < net.dims_.size(); ++l)
        net.weights_.emplace_back(net.dims_[l], net.dims_[l + 1]);
    return net;
}

std::size_t EstimatorNet::param_count() const {
    std::size_t n = 0;
    for (const DenseMatrix& w : weights_) n += w.size();
    return n;
}

std::size_t param_count_for(const std::vector<std::size_t>& layer_dims) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) n += layer_dims[l] * layer_dims[l + 1];
    return n;
}

std::vector<double> fc_forward(const EstimatorNet& net, std::span<const double> x) {
    return forward_trace(net, x).acts.back();
}

double sgd_step(EstimatorNet& net, std::span<const double> x, std::span<const double> target,
                double lr) {
    if (target.size() != net.output_dim())
        throw std::invalid_argument("sgd_step: target length != output dim");
    if (lr <= 0.0) throw std::invalid_argument("sgd_step: lr must be positive");

    ForwardTrace tr = forward_trace(net, x);
    const std::vector<double>& y = tr.acts.back();
    double loss = 0.0;
    std::vector<double> delta(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double d = y[j] - target[j];
        loss += d * d;
        delta[j] = 2.0 * d;
    }
    if (!std::isfinite(loss))
        throw std::runtime_error("sgd_step: non-finite loss, training aborted");

    std::vector<DenseMatrix> grads;
    grads.reserve(net.num_layers());
    for (std::size_t l = 0; l < net.num_layers(); ++l)
        grads.emplace_back(net.layer(l).rows(), net.layer(l).cols());
    backward_from(net, tr, std::move(delta), &grads);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        DenseMatrix& w = net.layer(l);
        const DenseMatrix& g = grads[l];
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] -= lr * g.data()[i];
    }
    return loss;
}

FlatGradient grad_wrt_params(const EstimatorNet& net, std::span<const double> x) {
    ForwardTrace tr = forward_trace(net, x);
    std::vector<DenseMatrix> grads;
    grads.reserve(net.num_layers());
    for (std::size_t l = 0; l < net.num_layers(); ++l)
        grads.emplace_back(net.layer(l).rows(), net.layer(l).cols());
    backward_from(net, tr, std::vector<double>(net.output_dim(), 1.0), &grads);

    FlatGradient out;
    out.values.reserve(net.param_count());
    for (const DenseMatrix& g : grads)
        out.values.insert(out.values.end(), g.data().begin(), g.data().end());
    return out;
}

std::vector<double> avg_pool(std::span<const double> v, std::size_t step) {
    if (step == 0) throw std::invalid_argument("avg_pool: step must be >= 1");
    std::vector<double> out;
    out.reserve((v.size() + step - 1) / step);
    for (std::size_t start = 0; start < v.size(); start += step) {
        const std::size_t end = std::min(start + step, v.size());
        double s = 0.0;
        for (std::size_t i = start; i < end; ++i) s += v[i];
        out.push_back(s / static_cast<double>(end - start));
    }
    return out;
}

void ReplayBuffer::push(Sample s, std::size_t cap) {
    items_.push_back(std::move(s));
    if (cap > 0 && items_.size() > cap) items_.erase(items_.begin(), items_.end() - cap);
}

double train_on_buffer(EstimatorNet& net, const ReplayBuffer& buf, const TrainConfig& cfg) {
    if (buf.size() == 0) return 0.0;
    double last_pass = 0.0;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        double sum = 0.0;
        for (const Sample& s : buf.items()) sum += sgd_step(net, s.x, s.target, cfg.lr);
        last_pass = sum / static_cast<double>(buf.size());
    }
    return last_pass;
}

}  // namespace imgnb
