#ifndef IMGNB_GNN_HPP
#define IMGNB_GNN_HPP

#include <cstddef>
#include <memory>
#include <vector>

#include "imgnb/graph.hpp"
#include "imgnb/net.hpp"
#include "imgnb/types.hpp"

namespace imgnb {

/// Per-arm score: one refined estimate per user plus its Euclidean norm,
/// which is the scalar the selection rule consumes.
struct ArmScore {
    int arm_id = 0;
    std::vector<double> per_user;
    double scalar = 0.0;
};

/// One retained training sample for a scorer: the per-row inputs, the graph
/// it was scored under, and targets restricted to the support users.
struct GcnSample {
    int arm_id = 0;                           // provenance, for diagnostics
    DenseMatrix features;                     // m x input_dim
    std::shared_ptr<const UserGraph> graph;
    std::vector<std::size_t> support;         // users contributing to the loss
    std::vector<double> targets;              // aligned with support
    std::shared_ptr<const DenseMatrix> pmat;  // cached S^gamma; filled on append
};

/// Simplified graph-convolutional scorer: per-user projection blocks realize
/// the block-diagonal feature/weight product, gamma hops of the normalized
/// adjacency mix the projected rows, a rectifier and a shared FC tail map
/// each mixed row to one scalar. Used twice: the exploitation scorer reads
/// concat(arm, context) rows, the exploration scorer reads pooled-gradient
/// rows.
class GcnScorer {
public:
    /// tail_layers is the number of weight matrices in the FC tail (>= 2);
    /// hidden tail widths all equal p.
    GcnScorer(std::size_t m_users, std::size_t input_dim, std::size_t p, std::size_t gamma,
              std::size_t tail_layers, Rng& rng);

    std::size_t users() const { return blocks_.size(); }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t proj_dim() const { return p_; }
    std::size_t gamma() const { return gamma_; }
    std::size_t param_count() const;

    /// m identical rows of concat(arm, context); the exploitation input.
    DenseMatrix features_for(const ArmProfile& arm, const ContextVec& ctx) const;

    /// Full chain on arbitrary per-row inputs (rows = users).
    ArmScore forward(int arm_id, const DenseMatrix& features, const UserGraph& g) const;

    ArmScore exploit_forward(const ArmProfile& arm, const ContextVec& ctx,
                             const UserGraph& g) const;

    /// Row u = pooled gradient of this scorer's user-u output w.r.t. all of
    /// its parameters, at the given input. Does not modify the scorer.
    DenseMatrix exploration_input(const ArmProfile& arm, const ContextVec& ctx,
                                  const UserGraph& g, std::size_t pool_step) const;

    ArmScore explore_forward(const DenseMatrix& grad_input, const UserGraph& g) const;

    /// Appends a sample (dropped immediately if the support is empty).
    void append_sample(GcnSample sample, std::size_t cap);

    /// Training schedule over the retained samples: epochs full passes, one
    /// full-gradient step per sample on the squared loss over its support.
    /// Returns the mean pre-update loss of the final pass.
    double train(const TrainConfig& cfg);

    const std::vector<GcnSample>& samples() const { return samples_; }

    // Parameter access for tests and hand-set instances.
    std::vector<DenseMatrix>& blocks() { return blocks_; }
    const std::vector<DenseMatrix>& blocks() const { return blocks_; }
    EstimatorNet& tail() { return tail_; }
    const EstimatorNet& tail() const { return tail_; }

private:
    struct ChainTrace;
    ChainTrace run_chain(const DenseMatrix& features, const UserGraph& g) const;
    /// Gradient of sum_u out_weight[u] * output_u, flattened blocks-first
    /// (row-major within each block) then tail layers (row-major).
    std::vector<double> backward(const ChainTrace& tr, const DenseMatrix& features,
                                 const DenseMatrix& pmat,
                                 const std::vector<double>& out_weight) const;

    std::size_t input_dim_;
    std::size_t p_;
    std::size_t gamma_;
    std::vector<DenseMatrix> blocks_;  // per user, input_dim x p
    EstimatorNet tail_;
    std::vector<GcnSample> samples_;
};

}  // namespace imgnb

#endif  // IMGNB_GNN_HPP
