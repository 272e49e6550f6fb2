#include "imgnb/gnn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace imgnb {

struct GcnScorer::ChainTrace {
    DenseMatrix y;                    // projected rows, m x p
    DenseMatrix m;                    // after propagation, pre-rectifier
    std::vector<DenseMatrix> acts;    // tail activations; acts[0] = H_G
    std::vector<double> out;          // per-user outputs
};

GcnScorer::GcnScorer(std::size_t m_users, std::size_t input_dim, std::size_t p, std::size_t gamma,
                     std::size_t tail_layers, Rng& rng)
    : input_dim_(input_dim), p_(p), gamma_(gamma), tail_([&] {
          if (tail_layers < 2) throw std::invalid_argument("GcnScorer: tail needs >= 2 layers");
          std::vector<std::size_t> dims(tail_layers, p);
          dims.push_back(1);
          return EstimatorNet(dims, rng);
      }()) {
    if (m_users == 0 || input_dim == 0 || p == 0)
        throw std::invalid_argument("GcnScorer: zero dimension");
    blocks_.reserve(m_users);
    const double a = std::sqrt(3.0) / std::sqrt(static_cast<double>(input_dim));
    for (std::size_t u = 0; u < m_users; ++u) {
        DenseMatrix b(input_dim, p_);
        for (double& v : b.data()) v = rng.uniform(-a, a);
        blocks_.push_back(std::move(b));
    }
}

std::size_t GcnScorer::param_count() const {
    return users() * input_dim_ * p_ + tail_.param_count();
}

DenseMatrix GcnScorer::features_for(const ArmProfile& arm, const ContextVec& ctx) const {
    if (arm.features.size() + ctx.size() != input_dim_)
        throw std::invalid_argument("GcnScorer: concat(arm, context) dim != input dim");
    DenseMatrix f(users(), input_dim_);
    for (std::size_t u = 0; u < users(); ++u) {
        auto row = f.row(u);
        std::size_t i = 0;
        for (double v : arm.features) row[i++] = v;
        for (double v : ctx) row[i++] = v;
    }
    return f;
}

GcnScorer::ChainTrace GcnScorer::run_chain(const DenseMatrix& features,
                                           const UserGraph& g) const {
    if (features.rows() != users() || features.cols() != input_dim_)
        throw std::invalid_argument("GcnScorer: feature matrix must be m x input_dim");
    if (g.size() != users()) throw std::invalid_argument("GcnScorer: graph size != users");

    ChainTrace tr;
    tr.y = DenseMatrix(users(), p_);
    for (std::size_t v = 0; v < users(); ++v) {
        const DenseMatrix& b = blocks_[v];
        auto x = features.row(v);
        auto out = tr.y.row(v);
        for (std::size_t i = 0; i < input_dim_; ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            for (std::size_t j = 0; j < p_; ++j) out[j] += xi * b(i, j);
        }
    }
    tr.m = propagate(g, gamma_, tr.y);

    DenseMatrix h = tr.m;
    relu_inplace(h);
    tr.acts.reserve(tail_.num_layers() + 1);
    tr.acts.push_back(std::move(h));
    for (std::size_t l = 0; l < tail_.num_layers(); ++l) {
        DenseMatrix z = matmul(tr.acts.back(), tail_.layer(l));
        if (l + 1 < tail_.num_layers()) relu_inplace(z);
        tr.acts.push_back(std::move(z));
    }
    const DenseMatrix& last = tr.acts.back();
    tr.out.resize(users());
    for (std::size_t u = 0; u < users(); ++u) tr.out[u] = last(u, 0);
    return tr;
}

ArmScore GcnScorer::forward(int arm_id, const DenseMatrix& features, const UserGraph& g) const {
    ChainTrace tr = run_chain(features, g);
    ArmScore score;
    score.arm_id = arm_id;
    score.per_user = std::move(tr.out);
    double s = 0.0;
    for (double v : score.per_user) s += v * v;
    score.scalar = std::sqrt(s);
    return score;
}

ArmScore GcnScorer::exploit_forward(const ArmProfile& arm, const ContextVec& ctx,
                                    const UserGraph& g) const {
    return forward(arm.id, features_for(arm, ctx), g);
}

ArmScore GcnScorer::explore_forward(const DenseMatrix& grad_input, const UserGraph& g) const {
    return forward(0, grad_input, g);
}

std::vector<double> GcnScorer::backward(const ChainTrace& tr, const DenseMatrix& features,
                                        const DenseMatrix& pmat,
                                        const std::vector<double>& out_weight) const {
    const std::size_t J = tail_.num_layers();

    DenseMatrix delta(users(), 1);
    for (std::size_t u = 0; u < users(); ++u) delta(u, 0) = out_weight[u];

    std::vector<DenseMatrix> tail_grads;
    tail_grads.reserve(J);
    for (std::size_t l = 0; l < J; ++l)
        tail_grads.emplace_back(tail_.layer(l).rows(), tail_.layer(l).cols());

    for (std::size_t l = J; l-- > 0;) {
        tail_grads[l] = matmul_transpose_a(tr.acts[l], delta);
        delta = matmul_transpose_b(delta, tail_.layer(l));
        // rectifier mask of the layer input (post-activation values)
        const DenseMatrix& act = tr.acts[l];
        for (std::size_t i = 0; i < delta.size(); ++i)
            if (act.data()[i] <= 0.0) delta.data()[i] = 0.0;
    }

    // delta now holds dL/dM (the mask of H_G = relu(M) was applied above);
    // mix back through the propagation operator, which is symmetric.
    DenseMatrix dy = matmul(pmat, delta);

    std::vector<double> flat;
    flat.reserve(param_count());
    for (std::size_t v = 0; v < users(); ++v) {
        auto x = features.row(v);
        auto d = dy.row(v);
        for (std::size_t i = 0; i < input_dim_; ++i)
            for (std::size_t j = 0; j < p_; ++j) flat.push_back(x[i] * d[j]);
    }
    for (const DenseMatrix& g : tail_grads)
        flat.insert(flat.end(), g.data().begin(), g.data().end());
    return flat;
}

DenseMatrix GcnScorer::exploration_input(const ArmProfile& arm, const ContextVec& ctx,
                                         const UserGraph& g, std::size_t pool_step) const {
    if (pool_step == 0) throw std::invalid_argument("exploration_input: pool_step must be >= 1");
    const DenseMatrix features = features_for(arm, ctx);
    const ChainTrace tr = run_chain(features, g);
    const DenseMatrix pmat = propagate(g, gamma_, DenseMatrix::identity(users()));

    const std::size_t q = (param_count() + pool_step - 1) / pool_step;
    DenseMatrix out(users(), q);
    std::vector<double> weight(users(), 0.0);
    for (std::size_t u = 0; u < users(); ++u) {
        weight[u] = 1.0;
        const std::vector<double> flat = backward(tr, features, pmat, weight);
        weight[u] = 0.0;
        const std::vector<double> pooled = avg_pool(flat, pool_step);
        auto row = out.row(u);
        for (std::size_t j = 0; j < q; ++j) row[j] = pooled[j];
    }
    return out;
}

void GcnScorer::append_sample(GcnSample sample, std::size_t cap) {
    if (sample.support.empty()) return;  // contributes nothing to the loss
    if (sample.support.size() != sample.targets.size())
        throw std::invalid_argument("append_sample: support/target size mismatch");
    if (!sample.pmat)
        sample.pmat = std::make_shared<const DenseMatrix>(
            propagate(*sample.graph, gamma_, DenseMatrix::identity(users())));
    samples_.push_back(std::move(sample));
    if (cap > 0 && samples_.size() > cap)
        samples_.erase(samples_.begin(), samples_.end() - cap);
}

double GcnScorer::train(const TrainConfig& cfg) {
    if (samples_.empty()) return 0.0;

    double last_pass = 0.0;
    std::vector<double> weight(users());
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        double sum = 0.0;
        for (std::size_t si = 0; si < samples_.size(); ++si) {
            const GcnSample& s = samples_[si];
            const ChainTrace tr = run_chain(s.features, *s.graph);
            std::fill(weight.begin(), weight.end(), 0.0);
            double loss = 0.0;
            for (std::size_t k = 0; k < s.support.size(); ++k) {
                const std::size_t u = s.support[k];
                const double d = tr.out[u] - s.targets[k];
                loss += d * d;
                weight[u] += 2.0 * d;
            }
            if (!std::isfinite(loss))
                throw std::runtime_error("gnn training diverged on arm " +
                                         std::to_string(s.arm_id));
            sum += loss;
            const std::vector<double> grad = backward(tr, s.features, *s.pmat, weight);
            std::size_t idx = 0;
            for (DenseMatrix& b : blocks_)
                for (double& v : b.data()) v -= cfg.lr * grad[idx++];
            for (std::size_t l = 0; l < tail_.num_layers(); ++l)
                for (double& v : tail_.layer(l).data()) v -= cfg.lr * grad[idx++];
        }
        last_pass = sum / static_cast<double>(samples_.size());
    }
    return last_pass;
}

}  // namespace imgnb
