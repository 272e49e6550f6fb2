#include "imgnb/estimators.hpp"

#include <stdexcept>
#include <string>

namespace imgnb {

UserEstimatorBank::UserEstimatorBank(std::size_t m_users, const UserEstimatorConfig& cfg, Rng& rng)
    : cfg_(cfg) {
    if (m_users == 0) throw std::invalid_argument("UserEstimatorBank: no users");
    if (cfg.d1 == 0 || cfg.d2 == 0)
        throw std::invalid_argument("UserEstimatorBank: d1 and d2 must be positive");

    std::vector<std::size_t> exploit_dims;
    exploit_dims.push_back(cfg.d1 + cfg.d2);
    exploit_dims.insert(exploit_dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    exploit_dims.push_back(1);

    // Pool step sized so the explore nets stay small (pooled dim <= 64)
    // unless the caller pins one explicitly.
    const std::size_t h1_params = param_count_for(exploit_dims);
    pool_step_ = cfg.pool_step > 0 ? cfg.pool_step : (h1_params + 63) / 64;
    if (pool_step_ == 0) pool_step_ = 1;
    pooled_dim_ = (h1_params + pool_step_ - 1) / pool_step_;

    std::vector<std::size_t> explore_dims;
    explore_dims.push_back(pooled_dim_);
    explore_dims.insert(explore_dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    explore_dims.push_back(1);

    exploit_.reserve(m_users);
    explore_.reserve(m_users);
    for (std::size_t u = 0; u < m_users; ++u) {
        exploit_.emplace_back(exploit_dims, rng);
        explore_.emplace_back(explore_dims, rng);
    }
    exploit_buf_.resize(m_users);
    explore_buf_.resize(m_users);
}

std::vector<double> UserEstimatorBank::concat_input(const ArmProfile& arm,
                                                    const ContextVec& ctx) const {
    if (arm.features.size() != cfg_.d1)
        throw std::invalid_argument("estimator input: arm feature dim != d1");
    if (ctx.size() != cfg_.d2)
        throw std::invalid_argument("estimator input: context dim != d2");
    std::vector<double> x;
    x.reserve(cfg_.d1 + cfg_.d2);
    x.insert(x.end(), arm.features.begin(), arm.features.end());
    x.insert(x.end(), ctx.begin(), ctx.end());
    return x;
}

std::vector<double> UserEstimatorBank::estimate_probs(const ArmProfile& arm,
                                                      const ContextVec& ctx) const {
    const std::vector<double> x = concat_input(arm, ctx);
    std::vector<double> out(users());
    for (std::size_t u = 0; u < users(); ++u) out[u] = clip01(fc_forward(exploit_[u], x)[0]);
    return out;
}

std::vector<double> UserEstimatorBank::estimate_gains(const ArmProfile& arm,
                                                      const ContextVec& ctx) const {
    const std::vector<double> x = concat_input(arm, ctx);
    std::vector<double> out(users());
    for (std::size_t u = 0; u < users(); ++u) {
        const FlatGradient g = grad_wrt_params(exploit_[u], x);
        const std::vector<double> pooled = avg_pool(g.values, pool_step_);
        out[u] = fc_forward(explore_[u], pooled)[0];
    }
    return out;
}

UserTrainLosses UserEstimatorBank::train_round(const ContextVec& ctx,
                                               const std::vector<ArmProfile>& chosen,
                                               const std::vector<double>& labels) {
    if (labels.size() != users())
        throw std::invalid_argument("train_round: labels length != user count");

    UserTrainLosses losses;
    losses.exploit.resize(users(), 0.0);
    losses.explore.resize(users(), 0.0);

    for (std::size_t u = 0; u < users(); ++u) {
        // Explore inputs and targets are taken at the pre-update exploit
        // parameters for every chosen arm, before any training this round.
        for (const ArmProfile& arm : chosen) {
            const std::vector<double> x = concat_input(arm, ctx);
            const double d = labels[u];

            const FlatGradient g = grad_wrt_params(exploit_[u], x);
            Sample explore_sample;
            explore_sample.x = avg_pool(g.values, pool_step_);
            explore_sample.target = {d - clip01(fc_forward(exploit_[u], x)[0])};
            explore_buf_[u].push(std::move(explore_sample), cfg_.train.buffer);

            exploit_buf_[u].push(Sample{x, {d}}, cfg_.train.buffer);
        }
        try {
            losses.exploit[u] = train_on_buffer(exploit_[u], exploit_buf_[u], cfg_.train);
            losses.explore[u] = train_on_buffer(explore_[u], explore_buf_[u], cfg_.train);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("user " + std::to_string(u) + ": " + e.what());
        }
    }
    return losses;
}

}  // namespace imgnb
