#ifndef IMGNB_ESTIMATORS_HPP
#define IMGNB_ESTIMATORS_HPP

#include <cstddef>
#include <vector>

#include "imgnb/net.hpp"
#include "imgnb/types.hpp"

namespace imgnb {

struct UserEstimatorConfig {
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    std::vector<std::size_t> hidden = {16, 16};  // 3-layer nets by default
    std::size_t pool_step = 0;                   // 0 -> smallest step with pooled dim <= 64
    TrainConfig train;
};

struct UserTrainLosses {
    std::vector<double> exploit;  // per user, mean loss of the final pass
    std::vector<double> explore;
};

/// One scalar-output network pair per user: the exploit net regresses the
/// arm->user activation probability from concat(arm, context); the explore
/// net regresses the residual of that estimate from the pooled parameter
/// gradient of the exploit net. Users are fully independent.
class UserEstimatorBank {
public:
    UserEstimatorBank(std::size_t m_users, const UserEstimatorConfig& cfg, Rng& rng);

    std::size_t users() const { return exploit_.size(); }
    std::size_t pool_step() const { return pool_step_; }
    std::size_t pooled_dim() const { return pooled_dim_; }

    /// Exploit-net outputs for every user, clipped to [0, 1].
    std::vector<double> estimate_probs(const ArmProfile& arm, const ContextVec& ctx) const;

    /// Explore-net outputs on the pooled exploit-net gradients; unclipped
    /// (gains may be negative). Read-only on both nets.
    std::vector<double> estimate_gains(const ArmProfile& arm, const ContextVec& ctx) const;

    /// One sample per (user, chosen arm): label d_u for the exploit net,
    /// residual d_u - clip(h1) for the explore net, with explore inputs and
    /// targets taken before this round's exploit update. Then runs the
    /// training schedule on both nets of every user.
    UserTrainLosses train_round(const ContextVec& ctx, const std::vector<ArmProfile>& chosen,
                                const std::vector<double>& labels);

    // For tests and instrumentation.
    EstimatorNet& exploit_net(std::size_t u) { return exploit_[u]; }
    const EstimatorNet& exploit_net(std::size_t u) const { return exploit_[u]; }
    EstimatorNet& explore_net(std::size_t u) { return explore_[u]; }
    const ReplayBuffer& exploit_buffer(std::size_t u) const { return exploit_buf_[u]; }
    const ReplayBuffer& explore_buffer(std::size_t u) const { return explore_buf_[u]; }

private:
    std::vector<double> concat_input(const ArmProfile& arm, const ContextVec& ctx) const;

    UserEstimatorConfig cfg_;
    std::size_t pool_step_ = 1;
    std::size_t pooled_dim_ = 0;
    std::vector<EstimatorNet> exploit_;
    std::vector<EstimatorNet> explore_;
    std::vector<ReplayBuffer> exploit_buf_;
    std::vector<ReplayBuffer> explore_buf_;
};

inline double clip01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace imgnb

#endif  // IMGNB_ESTIMATORS_HPP
