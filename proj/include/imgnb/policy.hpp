#ifndef IMGNB_POLICY_HPP
#define IMGNB_POLICY_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "imgnb/env.hpp"
#include "imgnb/estimators.hpp"
#include "imgnb/gnn.hpp"
#include "imgnb/types.hpp"

namespace imgnb {

/// The L arms with the largest scores, ties broken by ascending arm id,
/// returned best first. Rejects L outside [1, n].
std::vector<int> select_top_l(std::span<const double> scores, std::size_t L);

/// Campaign-side accounting: activated-user set, distinct spread and the
/// per-arm selection history.
class CampaignState {
public:
    struct RewardResult {
        int reward = 0;
        std::vector<double> labels;  // d_u, 1 exactly for newly seen users
    };

    /// R_t = newly seen users in the union; labels follow; the seen set is
    /// updated afterwards. Does not advance the round counter.
    RewardResult compute_round_reward(const std::set<int>& union_activations,
                                      std::size_t m_users);

    void advance(const std::vector<int>& chosen, int reward, std::size_t n_arms);

    int round_index() const { return t_; }
    long cumulative_spread() const { return cumulative_; }
    const std::set<int>& seen_users() const { return seen_; }
    int prev_reward() const { return prev_reward_; }
    int last_chosen(int arm) const { return last_chosen_.empty() ? 0 : last_chosen_[arm]; }

private:
    int t_ = 0;
    std::set<int> seen_;
    long cumulative_ = 0;
    int prev_reward_ = -1;  // -1 until a round completes
    std::vector<int> last_chosen_;   // round the arm was last selected, 0 = never
    std::vector<double> last_reward_;  // last observed per-arm reward
};

/// Inputs of the boosted-exploration variant for one selection.
struct BoostHistory {
    int t = 1;                      // round being selected
    int prev_reward = -1;           // R_{t-1}; -1 when no round has completed
    std::vector<bool> chosen_prev;  // arm chosen in round t-1
    std::vector<int> last_chosen;   // round of last selection, 0 = never
};

/// If the previous round's reward was zero, adds
/// factor * sqrt(rounds since last selection) to every arm that was not
/// chosen in the previous round. factor = 0 is an exact no-op.
std::vector<double> boost_exploration(std::vector<double> bonus, const BoostHistory& h,
                                      double factor);

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual std::vector<int> select(int t, const ContextVec& ctx) = 0;
    virtual void observe(const RoundRecord& rec) = 0;
};

/// Uniform sampling without replacement from a seeded stream.
class RandomPolicy : public Policy {
public:
    RandomPolicy(std::size_t n_arms, std::size_t L, std::uint64_t seed);
    std::string name() const override { return "random"; }
    std::vector<int> select(int t, const ContextVec& ctx) override;
    void observe(const RoundRecord&) override {}

private:
    std::size_t n_;
    std::size_t L_;
    Rng rng_;
};

std::vector<int> random_select(Rng& rng, std::size_t n, std::size_t L);

struct LinUcbConfig {
    double lambda = 1.0;  // ridge regularization
    double alpha = 1.0;   // exploration width
    std::size_t L = 1;
};

/// Ridge-regression UCB on concat(arm, context) with one shared model; each
/// chosen arm feeds back its own reward (its newly activated user count).
class LinUcbPolicy : public Policy {
public:
    LinUcbPolicy(std::vector<ArmProfile> arms, std::size_t d2, const LinUcbConfig& cfg);
    std::string name() const override { return "linucb"; }
    std::vector<int> select(int t, const ContextVec& ctx) override;
    void observe(const RoundRecord& rec) override;

    std::vector<double> scores(const ContextVec& ctx) const;
    std::vector<double> theta() const;

private:
    std::vector<double> concat(const ArmProfile& arm, const ContextVec& ctx) const;

    std::vector<ArmProfile> arms_;
    std::size_t dim_;
    LinUcbConfig cfg_;
    DenseMatrix a_;           // lambda I + sum x x^T
    std::vector<double> b_;   // sum r x
};

struct ImGnbConfig {
    std::size_t L = 1;
    double bandwidth = 5.0;
    std::size_t gamma = 3;
    std::optional<std::size_t> gamma_explore;  // unset -> same as gamma
    std::size_t p = 16;
    std::size_t tail_layers = 3;
    std::size_t gnn_pool_step = 100;
    bool all_user_negatives = false;
    double boost_factor = 0.0;
    UserEstimatorConfig user;  // d1/d2/hidden/pool_step + training schedule
    TrainConfig gnn_train;
};

/// The full graph-neural bandit: per-user pre-estimators parameterize the
/// per-arm exploitation/exploration graphs, the two GCN scorers refine them
/// into r-hat and b-hat, and top-L selection runs on their sum.
class ImGnbPolicy : public Policy {
public:
    ImGnbPolicy(std::vector<ArmProfile> arms, std::size_t m_users, const ImGnbConfig& cfg,
                std::uint64_t seed);
    std::string name() const override { return "imgnb"; }
    std::vector<int> select(int t, const ContextVec& ctx) override;
    void observe(const RoundRecord& rec) override;

    /// Scores of the most recent select(): r-hat + (possibly boosted) b-hat.
    const std::vector<double>& last_scores() const { return last_scores_; }
    const std::vector<double>& last_exploit() const { return last_exploit_; }
    const std::vector<double>& last_bonus() const { return last_bonus_; }

    UserEstimatorBank& bank() { return bank_; }
    GcnScorer& exploit_scorer() { return f1_; }
    GcnScorer& explore_scorer() { return f2_; }

private:
    struct ArmCache {
        std::shared_ptr<const UserGraph> g1;
        std::shared_ptr<const UserGraph> g2;
        DenseMatrix grad_input;
        std::vector<double> p_hat;  // pre-update per-user estimates
    };

    std::vector<ArmProfile> arms_;
    ImGnbConfig cfg_;
    Rng rng_;              // init order matters: consumed by bank_/f1_/f2_
    UserEstimatorBank bank_;
    GcnScorer f1_;
    GcnScorer f2_;
    std::vector<ArmCache> cache_;
    std::vector<double> last_scores_;
    std::vector<double> last_exploit_;
    std::vector<double> last_bonus_;
    BoostHistory hist_;
};

/// One full campaign round: sample the context, let the policy pick L arms,
/// trigger the environment, account the distinct-spread reward, then hand
/// the record back to the policy for training.
RoundRecord run_round(Policy& policy, Environment& env, CampaignState& state);

}  // namespace imgnb

#endif  // IMGNB_POLICY_HPP
