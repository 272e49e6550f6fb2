#ifndef IMGNB_ENV_HPP
#define IMGNB_ENV_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "imgnb/kmeans.hpp"
#include "imgnb/types.hpp"

namespace imgnb {

/// Cascade event log: one diffusion event per line, plus the pool the round
/// contexts are sampled from. See load_event_log for the exact grammar.
struct EventLog {
    struct Event {
        int influencer = 0;
        ContextVec context;
        std::vector<int> users;  // activated raw users
    };
    std::vector<Event> events;
    std::vector<ContextVec> context_pool;  // one entry per event
    int raw_user_count = 0;
    int arm_count = 0;
    std::size_t d2 = 0;
};

/// Parses the `#eventlog v1 arms=<n> d2=<d2>` header and the tab-separated
/// event lines `<influencer>\t<c_1,...,c_d2>\t<uid_1,...,uid_k>`. Malformed
/// input is rejected with the offending line number; an empty log is
/// rejected.
EventLog load_event_log(const std::string& path);
void save_event_log(const EventLog& log, std::ostream& os);
void save_event_log_file(const EventLog& log, const std::string& path);

/// `<raw_uid>\t<cluster_id>` lines.
void save_cluster_map(const ClusterMap& map, std::ostream& os);
ClusterMap load_cluster_map(const std::string& path);

/// Per-raw-user topic distribution: the normalized sum of the contexts of
/// the events the user appears in.
std::vector<std::vector<double>> activity_vectors(const EventLog& log);

/// Parameters of the planted synthetic world.
struct SyntheticConfig {
    std::size_t arms = 10;
    std::size_t users = 20;
    std::size_t d1 = 10;
    std::size_t d2 = 10;
    std::size_t groups = 4;        // planted communities
    std::size_t context_pool = 20;
    double base_rate = 0.05;       // activation probability scale
    double affinity = 6.0;         // community alignment strength
    double offset = 2.0;           // logistic shift, expressed inside theta
    double noise = 0.3;
    double hot_multiplier = 1.0;   // >1 plants arm 0 above the rest
    enum class Rule { logistic, linear } rule = Rule::logistic;
    std::uint64_t seed = 1;
};

/// Ground truth the learner never sees: hidden per-user parameter vectors
/// and the activation rule Pr[u | i, C] = scale_i * rule(theta_u . [k_i,C]).
struct SyntheticWorld {
    std::size_t n_arms = 0;
    std::size_t m_users = 0;
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    SyntheticConfig::Rule rule = SyntheticConfig::Rule::logistic;
    double base_rate = 0.0;
    std::vector<std::vector<double>> theta;     // per user, length d1+d2
    std::vector<double> arm_scale;              // per arm multiplier
    std::vector<ArmProfile> arms;
    std::vector<ContextVec> context_pool;
    std::vector<std::vector<double>> activity;  // observable, for clustering

    double prob(std::size_t arm, std::size_t user, const ContextVec& ctx) const;
    double expected_spread(std::size_t arm, const ContextVec& ctx) const;
};

/// Plants community structure: users, arms and contexts carry matching
/// group affinities, so some (arm, context) pairs activate far more users
/// than others. With hot_multiplier > 1, arm 0 is additionally scaled so
/// its pool-averaged expected spread exceeds every other arm's by at least
/// that factor.
SyntheticWorld gen_synthetic(const SyntheticConfig& cfg);

/// A diffusion environment as the campaign sees it: per-round contexts,
/// seed triggering with node-level feedback, and macro-node reduction when
/// a cluster map is installed. User ids in trigger results are macro ids.
class Environment {
public:
    virtual ~Environment() = default;
    virtual std::size_t macro_users() const = 0;
    virtual const std::vector<ArmProfile>& arms() const = 0;
    virtual std::size_t d1() const = 0;
    virtual std::size_t d2() const = 0;
    virtual ContextVec sample_context(int t) = 0;
    virtual std::map<int, std::set<int>> trigger(int t, const std::vector<int>& seeds,
                                                 const ContextVec& ctx) = 0;
    /// Raw-user distinct spread so far (reporting metric; equals the macro
    /// spread when no clustering is installed).
    virtual long raw_distinct() const = 0;
    virtual long starved() const { return 0; }
};

/// Live synthetic environment. All draws are counter-based on
/// (draw_seed, round, arm, user), so results do not depend on the order
/// seeds are passed in or on which policy is asking.
class SyntheticEnv : public Environment {
public:
    SyntheticEnv(SyntheticWorld world, std::uint64_t draw_seed,
                 std::optional<ClusterMap> map = std::nullopt);

    std::size_t macro_users() const override;
    const std::vector<ArmProfile>& arms() const override { return world_.arms; }
    std::size_t d1() const override { return world_.d1; }
    std::size_t d2() const override { return world_.d2; }
    ContextVec sample_context(int t) override;
    std::map<int, std::set<int>> trigger(int t, const std::vector<int>& seeds,
                                         const ContextVec& ctx) override;
    long raw_distinct() const override { return static_cast<long>(raw_seen_.size()); }

    const SyntheticWorld& world() const { return world_; }

private:
    SyntheticWorld world_;
    std::uint64_t draw_seed_;
    std::optional<ClusterMap> map_;
    std::set<int> raw_seen_;
};

/// Replays a cascade log: each seed selection is answered with the unused
/// event of that influencer whose context is most cosine-similar to the
/// round context (ties -> earliest). Events are consumed without
/// replacement unless with_replacement is set; a starved influencer yields
/// an empty set.
class ReplayEnv : public Environment {
public:
    ReplayEnv(EventLog log, std::uint64_t draw_seed, std::optional<ClusterMap> map = std::nullopt,
              bool with_replacement = false);

    std::size_t macro_users() const override;
    const std::vector<ArmProfile>& arms() const override { return arms_; }
    std::size_t d1() const override { return log_.d2; }
    std::size_t d2() const override { return log_.d2; }
    ContextVec sample_context(int t) override;
    std::map<int, std::set<int>> trigger(int t, const std::vector<int>& seeds,
                                         const ContextVec& ctx) override;
    long raw_distinct() const override { return static_cast<long>(raw_seen_.size()); }
    long starved() const override { return starved_; }

private:
    EventLog log_;
    std::uint64_t draw_seed_;
    std::optional<ClusterMap> map_;
    bool with_replacement_;
    std::vector<ArmProfile> arms_;                  // features aggregated from the log
    std::vector<std::vector<std::size_t>> by_arm_;  // event indices per influencer
    std::vector<bool> consumed_;
    std::set<int> raw_seen_;
    long starved_ = 0;
};

double cosine_similarity(const ContextVec& a, const ContextVec& b);

}  // namespace imgnb

#endif  // IMGNB_ENV_HPP
