#include "imgnb/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace imgnb {

namespace {

// f1's parameter count, needed before f1 exists to size f2's input rows.
std::size_t param_count_of_f1(std::size_t m_users, const ImGnbConfig& cfg) {
    std::vector<std::size_t> tail(cfg.tail_layers, cfg.p);
    tail.push_back(1);
    return m_users * (cfg.user.d1 + cfg.user.d2) * cfg.p + param_count_for(tail);
}

}  // namespace

std::vector<int> select_top_l(std::span<const double> scores, std::size_t L) {
    const std::size_t n = scores.size();
    if (L < 1 || L > n) throw std::invalid_argument("select_top_l: L must be in [1, n]");
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    ids.resize(L);
    return ids;
}

CampaignState::RewardResult CampaignState::compute_round_reward(
    const std::set<int>& union_activations, std::size_t m_users) {
    RewardResult res;
    res.labels.assign(m_users, 0.0);
    for (int u : union_activations) {
        if (seen_.count(u)) continue;
        res.labels[static_cast<std::size_t>(u)] = 1.0;
        ++res.reward;
    }
    seen_.insert(union_activations.begin(), union_activations.end());
    cumulative_ += res.reward;
    return res;
}

void CampaignState::advance(const std::vector<int>& chosen, int reward, std::size_t n_arms) {
    ++t_;
    prev_reward_ = reward;
    if (last_chosen_.empty()) {
        last_chosen_.assign(n_arms, 0);
        last_reward_.assign(n_arms, 0.0);
    }
    for (int a : chosen) {
        last_chosen_[static_cast<std::size_t>(a)] = t_;
        last_reward_[static_cast<std::size_t>(a)] = reward;
    }
}

std::vector<double> boost_exploration(std::vector<double> bonus, const BoostHistory& h,
                                      double factor) {
    if (factor <= 0.0) return bonus;
    if (h.prev_reward != 0) return bonus;  // gate: only after a zero-reward round
    for (std::size_t i = 0; i < bonus.size(); ++i) {
        if (i < h.chosen_prev.size() && h.chosen_prev[i]) continue;
        const int last = i < h.last_chosen.size() ? h.last_chosen[i] : 0;
        const double elapsed = static_cast<double>(h.t - last);
        bonus[i] += factor * std::sqrt(elapsed);
    }
    return bonus;
}

RandomPolicy::RandomPolicy(std::size_t n_arms, std::size_t L, std::uint64_t seed)
    : n_(n_arms), L_(L), rng_(seed) {
    if (L_ < 1 || L_ > n_) throw std::invalid_argument("RandomPolicy: L must be in [1, n]");
}

std::vector<int> random_select(Rng& rng, std::size_t n, std::size_t L) {
    if (L > n) throw std::invalid_argument("random_select: L > n");
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < L; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n - i)));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(L);
    return ids;
}

std::vector<int> RandomPolicy::select(int, const ContextVec&) {
    return random_select(rng_, n_, L_);
}

LinUcbPolicy::LinUcbPolicy(std::vector<ArmProfile> arms, std::size_t d2, const LinUcbConfig& cfg)
    : arms_(std::move(arms)), cfg_(cfg) {
    if (arms_.empty()) throw std::invalid_argument("LinUcbPolicy: no arms");
    if (!(cfg_.lambda > 0.0)) throw std::invalid_argument("LinUcbPolicy: lambda must be > 0");
    if (cfg_.alpha < 0.0) throw std::invalid_argument("LinUcbPolicy: alpha must be >= 0");
    if (cfg_.L < 1 || cfg_.L > arms_.size())
        throw std::invalid_argument("LinUcbPolicy: L must be in [1, n]");
    dim_ = arms_.front().features.size() + d2;
    a_ = DenseMatrix(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i) a_(i, i) = cfg_.lambda;
    b_.assign(dim_, 0.0);
}

std::vector<double> LinUcbPolicy::concat(const ArmProfile& arm, const ContextVec& ctx) const {
    std::vector<double> x;
    x.reserve(dim_);
    x.insert(x.end(), arm.features.begin(), arm.features.end());
    x.insert(x.end(), ctx.begin(), ctx.end());
    if (x.size() != dim_) throw std::invalid_argument("LinUcbPolicy: feature dim mismatch");
    return x;
}

std::vector<double> LinUcbPolicy::theta() const {
    return CholeskyFactor(a_).solve(b_);
}

std::vector<double> LinUcbPolicy::scores(const ContextVec& ctx) const {
    const CholeskyFactor chol(a_);
    const std::vector<double> th = chol.solve(b_);
    std::vector<double> out(arms_.size());
    for (std::size_t i = 0; i < arms_.size(); ++i) {
        const std::vector<double> x = concat(arms_[i], ctx);
        const std::vector<double> ainv_x = chol.solve(x);
        double mean = 0.0, var = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            mean += th[j] * x[j];
            var += x[j] * ainv_x[j];
        }
        out[i] = mean + cfg_.alpha * std::sqrt(std::max(var, 0.0));
    }
    return out;
}

std::vector<int> LinUcbPolicy::select(int, const ContextVec& ctx) {
    return select_top_l(scores(ctx), cfg_.L);
}

void LinUcbPolicy::observe(const RoundRecord& rec) {
    for (int arm_id : rec.chosen) {
        const auto it = rec.per_seed.find(arm_id);
        double r = 0.0;
        if (it != rec.per_seed.end())
            for (int u : it->second) r += rec.labels[static_cast<std::size_t>(u)];
        const std::vector<double> x = concat(arms_[static_cast<std::size_t>(arm_id)], rec.context);
        for (std::size_t i = 0; i < dim_; ++i) {
            b_[i] += r * x[i];
            for (std::size_t j = 0; j < dim_; ++j) a_(i, j) += x[i] * x[j];
        }
    }
}

ImGnbPolicy::ImGnbPolicy(std::vector<ArmProfile> arms, std::size_t m_users,
                         const ImGnbConfig& cfg, std::uint64_t seed)
    : arms_(std::move(arms)),
      cfg_(cfg),
      rng_(seed),
      bank_(m_users, cfg.user, rng_),
      f1_(m_users, cfg.user.d1 + cfg.user.d2, cfg.p, cfg.gamma, cfg.tail_layers, rng_),
      f2_(m_users,
          (param_count_of_f1(m_users, cfg) + cfg.gnn_pool_step - 1) / cfg.gnn_pool_step, cfg.p,
          cfg.gamma_explore.value_or(cfg.gamma), cfg.tail_layers, rng_) {
    if (arms_.empty()) throw std::invalid_argument("ImGnbPolicy: no arms");
    if (cfg_.L < 1 || cfg_.L > arms_.size())
        throw std::invalid_argument("ImGnbPolicy: L must be in [1, n]");
    if (cfg_.gnn_pool_step == 0) throw std::invalid_argument("ImGnbPolicy: pool step must be >= 1");
    hist_.last_chosen.assign(arms_.size(), 0);
    hist_.chosen_prev.assign(arms_.size(), false);
}

std::vector<int> ImGnbPolicy::select(int t, const ContextVec& ctx) {
    const std::size_t n = arms_.size();
    cache_.assign(n, ArmCache{});
    last_exploit_.assign(n, 0.0);
    last_bonus_.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const ArmProfile& arm = arms_[i];
        const std::vector<double> probs = bank_.estimate_probs(arm, ctx);
        const std::vector<double> gains = bank_.estimate_gains(arm, ctx);
        auto g1 = std::make_shared<const UserGraph>(build_graph(probs, cfg_.bandwidth));
        auto g2 = std::make_shared<const UserGraph>(build_graph(gains, cfg_.bandwidth));

        ArmScore s1 = f1_.exploit_forward(arm, ctx, *g1);
        DenseMatrix grad_input = f1_.exploration_input(arm, ctx, *g1, cfg_.gnn_pool_step);
        const ArmScore s2 = f2_.explore_forward(grad_input, *g2);

        last_exploit_[i] = s1.scalar;
        last_bonus_[i] = s2.scalar;
        cache_[i] = ArmCache{std::move(g1), std::move(g2), std::move(grad_input),
                             std::move(s1.per_user)};
    }

    hist_.t = t;
    last_bonus_ = boost_exploration(std::move(last_bonus_), hist_, cfg_.boost_factor);

    last_scores_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) last_scores_[i] = last_exploit_[i] + last_bonus_[i];
    return select_top_l(last_scores_, cfg_.L);
}

void ImGnbPolicy::observe(const RoundRecord& rec) {
    if (cache_.size() != arms_.size())
        throw std::logic_error("ImGnbPolicy: observe without a matching select");

    std::vector<ArmProfile> chosen_profiles;
    chosen_profiles.reserve(rec.chosen.size());
    for (int id : rec.chosen) chosen_profiles.push_back(arms_[static_cast<std::size_t>(id)]);

    // Scorer samples first: their exploration inputs and residual targets
    // were cached at selection time against the pre-update parameters.
    for (int id : rec.chosen) {
        const ArmCache& c = cache_[static_cast<std::size_t>(id)];
        const auto it = rec.per_seed.find(id);

        std::vector<std::size_t> support;
        if (cfg_.all_user_negatives) {
            support.resize(bank_.users());
            std::iota(support.begin(), support.end(), 0);
        } else if (it != rec.per_seed.end()) {
            support.assign(it->second.begin(), it->second.end());
        }
        if (support.empty()) continue;

        std::vector<double> exploit_targets(support.size(), 0.0);
        std::vector<double> explore_targets(support.size(), 0.0);
        for (std::size_t k = 0; k < support.size(); ++k) {
            const std::size_t u = support[k];
            // users outside this arm's activation set act as negatives
            const bool in_set = it != rec.per_seed.end() && it->second.count(static_cast<int>(u));
            const double d = in_set ? rec.labels[u] : 0.0;
            exploit_targets[k] = d;
            explore_targets[k] = d - c.p_hat[u];
        }

        GcnSample s1;
        s1.arm_id = id;
        s1.features = f1_.features_for(arms_[static_cast<std::size_t>(id)], rec.context);
        s1.graph = c.g1;
        s1.support = support;
        s1.targets = std::move(exploit_targets);
        f1_.append_sample(std::move(s1), cfg_.gnn_train.buffer);

        GcnSample s2;
        s2.arm_id = id;
        s2.features = c.grad_input;
        s2.graph = c.g2;
        s2.support = std::move(support);
        s2.targets = std::move(explore_targets);
        f2_.append_sample(std::move(s2), cfg_.gnn_train.buffer);
    }

    bank_.train_round(rec.context, chosen_profiles, rec.labels);
    f1_.train(cfg_.gnn_train);
    f2_.train(cfg_.gnn_train);

    hist_.prev_reward = rec.reward;
    std::fill(hist_.chosen_prev.begin(), hist_.chosen_prev.end(), false);
    for (int id : rec.chosen) {
        hist_.chosen_prev[static_cast<std::size_t>(id)] = true;
        hist_.last_chosen[static_cast<std::size_t>(id)] = rec.t;
    }
}

RoundRecord run_round(Policy& policy, Environment& env, CampaignState& state) {
    const int t = state.round_index() + 1;
    const ContextVec ctx = env.sample_context(t);
    std::vector<int> chosen = policy.select(t, ctx);
    auto per_seed = env.trigger(t, chosen, ctx);

    std::set<int> unioned;
    for (const auto& [arm, acts] : per_seed) unioned.insert(acts.begin(), acts.end());

    auto rr = state.compute_round_reward(unioned, env.macro_users());
    state.advance(chosen, rr.reward, env.arms().size());

    RoundRecord rec;
    rec.t = t;
    rec.context = ctx;
    rec.chosen = std::move(chosen);
    rec.per_seed = std::move(per_seed);
    rec.labels = std::move(rr.labels);
    rec.reward = rr.reward;
    policy.observe(rec);
    return rec;
}

}  // namespace imgnb
