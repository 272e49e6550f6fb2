#include "imgnb/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "imgnb/rng.hpp"

namespace imgnb {

namespace {

constexpr std::uint64_t kCtxTag = 0x636f6e74;   // context sampling stream
constexpr std::uint64_t kTrigTag = 0x74726967;  // trigger stream

std::vector<double> parse_real_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        if (pos != item.size()) throw std::invalid_argument("trailing characters in number");
        out.push_back(v);
    }
    return out;
}

// keeps empty fields, so an event with no activations still has 3 columns
std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return out;
}

void normalize_simplex(std::vector<double>& v) {
    double s = 0.0;
    for (double& x : v) {
        if (x < 0.0) x = 0.0;
        s += x;
    }
    if (s <= 0.0) {
        for (double& x : v) x = 1.0 / static_cast<double>(v.size());
    } else {
        for (double& x : v) x /= s;
    }
}

}  // namespace

EventLog load_event_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open event log: " + path);

    EventLog log;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty event log");
    ++line_no;
    {
        std::stringstream hs(line);
        std::string tok;
        std::vector<std::string> toks;
        while (hs >> tok) toks.push_back(tok);
        if (toks.size() != 4 || toks[0] != "#eventlog" || toks[1] != "v1" ||
            toks[2].rfind("arms=", 0) != 0 || toks[3].rfind("d2=", 0) != 0)
            throw std::runtime_error(path + ":1: bad header, expected '#eventlog v1 arms=<n> d2=<d2>'");
        log.arm_count = std::stoi(toks[2].substr(5));
        log.d2 = static_cast<std::size_t>(std::stoul(toks[3].substr(3)));
        if (log.arm_count <= 0 || log.d2 == 0)
            throw std::runtime_error(path + ":1: arms and d2 must be positive");
    }

    int max_user = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const std::vector<std::string> parts = split_tabs(line);
        if (parts.size() != 3)
            throw std::runtime_error(where + ": expected 3 tab-separated fields, got " +
                                     std::to_string(parts.size()));
        EventLog::Event ev;
        try {
            ev.influencer = std::stoi(parts[0]);
        } catch (const std::exception&) {
            throw std::runtime_error(where + ": bad influencer id '" + parts[0] + "'");
        }
        if (ev.influencer < 0 || ev.influencer >= log.arm_count)
            throw std::runtime_error(where + ": influencer id out of range");
        try {
            ev.context = parse_real_list(parts[1]);
        } catch (const std::exception&) {
            throw std::runtime_error(where + ": bad context vector '" + parts[1] + "'");
        }
        if (ev.context.size() != log.d2)
            throw std::runtime_error(where + ": context has " + std::to_string(ev.context.size()) +
                                     " values, expected " + std::to_string(log.d2));
        for (double v : ev.context)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::runtime_error(where + ": context values must be non-negative reals");
        if (!parts[2].empty()) {
            std::stringstream us(parts[2]);
            std::string tok;
            while (std::getline(us, tok, ',')) {
                int uid = 0;
                try {
                    uid = std::stoi(tok);
                } catch (const std::exception&) {
                    throw std::runtime_error(where + ": bad user id '" + tok + "'");
                }
                if (uid < 0) throw std::runtime_error(where + ": negative user id");
                ev.users.push_back(uid);
                max_user = std::max(max_user, uid);
            }
        }
        log.context_pool.push_back(ev.context);
        log.events.push_back(std::move(ev));
    }
    if (log.events.empty()) throw std::runtime_error(path + ": event log has no events");
    log.raw_user_count = max_user + 1;
    return log;
}

void save_event_log(const EventLog& log, std::ostream& os) {
    os << "#eventlog v1 arms=" << log.arm_count << " d2=" << log.d2 << "\n";
    for (const EventLog::Event& ev : log.events) {
        os << ev.influencer << "\t";
        for (std::size_t i = 0; i < ev.context.size(); ++i) {
            if (i) os << ",";
            os << ev.context[i];
        }
        os << "\t";
        for (std::size_t i = 0; i < ev.users.size(); ++i) {
            if (i) os << ",";
            os << ev.users[i];
        }
        os << "\n";
    }
}

void save_event_log_file(const EventLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write event log: " + path);
    save_event_log(log, out);
}

void save_cluster_map(const ClusterMap& map, std::ostream& os) {
    for (std::size_t u = 0; u < map.assignment.size(); ++u)
        os << u << "\t" << map.assignment[u] << "\n";
}

ClusterMap load_cluster_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cluster map: " + path);
    ClusterMap map;
    std::string line;
    std::size_t line_no = 0;
    int max_cluster = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        long uid = -1, cid = -1;
        ss >> uid >> cid;
        if (ss.fail() || uid < 0 || cid < 0)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad map line");
        if (static_cast<std::size_t>(uid) != map.assignment.size())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": user ids must be consecutive from 0");
        map.assignment.push_back(static_cast<int>(cid));
        max_cluster = std::max(max_cluster, static_cast<int>(cid));
    }
    if (map.assignment.empty()) throw std::runtime_error(path + ": empty cluster map");
    map.m_prime = static_cast<std::size_t>(max_cluster + 1);
    return map;
}

std::vector<std::vector<double>> activity_vectors(const EventLog& log) {
    std::vector<std::vector<double>> acc(static_cast<std::size_t>(log.raw_user_count),
                                         std::vector<double>(log.d2, 0.0));
    for (const EventLog::Event& ev : log.events)
        for (int uid : ev.users)
            for (std::size_t j = 0; j < log.d2; ++j) acc[uid][j] += ev.context[j];
    for (auto& v : acc) normalize_simplex(v);
    return acc;
}

double SyntheticWorld::prob(std::size_t arm, std::size_t user, const ContextVec& ctx) const {
    const std::vector<double>& th = theta[user];
    const std::vector<double>& kf = arms[arm].features;
    double dot = 0.0;
    for (std::size_t i = 0; i < d1; ++i) dot += th[i] * kf[i];
    for (std::size_t j = 0; j < d2; ++j) dot += th[d1 + j] * ctx[j];
    double p = 0.0;
    if (rule == SyntheticConfig::Rule::logistic)
        p = base_rate / (1.0 + std::exp(-dot));
    else
        p = dot;  // linear rule: theta is scaled to keep this in [0, 1]
    p *= arm_scale[arm];
    return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

double SyntheticWorld::expected_spread(std::size_t arm, const ContextVec& ctx) const {
    double s = 0.0;
    for (std::size_t u = 0; u < m_users; ++u) s += prob(arm, u, ctx);
    return s;
}

SyntheticWorld gen_synthetic(const SyntheticConfig& cfg) {
    if (cfg.arms == 0 || cfg.users == 0 || cfg.d1 == 0 || cfg.d2 == 0 || cfg.groups == 0 ||
        cfg.context_pool == 0)
        throw std::invalid_argument("gen_synthetic: all counts must be >= 1");

    Rng rng(cfg.seed);
    SyntheticWorld w;
    w.n_arms = cfg.arms;
    w.m_users = cfg.users;
    w.d1 = cfg.d1;
    w.d2 = cfg.d2;
    w.rule = cfg.rule;
    w.base_rate = cfg.base_rate;

    const std::size_t groups = cfg.groups;

    // Group direction vectors over disjoint (round-robin) coordinate blocks.
    std::vector<std::vector<double>> arm_dir(groups, std::vector<double>(cfg.d1, 0.0));
    std::vector<std::vector<double>> ctx_dir(groups, std::vector<double>(cfg.d2, 0.0));
    for (std::size_t j = 0; j < cfg.d1; ++j) arm_dir[j % groups][j] = 1.0;
    for (std::size_t j = 0; j < cfg.d2; ++j) ctx_dir[j % groups][j] = 1.0;
    for (auto& v : arm_dir) normalize_simplex(v);
    for (auto& v : ctx_dir) normalize_simplex(v);

    w.arms.resize(cfg.arms);
    for (std::size_t i = 0; i < cfg.arms; ++i) {
        const std::size_t g = i % groups;
        std::vector<double> f(cfg.d1);
        for (std::size_t j = 0; j < cfg.d1; ++j)
            f[j] = arm_dir[g][j] + cfg.noise * rng.uniform01() / static_cast<double>(cfg.d1);
        normalize_simplex(f);
        w.arms[i] = ArmProfile{static_cast<int>(i), std::move(f)};
    }

    w.context_pool.resize(cfg.context_pool);
    for (std::size_t c = 0; c < cfg.context_pool; ++c) {
        const std::size_t g = c % groups;
        std::vector<double> v(cfg.d2);
        for (std::size_t j = 0; j < cfg.d2; ++j)
            v[j] = ctx_dir[g][j] + cfg.noise * rng.uniform01() / static_cast<double>(cfg.d2);
        normalize_simplex(v);
        w.context_pool[c] = std::move(v);
    }

    w.theta.resize(cfg.users);
    w.activity.resize(cfg.users);
    for (std::size_t u = 0; u < cfg.users; ++u) {
        const std::size_t g = u % groups;
        std::vector<double> th(cfg.d1 + cfg.d2);
        for (std::size_t j = 0; j < cfg.d1; ++j)
            th[j] = cfg.affinity * arm_dir[g][j] + cfg.noise * rng.uniform(-1.0, 1.0);
        for (std::size_t j = 0; j < cfg.d2; ++j)
            th[cfg.d1 + j] = cfg.affinity * ctx_dir[g][j] + cfg.noise * rng.uniform(-1.0, 1.0);
        if (cfg.rule == SyntheticConfig::Rule::logistic) {
            // concat(arm, ctx) sums to 2, so a uniform shift of -offset/2
            // realizes logistic(theta . x - offset) within theta itself
            for (double& v : th) v -= cfg.offset / 2.0;
        } else {
            // linear rule: non-negative theta scaled so theta . x stays
            // well below 1 (x entries are at most 1)
            double mx = 0.0;
            for (double& v : th) {
                if (v < 0.0) v = 0.0;
                mx = std::max(mx, v);
            }
            const double scale = mx > 0.0 ? cfg.base_rate / (2.0 * mx) : 0.0;
            for (double& v : th) v *= scale;
        }
        w.theta[u] = std::move(th);

        std::vector<double> act(cfg.d2);
        for (std::size_t j = 0; j < cfg.d2; ++j)
            act[j] = ctx_dir[g][j] + cfg.noise * rng.uniform01() / static_cast<double>(cfg.d2);
        normalize_simplex(act);
        w.activity[u] = std::move(act);
    }

    w.arm_scale.assign(cfg.arms, 1.0);
    if (cfg.hot_multiplier > 1.0 && cfg.arms > 1) {
        // Plant arm 0 strictly above the field: scale it so its
        // pool-averaged expected spread is hot_multiplier times the best of
        // the other arms.
        std::vector<double> mean_spread(cfg.arms, 0.0);
        for (std::size_t i = 0; i < cfg.arms; ++i) {
            for (const ContextVec& ctx : w.context_pool) mean_spread[i] += w.expected_spread(i, ctx);
            mean_spread[i] /= static_cast<double>(w.context_pool.size());
        }
        double best_other = 0.0;
        for (std::size_t i = 1; i < cfg.arms; ++i) best_other = std::max(best_other, mean_spread[i]);
        if (mean_spread[0] > 0.0)
            w.arm_scale[0] = cfg.hot_multiplier * best_other / mean_spread[0];
    }
    return w;
}

SyntheticEnv::SyntheticEnv(SyntheticWorld world, std::uint64_t draw_seed,
                           std::optional<ClusterMap> map)
    : world_(std::move(world)), draw_seed_(draw_seed), map_(std::move(map)) {
    if (map_ && map_->assignment.size() != world_.m_users)
        throw std::invalid_argument("SyntheticEnv: cluster map size != world users");
}

std::size_t SyntheticEnv::macro_users() const {
    return map_ ? map_->m_prime : world_.m_users;
}

ContextVec SyntheticEnv::sample_context(int t) {
    if (world_.context_pool.empty())
        throw std::runtime_error("sample_context: empty context pool");
    const std::size_t idx = static_cast<std::size_t>(
        mix64(mix64(draw_seed_, kCtxTag), static_cast<std::uint64_t>(t)) %
        world_.context_pool.size());
    return world_.context_pool[idx];
}

std::map<int, std::set<int>> SyntheticEnv::trigger(int t, const std::vector<int>& seeds,
                                                   const ContextVec& ctx) {
    if (seeds.empty()) throw std::invalid_argument("trigger: no seeds");
    if (ctx.size() != world_.d2) throw std::invalid_argument("trigger: context dim mismatch");
    std::map<int, std::set<int>> out;
    const std::uint64_t round_key = mix64(mix64(draw_seed_, kTrigTag), static_cast<std::uint64_t>(t));
    for (int seed : seeds) {
        if (seed < 0 || static_cast<std::size_t>(seed) >= world_.n_arms)
            throw std::invalid_argument("trigger: unknown arm id");
        std::set<int>& acts = out[seed];
        const std::uint64_t arm_key = mix64(round_key, static_cast<std::uint64_t>(seed));
        for (std::size_t u = 0; u < world_.m_users; ++u) {
            const double p = world_.prob(static_cast<std::size_t>(seed), u, ctx);
            if (unit_draw(mix64(arm_key, u)) < p) {
                raw_seen_.insert(static_cast<int>(u));
                acts.insert(map_ ? map_->assignment[u] : static_cast<int>(u));
            }
        }
    }
    return out;
}

double cosine_similarity(const ContextVec& a, const ContextVec& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

ReplayEnv::ReplayEnv(EventLog log, std::uint64_t draw_seed, std::optional<ClusterMap> map,
                     bool with_replacement)
    : log_(std::move(log)),
      draw_seed_(draw_seed),
      map_(std::move(map)),
      with_replacement_(with_replacement) {
    if (map_ && map_->assignment.size() < static_cast<std::size_t>(log_.raw_user_count))
        throw std::invalid_argument("ReplayEnv: cluster map smaller than raw user count");

    by_arm_.resize(static_cast<std::size_t>(log_.arm_count));
    for (std::size_t e = 0; e < log_.events.size(); ++e)
        by_arm_[static_cast<std::size_t>(log_.events[e].influencer)].push_back(e);
    consumed_.assign(log_.events.size(), false);

    // Influencer features: normalized aggregate of their event contexts.
    arms_.resize(static_cast<std::size_t>(log_.arm_count));
    for (int i = 0; i < log_.arm_count; ++i) {
        std::vector<double> f(log_.d2, 0.0);
        for (std::size_t e : by_arm_[static_cast<std::size_t>(i)])
            for (std::size_t j = 0; j < log_.d2; ++j) f[j] += log_.events[e].context[j];
        normalize_simplex(f);
        arms_[static_cast<std::size_t>(i)] = ArmProfile{i, std::move(f)};
    }
}

std::size_t ReplayEnv::macro_users() const {
    return map_ ? map_->m_prime : static_cast<std::size_t>(log_.raw_user_count);
}

ContextVec ReplayEnv::sample_context(int t) {
    if (log_.context_pool.empty())
        throw std::runtime_error("sample_context: empty context pool");
    const std::size_t idx = static_cast<std::size_t>(
        mix64(mix64(draw_seed_, kCtxTag), static_cast<std::uint64_t>(t)) %
        log_.context_pool.size());
    return log_.context_pool[idx];
}

std::map<int, std::set<int>> ReplayEnv::trigger(int t, const std::vector<int>& seeds,
                                                const ContextVec& ctx) {
    (void)t;
    if (seeds.empty()) throw std::invalid_argument("trigger: no seeds");
    std::map<int, std::set<int>> out;
    for (int seed : seeds) {
        if (seed < 0 || seed >= log_.arm_count)
            throw std::invalid_argument("trigger: unknown arm id");
        std::set<int>& acts = out[seed];

        std::size_t best_event = 0;
        double best_sim = -std::numeric_limits<double>::infinity();
        bool found = false;
        for (std::size_t e : by_arm_[static_cast<std::size_t>(seed)]) {
            if (!with_replacement_ && consumed_[e]) continue;
            const double sim = cosine_similarity(log_.events[e].context, ctx);
            if (sim > best_sim) {  // ties -> earliest, since > is strict
                best_sim = sim;
                best_event = e;
                found = true;
            }
        }
        if (!found) {
            ++starved_;  // influencer exhausted; empty activation set
            continue;
        }
        consumed_[best_event] = true;
        for (int uid : log_.events[best_event].users) {
            raw_seen_.insert(uid);
            acts.insert(map_ ? map_->assignment[uid] : uid);
        }
    }
    return out;
}

}  // namespace imgnb
