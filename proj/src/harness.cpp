#include "imgnb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace imgnb {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kWorldTag = 0x574f524c44;   // synthetic world generation
constexpr std::uint64_t kClusterTag = 0x434c5553;   // k-means seeding
constexpr std::uint64_t kRunTag = 0x52554e;         // per-run streams
constexpr std::uint64_t kEnvTag = 0x454e56;
constexpr std::uint64_t kPolicyTag = 0x504f4c;

struct EnvSetup {
    std::optional<SyntheticWorld> world;
    std::optional<EventLog> log;
    std::optional<ClusterMap> map;
};

std::uint64_t resolved_world_seed(const ExperimentConfig& cfg) {
    return cfg.world.seed != 0 ? cfg.world.seed : mix64(cfg.seed, kWorldTag);
}

// Shared, run-independent pieces: the planted world (or the log) and the
// cluster map. Runs differ only in their draw streams.
EnvSetup prepare_env(const ExperimentConfig& cfg) {
    EnvSetup setup;
    std::size_t raw_users = 0;
    std::vector<std::vector<double>> activity;
    if (cfg.env_type == "synthetic") {
        SyntheticConfig wc = cfg.world;
        wc.seed = resolved_world_seed(cfg);
        setup.world = gen_synthetic(wc);
        raw_users = setup.world->m_users;
        activity = setup.world->activity;
    } else {
        setup.log = load_event_log(cfg.env_log);
        raw_users = static_cast<std::size_t>(setup.log->raw_user_count);
        if (raw_users == 0) throw std::runtime_error("event log names no users");
        activity = activity_vectors(*setup.log);
    }

    if (!cfg.cluster_map.empty()) {
        setup.map = load_cluster_map(cfg.cluster_map);
    } else if (cfg.m_prime > 0 && cfg.m_prime < raw_users) {
        Rng rng(mix64(cfg.seed, kClusterTag));
        setup.map = cluster_users(activity, cfg.m_prime, rng);
    }
    return setup;
}

std::unique_ptr<Environment> make_env(const ExperimentConfig& cfg, const EnvSetup& setup,
                                      int run_id) {
    const std::uint64_t run_seed = mix64(mix64(cfg.seed, kRunTag), static_cast<std::uint64_t>(run_id));
    const std::uint64_t draw_seed = mix64(run_seed, kEnvTag);
    if (setup.world)
        return std::make_unique<SyntheticEnv>(*setup.world, draw_seed, setup.map);
    return std::make_unique<ReplayEnv>(*setup.log, draw_seed, setup.map,
                                       cfg.replay_with_replacement);
}

std::unique_ptr<Policy> make_policy(const ExperimentConfig& cfg, const Environment& env,
                                    int run_id) {
    const std::uint64_t run_seed = mix64(mix64(cfg.seed, kRunTag), static_cast<std::uint64_t>(run_id));
    const std::uint64_t policy_seed = mix64(run_seed, kPolicyTag);
    if (cfg.policy == "random")
        return std::make_unique<RandomPolicy>(env.arms().size(), cfg.L, policy_seed);
    if (cfg.policy == "linucb") {
        LinUcbConfig lc;
        lc.lambda = cfg.linucb_lambda;
        lc.alpha = cfg.linucb_alpha;
        lc.L = cfg.L;
        return std::make_unique<LinUcbPolicy>(env.arms(), env.d2(), lc);
    }
    return std::make_unique<ImGnbPolicy>(env.arms(), env.macro_users(),
                                         cfg.imgnb_config(env.d1(), env.d2()), policy_seed);
}

std::string run_csv_path(const std::string& outdir, int run_id) {
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03d.csv", run_id);
    return (fs::path(outdir) / name).string();
}

RunSummary execute_run(const ExperimentConfig& cfg, const EnvSetup& setup, int run_id) {
    auto env = make_env(cfg, setup, run_id);
    auto policy = make_policy(cfg, *env, run_id);
    CampaignState state;

    std::ostringstream body;
    body << kRunCsvHeader << "\n";
    for (int t = 1; t <= cfg.T; ++t) {
        const auto start = std::chrono::steady_clock::now();
        const RoundRecord rec = run_round(*policy, *env, state);
        long ms = 0;
        if (cfg.timing) {
            const auto end = std::chrono::steady_clock::now();
            ms = std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
        }
        body << run_id << "," << t << "," << rec.reward << "," << state.cumulative_spread() << ",";
        for (std::size_t i = 0; i < rec.chosen.size(); ++i) {
            if (i) body << ";";
            body << rec.chosen[i];
        }
        body << "," << ms << "\n";
    }

    RunSummary summary;
    summary.run_id = run_id;
    summary.final_cum = state.cumulative_spread();
    summary.final_raw = env->raw_distinct();
    summary.csv_path = run_csv_path(cfg.outdir, run_id);
    std::ofstream out(summary.csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + summary.csv_path);
    out << body.str();
    return summary;
}

void write_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& input_files) {
    std::ofstream out(fs::path(cfg.outdir) / "manifest.txt");
    if (!out) throw std::runtime_error("cannot write manifest in " + cfg.outdir);
    for (const auto& [k, v] : cfg.echo()) out << k << " = " << v << "\n";
    out << "derived.world_seed = " << resolved_world_seed(cfg) << "\n";
    for (const std::string& f : input_files)
        out << "input." << fs::path(f).filename().string() << " = fnv1a:" << content_hash_hex(f)
            << "\n";
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double pop_std_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

double ExperimentResult::mean_final() const {
    std::vector<double> v;
    for (const RunSummary& r : runs) v.push_back(static_cast<double>(r.final_cum));
    return mean_of(v);
}

double ExperimentResult::std_final() const {
    std::vector<double> v;
    for (const RunSummary& r : runs) v.push_back(static_cast<double>(r.final_cum));
    return pop_std_of(v);
}

double ExperimentResult::mean_final_raw() const {
    std::vector<double> v;
    for (const RunSummary& r : runs) v.push_back(static_cast<double>(r.final_raw));
    return mean_of(v);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::vector<std::string>& input_files) {
    // Validate everything before the first run starts.
    const EnvSetup setup = prepare_env(cfg);
    {
        auto probe = make_env(cfg, setup, 0);
        if (cfg.L > probe->arms().size())
            throw std::invalid_argument("config: run.L exceeds the arm count");
        if (probe->macro_users() == 0) throw std::invalid_argument("environment has no users");
    }
    fs::create_directories(cfg.outdir);

    ExperimentResult result;
    result.outdir = cfg.outdir;
    result.runs.resize(static_cast<std::size_t>(cfg.runs));

    const int workers = std::min(cfg.effective_workers(), cfg.runs);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    auto worker = [&](int wi) {
        try {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= cfg.runs) return;
                result.runs[static_cast<std::size_t>(r)] = execute_run(cfg, setup, r);
            }
        } catch (...) {
            errors[static_cast<std::size_t>(wi)] = std::current_exception();
        }
    };
    if (workers <= 1) {
        worker(0);
    } else {
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
        for (std::thread& th : pool) th.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    write_manifest(cfg, input_files);
    return result;
}

AggregateTable aggregate(const std::vector<std::string>& files) {
    if (files.empty()) throw std::invalid_argument("aggregate: no metric files");
    AggregateTable table;
    std::vector<std::vector<double>> cum_by_run;
    for (const std::string& path : files) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::string line;
        if (!std::getline(in, line) || line != kRunCsvHeader)
            throw std::runtime_error(path + ": schema mismatch, expected header '" +
                                     std::string(kRunCsvHeader) + "'");
        std::vector<int> ts;
        std::vector<double> cum;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string run_s, t_s, reward_s, cum_s;
            if (!std::getline(ss, run_s, ',') || !std::getline(ss, t_s, ',') ||
                !std::getline(ss, reward_s, ',') || !std::getline(ss, cum_s, ','))
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad row");
            ts.push_back(std::stoi(t_s));
            cum.push_back(std::stod(cum_s));
        }
        if (ts.empty()) throw std::runtime_error(path + ": no data rows");
        if (table.t.empty()) {
            table.t = ts;
        } else if (table.t != ts) {
            throw std::runtime_error(path + ": schema mismatch, round column differs");
        }
        cum_by_run.push_back(std::move(cum));
    }
    table.runs = cum_by_run.size();
    table.mean.resize(table.t.size());
    table.stddev.resize(table.t.size());
    for (std::size_t i = 0; i < table.t.size(); ++i) {
        std::vector<double> v;
        v.reserve(table.runs);
        for (const auto& run : cum_by_run) v.push_back(run[i]);
        table.mean[i] = mean_of(v);
        table.stddev[i] = pop_std_of(v);
    }
    return table;
}

void write_aggregate_csv(const AggregateTable& table, std::ostream& os) {
    os << "t,mean_cum_spread,std_cum_spread\n";
    for (std::size_t i = 0; i < table.t.size(); ++i)
        os << table.t[i] << "," << table.mean[i] << "," << table.stddev[i] << "\n";
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    const auto star = pattern.find('*');
    if (star == std::string::npos) return {pattern};
    const fs::path p(pattern);
    const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    const std::string name = p.filename().string();
    const auto nstar = name.find('*');
    if (nstar == std::string::npos)
        throw std::invalid_argument("glob '*' only supported in the filename: " + pattern);
    const std::string prefix = name.substr(0, nstar);
    const std::string suffix = name.substr(nstar + 1);
    std::vector<std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string f = entry.path().filename().string();
        if (f.size() < prefix.size() + suffix.size()) continue;
        if (f.rfind(prefix, 0) != 0) continue;
        if (f.substr(f.size() - suffix.size()) != suffix) continue;
        out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& parameter,
                            const std::vector<double>& values,
                            const std::vector<std::string>& input_files) {
    if (values.empty()) throw std::invalid_argument("sweep: no values");
    std::vector<SweepRow> rows;
    for (double value : values) {
        ExperimentConfig c = cfg;
        if (parameter == "m_prime")
            c.m_prime = static_cast<std::size_t>(value);
        else if (parameter == "L")
            c.L = static_cast<std::size_t>(value);
        else if (parameter == "bandwidth")
            c.bandwidth = value;
        else if (parameter == "gamma")
            c.gamma = static_cast<std::size_t>(value);
        else if (parameter == "boost_factor")
            c.boost_factor = value;
        else if (parameter == "pool_step")
            c.gnn_pool_step = static_cast<std::size_t>(value);
        else
            throw std::invalid_argument("sweep: unknown parameter '" + parameter + "'");

        std::ostringstream sub;
        sub << parameter << "_" << value;
        c.outdir = (fs::path(cfg.outdir) / "sweep" / sub.str()).string();
        const ExperimentResult res = run_experiment(c, input_files);

        SweepRow row;
        row.value = value;
        row.mean_final = res.mean_final();
        row.std_final = res.std_final();
        std::vector<double> raw;
        for (const RunSummary& r : res.runs) raw.push_back(static_cast<double>(r.final_raw));
        row.mean_final_raw = mean_of(raw);
        row.std_final_raw = pop_std_of(raw);
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "value,mean_final,std_final,mean_final_raw,std_final_raw\n";
    for (const SweepRow& r : rows)
        os << r.value << "," << r.mean_final << "," << r.std_final << "," << r.mean_final_raw
           << "," << r.std_final_raw << "\n";
}

std::string content_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

}  // namespace imgnb
