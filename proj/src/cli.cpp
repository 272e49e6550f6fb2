#include "imgnb/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "imgnb/harness.hpp"

namespace imgnb {

namespace {

namespace fs = std::filesystem;

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    KeyValues kv = KeyValues::parse_file(path);
    for (const std::string& pair : overrides) kv.set_pair(pair);
    return ExperimentConfig::from(kv);
}

std::vector<std::string> config_inputs(const std::string& config_path,
                                       const ExperimentConfig& cfg) {
    std::vector<std::string> inputs = {config_path};
    if (!cfg.env_log.empty()) inputs.push_back(cfg.env_log);
    if (!cfg.cluster_map.empty()) inputs.push_back(cfg.cluster_map);
    return inputs;
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& outdir) {
    ExperimentConfig cfg = load_config(config_path, overrides);
    if (!outdir.empty()) cfg.outdir = outdir;
    const ExperimentResult res = run_experiment(cfg, config_inputs(config_path, cfg));
    std::cout << "runs=" << res.runs.size() << " mean_final=" << res.mean_final()
              << " std_final=" << res.std_final() << " outdir=" << res.outdir << "\n";
    return 0;
}

int cmd_aggregate(const std::vector<std::string>& patterns, const std::string& out_path) {
    std::vector<std::string> files;
    for (const std::string& p : patterns) {
        const std::vector<std::string> expanded = expand_glob(p);
        files.insert(files.end(), expanded.begin(), expanded.end());
    }
    const AggregateTable table = aggregate(files);
    if (out_path.empty()) {
        write_aggregate_csv(table, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        write_aggregate_csv(table, out);
    }
    std::cerr << "aggregated " << table.runs << " runs, final mean=" << table.mean.back()
              << " std=" << table.stddev.back() << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& param, const std::string& values_csv,
              const std::string& outdir) {
    ExperimentConfig cfg = load_config(config_path, overrides);
    if (!outdir.empty()) cfg.outdir = outdir;
    const std::vector<SweepRow> rows =
        sweep(cfg, param, parse_values(values_csv), config_inputs(config_path, cfg));
    fs::create_directories(cfg.outdir);
    const std::string table_path = (fs::path(cfg.outdir) / ("sweep_" + param + ".csv")).string();
    std::ofstream out(table_path);
    if (!out) throw std::runtime_error("cannot write " + table_path);
    write_sweep_csv(rows, out);
    write_sweep_csv(rows, std::cout);
    return 0;
}

int cmd_gen_synthetic(const std::string& config_path, const std::vector<std::string>& overrides,
                      const std::string& out_path) {
    const ExperimentConfig cfg = load_config(config_path, overrides);
    SyntheticConfig wc = cfg.world;
    if (wc.seed == 0) wc.seed = cfg.seed;
    const SyntheticWorld world = gen_synthetic(wc);

    // Simulate events round-robin over the arms so every influencer has
    // material to replay.
    SyntheticEnv env(world, mix64(wc.seed, 0x47454e));
    EventLog log;
    log.arm_count = static_cast<int>(world.n_arms);
    log.d2 = world.d2;
    int max_user = -1;
    for (int e = 0; e < cfg.gen_events; ++e) {
        const int arm = e % static_cast<int>(world.n_arms);
        const ContextVec ctx = env.sample_context(e + 1);
        const auto acts = env.trigger(e + 1, {arm}, ctx);
        EventLog::Event ev;
        ev.influencer = arm;
        ev.context = ctx;
        for (int u : acts.at(arm)) {
            ev.users.push_back(u);
            max_user = std::max(max_user, u);
        }
        log.context_pool.push_back(ev.context);
        log.events.push_back(std::move(ev));
    }
    log.raw_user_count = max_user + 1;
    save_event_log_file(log, out_path);
    std::cout << "wrote " << log.events.size() << " events (" << world.n_arms << " arms, "
              << world.m_users << " users) to " << out_path << "\n";
    return 0;
}

int cmd_cluster(const std::string& log_path, std::size_t groups, const std::string& out_path,
                std::uint64_t seed) {
    const EventLog log = load_event_log(log_path);
    Rng rng(seed);
    const ClusterMap map = cluster_users(activity_vectors(log), groups, rng);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    save_cluster_map(map, out);
    std::cout << "clustered " << map.assignment.size() << " users into " << map.m_prime
              << " groups -> " << out_path << "\n";
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"IM-GNB campaign simulator"};
    app.require_subcommand(1);

    std::string config_path, outdir, out_path, param, values_csv, log_path;
    std::vector<std::string> overrides, patterns;
    std::size_t groups = 0;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand("run", "run a configured experiment");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--set", overrides, "override config entries (key=value)");
    run->add_option("-o,--outdir", outdir, "output directory (overrides run.outdir)");

    auto* agg = app.add_subcommand("aggregate", "summarize run CSVs");
    agg->add_option("files", patterns, "run CSV paths or a glob")->required();
    agg->add_option("-o,--out", out_path, "output CSV (default stdout)");

    auto* sw = app.add_subcommand("sweep", "rerun an experiment over parameter values");
    sw->add_option("config", config_path, "config file")->required();
    sw->add_option("--param", param, "m_prime|L|bandwidth|gamma|boost_factor|pool_step")
        ->required();
    sw->add_option("--values", values_csv, "comma-separated values")->required();
    sw->add_option("--set", overrides, "override config entries (key=value)");
    sw->add_option("-o,--outdir", outdir, "output directory");

    auto* gen = app.add_subcommand("gen-synthetic", "write an event log from a planted world");
    gen->add_option("config", config_path, "config file")->required();
    gen->add_option("-o,--out", out_path, "event log path")->required();
    gen->add_option("--set", overrides, "override config entries (key=value)");

    auto* cl = app.add_subcommand("cluster", "k-means users of a log into macro-nodes");
    cl->add_option("log", log_path, "event log path")->required();
    cl->add_option("--groups", groups, "number of macro-nodes")->required();
    cl->add_option("-o,--out", out_path, "cluster map path")->required();
    cl->add_option("--seed", seed, "clustering seed");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, overrides, outdir);
        if (agg->parsed()) return cmd_aggregate(patterns, out_path);
        if (sw->parsed()) return cmd_sweep(config_path, overrides, param, values_csv, outdir);
        if (gen->parsed()) return cmd_gen_synthetic(config_path, overrides, out_path);
        if (cl->parsed()) return cmd_cluster(log_path, groups, out_path, seed);
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace imgnb
