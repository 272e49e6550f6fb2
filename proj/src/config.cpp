#include "imgnb/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace imgnb {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool schema_has(const std::string& key) {
    for (const auto& [k, v] : config_schema())
        if (k == key) return true;
    return false;
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size()) throw std::invalid_argument("config: bad number for " + key + ": " + v);
    return out;
}

long to_long(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long out = 0;
    try {
        out = std::stol(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size()) throw std::invalid_argument("config: bad integer for " + key + ": " + v);
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad bool for " + key + ": " + v);
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_schema() {
    static const std::vector<std::pair<std::string, std::string>> schema = {
        {"run.T", "500"},
        {"run.L", "1"},
        {"run.runs", "100"},
        {"run.seed", "1"},
        {"run.workers", "0"},
        {"run.outdir", "out"},
        {"run.timing", "false"},
        {"policy.name", "imgnb"},
        {"policy.boost_factor", "0"},
        {"graph.bandwidth", "5"},
        {"gnn.gamma", "3"},
        {"gnn.gamma_explore", "-1"},
        {"gnn.p", "16"},
        {"gnn.layers", "3"},
        {"gnn.pool_step", "100"},
        {"gnn.all_user_negatives", "false"},
        {"user.hidden", "16"},
        {"user.layers", "3"},
        {"user.pool_step", "0"},
        {"train.lr", "0.01"},
        {"train.epochs", "10"},
        {"train.buffer", "256"},
        {"linucb.lambda", "1"},
        {"linucb.alpha", "1"},
        {"env.type", "synthetic"},
        {"env.log", ""},
        {"env.m_prime", "0"},
        {"env.cluster_map", ""},
        {"env.replay_with_replacement", "false"},
        {"world.arms", "10"},
        {"world.users", "20"},
        {"world.d1", "10"},
        {"world.d2", "10"},
        {"world.groups", "4"},
        {"world.context_pool", "20"},
        {"world.base_rate", "0.05"},
        {"world.affinity", "6"},
        {"world.offset", "2"},
        {"world.noise", "0.3"},
        {"world.hot_multiplier", "1"},
        {"world.rule", "logistic"},
        {"world.seed", "0"},
        {"world.gen_events", "200"},
    };
    return schema;
}

KeyValues KeyValues::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

KeyValues KeyValues::parse_string(const std::string& text, const std::string& origin) {
    KeyValues kv;
    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!schema_has(key))
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": unknown config key '" + key + "'");
        kv.set(key, value);
    }
    return kv;
}

void KeyValues::set_pair(const std::string& pair) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos)
        throw std::runtime_error("override must be key=value: " + pair);
    const std::string key = trim(pair.substr(0, eq));
    if (!schema_has(key)) throw std::runtime_error("unknown config key '" + key + "'");
    set(key, trim(pair.substr(eq + 1)));
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

ExperimentConfig ExperimentConfig::from(const KeyValues& kv) {
    ExperimentConfig c;
    auto str = [&](const char* key, const std::string& def) { return kv.get(key).value_or(def); };

    c.T = static_cast<int>(to_long("run.T", str("run.T", "500")));
    c.L = static_cast<std::size_t>(to_long("run.L", str("run.L", "1")));
    c.runs = static_cast<int>(to_long("run.runs", str("run.runs", "100")));
    c.seed = static_cast<std::uint64_t>(to_long("run.seed", str("run.seed", "1")));
    c.workers = static_cast<int>(to_long("run.workers", str("run.workers", "0")));
    c.outdir = str("run.outdir", "out");
    c.timing = to_bool("run.timing", str("run.timing", "false"));

    c.policy = str("policy.name", "imgnb");
    c.boost_factor = to_double("policy.boost_factor", str("policy.boost_factor", "0"));

    c.bandwidth = to_double("graph.bandwidth", str("graph.bandwidth", "5"));

    c.gamma = static_cast<std::size_t>(to_long("gnn.gamma", str("gnn.gamma", "3")));
    const long ge = to_long("gnn.gamma_explore", str("gnn.gamma_explore", "-1"));
    if (ge >= 0) c.gamma_explore = static_cast<std::size_t>(ge);
    c.p = static_cast<std::size_t>(to_long("gnn.p", str("gnn.p", "16")));
    c.gnn_layers = static_cast<std::size_t>(to_long("gnn.layers", str("gnn.layers", "3")));
    c.gnn_pool_step =
        static_cast<std::size_t>(to_long("gnn.pool_step", str("gnn.pool_step", "100")));
    c.all_user_negatives =
        to_bool("gnn.all_user_negatives", str("gnn.all_user_negatives", "false"));

    c.user_hidden = static_cast<std::size_t>(to_long("user.hidden", str("user.hidden", "16")));
    c.user_layers = static_cast<std::size_t>(to_long("user.layers", str("user.layers", "3")));
    c.user_pool_step =
        static_cast<std::size_t>(to_long("user.pool_step", str("user.pool_step", "0")));

    c.lr = to_double("train.lr", str("train.lr", "0.01"));
    c.epochs = static_cast<std::size_t>(to_long("train.epochs", str("train.epochs", "10")));
    c.buffer = static_cast<std::size_t>(to_long("train.buffer", str("train.buffer", "256")));

    c.linucb_lambda = to_double("linucb.lambda", str("linucb.lambda", "1"));
    c.linucb_alpha = to_double("linucb.alpha", str("linucb.alpha", "1"));

    c.env_type = str("env.type", "synthetic");
    c.env_log = str("env.log", "");
    c.m_prime = static_cast<std::size_t>(to_long("env.m_prime", str("env.m_prime", "0")));
    c.cluster_map = str("env.cluster_map", "");
    c.replay_with_replacement =
        to_bool("env.replay_with_replacement", str("env.replay_with_replacement", "false"));

    c.world.arms = static_cast<std::size_t>(to_long("world.arms", str("world.arms", "10")));
    c.world.users = static_cast<std::size_t>(to_long("world.users", str("world.users", "20")));
    c.world.d1 = static_cast<std::size_t>(to_long("world.d1", str("world.d1", "10")));
    c.world.d2 = static_cast<std::size_t>(to_long("world.d2", str("world.d2", "10")));
    c.world.groups = static_cast<std::size_t>(to_long("world.groups", str("world.groups", "4")));
    c.world.context_pool =
        static_cast<std::size_t>(to_long("world.context_pool", str("world.context_pool", "20")));
    c.world.base_rate = to_double("world.base_rate", str("world.base_rate", "0.05"));
    c.world.affinity = to_double("world.affinity", str("world.affinity", "6"));
    c.world.offset = to_double("world.offset", str("world.offset", "2"));
    c.world.noise = to_double("world.noise", str("world.noise", "0.3"));
    c.world.hot_multiplier =
        to_double("world.hot_multiplier", str("world.hot_multiplier", "1"));
    const std::string rule = str("world.rule", "logistic");
    if (rule == "logistic")
        c.world.rule = SyntheticConfig::Rule::logistic;
    else if (rule == "linear")
        c.world.rule = SyntheticConfig::Rule::linear;
    else
        throw std::invalid_argument("config: world.rule must be logistic or linear");
    c.world.seed = static_cast<std::uint64_t>(to_long("world.seed", str("world.seed", "0")));
    c.gen_events =
        static_cast<int>(to_long("world.gen_events", str("world.gen_events", "200")));

    if (c.T < 1) throw std::invalid_argument("config: run.T must be >= 1");
    if (c.runs < 1) throw std::invalid_argument("config: run.runs must be >= 1");
    if (c.L < 1) throw std::invalid_argument("config: run.L must be >= 1");
    if (c.policy != "imgnb" && c.policy != "linucb" && c.policy != "random")
        throw std::invalid_argument("config: unknown policy '" + c.policy + "'");
    if (c.env_type != "synthetic" && c.env_type != "replay")
        throw std::invalid_argument("config: env.type must be synthetic or replay");
    if (c.env_type == "replay" && c.env_log.empty())
        throw std::invalid_argument("config: env.log required for replay");
    return c;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> out;
    auto add = [&](const std::string& k, const std::string& v) { out.emplace_back(k, v); };
    add("run.T", std::to_string(T));
    add("run.L", std::to_string(L));
    add("run.runs", std::to_string(runs));
    add("run.seed", std::to_string(seed));
    add("run.workers", std::to_string(workers));
    add("run.outdir", outdir);
    add("run.timing", timing ? "true" : "false");
    add("policy.name", policy);
    add("policy.boost_factor", fmt(boost_factor));
    add("graph.bandwidth", fmt(bandwidth));
    add("gnn.gamma", std::to_string(gamma));
    add("gnn.gamma_explore", gamma_explore ? std::to_string(*gamma_explore) : "-1");
    add("gnn.p", std::to_string(p));
    add("gnn.layers", std::to_string(gnn_layers));
    add("gnn.pool_step", std::to_string(gnn_pool_step));
    add("gnn.all_user_negatives", all_user_negatives ? "true" : "false");
    add("user.hidden", std::to_string(user_hidden));
    add("user.layers", std::to_string(user_layers));
    add("user.pool_step", std::to_string(user_pool_step));
    add("train.lr", fmt(lr));
    add("train.epochs", std::to_string(epochs));
    add("train.buffer", std::to_string(buffer));
    add("linucb.lambda", fmt(linucb_lambda));
    add("linucb.alpha", fmt(linucb_alpha));
    add("env.type", env_type);
    add("env.log", env_log);
    add("env.m_prime", std::to_string(m_prime));
    add("env.cluster_map", cluster_map);
    add("env.replay_with_replacement", replay_with_replacement ? "true" : "false");
    add("world.arms", std::to_string(world.arms));
    add("world.users", std::to_string(world.users));
    add("world.d1", std::to_string(world.d1));
    add("world.d2", std::to_string(world.d2));
    add("world.groups", std::to_string(world.groups));
    add("world.context_pool", std::to_string(world.context_pool));
    add("world.base_rate", fmt(world.base_rate));
    add("world.affinity", fmt(world.affinity));
    add("world.offset", fmt(world.offset));
    add("world.noise", fmt(world.noise));
    add("world.hot_multiplier", fmt(world.hot_multiplier));
    add("world.rule", world.rule == SyntheticConfig::Rule::logistic ? "logistic" : "linear");
    add("world.seed", std::to_string(world.seed));
    add("world.gen_events", std::to_string(gen_events));
    return out;
}

ImGnbConfig ExperimentConfig::imgnb_config(std::size_t d1, std::size_t d2) const {
    ImGnbConfig c;
    c.L = L;
    c.bandwidth = bandwidth;
    c.gamma = gamma;
    c.gamma_explore = gamma_explore;
    c.p = p;
    c.tail_layers = gnn_layers;
    c.gnn_pool_step = gnn_pool_step;
    c.all_user_negatives = all_user_negatives;
    c.boost_factor = boost_factor;
    c.user.d1 = d1;
    c.user.d2 = d2;
    c.user.hidden.assign(user_layers >= 2 ? user_layers - 1 : 1, user_hidden);
    c.user.pool_step = user_pool_step;
    c.user.train = train_config();
    c.gnn_train = train_config();
    return c;
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig t;
    t.lr = lr;
    t.epochs = epochs;
    t.buffer = buffer;
    return t;
}

int ExperimentConfig::effective_workers() const {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("IMGNB_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    return 1;
}

}  // namespace imgnb
