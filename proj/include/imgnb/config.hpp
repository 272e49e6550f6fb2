#ifndef IMGNB_CONFIG_HPP
#define IMGNB_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imgnb/env.hpp"
#include "imgnb/policy.hpp"

namespace imgnb {

/// Flat `section.key = value` text config. `#` starts a comment, blank
/// lines are ignored, later assignments and CLI overrides win.
class KeyValues {
public:
    static KeyValues parse_file(const std::string& path);
    static KeyValues parse_string(const std::string& text, const std::string& origin = "<string>");

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    /// "key=value" form used by --set overrides.
    void set_pair(const std::string& pair);

    std::optional<std::string> get(const std::string& key) const;
    const std::map<std::string, std::string>& all() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Everything one experiment needs, fully typed and defaulted. Every
/// tunable of the algorithm appears here and in the manifest echo.
struct ExperimentConfig {
    // run
    int T = 500;
    std::size_t L = 1;
    int runs = 100;
    std::uint64_t seed = 1;
    int workers = 0;  // 0 -> IMGNB_WORKERS env var, else 1
    std::string outdir = "out";
    bool timing = false;  // keep false for byte-reproducible CSVs

    // policy
    std::string policy = "imgnb";  // imgnb | linucb | random
    double boost_factor = 0.0;

    // graph
    double bandwidth = 5.0;

    // gnn scorers
    std::size_t gamma = 3;
    std::optional<std::size_t> gamma_explore;
    std::size_t p = 16;
    std::size_t gnn_layers = 3;
    std::size_t gnn_pool_step = 100;
    bool all_user_negatives = false;

    // user pre-estimators
    std::size_t user_hidden = 16;
    std::size_t user_layers = 3;
    std::size_t user_pool_step = 0;  // 0 -> auto (pooled dim <= 64)

    // training schedule (shared by user nets and scorers)
    double lr = 0.01;
    std::size_t epochs = 10;
    std::size_t buffer = 256;

    // linucb
    double linucb_lambda = 1.0;
    double linucb_alpha = 1.0;

    // environment
    std::string env_type = "synthetic";  // synthetic | replay
    std::string env_log;
    std::size_t m_prime = 0;  // 0 -> no clustering
    std::string cluster_map;
    bool replay_with_replacement = false;
    SyntheticConfig world;
    int gen_events = 200;  // events written by gen-synthetic

    static ExperimentConfig from(const KeyValues& kv);
    /// Effective values of every schema key, for the manifest.
    std::vector<std::pair<std::string, std::string>> echo() const;

    ImGnbConfig imgnb_config(std::size_t d1, std::size_t d2) const;
    TrainConfig train_config() const;
    int effective_workers() const;
};

/// The documented config schema: key -> default, used for validation and
/// the manifest. Unknown keys are rejected at parse time.
const std::vector<std::pair<std::string, std::string>>& config_schema();

}  // namespace imgnb

#endif  // IMGNB_CONFIG_HPP
