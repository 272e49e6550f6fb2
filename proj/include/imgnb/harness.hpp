#ifndef IMGNB_HARNESS_HPP
#define IMGNB_HARNESS_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "imgnb/config.hpp"

namespace imgnb {

struct RunSummary {
    int run_id = 0;
    long final_cum = 0;   // macro-level distinct spread at round T
    long final_raw = 0;   // raw-user distinct spread (reporting metric)
    std::string csv_path;
};

struct ExperimentResult {
    std::vector<RunSummary> runs;
    std::string outdir;
    double mean_final() const;
    double std_final() const;  // population
    double mean_final_raw() const;
};

/// Executes `runs` independent seeded campaigns of T rounds, in parallel up
/// to the configured worker count; one CSV per run plus a manifest. Every
/// emitted byte is determined by (config, master seed). input_files are
/// content-hashed into the manifest.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::vector<std::string>& input_files = {});

struct AggregateTable {
    std::vector<int> t;
    std::vector<double> mean;  // cumulative spread across runs
    std::vector<double> stddev;
    std::size_t runs = 0;
};

/// Per-round mean and population std of cumulative spread across run CSVs.
/// All files must share the schema and round count; a mismatch is rejected
/// naming the offending file.
AggregateTable aggregate(const std::vector<std::string>& files);
void write_aggregate_csv(const AggregateTable& table, std::ostream& os);

/// Expands a trailing-component `*` glob; plain paths pass through.
std::vector<std::string> expand_glob(const std::string& pattern);

struct SweepRow {
    double value = 0.0;
    double mean_final = 0.0;
    double std_final = 0.0;
    double mean_final_raw = 0.0;
    double std_final_raw = 0.0;
};

/// Reruns the experiment per parameter value. Supported parameters:
/// m_prime, L, bandwidth, gamma, boost_factor, pool_step.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& parameter,
                            const std::vector<double>& values,
                            const std::vector<std::string>& input_files = {});
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os);

/// FNV-1a 64-bit content hash, hex encoded; the manifest input hash.
std::string content_hash_hex(const std::string& path);

inline const char* kRunCsvHeader = "run,t,reward,cum_spread,arms,ms";

}  // namespace imgnb

#endif  // IMGNB_HARNESS_HPP
