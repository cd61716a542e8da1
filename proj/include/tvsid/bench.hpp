#pragma once

#include "tvsid/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvsid {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string> kAllMethods = {"tc_ff", "tc_est_ff", "tc_opt_ff", "tc_opt_est_ff",
                                                    "rls_ff"};

struct ExperimentConfig {
  int n_runs = 200;
  int n_taps = 100;
  int T = 10;
  long init_batch = 300;
  long total_samples = 3000;
  long switch_time = 1001;
  double gamma_fixed = 0.998;
  double gamma_init = 0.995;
  std::vector<std::string> methods = {"tc_ff", "tc_est_ff", "tc_opt_ff", "rls_ff"};
  double opt_rel_tol = 1e-9;
  std::uint64_t base_seed = 1;
  int parallelism = 1;
  std::string output_dir = "results";
  std::vector<long> checkpoints = {300, 1000, 1050, 1500, 3000};
  double noise_scale = 1.0;

  /// Throws InvalidArgument when an invariant is broken.
  void validate() const;
};

/// key = value lines; '#' starts a comment. Unknown keys are an error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& config);

/// Stable hash of everything that affects estimates (not output_dir, runs or parallelism).
std::string config_fingerprint(const ExperimentConfig& config);

/// One Monte-Carlo run for a single seed.
RunRecord run_single(const ExperimentConfig& config, std::uint64_t seed);

/// Runs seeds base_seed .. base_seed + n_runs - 1 on `parallelism` workers and
/// writes run_<seed>.json, timing_<seed>.json and the CSV summaries.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

/// Deterministic part of a record (fits, hyper traces, counters).
std::string record_to_json(const RunRecord& record);
/// Wall-clock part of a record.
std::string timing_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& run_json, const std::string& timing_json = {});

/// Loads every run_<seed>.json (and matching timing file) in `dir`, sorted by seed.
std::vector<RunRecord> load_records(const std::filesystem::path& dir);

/// fits_long.csv (method,k,seed,fit), times.csv (methods x mean/std) and summary.csv.
void emit_plot_data(const std::vector<RunRecord>& records, const std::vector<long>& checkpoints,
                    const std::filesystem::path& dir);

std::string fits_long_csv(const std::vector<RunRecord>& records, const std::vector<long>& checkpoints);
std::string times_csv(const Summary& summary);
std::string summary_csv(const Summary& summary);
std::string summary_json(const Summary& summary);

}  // namespace tvsid
