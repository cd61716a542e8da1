#pragma once

#include "tvsid/common.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tvsid {

/// 100 * (1 - |h - h_est| / |h|). Can be negative.
double fit(const Vec& h_true, const Vec& h_est);

struct FitPoint {
  long k = 0;
  double fit = 0.0;
};

struct FitTrace {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<FitPoint> checkpoints;

  /// Fit recorded at sample k; throws InvalidArgument if k was not recorded.
  [[nodiscard]] double at(long k) const;
};

struct HyperPoint {
  long k = 0;
  double lambda = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

struct TimePoint {
  long k = 0;
  double seconds = 0.0;  // cumulative
};

/// Everything one Monte-Carlo run produced for one estimator.
struct MethodRecord {
  FitTrace fits;
  std::vector<HyperPoint> hyper_trace;
  std::vector<TimePoint> time_trace;
  double cumulative_time = 0.0;
  long faults = 0;
  long sgp_steps = 0;
  long armijo_violations = 0;
  long feasibility_violations = 0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  std::map<std::string, MethodRecord> methods;
};

struct Distribution {
  double mean = 0.0;
  double std = 0.0;  // sample (N-1) convention, 0 for a single value
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  [[nodiscard]] double iqr() const { return q3 - q1; }
};

Distribution describe(std::vector<double> values);

struct Summary {
  std::vector<long> checkpoints;
  std::map<std::string, std::map<long, Distribution>> fit;  // method -> k -> stats
  std::map<std::string, Distribution> time;
};

Summary aggregate(const std::vector<RunRecord>& records, const std::vector<long>& checkpoints);

}  // namespace tvsid
