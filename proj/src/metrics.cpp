#include "tvsid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace tvsid {

double fit(const Vec& h_true, const Vec& h_est) {
  if (h_true.size() != h_est.size()) throw InvalidArgument("fit needs equal-length impulse responses");
  const double norm = h_true.norm();
  if (!(norm > 0.0)) throw UndefinedMetric("fit is undefined for a zero true impulse response");
  return 100.0 * (1.0 - (h_true - h_est).norm() / norm);
}

double FitTrace::at(long k) const {
  const auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), k,
                                   [](const FitPoint& p, long key) { return p.k < key; });
  if (it == checkpoints.end() || it->k != k) {
    throw InvalidArgument("no fit recorded for " + method + " at k = " + std::to_string(k));
  }
  return it->fit;
}

namespace {

// Linear interpolation between order statistics (R type 7).
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Distribution describe(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("cannot describe an empty sample");
  std::sort(values.begin(), values.end());
  Distribution d;
  double sum = 0.0;
  for (double v : values) sum += v;
  d.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - d.mean) * (v - d.mean);
    d.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  d.median = quantile(values, 0.5);
  d.q1 = quantile(values, 0.25);
  d.q3 = quantile(values, 0.75);
  return d;
}

Summary aggregate(const std::vector<RunRecord>& records, const std::vector<long>& checkpoints) {
  if (records.empty()) throw InvalidArgument("aggregate needs at least one run record");
  std::set<std::string> methods;
  for (const auto& [name, rec] : records.front().methods) methods.insert(name);
  for (const RunRecord& r : records) {
    std::set<std::string> mine;
    for (const auto& [name, rec] : r.methods) mine.insert(name);
    if (mine != methods) throw InvalidArgument("run records disagree on the set of methods");
  }

  Summary s;
  s.checkpoints = checkpoints;
  for (const std::string& m : methods) {
    for (long k : checkpoints) {
      std::vector<double> fits;
      for (const RunRecord& r : records) fits.push_back(r.methods.at(m).fits.at(k));
      s.fit[m][k] = describe(std::move(fits));
    }
    std::vector<double> times;
    for (const RunRecord& r : records) times.push_back(r.methods.at(m).cumulative_time);
    s.time[m] = describe(std::move(times));
  }
  return s;
}

}  // namespace tvsid
