#include "tvsid/simulator.hpp"

#include "json.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace tvsid {

namespace {

using cplx = std::complex<double>;

// Independent stream per (seed, purpose).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), tag};
  return std::mt19937_64(seq);
}

enum StreamTag : std::uint32_t { kSystem = 1, kPerturb = 2, kInput = 3, kNoise = 4 };

constexpr double kMinRadius = 0.4;
constexpr int kModelTaps = 100;

void sample_conjugate_pair(std::mt19937_64& rng, double radius, std::vector<cplx>& out) {
  std::uniform_real_distribution<double> mag(kMinRadius, radius);
  std::uniform_real_distribution<double> ang(0.0, std::numbers::pi);
  const cplx r = std::polar(mag(rng), ang(rng));
  out.push_back(r);
  out.push_back(std::conj(r));
}

std::vector<cplx> sample_roots(std::mt19937_64& rng, int count, double radius) {
  std::vector<cplx> roots;
  for (int i = 0; i < count / 2; ++i) sample_conjugate_pair(rng, radius, roots);
  if (count % 2 == 1) {
    std::uniform_real_distribution<double> mag(kMinRadius, radius);
    std::bernoulli_distribution sign(0.5);
    const double r = mag(rng);
    roots.emplace_back(sign(rng) ? r : -r, 0.0);
  }
  return roots;
}

// Tail energy past the model length and the decay envelope at tap 100.
bool truncation_adequate(const Vec& h) {
  const double total = h.norm();
  if (!(total > 0.0) || h.size() <= kModelTaps) return false;
  const double tail = h.tail(h.size() - kModelTaps).norm();
  const double envelope = std::pow(0.95, kModelTaps) / (1.0 - 0.95) * h.cwiseAbs().maxCoeff();
  return tail <= 0.01 * total && std::abs(h(kModelTaps - 1)) <= envelope;
}

LtiSystem finish_system(std::vector<cplx> poles, std::vector<cplx> zeros, int taps) {
  LtiSystem sys;
  sys.poles = std::move(poles);
  sys.zeros = std::move(zeros);
  const Vec raw = impulse_response(sys.poles, sys.zeros, 1.0, taps);
  sys.gain = 1.0 / raw.norm();
  sys.h_true = sys.gain * raw;
  return sys;
}

std::vector<double> convolve(const Vec& h, const std::vector<double>& u) {
  std::vector<double> y(u.size(), 0.0);
  const long taps = static_cast<long>(h.size());
  for (long t = 0; t < static_cast<long>(u.size()); ++t) {
    double acc = 0.0;
    const long jmax = std::min(taps - 1, t);
    for (long j = 0; j <= jmax; ++j) acc += h(j) * u[t - j];
    y[t] = acc;
  }
  return y;
}

double population_variance(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return var / static_cast<double>(x.size());
}

void splice(ScenarioData& d) {
  const std::vector<double> y_before = convolve(d.before.h_true, d.u);
  const std::vector<double> y_after = convolve(d.after.h_true, d.u);
  d.y_clean.resize(d.u.size());
  for (std::size_t i = 0; i < d.u.size(); ++i) {
    const long t = static_cast<long>(i) + 1;
    d.y_clean[i] = t < d.switch_time ? y_before[i] : y_after[i];
  }
}

nlohmann::json roots_to_json(const std::vector<cplx>& roots) {
  nlohmann::json arr = nlohmann::json::array();
  for (const cplx& r : roots) arr.push_back({r.real(), r.imag()});
  return arr;
}

std::vector<cplx> roots_from_json(const nlohmann::json& arr) {
  std::vector<cplx> roots;
  for (const auto& r : arr) roots.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
  return roots;
}

nlohmann::json system_to_json(const LtiSystem& s) {
  return {{"poles", roots_to_json(s.poles)}, {"zeros", roots_to_json(s.zeros)}, {"gain", s.gain}};
}

LtiSystem system_from_json(const nlohmann::json& j, int taps) {
  LtiSystem s;
  s.poles = roots_from_json(j.at("poles"));
  s.zeros = roots_from_json(j.at("zeros"));
  s.gain = j.at("gain").get<double>();
  s.h_true = impulse_response(s.poles, s.zeros, s.gain, taps);
  return s;
}

}  // namespace

std::vector<double> expand_roots(const std::vector<cplx>& roots) {
  std::vector<cplx> c{1.0};
  for (const cplx& r : roots) {
    c.push_back(0.0);
    for (std::size_t i = c.size() - 1; i > 0; --i) c[i] -= r * c[i - 1];
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

Vec impulse_response(const std::vector<cplx>& poles, const std::vector<cplx>& zeros, double gain, int taps) {
  if (taps < 1) throw InvalidArgument("impulse response needs at least one tap");
  // Cascade of first and second order sections; expanding a high-order
  // polynomial first loses several digits once its coefficients grow.
  const auto sections = [](const std::vector<cplx>& roots) {
    std::vector<std::array<double, 3>> out;
    long upper = 0, lower = 0;
    for (const cplx& r : roots) {
      if (r.imag() > 0.0) {
        out.push_back({1.0, -2.0 * r.real(), std::norm(r)});
        ++upper;
      } else if (r.imag() < 0.0) {
        ++lower;
      } else {
        out.push_back({1.0, -r.real(), 0.0});
      }
    }
    if (upper != lower) throw InvalidArgument("complex roots must come in conjugate pairs");
    return out;
  };
  Vec h = Vec::Zero(taps);
  h(0) = gain;
  for (const auto& c : sections(zeros)) {
    for (int t = taps - 1; t >= 0; --t) {
      h(t) += (t >= 1 ? c[1] * h(t - 1) : 0.0) + (t >= 2 ? c[2] * h(t - 2) : 0.0);
    }
  }
  for (const auto& c : sections(poles)) {
    for (int t = 0; t < taps; ++t) {
      h(t) -= (t >= 1 ? c[1] * h(t - 1) : 0.0) + (t >= 2 ? c[2] * h(t - 2) : 0.0);
    }
  }
  return h;
}

LtiSystem random_system(std::uint64_t seed, int order, double radius, int taps) {
  if (order < 1) throw InvalidArgument("system order must be positive");
  if (!(radius > kMinRadius && radius < 1.0)) throw InvalidArgument("pole radius must lie in (0.4, 1)");
  auto rng = make_rng(seed, kSystem);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<cplx> poles = sample_roots(rng, order, radius);
    std::vector<cplx> zeros = sample_roots(rng, order, radius);
    LtiSystem sys = finish_system(std::move(poles), std::move(zeros), taps);
    if (truncation_adequate(sys.h_true)) return sys;
  }
  throw NumericalFailure("could not draw a system with an adequately short impulse response");
}

LtiSystem perturb_system(const LtiSystem& sys, std::uint64_t seed, double radius) {
  auto rng = make_rng(seed, kPerturb);
  const int taps = static_cast<int>(sys.h_true.size());
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<cplx> poles = sys.poles;
    std::vector<cplx> zeros = sys.zeros;
    sample_conjugate_pair(rng, radius, poles);
    sample_conjugate_pair(rng, radius, zeros);
    LtiSystem out = finish_system(std::move(poles), std::move(zeros), taps);
    if (truncation_adequate(out.h_true)) return out;
  }
  throw NumericalFailure("could not draw an adequate perturbation");
}

std::vector<double> bandlimited_input(std::uint64_t seed, long length, double band) {
  if (length < 1) throw InvalidArgument("input length must be positive");
  if (!(band > 0.0 && band <= 1.0)) throw InvalidArgument("band must lie in (0, 1]");
  constexpr int kTaps = 65;
  constexpr int kMid = kTaps / 2;

  std::vector<double> fir(kTaps);
  double dc = 0.0;
  for (int k = 0; k < kTaps; ++k) {
    const double m = k - kMid;
    const double x = band * m;
    const double sinc = m == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / (kTaps - 1));
    fir[k] = band * sinc * window;
    dc += fir[k];
  }
  for (double& c : fir) c /= dc;

  auto rng = make_rng(seed, kInput);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(static_cast<std::size_t>(length) + kTaps - 1);
  for (double& v : white) v = normal(rng);

  std::vector<double> u(static_cast<std::size_t>(length));
  for (long t = 0; t < length; ++t) {
    double acc = 0.0;
    for (int k = 0; k < kTaps; ++k) acc += fir[k] * white[t + kTaps - 1 - k];
    u[t] = acc;
  }
  const double scale = 1.0 / std::sqrt(population_variance(u));
  for (double& v : u) v *= scale;
  return u;
}

Vec ScenarioData::truth_at(long k, int n) const {
  const LtiSystem& sys = k < switch_time ? before : after;
  return sys.h_true.head(n);
}

ScenarioData make_scenario(std::uint64_t seed, const ScenarioOptions& opt) {
  if (opt.length < 1 || opt.switch_time < 1) throw InvalidArgument("invalid scenario length or switch time");
  ScenarioData d;
  d.seed = seed;
  d.switch_time = opt.switch_time;
  d.before = random_system(seed);
  d.after = opt.perturb ? perturb_system(d.before, seed) : d.before;
  d.u = bandlimited_input(seed, opt.length);
  splice(d);

  // SNR = 1: noise variance equals the variance of the noiseless output.
  d.noise_sigma2 = population_variance(d.y_clean) * opt.noise_scale * opt.noise_scale;
  auto rng = make_rng(seed, kNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(d.noise_sigma2);
  d.y.resize(d.y_clean.size());
  for (std::size_t i = 0; i < d.y.size(); ++i) d.y[i] = d.y_clean[i] + sd * normal(rng);
  return d;
}

void export_scenario(const ScenarioData& data, const std::string& stem) {
  std::ofstream csv(stem + ".csv");
  if (!csv) throw std::runtime_error("cannot write " + stem + ".csv");
  csv.precision(17);
  csv << "t,u,y\n";
  for (std::size_t i = 0; i < data.u.size(); ++i) csv << i + 1 << ',' << data.u[i] << ',' << data.y[i] << '\n';

  nlohmann::json j;
  j["seed"] = data.seed;
  j["switch_time"] = data.switch_time;
  j["noise_sigma2"] = data.noise_sigma2;
  j["truth_taps"] = data.before.h_true.size();
  j["before"] = system_to_json(data.before);
  j["after"] = system_to_json(data.after);
  std::ofstream js(stem + ".json");
  if (!js) throw std::runtime_error("cannot write " + stem + ".json");
  js << j.dump(2) << '\n';
}

ScenarioData import_scenario(const std::string& stem) {
  std::ifstream js(stem + ".json");
  if (!js) throw std::runtime_error("cannot read " + stem + ".json");
  const nlohmann::json j = nlohmann::json::parse(js);
  ScenarioData d;
  d.seed = j.at("seed").get<std::uint64_t>();
  d.switch_time = j.at("switch_time").get<long>();
  d.noise_sigma2 = j.at("noise_sigma2").get<double>();
  const int taps = j.at("truth_taps").get<int>();
  d.before = system_from_json(j.at("before"), taps);
  d.after = system_from_json(j.at("after"), taps);

  std::ifstream csv(stem + ".csv");
  if (!csv) throw std::runtime_error("cannot read " + stem + ".csv");
  std::string line;
  std::getline(csv, line);
  if (line != "t,u,y") throw std::runtime_error("unexpected scenario CSV header: " + line);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string t, u, y;
    std::getline(row, t, ',');
    std::getline(row, u, ',');
    std::getline(row, y, ',');
    d.u.push_back(std::stod(u));
    d.y.push_back(std::stod(y));
  }
  splice(d);
  return d;
}

}  // namespace tvsid
