#include "doctest.h"
#include "helpers.hpp"

#include "tvsid/estimators.hpp"
#include "tvsid/metrics.hpp"
#include "tvsid/simulator.hpp"

#include <complex>
#include <filesystem>
#include <numbers>

using namespace tvsid;
using cplx = std::complex<double>;

namespace {

// Partial fractions: h(0) = g, h(k) = sum_i r_i p_i^k for distinct poles.
Vec residue_response(const std::vector<cplx>& poles, const std::vector<cplx>& zeros, double g, int taps) {
  std::vector<cplx> res(poles.size());
  for (std::size_t i = 0; i < poles.size(); ++i) {
    cplx num = g;
    for (const cplx& z : zeros) num *= 1.0 - z / poles[i];
    cplx den = 1.0;
    for (std::size_t j = 0; j < poles.size(); ++j)
      if (j != i) den *= 1.0 - poles[j] / poles[i];
    res[i] = num / den;
  }
  Vec h(taps);
  h(0) = g;
  for (int k = 1; k < taps; ++k) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < poles.size(); ++i) acc += res[i] * std::pow(poles[i], k);
    h(k) = acc.real();
  }
  return h;
}

using LD = long double;

// Real factors from conjugate pairs, multiplied out in extended precision.
std::vector<LD> real_poly(const std::vector<cplx>& roots) {
  std::vector<LD> c{1.0L};
  auto mul = [&c](const std::vector<LD>& f) {
    std::vector<LD> out(c.size() + f.size() - 1, 0.0L);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < f.size(); ++j) out[i + j] += c[i] * f[j];
    c = out;
  };
  for (const cplx& r : roots) {
    const LD re = r.real(), im = r.imag();
    if (im > 0.0L) mul({1.0L, -2.0L * re, re * re + im * im});
    else if (im == 0.0L) mul({1.0L, -re});
  }
  return c;
}

// Power series of g * B / A, one quotient coefficient at a time.
Vec long_division(const std::vector<cplx>& poles, const std::vector<cplx>& zeros, double g, int taps) {
  const std::vector<LD> a = real_poly(poles);
  std::vector<LD> rem = real_poly(zeros);
  for (LD& v : rem) v *= g;
  rem.resize(std::max<std::size_t>(rem.size(), taps + a.size()), 0.0L);
  Vec q(taps);
  for (int t = 0; t < taps; ++t) {
    const LD c = rem[t] / a[0];
    for (std::size_t i = 0; i < a.size(); ++i) rem[t + i] -= c * a[i];
    q(t) = static_cast<double>(c);
  }
  return q;
}

double max_radius(const std::vector<cplx>& roots) {
  double r = 0.0;
  for (const cplx& z : roots) r = std::max(r, std::abs(z));
  return r;
}

}  // namespace

TEST_CASE("impulse response matches the partial-fraction oracle") {
  const std::vector<cplx> poles = {std::polar(0.9, 0.3), std::polar(0.9, -0.3), {0.5, 0.0},
                                   std::polar(0.7, 2.0), std::polar(0.7, -2.0), {-0.6, 0.0}};
  const std::vector<cplx> zeros = {std::polar(0.8, 1.1), std::polar(0.8, -1.1), {0.3, 0.0},
                                   std::polar(0.5, 2.5), std::polar(0.5, -2.5), {-0.9, 0.0}};
  const Vec a = impulse_response(poles, zeros, 1.7, 100);
  const Vec b = residue_response(poles, zeros, 1.7, 100);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((a - long_division(poles, zeros, 1.7, 100)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("expand_roots gives the monic polynomial") {
  const std::vector<double> c = expand_roots({{0.5, 0.0}, {-0.25, 0.0}});
  REQUIRE(c.size() == 3);
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(c[1] == doctest::Approx(-0.25));
  CHECK(c[2] == doctest::Approx(-0.125));
}

TEST_CASE("random systems are stable, normalised and short") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LtiSystem s = random_system(seed);
    CHECK(s.order() == 30);
    CHECK(max_radius(s.poles) <= 0.95 + 1e-12);
    CHECK(std::abs(s.h_true.norm() - 1.0) <= 1e-10);
    const double tail = s.h_true.tail(s.h_true.size() - 100).norm();
    CHECK(tail <= 0.01 * s.h_true.norm());
    const Vec oracle = long_division(s.poles, s.zeros, s.gain, 100);
    CHECK((s.h_true.head(100) - oracle).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("random_system rejects bad arguments") {
  CHECK_THROWS_AS(random_system(1, 0), InvalidArgument);
  CHECK_THROWS_AS(random_system(1, 30, 1.2), InvalidArgument);
  CHECK_THROWS_AS(impulse_response({{0.5, 0.3}}, {}, 1.0, 10), InvalidArgument);
}

TEST_CASE("perturbation adds a pole and zero pair and changes the response") {
  double mean_fit = 0.0;
  const int runs = 100;
  for (int seed = 1; seed <= runs; ++seed) {
    const LtiSystem s = random_system(seed);
    const LtiSystem p = perturb_system(s, seed);
    CHECK(p.order() == s.order() + 2);
    CHECK(max_radius(p.poles) <= 0.95 + 1e-12);
    CHECK(std::abs(p.h_true.norm() - 1.0) <= 1e-10);
    mean_fit += fit(s.h_true.head(100), p.h_true.head(100)) / runs;
  }
  CHECK(mean_fit <= 95.0);
}

TEST_CASE("input is unit variance, deterministic and band-limited") {
  const std::vector<double> u = bandlimited_input(3, 4096);
  double mean = 0.0, var = 0.0;
  for (double v : u) mean += v / u.size();
  for (double v : u) var += (v - mean) * (v - mean) / u.size();
  CHECK(std::abs(var - 1.0) <= 1e-12);
  CHECK(u == bandlimited_input(3, 4096));
  CHECK(u != bandlimited_input(4, 4096));

  // Periodogram power above 0.9 of Nyquist.
  const int N = static_cast<int>(u.size());
  const int bins = N / 2;
  double total = 0.0, high = 0.0;
  for (int f = 1; f <= bins; ++f) {
    cplx acc = 0.0;
    const double w = 2.0 * std::numbers::pi * f / N;
    for (int t = 0; t < N; ++t) acc += u[t] * std::polar(1.0, -w * t);
    const double p = std::norm(acc);
    total += p;
    if (static_cast<double>(f) / bins > 0.9) high += p;
  }
  CHECK(high / total <= 0.01);

  CHECK_THROWS_AS(bandlimited_input(1, 0), InvalidArgument);
  CHECK_THROWS_AS(bandlimited_input(1, 10, 1.5), InvalidArgument);
}

TEST_CASE("scenario has SNR one and switches at the right time") {
  const ScenarioData d = make_scenario(11, {.length = 2000, .switch_time = 1001});
  CHECK(d.u.size() == 2000);
  CHECK(d.y.size() == 2000);
  double mean = 0.0, var = 0.0;
  for (double v : d.y_clean) mean += v / d.y_clean.size();
  for (double v : d.y_clean) var += (v - mean) * (v - mean) / d.y_clean.size();
  CHECK(std::abs(d.noise_sigma2 / var - 1.0) <= 1e-12);

  // Outputs before the switch come from the first system only.
  const std::vector<double> y_before = testing::fir_output(d.u, d.before.h_true);
  const std::vector<double> y_after = testing::fir_output(d.u, d.after.h_true);
  for (long t = 1; t <= 2000; ++t) {
    const double expect = t < 1001 ? y_before[t - 1] : y_after[t - 1];
    REQUIRE(std::abs(d.y_clean[t - 1] - expect) <= 1e-10);
  }
  CHECK(d.truth_at(1000, 100) == d.before.h_true.head(100));
  CHECK(d.truth_at(1001, 100) == d.after.h_true.head(100));

  const ScenarioData quiet = make_scenario(11, {.length = 2000, .noise_scale = 0.0});
  CHECK(quiet.y == quiet.y_clean);
  const ScenarioData same = make_scenario(11, {.length = 500, .perturb = false});
  CHECK(same.before.h_true == same.after.h_true);
}

TEST_CASE("noiseless scenario is learned by the Bayesian estimator") {
  const ScenarioData d = make_scenario(2, {.length = 1000, .noise_scale = 0.0});
  EstimatorConfig c;
  c.n = 100;
  const EstimatorState st = initialize(d.u, d.y, c);
  CHECK(fit(d.truth_at(1000, 100), st.h_hat) >= 90.0);
}

TEST_CASE("scenario export round trip") {
  const ScenarioData d = make_scenario(21, {.length = 400, .switch_time = 200});
  const auto dir = std::filesystem::temp_directory_path() / "tvsid_scenario_rt";
  std::filesystem::create_directories(dir);
  const std::string stem = (dir / "s21").string();
  export_scenario(d, stem);
  const ScenarioData e = import_scenario(stem);
  CHECK(e.seed == d.seed);
  CHECK(e.switch_time == d.switch_time);
  CHECK(e.u == d.u);
  CHECK(e.y == d.y);
  CHECK((e.before.h_true - d.before.h_true).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((e.after.h_true - d.after.h_true).cwiseAbs().maxCoeff() <= 1e-12);
  std::filesystem::remove_all(dir);
}
