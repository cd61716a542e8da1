#include "doctest.h"

#include "tvsid/metrics.hpp"

#include <random>

using namespace tvsid;

namespace {

RunRecord make_record(std::uint64_t seed, double a, double b, double time) {
  RunRecord r;
  r.seed = seed;
  MethodRecord m;
  m.fits.method = "tc_ff";
  m.fits.seed = seed;
  m.fits.checkpoints = {{300, a}, {1000, b}};
  m.cumulative_time = time;
  r.methods["tc_ff"] = m;
  return r;
}

}  // namespace

TEST_CASE("fit reference values") {
  Vec h(3);
  h << 1.0, -2.0, 0.5;
  CHECK(fit(h, h) == doctest::Approx(100.0));
  CHECK(fit(h, Vec::Zero(3)) == doctest::Approx(0.0));
  CHECK(fit(h, 2.0 * h) == doctest::Approx(0.0));
  CHECK(fit(h, -h) == doctest::Approx(-100.0));
}

TEST_CASE("fit of a scaled truth") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Vec h(20);
  for (auto& v : h) v = nd(rng);
  for (double c : {-1.0, 0.0, 0.3, 0.9, 1.0, 1.7}) {
    CHECK(fit(h, c * h) == doctest::Approx(100.0 * (1.0 - std::abs(1.0 - c))).epsilon(1e-12));
  }
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(fit(Vec::Zero(3), Vec::Ones(3)), UndefinedMetric);
  CHECK_THROWS_AS(fit(Vec::Ones(3), Vec::Ones(4)), InvalidArgument);
}

TEST_CASE("describe") {
  const Distribution one = describe({42.0});
  CHECK(one.mean == 42.0);
  CHECK(one.std == 0.0);
  CHECK(one.median == 42.0);
  CHECK(one.iqr() == 0.0);

  const Distribution two = describe({40.0, 60.0});
  CHECK(two.mean == doctest::Approx(50.0));
  CHECK(two.std == doctest::Approx(14.142135623730951));
  CHECK(two.median == doctest::Approx(50.0));

  const Distribution five = describe({5.0, 1.0, 4.0, 2.0, 3.0});
  CHECK(five.median == 3.0);
  CHECK(five.q1 == 2.0);
  CHECK(five.q3 == 4.0);
  CHECK(five.iqr() == 2.0);

  CHECK_THROWS_AS(describe({}), InvalidArgument);
}

TEST_CASE("aggregate does not depend on record order") {
  std::vector<RunRecord> recs = {make_record(1, 10, 50, 1.0), make_record(2, 20, 60, 2.0),
                                 make_record(3, 30, 80, 3.0)};
  const Summary a = aggregate(recs, {300, 1000});
  std::swap(recs[0], recs[2]);
  const Summary b = aggregate(recs, {300, 1000});
  CHECK(a.fit.at("tc_ff").at(300).mean == b.fit.at("tc_ff").at(300).mean);
  CHECK(a.fit.at("tc_ff").at(1000).median == b.fit.at("tc_ff").at(1000).median);
  CHECK(a.fit.at("tc_ff").at(300).mean == doctest::Approx(20.0));
  CHECK(a.fit.at("tc_ff").at(1000).median == doctest::Approx(60.0));
  CHECK(a.time.at("tc_ff").mean == doctest::Approx(2.0));
}

TEST_CASE("aggregate errors") {
  CHECK_THROWS_AS(aggregate({}, {300}), InvalidArgument);
  const std::vector<RunRecord> recs = {make_record(1, 10, 50, 1.0)};
  CHECK_THROWS_AS(aggregate(recs, {1050}), InvalidArgument);
  RunRecord other = make_record(2, 1, 2, 3);
  other.methods["rls_ff"] = other.methods["tc_ff"];
  CHECK_THROWS_AS(aggregate({recs[0], other}, {300}), InvalidArgument);
}

TEST_CASE("FitTrace::at") {
  FitTrace t;
  t.checkpoints = {{300, 1.0}, {1000, 2.0}};
  CHECK(t.at(1000) == 2.0);
  CHECK_THROWS_AS((void)t.at(500), InvalidArgument);
}
