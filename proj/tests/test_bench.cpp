#include "doctest.h"

#include "tvsid/bench.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tvsid;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n_runs = 2;
  c.n_taps = 20;
  c.init_batch = 100;
  c.total_samples = 400;
  c.switch_time = 251;
  c.methods = {"tc_ff", "tc_est_ff"};
  c.checkpoints = {100, 250, 260, 400};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

}  // namespace

TEST_CASE("config text round trip") {
  ExperimentConfig c = small_config();
  c.gamma_fixed = 0.99;
  c.output_dir = "out dir";
  const ExperimentConfig d = parse_config(format_config(c));
  CHECK(format_config(d) == format_config(c));
  CHECK(d.gamma_fixed == 0.99);
  CHECK(d.methods == c.methods);
  CHECK(d.checkpoints == c.checkpoints);
  CHECK(d.output_dir == "out dir");
}

TEST_CASE("config parsing errors") {
  CHECK_THROWS_AS(parse_config("bogus = 1"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("n_runs"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("n_runs = many"), InvalidArgument);
  CHECK_NOTHROW(parse_config("# comment only\n\nn_runs = 3  # trailing\n"));
  CHECK(parse_config("n_runs = 3 # trailing").n_runs == 3);
}

TEST_CASE("config validation") {
  auto broken = [](auto mutate) {
    ExperimentConfig c = small_config();
    mutate(c);
    return c;
  };
  CHECK_NOTHROW(small_config().validate());
  CHECK_THROWS_AS(broken([](auto& c) { c.n_runs = 0; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(broken([](auto& c) { c.init_batch = 25; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(broken([](auto& c) { c.gamma_init = 0.5; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(broken([](auto& c) { c.gamma_fixed = 1.5; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(broken([](auto& c) { c.methods = {"tc_ff", "tc_ff"}; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(broken([](auto& c) { c.methods = {"ls"}; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(broken([](auto& c) { c.checkpoints = {255}; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(broken([](auto& c) { c.checkpoints = {410}; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(broken([](auto& c) { c.parallelism = 0; }).validate(), InvalidArgument);
}

TEST_CASE("fingerprint ignores bookkeeping fields only") {
  const ExperimentConfig c = small_config();
  ExperimentConfig d = c;
  d.n_runs = 50;
  d.parallelism = 4;
  d.output_dir = "elsewhere";
  CHECK(config_fingerprint(c) == config_fingerprint(d));
  d.gamma_fixed = 0.997;
  CHECK(config_fingerprint(c) != config_fingerprint(d));
}

TEST_CASE("noiseless single run learns the system") {
  ExperimentConfig c = small_config();
  c.methods = {"tc_ff"};
  c.noise_scale = 0.0;
  c.n_taps = 100;
  c.init_batch = 300;
  c.total_samples = 600;
  c.switch_time = 1001;
  c.checkpoints = {300, 600};
  const RunRecord r = run_single(c, 1);
  CHECK(r.methods.at("tc_ff").fits.at(600) >= 90.0);
}

TEST_CASE("single runs are reproducible and survive JSON") {
  const ExperimentConfig c = small_config();
  const RunRecord a = run_single(c, 4);
  const RunRecord b = run_single(c, 4);
  CHECK(record_to_json(a) == record_to_json(b));
  const RunRecord back = record_from_json(record_to_json(a), timing_to_json(a));
  CHECK(record_to_json(back) == record_to_json(a));
  CHECK(back.methods.at("tc_ff").cumulative_time == a.methods.at("tc_ff").cumulative_time);
  for (const auto& [name, m] : a.methods) {
    CHECK(m.armijo_violations == 0);
    CHECK(m.feasibility_violations == 0);
    CHECK(m.hyper_trace.size() == m.time_trace.size());
  }
}

TEST_CASE("experiment output files and parallel invariance") {
  const auto root = std::filesystem::temp_directory_path() / "tvsid_bench_test";
  std::filesystem::remove_all(root);
  ExperimentConfig c = small_config();
  c.n_runs = 3;
  c.output_dir = (root / "serial").string();
  const std::vector<RunRecord> serial = run_experiment(c);
  c.parallelism = 3;
  c.output_dir = (root / "parallel").string();
  const std::vector<RunRecord> parallel = run_experiment(c);

  REQUIRE(serial.size() == 3);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(record_to_json(serial[i]) == record_to_json(parallel[i]));
  }

  const std::string fits = slurp(root / "serial" / "fits_long.csv");
  CHECK(fits.rfind("method,k,seed,fit\n", 0) == 0);
  CHECK(count_lines(fits) == 1 + 2 * 4 * 3);
  CHECK(fits == slurp(root / "parallel" / "fits_long.csv"));
  CHECK(std::filesystem::exists(root / "serial" / "times.csv"));
  CHECK(std::filesystem::exists(root / "serial" / "summary.csv"));
  CHECK(std::filesystem::exists(root / "serial" / "timing_1.json"));

  const std::vector<RunRecord> loaded = load_records(root / "serial");
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[2].seed == 3);
  CHECK(record_to_json(loaded[0]) == record_to_json(serial[0]));

  CHECK_THROWS_AS(load_records(root / "missing"), IoError);
  std::filesystem::remove_all(root);
}

TEST_CASE("time table shape") {
  ExperimentConfig c = small_config();
  c.n_runs = 1;
  c.methods = {"tc_ff"};
  const std::vector<RunRecord> recs = {run_single(c, 1)};
  const std::string t = times_csv(aggregate(recs, c.checkpoints));
  CHECK(count_lines(t) == 3);
  CHECK(t.rfind("stat,tc_ff\n", 0) == 0);
}
