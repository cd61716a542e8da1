#include "tvsid/bench.hpp"

#include "tvsid/estimators.hpp"
#include "tvsid/simulator.hpp"
#include "tvsid/stats.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

namespace tvsid {

namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw InvalidArgument("bad value for " + key + ": '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("bad value for " + key + ": '" + value + "'");
  }
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "," : "") << items[i];
  return os.str();
}

EstimatorMode mode_of(const std::string& method) {
  if (method == "tc_ff") return EstimatorMode::fixed_ff;
  if (method == "tc_est_ff") return EstimatorMode::adaptive_ff;
  if (method == "tc_opt_ff") return EstimatorMode::opt_fixed_ff;
  if (method == "tc_opt_est_ff") return EstimatorMode::opt_adaptive_ff;
  throw InvalidArgument("unknown method " + method);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << content;
  if (!os) throw IoError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Per-step checks are recomputed here rather than trusted from the optimizer.
void audit_steps(const EstimatorState& st, MethodRecord& rec) {
  const SgpOptions& opt = st.config.sgp;
  for (const StepReport& s : st.last_steps) {
    ++rec.sgp_steps;
    if (!s.stalled && !(s.f_end <= s.f_start + opt.armijo_c * s.nu * s.directional)) ++rec.armijo_violations;
  }
  if (!st.config.box.contains(st.sgp.eta_curr) || !st.config.box.contains(st.hyper.to_vector())) {
    ++rec.feasibility_violations;
  }
}

HyperPoint hyper_point(const EstimatorState& st) {
  return {st.clock, st.hyper.lambda, st.hyper.beta, st.hyper.gamma.value_or(st.config.gamma_fixed)};
}

MethodRecord run_bayesian(const ExperimentConfig& cfg, const ScenarioData& data, const std::string& method) {
  MethodRecord rec;
  rec.fits.method = method;
  rec.fits.seed = data.seed;

  EstimatorConfig ec;
  ec.n = cfg.n_taps;
  ec.mode = mode_of(method);
  ec.gamma_fixed = cfg.gamma_fixed;
  ec.gamma_init = cfg.gamma_init;
  ec.opt_rel_tol = cfg.opt_rel_tol;

  const std::span<const double> u(data.u);
  const std::span<const double> y(data.y);
  EstimatorState st;
  try {
    st = initialize(u.first(cfg.init_batch), y.first(cfg.init_batch), ec);
  } catch (const NumericalFailure&) {
    // No estimate at all: report the zero impulse response for every sample.
    ++rec.faults;
    for (long k = cfg.init_batch; k <= cfg.total_samples; k += cfg.T) {
      const long kk = std::min(k, cfg.total_samples);
      rec.fits.checkpoints.push_back({kk, fit(data.truth_at(kk, cfg.n_taps), Vec::Zero(cfg.n_taps))});
      rec.time_trace.push_back({kk, 0.0});
    }
    return rec;
  }
  audit_steps(st, rec);
  rec.fits.checkpoints.push_back({st.clock, fit(data.truth_at(st.clock, cfg.n_taps), st.h_hat)});
  rec.hyper_trace.push_back(hyper_point(st));
  rec.time_trace.push_back({st.clock, 0.0});

  double elapsed = 0.0;
  for (long start = cfg.init_batch + 1; start <= cfg.total_samples; start += cfg.T) {
    const long count = std::min<long>(cfg.T, cfg.total_samples - start + 1);
    const RegressorBlock block = build_block(u, y, start, cfg.n_taps, count);
    const auto t0 = std::chrono::steady_clock::now();
    st = update(std::move(st), block);
    elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (st.fault) ++rec.faults;
    audit_steps(st, rec);
    rec.fits.checkpoints.push_back({st.clock, fit(data.truth_at(st.clock, cfg.n_taps), st.h_hat)});
    rec.hyper_trace.push_back(hyper_point(st));
    rec.time_trace.push_back({st.clock, elapsed});
  }
  rec.cumulative_time = elapsed;
  return rec;
}

MethodRecord run_rls(const ExperimentConfig& cfg, const ScenarioData& data) {
  MethodRecord rec;
  rec.fits.method = "rls_ff";
  rec.fits.seed = data.seed;
  const std::span<const double> u(data.u);
  const std::span<const double> y(data.y);

  RlsState st = rls_initialize(build_block(u, y, 1, cfg.n_taps, cfg.init_batch), cfg.gamma_fixed);
  rec.fits.checkpoints.push_back({cfg.init_batch, fit(data.truth_at(cfg.init_batch, cfg.n_taps), st.theta)});
  rec.time_trace.push_back({cfg.init_batch, 0.0});

  double elapsed = 0.0;
  for (long start = cfg.init_batch + 1; start <= cfg.total_samples; start += cfg.T) {
    const long count = std::min<long>(cfg.T, cfg.total_samples - start + 1);
    const RegressorBlock block = build_block(u, y, start, cfg.n_taps, count);
    const auto t0 = std::chrono::steady_clock::now();
    st = rls_update(std::move(st), block);
    elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const long k = start + count - 1;
    rec.fits.checkpoints.push_back({k, fit(data.truth_at(k, cfg.n_taps), st.theta)});
    rec.time_trace.push_back({k, elapsed});
  }
  rec.cumulative_time = elapsed;
  return rec;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("config: " + what); };
  if (n_runs < 1) fail("runs must be >= 1");
  if (n_taps < 1) fail("n_taps must be >= 1");
  if (T < 1) fail("T must be >= 1");
  if (init_batch < n_taps + 10) fail("init_batch must be at least n_taps + 10");
  if (total_samples < init_batch) fail("total_samples must be >= init_batch");
  if (switch_time < 1) fail("switch_time must be >= 1");
  if (!(gamma_fixed > 0.0 && gamma_fixed <= 1.0)) fail("gamma_fixed must lie in (0, 1]");
  if (!(gamma_init >= 0.9 && gamma_init <= 1.0)) fail("gamma_init must lie in [0.9, 1]");
  if (!(opt_rel_tol > 0.0)) fail("opt_rel_tol must be positive");
  if (parallelism < 1) fail("parallelism must be >= 1");
  if (!(noise_scale >= 0.0)) fail("noise_scale must be >= 0");
  if (methods.empty()) fail("at least one method is required");
  std::set<std::string> seen;
  for (const std::string& m : methods) {
    if (std::find(kAllMethods.begin(), kAllMethods.end(), m) == kAllMethods.end()) fail("unknown method " + m);
    if (!seen.insert(m).second) fail("duplicate method " + m);
  }
  for (long k : checkpoints) {
    const bool on_grid = k == total_samples || (k >= init_batch && (k - init_batch) % T == 0);
    if (k < init_batch || k > total_samples || !on_grid) {
      fail("checkpoint " + std::to_string(k) + " is not an update time");
    }
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "n_runs") c.n_runs = parse_number<int>(key, value);
    else if (key == "n_taps") c.n_taps = parse_number<int>(key, value);
    else if (key == "T") c.T = parse_number<int>(key, value);
    else if (key == "init_batch") c.init_batch = parse_number<long>(key, value);
    else if (key == "total_samples") c.total_samples = parse_number<long>(key, value);
    else if (key == "switch_time") c.switch_time = parse_number<long>(key, value);
    else if (key == "gamma_fixed") c.gamma_fixed = parse_double(key, value);
    else if (key == "gamma_init") c.gamma_init = parse_double(key, value);
    else if (key == "methods") c.methods = split_list(value);
    else if (key == "opt_rel_tol") c.opt_rel_tol = parse_double(key, value);
    else if (key == "base_seed") c.base_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "parallelism") c.parallelism = parse_number<int>(key, value);
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "noise_scale") c.noise_scale = parse_double(key, value);
    else if (key == "checkpoints") {
      c.checkpoints.clear();
      for (const std::string& k : split_list(value)) c.checkpoints.push_back(parse_number<long>(key, k));
    } else {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "n_runs = " << c.n_runs << '\n'
     << "n_taps = " << c.n_taps << '\n'
     << "T = " << c.T << '\n'
     << "init_batch = " << c.init_batch << '\n'
     << "total_samples = " << c.total_samples << '\n'
     << "switch_time = " << c.switch_time << '\n'
     << "gamma_fixed = " << fmt_double(c.gamma_fixed) << '\n'
     << "gamma_init = " << fmt_double(c.gamma_init) << '\n'
     << "methods = " << join(c.methods) << '\n'
     << "opt_rel_tol = " << fmt_double(c.opt_rel_tol) << '\n'
     << "base_seed = " << c.base_seed << '\n'
     << "parallelism = " << c.parallelism << '\n'
     << "output_dir = " << c.output_dir << '\n'
     << "checkpoints = " << join(c.checkpoints) << '\n'
     << "noise_scale = " << fmt_double(c.noise_scale) << '\n';
  return os.str();
}

std::string config_fingerprint(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.n_runs = 1;
  c.base_seed = 0;
  c.parallelism = 1;
  c.output_dir.clear();
  c.checkpoints.clear();
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(format_config(c))));
  return buf;
}

RunRecord run_single(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  ScenarioOptions so;
  so.length = config.total_samples;
  so.switch_time = config.switch_time;
  so.noise_scale = config.noise_scale;
  const ScenarioData data = make_scenario(seed, so);

  RunRecord rec;
  rec.seed = seed;
  rec.config_fingerprint = config_fingerprint(config);
  for (const std::string& m : config.methods) {
    rec.methods[m] = m == "rls_ff" ? run_rls(config, data) : run_bayesian(config, data, m);
  }
  return rec;
}

std::string record_to_json(const RunRecord& record) {
  json j;
  j["seed"] = record.seed;
  j["config_fingerprint"] = record.config_fingerprint;
  json methods = json::object();
  for (const auto& [name, m] : record.methods) {
    json fits = json::array();
    for (const FitPoint& p : m.fits.checkpoints) fits.push_back({p.k, p.fit});
    json hyper = json::array();
    for (const HyperPoint& h : m.hyper_trace) hyper.push_back({h.k, h.lambda, h.beta, h.gamma});
    methods[name] = {{"fits", fits},
                     {"hyper", hyper},
                     {"faults", m.faults},
                     {"sgp_steps", m.sgp_steps},
                     {"armijo_violations", m.armijo_violations},
                     {"feasibility_violations", m.feasibility_violations}};
  }
  j["methods"] = methods;
  return j.dump(1) + "\n";
}

std::string timing_to_json(const RunRecord& record) {
  json j;
  j["seed"] = record.seed;
  json methods = json::object();
  for (const auto& [name, m] : record.methods) {
    json trace = json::array();
    for (const TimePoint& p : m.time_trace) trace.push_back({p.k, p.seconds});
    methods[name] = {{"cumulative_time", m.cumulative_time}, {"trace", trace}};
  }
  j["methods"] = methods;
  return j.dump(1) + "\n";
}

RunRecord record_from_json(const std::string& run_json, const std::string& timing_json) {
  const json j = json::parse(run_json);
  RunRecord rec;
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.config_fingerprint = j.at("config_fingerprint").get<std::string>();
  for (const auto& [name, m] : j.at("methods").items()) {
    MethodRecord mr;
    mr.fits.method = name;
    mr.fits.seed = rec.seed;
    for (const auto& p : m.at("fits")) mr.fits.checkpoints.push_back({p.at(0).get<long>(), p.at(1).get<double>()});
    for (const auto& h : m.at("hyper")) {
      mr.hyper_trace.push_back({h.at(0).get<long>(), h.at(1).get<double>(), h.at(2).get<double>(), h.at(3).get<double>()});
    }
    mr.faults = m.at("faults").get<long>();
    mr.sgp_steps = m.at("sgp_steps").get<long>();
    mr.armijo_violations = m.at("armijo_violations").get<long>();
    mr.feasibility_violations = m.at("feasibility_violations").get<long>();
    rec.methods[name] = std::move(mr);
  }
  if (!timing_json.empty()) {
    const json t = json::parse(timing_json);
    for (const auto& [name, m] : t.at("methods").items()) {
      auto it = rec.methods.find(name);
      if (it == rec.methods.end()) continue;
      it->second.cumulative_time = m.at("cumulative_time").get<double>();
      for (const auto& p : m.at("trace")) it->second.time_trace.push_back({p.at(0).get<long>(), p.at(1).get<double>()});
    }
  }
  return rec;
}

std::vector<RunRecord> load_records(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("no such results directory: " + dir.string());
  static const std::regex pattern(R"(run_(\d+)\.json)");
  std::vector<RunRecord> records;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, pattern)) continue;
    const auto timing = dir / ("timing_" + m[1].str() + ".json");
    records.push_back(record_from_json(read_file(entry.path()),
                                       std::filesystem::exists(timing) ? read_file(timing) : std::string{}));
  }
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) { return a.seed < b.seed; });
  if (records.empty()) throw IoError("no run_<seed>.json files in " + dir.string());
  return records;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());

  std::vector<RunRecord> records(static_cast<std::size_t>(config.n_runs));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (int i = next++; i < config.n_runs; i = next++) {
      try {
        records[static_cast<std::size_t>(i)] = run_single(config, config.base_seed + static_cast<std::uint64_t>(i));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int workers = std::min(config.parallelism, config.n_runs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  for (const RunRecord& r : records) {
    write_file(dir / ("run_" + std::to_string(r.seed) + ".json"), record_to_json(r));
    write_file(dir / ("timing_" + std::to_string(r.seed) + ".json"), timing_to_json(r));
  }
  emit_plot_data(records, config.checkpoints, dir);
  return records;
}

std::string fits_long_csv(const std::vector<RunRecord>& records, const std::vector<long>& checkpoints) {
  std::ostringstream os;
  os << "method,k,seed,fit\n";
  if (records.empty()) return os.str();
  for (const auto& [name, unused] : records.front().methods) {
    for (long k : checkpoints) {
      for (const RunRecord& r : records) os << name << ',' << k << ',' << r.seed << ',' << fmt_double(r.methods.at(name).fits.at(k)) << '\n';
    }
  }
  return os.str();
}

std::string times_csv(const Summary& summary) {
  std::ostringstream os;
  os << "stat";
  for (const auto& [name, d] : summary.time) os << ',' << name;
  os << "\nmean";
  for (const auto& [name, d] : summary.time) os << ',' << fmt_double(d.mean);
  os << "\nstd";
  for (const auto& [name, d] : summary.time) os << ',' << fmt_double(d.std);
  os << '\n';
  return os.str();
}

std::string summary_csv(const Summary& summary) {
  std::ostringstream os;
  os << "method,k,mean,std,median,q1,q3,iqr\n";
  for (const auto& [name, per_k] : summary.fit) {
    for (const auto& [k, d] : per_k) {
      os << name << ',' << k << ',' << fmt_double(d.mean) << ',' << fmt_double(d.std) << ',' << fmt_double(d.median)
         << ',' << fmt_double(d.q1) << ',' << fmt_double(d.q3) << ',' << fmt_double(d.iqr()) << '\n';
    }
  }
  return os.str();
}

std::string summary_json(const Summary& summary) {
  json j;
  j["checkpoints"] = summary.checkpoints;
  json fits = json::object();
  for (const auto& [name, per_k] : summary.fit) {
    json rows = json::array();
    for (const auto& [k, d] : per_k) {
      rows.push_back({{"k", k}, {"mean", d.mean}, {"std", d.std}, {"median", d.median}, {"q1", d.q1}, {"q3", d.q3}});
    }
    fits[name] = rows;
  }
  j["fit"] = fits;
  json times = json::object();
  for (const auto& [name, d] : summary.time) times[name] = {{"mean", d.mean}, {"std", d.std}};
  j["time"] = times;
  return j.dump(1) + "\n";
}

void emit_plot_data(const std::vector<RunRecord>& records, const std::vector<long>& checkpoints,
                    const std::filesystem::path& dir) {
  if (records.empty()) throw InvalidArgument("no records to report");
  const Summary s = aggregate(records, checkpoints);
  write_file(dir / "fits_long.csv", fits_long_csv(records, checkpoints));
  write_file(dir / "times.csv", times_csv(s));
  write_file(dir / "summary.csv", summary_csv(s));
  write_file(dir / "summary.json", summary_json(s));
}

}  // namespace tvsid
