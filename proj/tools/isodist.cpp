#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "isodist/chernoff.hpp"
#include "isodist/cluster.hpp"
#include "isodist/estimators.hpp"
#include "isodist/experiments.hpp"
#include "isodist/models.hpp"
#include "isodist/stats.hpp"

#ifndef ISODIST_VERSION
#define ISODIST_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace isodist;

namespace {

// exit codes
constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model_path;
  std::string experiment_path;
  std::string data_path;
  std::string summaries_path;
  std::string in_path;
  std::string out = ".";
  std::uint64_t seed = 0;
  std::vector<std::size_t> ns;
  std::size_t k = 0;
  std::size_t servers = 1;
  std::string alloc = "contiguous";
  std::size_t reps = 0;
  unsigned jobs = 0;
  std::vector<double> ts;
  std::vector<double> as;
  std::string estimator = "pooled";
  std::string dist_kind;
  std::size_t samples = 10000;
  double step = 0.005;
  double half_width = 3.0;
  bool quantiles = false;
  bool strict = false;

  // set by the parser
  CLI::Option* seed_opt = nullptr;
  CLI::Option* servers_opt = nullptr;
  CLI::Option* alloc_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* reps_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* n_opt = nullptr;
  std::vector<std::string> argv;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Configuration errors surface as usage errors, whatever the library throws.
template <class F>
auto as_usage(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(what + ": " + e.what());
  }
}

ModelSpec load_model(const Options& o) {
  if (o.model_path.empty()) return ModelSpec::homogeneous_linear(0.3);
  const auto j = read_json_file(o.model_path);
  return as_usage(o.model_path, [&] { return ModelSpec::from_json(j.contains("model") && !j.contains("mu") ? j.at("model") : j); });
}

/// --seed beats ISODIST_SEED, which beats the config's own seed.
std::uint64_t resolve_seed(const Options& o, std::uint64_t config_seed) {
  if (o.seed_opt && o.seed_opt->count() > 0) return o.seed;
  if (const char* env = std::getenv("ISODIST_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    const auto v = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0') throw UsageError(std::string("ISODIST_SEED is not an unsigned integer: ") + env);
    return v;
  }
  return config_seed;
}

std::size_t single_n(const Options& o, std::optional<std::size_t> fallback = std::nullopt) {
  if (o.ns.empty()) {
    if (fallback) return *fallback;
    throw UsageError("--n is required");
  }
  if (o.ns.size() != 1) throw UsageError("this subcommand takes a single --n");
  if (o.ns[0] < 1) throw UsageError("--n must be >= 1");
  return o.ns[0];
}

AllocationPolicy policy_of(const Options& o) {
  return as_usage("--alloc", [&] { return parse_policy(o.alloc); });
}

// ------------------------------------------------------------------ outputs

/// Collects artifacts in memory; one owner writes them all at the end.
class Artifacts {
 public:
  explicit Artifacts(std::string dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void manifest(const std::string& sub, const Options& o, const json& config, std::optional<std::uint64_t> seed) {
    json m;
    m["tool"] = "isodist";
    m["subcommand"] = sub;
    m["argv"] = o.argv;
    m["config"] = config;
    m["config_digest"] = "fnv1a64:" + hex64(fnv1a(config.dump()));
    m["seed"] = seed ? json(*seed) : json(nullptr);
    std::vector<std::string> outs;
    for (const auto& f : files_) outs.push_back(f.first);
    m["outputs"] = outs;
    m["versions"] = {{"isodist", ISODIST_VERSION},
                     {"compiler", __VERSION__},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"cli11", CLI11_VERSION}};
    add(sub + ".manifest.json", m.dump(2) + "\n");
  }

  void write() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw UsageError("cannot create output directory " + dir_ + ": " + ec.message());
    for (const auto& [name, content] : files_) {
      const auto path = fs::path(dir_) / name;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw UsageError("output directory not writable: " + path.string());
      out << content;
      if (!out) throw std::runtime_error("write failed: " + path.string());
    }
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

void check_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir);
  const auto probe = fs::path(dir) / ".isodist-write-probe";
  {
    std::ofstream p(probe);
    if (!p) throw UsageError("output directory not writable: " + dir);
  }
  fs::remove(probe, ec);
}

// -------------------------------------------------------------------- data

std::string dataset_csv(const Dataset& d) {
  std::string s = "x,y,pop\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    s += fmt(d.x[i]);
    s += ',';
    s += fmt(d.y[i]);
    s += ',';
    s += std::to_string(d.pop[i] + 1);
    s += '\n';
  }
  return s;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y", 0) != 0) throw UsageError(path + ": expected header x,y[,pop]");
  const bool has_pop = line.find(",pop") != std::string::npos;
  Dataset d;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    const double x = std::strtod(p, &end);
    if (end == p || *end != ',') throw UsageError(path + ":" + std::to_string(lineno) + ": bad row");
    p = end + 1;
    const double y = std::strtod(p, &end);
    if (end == p || (*end != ',' && *end != '\0' && *end != '\r')) throw UsageError(path + ":" + std::to_string(lineno) + ": bad row");
    long pop = 1;
    if (has_pop) {
      if (*end != ',') throw UsageError(path + ":" + std::to_string(lineno) + ": missing pop");
      p = end + 1;
      pop = std::strtol(p, &end, 10);
      if (end == p || pop < 1) throw UsageError(path + ":" + std::to_string(lineno) + ": pop must be >= 1");
    }
    if (!(x >= 0.0 && x <= 1.0) || !std::isfinite(y))
      throw UsageError(path + ":" + std::to_string(lineno) + ": x must lie in [0,1] and y be finite");
    d.x.push_back(x);
    d.y.push_back(y);
    d.pop.push_back(static_cast<std::uint32_t>(pop - 1));
  }
  if (d.size() == 0) throw UsageError(path + ": no observations");
  return d;
}

struct Loaded {
  Dataset data;
  json source;
  std::uint64_t seed = 0;
};

/// Dataset from --data, or generated from --model/--n/--seed.
Loaded load_or_generate(const Options& o) {
  Loaded l;
  l.seed = resolve_seed(o, 1);
  if (!o.data_path.empty()) {
    l.data = read_dataset(o.data_path);
    l.source = {{"data", o.data_path}, {"data_digest", "fnv1a64:" + hex64(fnv1a(slurp(o.data_path)))}};
    return l;
  }
  const auto model = load_model(o);
  const std::size_t n = single_n(o);
  l.data = generate_dataset(model, n, l.seed);
  l.source = {{"model", model.to_json()}, {"N", n}};
  return l;
}

// --------------------------------------------------------------- commands

int cmd_gen(const Options& o) {
  const auto model = load_model(o);
  const std::size_t n = single_n(o);
  const std::uint64_t seed = resolve_seed(o, 1);
  check_out_dir(o.out);
  const Dataset d = generate_dataset(model, n, seed);
  Artifacts a(o.out);
  a.add("data.csv", dataset_csv(d));
  a.manifest("gen", o, {{"model", model.to_json()}, {"N", n}, {"seed", seed}}, seed);
  a.write();
  std::cout << "wrote " << n << " observations to " << (fs::path(o.out) / "data.csv").string() << "\n";
  return kOk;
}

/// 10 t values in (0,1] x 10 a values; half of each are exact knots / fitted
/// values. At t = 0 the relation cannot hold for a above the fit (U = 0 there).
std::size_t switch_violations(const PooledFit& pf) {
  const std::size_t K = pf.bins();
  const auto& f = pf.fit.fitted;
  const double hi = *std::max_element(f.begin(), f.end());
  const double lo = *std::min_element(f.begin(), f.end());
  const double r = std::max(hi - lo, 1e-3);
  std::vector<double> ts, as;
  for (std::size_t i = 0; i < 10; ++i) {
    const std::size_t j = std::max<std::size_t>(1, (i + 1) * K / 10);
    ts.push_back(i % 2 == 0 ? static_cast<double>(j) / static_cast<double>(K)
                            : (static_cast<double>(j) - 0.5) / static_cast<double>(K));
    as.push_back(i % 2 == 0 ? f[i * (K - 1) / 9] : lo - 0.1 * r + 1.2 * r * static_cast<double>(i) / 9.0);
  }
  std::size_t bad = 0;
  for (double t : ts)
    for (double a : as)
      if (!check_switch(pf, t, a)) ++bad;
  return bad;
}

json fit_json(const PooledFit& pf) {
  const auto& reg = pf.reg;
  json bins = json::array();
  for (std::size_t k = 0; k < reg.bins; ++k) {
    bins.push_back({{"k", k + 1},
                    {"C", reg.counts[k]},
                    {"T", reg.t[k]},
                    {"w", reg.w[k]},
                    {"ybar", reg.nonempty(k) ? json(reg.ybar[k]) : json(nullptr)},
                    {"fitted", pf.fit.fitted[k]}});
  }
  json blocks = json::array();
  for (const auto& b : pf.fit.blocks)
    blocks.push_back({{"first_bin", b.begin + 1}, {"last_bin", b.end}, {"value", b.value}, {"weight", b.weight}});
  return {{"N", reg.n}, {"K", reg.bins}, {"bins", bins}, {"blocks", blocks}, {"muhat", pf.muhat.to_json()}};
}

int cmd_fit(const Options& o) {
  const auto policy = policy_of(o);
  auto l = load_or_generate(o);
  const std::size_t n = l.data.size();
  const std::size_t K = o.k > 0 ? o.k : default_bin_count(n);
  if (o.servers < 1) throw UsageError("--servers must be >= 1");
  check_out_dir(o.out);

  CommLedger ledger;
  const auto alloc = allocate(n, o.servers, policy, l.seed, l.data.pop);
  const auto summaries = local_summaries(l.data, alloc, K, &ledger);
  const auto pf = pooled_fit(merge_summaries(summaries, n));

  const std::size_t bad = switch_violations(pf);
  if (bad > 0) {
    std::string why = "fit self-check: switch relation fails at " + std::to_string(bad) + " of 100 (t, a) points";
    if (!pf.reg.nonempty(0)) why += " (bin 1 is empty; the greatest-argmax inverse cannot match an empty leading bin)";
    throw ValidationFailure(why + "; nothing written");
  }

  std::ostringstream csv;
  summaries.write_csv(csv);
  auto fj = fit_json(pf);
  fj["servers"] = o.servers;
  fj["alloc"] = to_string(policy);
  fj["self_check"] = {{"points", 100}, {"violations", 0}};

  json config = l.source;
  config["K"] = K;
  config["servers"] = o.servers;
  config["alloc"] = to_string(policy);
  config["seed"] = l.seed;

  Artifacts a(o.out);
  a.add("summaries.csv", csv.str());
  a.add("fit.json", fj.dump(2) + "\n");
  a.add("ledger.json", ledger.to_json().dump(2) + "\n");
  a.manifest("fit", o, config, l.seed);
  a.write();
  std::cout << "N=" << n << " K=" << K << " L=" << o.servers << " blocks=" << pf.fit.blocks.size()
            << " summaries scalars=" << ledger.total(CommLedger::Phase::Summaries) << "\n";
  return kOk;
}

int cmd_invert(const Options& o) {
  const auto est = as_usage("--estimator", [&] { return parse_estimator(o.estimator); });
  check_out_dir(o.out);
  json config;
  std::optional<std::uint64_t> seed;
  std::optional<PooledFit> pf;
  std::optional<Dataset> data;
  std::optional<Allocation> alloc;
  CommLedger ledger;

  if (!o.summaries_path.empty()) {
    if (est != EstimatorKind::Pooled) throw UsageError("--summaries only carries what the pooled estimator needs");
    std::ifstream in(o.summaries_path);
    if (!in) throw UsageError("cannot open " + o.summaries_path);
    const auto m = as_usage(o.summaries_path, [&] { return BinSummaryMatrix::read_csv(in); });
    const auto n = static_cast<std::size_t>(m.total_count());
    pf = pooled_fit(as_usage(o.summaries_path, [&] { return merge_summaries(m, n); }));
    config = {{"summaries", o.summaries_path}, {"summaries_digest", "fnv1a64:" + hex64(fnv1a(slurp(o.summaries_path)))}};
  } else {
    auto l = load_or_generate(o);
    seed = l.seed;
    config = l.source;
    config["seed"] = l.seed;
    config["servers"] = o.servers;
    config["alloc"] = o.alloc;
    data = std::move(l.data);
    alloc = allocate(data->size(), o.servers, policy_of(o), l.seed, data->pop);
    if (est == EstimatorKind::Pooled) {
      const std::size_t K = o.k > 0 ? o.k : default_bin_count(data->size());
      config["K"] = K;
      pf = pooled_fit(merge_summaries(local_summaries(*data, *alloc, K, &ledger), data->size()));
    }
  }

  std::vector<double> levels = o.as;
  if (levels.empty()) {
    // 21 levels across the fitted range
    double lo, hi;
    if (pf) {
      lo = *std::min_element(pf->fit.fitted.begin(), pf->fit.fitted.end());
      hi = *std::max_element(pf->fit.fitted.begin(), pf->fit.fitted.end());
    } else {
      const auto g = global_fit(*data);
      lo = g.fit.fitted.back();
      hi = g.fit.fitted.front();
    }
    for (int i = 0; i <= 20; ++i) levels.push_back(lo + (hi - lo) * i / 20.0);
  }
  config["a"] = levels;
  config["estimator"] = to_string(est);

  std::string csv = "estimator,a,U,V\n";
  if (est == EstimatorKind::Pooled) {
    for (double a : levels) csv += "pooled," + fmt(a) + "," + fmt(pooled_inverse(*pf, a)) + "," + fmt(v_n(*pf, a)) + "\n";
  } else if (est == EstimatorKind::Global) {
    record_global_transfer(ledger, *alloc);
    const auto g = global_fit(*data);
    for (double a : levels) csv += "global," + fmt(a) + "," + fmt(global_inverse(g, a)) + ",\n";
  } else {
    const BdseFit b(*data, *alloc);
    for (double a : levels) {
      const auto r = b.inverse(a, &ledger);
      csv += "bdse," + fmt(a) + "," + fmt(r.value) + ",\n";
    }
  }

  Artifacts art(o.out);
  art.add("inverse.csv", csv);
  if (data) art.add("ledger.json", ledger.to_json().dump(2) + "\n");
  art.manifest("invert", o, config, seed);
  art.write();
  std::cout << "wrote " << levels.size() << " levels to " << (fs::path(o.out) / "inverse.csv").string() << "\n";
  return kOk;
}

ExperimentConfig load_experiment(const Options& o) {
  ExperimentConfig cfg;
  if (!o.experiment_path.empty()) {
    const auto j = read_json_file(o.experiment_path);
    cfg = as_usage(o.experiment_path, [&] { return ExperimentConfig::from_json(j); });
  }
  if (!o.model_path.empty()) cfg.model = load_model(o);
  if (!o.ns.empty()) cfg.ns = o.ns;
  if (o.k_opt->count()) cfg.k = o.k;
  if (o.servers_opt->count()) cfg.servers = o.servers;
  if (o.alloc_opt->count()) cfg.policy = policy_of(o);
  if (o.reps_opt->count()) cfg.reps = o.reps;
  if (!o.ts.empty()) cfg.ts = o.ts;
  if (!o.as.empty()) cfg.as = o.as;
  cfg.seed = resolve_seed(o, cfg.seed);
  cfg.jobs = o.jobs;
  as_usage("experiment", [&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

/// Hard assumption failures abort; asymptotic ones are warnings.
void screen_assumptions(const ModelSpec& model, std::size_t n, std::size_t k) {
  const auto rep = validate_assumptions(model, n, k);
  std::string hard;
  for (const auto& c : rep.checks) {
    if (c.passed) continue;
    if (c.category == CheckCategory::Hard)
      hard += " " + c.id + " (" + c.detail + ")";
    else if (c.category == CheckCategory::Asymptotic)
      std::cerr << "warning: N=" << n << " K=" << k << ": " << c.id << " " << c.detail << "\n";
  }
  if (!hard.empty()) throw ValidationFailure("N=" + std::to_string(n) + ": assumptions fail:" + hard);
}

int cmd_mse(const Options& o) {
  auto cfg = load_experiment(o);
  if (cfg.ts.empty() && cfg.as.empty()) cfg.ts = {0.5};
  for (auto n : cfg.ns) screen_assumptions(cfg.model.at(n), n, cfg.bins_for(n));
  check_out_dir(o.out);
  const auto rep = mc_risk(cfg);
  std::ostringstream csv;
  rep.write_csv(csv);
  std::size_t failures = 0;
  for (const auto& r : rep.rows) failures = std::max(failures, r.failures);
  if (failures > 0) std::cerr << "warning: " << failures << " replication(s) failed and were excluded\n";

  Artifacts a(o.out);
  a.add("risk.csv", csv.str());
  a.add("risk.json", json{{"config", cfg.to_json()}, {"report", rep.to_json()}}.dump(2) + "\n");
  a.manifest("mse", o, cfg.to_json(), cfg.seed);
  a.write();
  for (const auto& r : rep.rows)
    std::printf("%-7s N=%-7zu m=%-3zu %s=%-8.4g N^2/3 MSE=%.4f (se %.4f)\n", to_string(r.estimator).c_str(), r.n,
                r.servers, r.kind == QueryKind::Direct ? "t" : "a", r.target, r.scaled,
                std::pow(static_cast<double>(r.n), 2.0 / 3.0) * r.se);
  return kOk;
}

std::vector<double> quantile_table(std::vector<double> v, const std::vector<double>& ps) {
  std::sort(v.begin(), v.end());
  std::vector<double> q;
  for (double p : ps) {
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    q.push_back(v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]));
  }
  return q;
}

int cmd_dist(const Options& o) {
  if (o.dist_kind != "chernoff") throw UsageError("dist: unknown distribution '" + o.dist_kind + "' (expected chernoff)");
  ChernoffConfig cfg;
  cfg.half_width = o.half_width;
  cfg.step = o.step;
  cfg.samples = o.samples;
  cfg.seed = resolve_seed(o, 1);
  cfg.jobs = o.jobs;
  as_usage("dist", [&] {
    cfg.validate();
    return 0;
  });
  if (cfg.samples < 2) throw UsageError("--samples must be >= 2");
  check_out_dir(o.out);
  const auto z = sample_chernoff(cfg);

  std::string csv;
  if (o.quantiles) {
    std::vector<double> ps;
    for (int i = 1; i < 100; ++i) ps.push_back(i / 100.0);
    for (double p : {0.001, 0.005, 0.995, 0.999}) ps.push_back(p);
    std::sort(ps.begin(), ps.end());
    const auto q = quantile_table(z, ps);
    csv = "p,quantile\n";
    for (std::size_t i = 0; i < ps.size(); ++i) csv += fmt(ps[i]) + "," + fmt(q[i]) + "\n";
  } else {
    csv = "i,z\n";
    for (std::size_t i = 0; i < z.size(); ++i) csv += std::to_string(i) + "," + fmt(z[i]) + "\n";
  }
  const json config = {{"distribution", "chernoff"}, {"half_width", cfg.half_width}, {"step", cfg.step},
                       {"samples", cfg.samples},     {"seed", cfg.seed},             {"quantiles", o.quantiles}};
  Artifacts a(o.out);
  a.add("chernoff.csv", csv);
  a.manifest("dist", o, config, cfg.seed);
  a.write();
  std::printf("chernoff: %zu draws, mean %.4f, sd %.4f\n", z.size(), mean(z), sample_sd(z));
  return kOk;
}

int cmd_sweep(const Options& o) {
  SweepConfig cfg;
  if (!o.experiment_path.empty()) {
    const auto j = read_json_file(o.experiment_path);
    cfg = as_usage(o.experiment_path, [&] { return SweepConfig::from_json(j); });
  }
  if (!o.ns.empty()) cfg.n = single_n(o);
  if (o.reps_opt->count()) cfg.reps = o.reps;
  if (o.k_opt->count()) cfg.k = o.k;
  cfg.seed = resolve_seed(o, cfg.seed);
  cfg.jobs = o.jobs;
  check_out_dir(o.out);
  const auto rep = as_usage("sweep", [&] { return superefficiency_sweep(cfg); });

  std::ostringstream csv;
  rep.write_csv(csv);
  Artifacts a(o.out);
  a.add("sweep.csv", csv.str());
  a.add("sweep.json", json{{"config", cfg.to_json()}, {"report", rep.to_json()}}.dump(2) + "\n");
  a.manifest("sweep", o, cfg.to_json(), cfg.seed);
  a.write();

  for (const auto& note : rep.notes) std::cout << "note: " << note << "\n";
  std::printf("a = %.6g, fixed slope %.6g, N=%zu K=%zu R=%zu\n", rep.a, rep.fixed_c, rep.n, rep.k, cfg.reps);
  std::printf("pooled worst %.4f (fixed %.4f)  global worst %.4f (fixed %.4f)\n", rep.worst("pooled"),
              rep.fixed("pooled"), rep.worst("global"), rep.fixed("global"));
  for (auto m : cfg.m_grid)
    std::printf("bdse m=%-3zu worst %.4f  fixed %.4f  fixed ratio to global %.3f\n", m, rep.worst("bdse", m),
                rep.fixed("bdse", m), rep.fixed("bdse", m) / rep.fixed("global"));
  return kOk;
}

int cmd_tail(const Options& o) {
  auto cfg = load_experiment(o);
  const std::size_t n = single_n(o, cfg.ns.size() == 1 ? std::optional<std::size_t>(cfg.ns[0]) : std::nullopt);
  cfg.ns = {n};
  const double a = !o.as.empty() ? o.as.front() : cfg.model.mu(0.5);
  if (o.as.size() > 1) throw UsageError("tail takes a single --a");
  check_out_dir(o.out);
  const auto rep = tail_diagnostic(cfg, n, a);
  std::ostringstream csv;
  rep.write_csv(csv);
  Artifacts art(o.out);
  art.add("tail.csv", csv.str());
  art.add("tail.json", json{{"config", cfg.to_json()}, {"report", rep.to_json()}}.dump(2) + "\n");
  auto config = cfg.to_json();
  config["tail_a"] = a;
  art.manifest("tail", o, config, cfg.seed);
  art.write();
  std::printf("tail: N=%zu a=%.6g mid-range log-log slope %.3f over %zu points%s\n", n, a, rep.mid_slope,
              rep.mid_points, rep.monotone ? "" : " (NOT monotone)");
  if (!rep.monotone) std::cerr << "warning: exceedance frequencies are not monotone in x\n";
  return kOk;
}

int cmd_ledger(const Options& o) {
  const std::string path = !o.in_path.empty() ? o.in_path : (fs::path(o.out) / "ledger.json").string();
  const auto j = read_json_file(path);
  const auto ledger = as_usage(path, [&] { return CommLedger::from_json(j); });
  for (std::size_t p = 0; p < CommLedger::kPhases; ++p) {
    const auto phase = static_cast<CommLedger::Phase>(p);
    std::printf("%-16s scalars=%llu queries=%llu\n", CommLedger::phase_name(phase),
                static_cast<unsigned long long>(ledger.total(phase)), static_cast<unsigned long long>(ledger.queries(phase)));
  }
  check_out_dir(o.out);
  Artifacts a(o.out);
  a.manifest("ledger", o, {{"ledger", path}, {"ledger_digest", "fnv1a64:" + hex64(fnv1a(slurp(path)))}}, std::nullopt);
  a.write();
  return kOk;
}

int cmd_validate(const Options& o) {
  const auto model = load_model(o);
  const std::size_t n = single_n(o);
  const std::size_t k = o.k > 0 ? o.k : default_bin_count(n);
  const auto rep = validate_assumptions(model, n, k);
  bool failed = !rep.hard_ok();
  std::printf("N=%zu K=%zu\n", n, k);
  for (const auto& c : rep.checks) {
    const char* cat = c.category == CheckCategory::Hard ? "hard" : c.category == CheckCategory::Asymptotic ? "asymptotic" : "limit";
    std::printf("%-10s %-10s %-4s measured=%-12.6g threshold=%-12.6g %s\n", c.id.c_str(), cat, c.passed ? "ok" : "FAIL",
                c.measured, c.threshold, c.detail.c_str());
    if (o.strict && !c.passed && c.category == CheckCategory::Asymptotic) failed = true;
  }
  check_out_dir(o.out);
  Artifacts a(o.out);
  a.add("validate.json", rep.to_json().dump(2) + "\n");
  a.manifest("validate", o, {{"model", model.to_json()}, {"N", n}, {"K", k}, {"strict", o.strict}}, std::nullopt);
  a.write();
  return failed ? kFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed isotonic regression: pooled smooth-then-isotonize, global and averaged estimators"};
  app.set_version_flag("--version", ISODIST_VERSION);
  app.require_subcommand(1);
  Options o;
  for (int i = 0; i < argc; ++i) o.argv.emplace_back(argv[i]);

  auto common = [&o](CLI::App* s) {
    s->add_option("--model", o.model_path, "model JSON");
    s->add_option("--out", o.out, "output directory")->capture_default_str();
    o.seed_opt = s->add_option("--seed", o.seed, "base seed (overrides ISODIST_SEED and the config)");
    o.jobs_opt = s->add_option("--jobs", o.jobs, "worker threads, 0 = all cores")->capture_default_str();
  };
  auto data_opts = [&o](CLI::App* s) {
    s->add_option("--data", o.data_path, "CSV with columns x,y[,pop]");
    o.n_opt = s->add_option("--n", o.ns, "sample size")->delimiter(',');
    o.k_opt = s->add_option("--k", o.k, "bins, 0 = ceil(N^(1/3) ln N)");
    o.servers_opt = s->add_option("--servers", o.servers, "number of servers L")->check(CLI::PositiveNumber);
    o.alloc_opt = s->add_option("--alloc", o.alloc, "allocation policy")
                      ->check(CLI::IsMember({"contiguous", "roundrobin", "random", "bypop"}));
  };
  auto experiment_opts = [&o](CLI::App* s) {
    s->add_option("--experiment", o.experiment_path, "experiment JSON");
    o.reps_opt = s->add_option("--reps", o.reps, "replications R")->check(CLI::PositiveNumber);
  };

  // each subcommand registers its own copies; only the chosen one is parsed
  std::map<std::string, std::function<void(CLI::App*)>> setup{
      {"gen", [&](CLI::App* s) { common(s); data_opts(s); }},
      {"fit", [&](CLI::App* s) { common(s); data_opts(s); }},
      {"invert",
       [&](CLI::App* s) {
         common(s);
         data_opts(s);
         s->add_option("--summaries", o.summaries_path, "l,k,T,C CSV from fit");
         s->add_option("--a", o.as, "levels")->delimiter(',');
         s->add_option("--estimator", o.estimator, "pooled, global or bdse")->capture_default_str();
       }},
      {"mse",
       [&](CLI::App* s) {
         common(s);
         data_opts(s);
         experiment_opts(s);
         s->add_option("--t", o.ts, "direct query points")->delimiter(',');
         s->add_option("--a", o.as, "inverse levels")->delimiter(',');
       }},
      {"dist",
       [&](CLI::App* s) {
         common(s);
         s->add_option("distribution", o.dist_kind, "chernoff")->required();
         s->add_option("--samples", o.samples, "number of draws")->capture_default_str();
         s->add_option("--step", o.step, "grid step h")->capture_default_str();
         s->add_option("--half-width", o.half_width, "window half-width M")->capture_default_str();
         s->add_flag("--quantiles", o.quantiles, "write a quantile table instead of draws");
       }},
      {"sweep", [&](CLI::App* s) { common(s); data_opts(s); experiment_opts(s); }},
      {"tail",
       [&](CLI::App* s) {
         common(s);
         data_opts(s);
         experiment_opts(s);
         s->add_option("--a", o.as, "level a (default mu(0.5))")->delimiter(',');
       }},
      {"ledger",
       [&](CLI::App* s) {
         common(s);
         s->add_option("--in", o.in_path, "ledger.json (default <out>/ledger.json)");
       }},
      {"validate",
       [&](CLI::App* s) {
         common(s);
         data_opts(s);
         s->add_flag("--strict", o.strict, "treat asymptotic failures as errors");
       }},
  };
  const std::map<std::string, std::string> help{
      {"gen", "generate a dataset (data.csv)"},
      {"fit", "pooled fit from data: summaries.csv, fit.json, ledger.json"},
      {"invert", "inverse estimates U(a) at levels a"},
      {"mse", "Monte Carlo risk (risk.csv, risk.json)"},
      {"dist", "reference draws: dist chernoff"},
      {"sweep", "slope-perturbation sweep over m (sweep.csv, sweep.json)"},
      {"tail", "exceedance diagnostic for the pooled inverse"},
      {"ledger", "print communication totals from ledger.json"},
      {"validate", "check model assumptions at N, K"},
  };
  const std::map<std::string, std::function<int(const Options&)>> commands{
      {"gen", cmd_gen},     {"fit", cmd_fit},   {"invert", cmd_invert}, {"mse", cmd_mse},         {"dist", cmd_dist},
      {"sweep", cmd_sweep}, {"tail", cmd_tail}, {"ledger", cmd_ledger}, {"validate", cmd_validate},
  };

  // options are bound per subcommand; find which one is requested first so
  // that the shared Options pointers refer to its options
  std::string chosen;
  for (int i = 1; i < argc; ++i)
    if (commands.count(argv[i])) {
      chosen = argv[i];
      break;
    }
  for (const auto& [name, desc] : help) {
    auto* s = app.add_subcommand(name, desc);
    if (name == chosen || chosen.empty()) setup.at(name)(s);
    if (chosen.empty()) continue;
    if (name != chosen) s->allow_extras();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    return commands.at(chosen)(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationFailure& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
}
