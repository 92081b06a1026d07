#include "phasor/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace phasor::exp {

const std::vector<Experiment>& registry() {
  static const std::vector<Experiment> experiments = [] {
    std::vector<Experiment> out;
    register_s1(out);
    register_s2(out);
    register_s3_memory(out);
    register_s3_sleep(out);
    register_s3_maze(out);
    return out;
  }();
  return experiments;
}

const Experiment* find(const std::string& id) {
  for (const Experiment& e : registry()) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

json resolve_config(const Experiment& e, const std::string& profile,
                    const std::vector<std::string>& overrides) {
  json config = e.defaults;
  if (profile == "fast") {
    config = merge_config(config, e.fast_profile);
  } else if (profile == "paper") {
    config = merge_config(config, e.paper_profile);
  } else {
    throw std::invalid_argument("profile: expected 'fast' or 'paper', got '" +
                                profile + "'");
  }
  for (const std::string& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override '" + entry + "': missing '='");
    // Overrides may only touch keys the experiment defines; catches typos
    // with a field-level message.
    std::istringstream path(entry.substr(0, eq));
    const json* node = &config;
    for (std::string part; std::getline(path, part, '.');) {
      if (!node->is_object() || !node->contains(part))
        throw std::invalid_argument(e.id + ": unknown config field '" +
                                    entry.substr(0, eq) + "' (at '" + part + "')");
      node = &(*node)[part];
    }
    apply_override(config, entry);
  }
  return config;
}

std::vector<std::uint64_t> profile_seeds(const Experiment& e,
                                         const std::string& profile) {
  return profile == "paper" ? e.paper_seeds : e.fast_seeds;
}

RunOutcome run_experiment(const Experiment& e, const RunOptions& options) {
  RunOutcome outcome;
  json config;
  std::vector<std::uint64_t> seeds;
  try {
    config = resolve_config(e, options.profile, options.overrides);
    seeds = options.seeds ? *options.seeds : profile_seeds(e, options.profile);
    if (seeds.empty()) throw std::invalid_argument(e.id + ": empty seed list");
    if (e.conditions.empty())
      throw std::invalid_argument(e.id + ": no conditions registered");
  } catch (const std::exception& ex) {
    outcome.exit_code = 1;
    outcome.message = ex.what();
    return outcome;
  }

  struct Cell {
    std::string condition;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const std::string& condition : e.conditions) {
    for (const std::uint64_t seed : seeds) cells.push_back({condition, seed});
  }

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  const int workers =
      std::max(1, std::min<int>(options.workers, static_cast<int>(cells.size())));
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      RunContext ctx;
      ctx.id = e.id;
      ctx.condition = cells[i].condition;
      ctx.seed = cells[i].seed;
      ctx.config = config;
      try {
        results[i] = e.run_cell(ctx);
      } catch (const std::exception& ex) {
        results[i].condition = ctx.condition;
        results[i].seed = ctx.seed;
        results[i].failed = true;
        results[i].error = ex.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  const auto started = std::chrono::steady_clock::now();
  outcome.out_dir = options.out_root / e.id;
  std::filesystem::create_directories(outcome.out_dir);

  std::size_t failed = 0;
  json cell_index = json::array();
  for (const CellResult& r : results) {
    json entry;
    entry["condition"] = r.condition;
    entry["seed"] = r.seed;
    entry["failed"] = r.failed;
    if (r.failed) {
      ++failed;
      entry["error"] = r.error;
    } else {
      entry["summary"] = r.summary;
    }
    json paths = json::array();
    for (const auto& [name, contents] : r.files) {
      std::ofstream out(outcome.out_dir / name, std::ios::binary);
      out << contents;
      paths.push_back(name);
    }
    entry["files"] = paths;
    cell_index.push_back(entry);
  }

  json summary;
  summary["schema_version"] = 1;
  summary["id"] = e.id;
  summary["config"] = config;
  summary["config_hash"] = config_hash(config);
  summary["seeds"] = seeds;
  summary["cells"] = cell_index;
  if (failed == 0 && e.summarize) {
    std::vector<std::pair<std::string, std::string>> extra;
    summary["aggregate"] = e.summarize(results, config, extra);
    for (const auto& [name, contents] : extra) {
      std::ofstream out(outcome.out_dir / name, std::ios::binary);
      out << contents;
    }
  }
  write_json(outcome.out_dir / "summary.json", summary);

  // Wall clock lives in a separate file so metric artifacts stay
  // byte-reproducible.
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  json info;
  info["write_seconds"] = elapsed;
  info["workers"] = workers;
  write_json(outcome.out_dir / "run_info.json", info);

  outcome.manifest = summary;
  if (failed == cells.size()) {
    outcome.exit_code = 2;
    outcome.message = e.id + ": all sweep cells failed";
  } else if (failed > 0) {
    outcome.exit_code = 3;
    outcome.message = e.id + ": " + std::to_string(failed) + "/" +
                      std::to_string(cells.size()) + " cells failed";
  }
  return outcome;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double denom = std::sqrt(sxx * syy);
  return denom > 0 ? sxy / denom : 0.0;
}

namespace {

// Continued-fraction regularized incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace

double t_upper_tail(double t, double nu) {
  const double x = nu / (nu + t * t);
  const double half_tail = 0.5 * incomplete_beta(nu / 2.0, 0.5, x);
  return t >= 0 ? half_tail : 1.0 - half_tail;
}

double paired_t_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("paired_t_pvalue: need matched samples, n >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double m = mean(d);
  const double var = sample_variance(d);
  if (var == 0.0) return m > 0 ? 0.0 : 1.0;
  const double n = static_cast<double>(d.size());
  const double t = m / std::sqrt(var / n);
  return t_upper_tail(t, n - 1.0);
}

}  // namespace phasor::exp
