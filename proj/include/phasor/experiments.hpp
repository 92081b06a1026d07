#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phasor/io.hpp"
#include "phasor/rng.hpp"

namespace phasor::exp {

// One (condition x seed) sweep cell. Cells share nothing; metric files are
// produced in memory and written by the caller so worker count cannot affect
// bytes on disk.
struct RunContext {
  std::string id;
  std::string condition;
  std::uint64_t seed = 0;
  json config;  // fully resolved for this cell

  Rng stream(std::string_view name) const { return make_stream(id, seed, name); }
};

struct CellResult {
  std::string condition;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  json summary;
  // file name (relative to the experiment dir) -> full contents
  std::vector<std::pair<std::string, std::string>> files;
};

struct Experiment {
  std::string id;
  std::string claim;    // one line, shown by `list`
  std::string modules;  // dependency list, shown by `list`
  json defaults;        // complete base config
  json fast_profile;    // patch applied for --profile fast
  json paper_profile;   // patch applied for --profile paper
  std::vector<std::string> conditions;
  std::vector<std::uint64_t> fast_seeds;
  std::vector<std::uint64_t> paper_seeds;
  std::function<CellResult(const RunContext&)> run_cell;
  // Deterministic cross-cell aggregation; receives cells in (condition, seed)
  // registry order. May also emit extra files (plot data).
  std::function<json(const std::vector<CellResult>&, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files)>
      summarize;
};

const std::vector<Experiment>& registry();
const Experiment* find(const std::string& id);

struct RunOptions {
  std::string profile = "fast";
  std::optional<std::vector<std::uint64_t>> seeds;
  std::vector<std::string> overrides;        // key.path=value
  std::filesystem::path out_root;            // artifacts root
  int workers = 1;
};

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 1 validation, 2 runtime, 3 partial sweep
  std::string message;
  json manifest;
  std::filesystem::path out_dir;
};

// Registry defaults <- profile patch <- CLI overrides. Throws
// std::invalid_argument with a field-level message on bad input.
json resolve_config(const Experiment& e, const std::string& profile,
                    const std::vector<std::string>& overrides);

std::vector<std::uint64_t> profile_seeds(const Experiment& e,
                                         const std::string& profile);

RunOutcome run_experiment(const Experiment& e, const RunOptions& options);

// --- small shared statistics helpers -------------------------------------

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
// One-sided paired t-test p-value for H1: mean(a - b) > 0.
double paired_t_pvalue(const std::vector<double>& a, const std::vector<double>& b);
// Student-t upper tail P(T_nu > t).
double t_upper_tail(double t, double nu);

// Per-stage registration (internal).
void register_s1(std::vector<Experiment>& out);
void register_s2(std::vector<Experiment>& out);
void register_s3_memory(std::vector<Experiment>& out);
void register_s3_sleep(std::vector<Experiment>& out);
void register_s3_maze(std::vector<Experiment>& out);

}  // namespace phasor::exp
