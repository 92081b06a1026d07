#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasor/experiments.hpp"

namespace {

std::filesystem::path default_out_root() {
  if (const char* env = std::getenv("PHASOR_ARTIFACT_ROOT")) return env;
  return "artifacts";
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(csv);
  for (std::string token; std::getline(in, token, ',');) {
    if (token.empty()) continue;
    seeds.push_back(std::stoull(token));
  }
  return seeds;
}

int cmd_list() {
  for (const auto& e : phasor::exp::registry()) {
    std::cout << e.id << "  [" << e.modules << "]\n    " << e.claim << "\n";
  }
  std::cout << phasor::exp::registry().size() << " experiments registered\n";
  return 0;
}

int cmd_validate(const std::string& id) {
  const auto* e = phasor::exp::find(id);
  if (!e) {
    std::cerr << "unknown experiment id '" << id << "'\n";
    return 1;
  }
  for (const std::string profile : {"fast", "paper"}) {
    try {
      const auto config = phasor::exp::resolve_config(*e, profile, {});
      const auto seeds = phasor::exp::profile_seeds(*e, profile);
      if (seeds.empty()) throw std::invalid_argument("empty seed list");
      std::cout << id << " [" << profile << "]: ok, " << e->conditions.size()
                << " conditions x " << seeds.size()
                << " seeds, config_hash=" << phasor::config_hash(config) << "\n";
      if (config.contains("budget"))
        std::cout << "  budget B=" << config["budget"].get<double>() << "\n";
    } catch (const std::exception& ex) {
      std::cerr << id << " [" << profile << "]: " << ex.what() << "\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phasor agents experiment harness"};
  app.require_subcommand(1);

  auto* list_cmd = app.add_subcommand("list", "show registered experiments");

  std::string validate_id;
  auto* validate_cmd =
      app.add_subcommand("validate", "resolve an experiment's configs");
  validate_cmd->add_option("id", validate_id, "experiment id")->required();

  std::string run_id, profile = "fast", seeds_csv, out_dir;
  std::vector<std::string> overrides;
  int workers = 1;
  auto* run_cmd = app.add_subcommand("run", "execute an experiment sweep");
  run_cmd->add_option("id", run_id, "experiment id")->required();
  run_cmd->add_option("--profile", profile, "fast|paper");
  run_cmd->add_option("--seeds", seeds_csv, "comma-separated seed list");
  run_cmd->add_option("--set", overrides, "config override key.path=value");
  run_cmd->add_option("--out", out_dir, "artifact root (default $PHASOR_ARTIFACT_ROOT)");
  run_cmd->add_option("--workers", workers, "worker pool size");

  CLI11_PARSE(app, argc, argv);

  if (list_cmd->parsed()) return cmd_list();
  if (validate_cmd->parsed()) return cmd_validate(validate_id);

  const auto* e = phasor::exp::find(run_id);
  if (!e) {
    std::cerr << "unknown experiment id '" << run_id << "'\n";
    return 1;
  }
  phasor::exp::RunOptions options;
  options.profile = profile;
  options.overrides = overrides;
  options.workers = workers;
  options.out_root =
      out_dir.empty() ? default_out_root() : std::filesystem::path(out_dir);
  if (!seeds_csv.empty()) {
    try {
      options.seeds = parse_seeds(seeds_csv);
    } catch (const std::exception&) {
      std::cerr << "bad --seeds list '" << seeds_csv << "'\n";
      return 1;
    }
  }

  try {
    const auto outcome = phasor::exp::run_experiment(*e, options);
    if (!outcome.message.empty()) std::cerr << outcome.message << "\n";
    if (outcome.exit_code == 0)
      std::cout << run_id << ": ok, artifacts in " << outcome.out_dir.string()
                << "\n";
    return outcome.exit_code;
  } catch (const std::exception& ex) {
    std::cerr << run_id << ": " << ex.what() << "\n";
    return 2;
  }
}
