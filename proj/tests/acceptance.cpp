// Acceptance gate: one pass/fail line per criterion, tolerances pinned below.
// Every experiment's fast profile runs twice (different worker counts) so the
// determinism criterion can compare artifact bytes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "phasor/env.hpp"
#include "phasor/experiments.hpp"
#include "phasor/holo.hpp"
#include "phasor/plasticity.hpp"
#include "phasor/scheduler.hpp"

namespace fs = std::filesystem;
using namespace phasor;
using phasor::exp::RunOptions;

namespace {

struct Gate {
  std::string name;
  std::function<bool(std::string&)> check;
};

std::map<std::string, json> g_manifest;      // id -> summary.json from run 1
std::map<std::string, double> g_run_seconds; // id -> wall clock of run 1

json agg(const std::string& id) { return g_manifest.at(id)["aggregate"]; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

bool run_everything(const fs::path& root_a, const fs::path& root_b,
                    std::string& detail) {
  for (const auto& e : phasor::exp::registry()) {
    for (int pass = 0; pass < 2; ++pass) {
      RunOptions options;
      options.out_root = pass == 0 ? root_a : root_b;
      options.workers = pass == 0 ? 1 : 2;
      const auto t0 = std::chrono::steady_clock::now();
      const auto outcome = phasor::exp::run_experiment(e, options);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      if (outcome.exit_code != 0) {
        detail = e.id + " exit " + std::to_string(outcome.exit_code) + ": " +
                 outcome.message;
        return false;
      }
      if (pass == 0) {
        g_manifest[e.id] = outcome.manifest;
        g_run_seconds[e.id] = secs;
      }
      std::fprintf(stderr, "  [sweep] %s pass %d: %.1fs\n", e.id.c_str(),
                   pass + 1, secs);
    }
  }
  return true;
}

// --- criterion bodies ------------------------------------------------------

bool limit_cycle(std::string& detail) {
  Rng rng = make_stream("acceptance", 0, "limit-cycle");
  double worst = 0.0;
  for (int pair = 0; pair < 5; ++pair) {
    const double alpha = rng.uniform(0.3, 2.0);
    const double beta = rng.uniform(0.3, 2.0);
    for (int ic = 0; ic < 5; ++ic) {
      PhasorGraph g = PhasorGraph::make(1);
      g.alpha = alpha;
      g.beta = beta;
      g.z(0) = std::polar(rng.uniform(0.02, 2.5), rng.uniform(-kPi, kPi));
      for (int t = 0; t < 2000; ++t) step(g, nullptr, 0.05);
      worst = std::max(worst,
                       std::abs(std::abs(g.z(0)) - std::sqrt(alpha / beta)));
    }
  }
  detail = "max radius error " + std::to_string(worst);
  return worst < 1e-3;
}

bool critical_window(std::string& detail) {
  const json rows = agg("s1-04")["per_kappa"];
  double peak_var = -1.0;
  std::size_t peak_idx = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = rows[i]["var_R"];
    if (v > peak_var) {
      peak_var = v;
      peak_idx = i;
    }
  }
  const double low_mean = rows.front()["mean_R"];
  const double high_mean = rows.back()["mean_R"];
  detail = "var peak at kappa=" + rows[peak_idx]["kappa"].dump() +
           ", low mean R=" + std::to_string(low_mean) +
           ", high mean R=" + std::to_string(high_mean);
  return peak_idx > 0 && peak_idx + 1 < rows.size() && low_mean < 0.4 &&
         high_mean > 0.7;
}

bool input_modes(std::string& detail) {
  const double omega = agg("s1-05")["omega_mod"]["mean_correlation"];
  const double alpha = agg("s1-05")["alpha_mod"]["mean_correlation"];
  detail = "omega r=" + std::to_string(omega) + ", alpha r=" + std::to_string(alpha);
  return omega >= 0.99 && alpha > 0.0 && alpha < 0.6;
}

bool credit_horizon(std::string& detail) {
  const json rows = agg("s2-03")["ratio_by_delay"];
  const double first = rows.front()["ratio"];
  const double last = rows.back()["ratio"];
  const bool monotone = agg("s2-03")["monotone_non_increasing"];
  detail = "ratio " + std::to_string(first) + " at delay " +
           rows.front()["delay"].dump() + ", " + std::to_string(last) +
           " at delay " + rows.back()["delay"].dump() +
           (monotone ? ", monotone" : ", NOT monotone");
  return first >= 3.0 && last >= 1.1 && monotone;
}

bool timing_specificity(std::string& detail) {
  const json shuffle = agg("s2-02")["shuffle_control"];
  const double real = shuffle["mean_real"];
  const double placebo = shuffle["mean_shuffled"];
  const std::size_t seeds = g_manifest.at("s2-02")["seeds"].size();
  detail = "real " + std::to_string(real) + " vs shuffled " +
           std::to_string(placebo) + " over " + std::to_string(seeds) + " seeds";
  return seeds >= 10 && real >= 2.0 * placebo;
}

bool recall_kernels(std::string& detail) {
  const double rotate = agg("s3-01")["gate_rotate"]["success_rate"];
  const double diffusive = agg("s3-01")["diffusive"]["success_rate"];
  detail = "gate_rotate " + std::to_string(rotate) + " vs diffusive " +
           std::to_string(diffusive);
  return rotate >= 2.0 * diffusive;
}

bool capacity(std::string& detail) {
  const json a = agg("s3-08");
  const double n = g_manifest.at("s3-08")["config"]["n"].get<double>();
  const double phasor_cap = a["phasor"]["mean_reliable_capacity"];
  double mhn_at_n = -1.0, esn_worst = 0.0;
  for (const auto& row : a["mhn"]["per_p"]) {
    if (row["p"].get<double>() == n) mhn_at_n = row["reliable_fraction"];
  }
  for (const auto& row : a["esn"]["per_p"]) {
    if (row["p"].get<int>() >= 4) {
      esn_worst = std::max(esn_worst, row["reliable_fraction"].get<double>());
    }
  }
  detail = "phasor capacity " + std::to_string(phasor_cap) + " (bounds " +
           std::to_string(0.08 * n) + ".." + std::to_string(0.18 * n) +
           "), mhn@" + std::to_string(static_cast<int>(n)) + " " +
           std::to_string(mhn_at_n) + ", esn max frac (p>=4) " +
           std::to_string(esn_worst);
  return phasor_cap >= 0.08 * n && phasor_cap <= 0.18 * n && mhn_at_n == 1.0 &&
         esn_worst <= 0.1;
}

bool coherence_necessity(std::string& detail) {
  const json a = agg("s3-02");
  const double p = a["p_one_sided"];
  detail = "coherent gain " + a["mean_gain_coherent"].dump() + ", scrambled " +
           a["mean_gain_scrambled"].dump() + ", p=" + std::to_string(p) +
           " over " + a["runs"].dump() + " runs";
  return p < 0.05 && a["runs"].get<int>() == 30;
}

bool guardrails(std::string& detail) {
  const json a = agg("s3-03");
  const double unguarded = a["unguarded"]["collapse_rate"];
  const double guarded = a["guarded"]["collapse_rate"];
  const double alpha_only = a["alpha_only"]["collapse_rate"];
  detail = "collapse: unguarded " + std::to_string(unguarded) + ", guarded " +
           std::to_string(guarded) + ", alpha-only " + std::to_string(alpha_only);
  return unguarded >= 0.8 && guarded <= 0.2 && alpha_only >= 0.8;
}

bool budget(std::string& detail) {
  const json a = agg("s3-07");
  const double ratio = a["score_ratio"];
  detail = "wake+nrem/wake-only stable score ratio " + std::to_string(ratio);
  return ratio >= 1.3;
}

bool replay(std::string& detail) {
  const json a = agg("s3-04");
  const double rem_gain = a["rem_minus_wake_seen_pts"];
  const double idle = a["idle_minus_wake_seen_pts"];
  const double gate_off = a["gate_off_minus_wake_seen_pts"];
  const double scramble = a["scramble_unseen_minus_wake_unseen"];
  const double dyna_seen = a["dyna"]["seen"];
  detail = "rem +" + std::to_string(rem_gain) + "pts, idle " +
           std::to_string(idle) + "pts, gate-off " + std::to_string(gate_off) +
           "pts, scramble unseen delta " + std::to_string(scramble) +
           ", dyna seen " + std::to_string(dyna_seen);
  return rem_gain >= 20.0 && std::abs(idle) <= 3.0 &&
         std::abs(gate_off) <= 3.0 && scramble < 0.0 && dyna_seen >= 0.95;
}

bool latent_learning(std::string& detail) {
  const json a = agg("s3-06");
  const double ratio = a["rem_over_wake"];
  const double scramble = a["scramble"]["t0_success"];
  const double dyna = a["dyna"]["t0_success"];
  const double rem = a["rem"]["t0_success"];
  const double wake = a["wake_only"]["t0_success"];
  detail = "rem " + std::to_string(rem) + " vs wake " + std::to_string(wake) +
           " (x" + std::to_string(ratio) + "), scramble " +
           std::to_string(scramble) + ", dyna " + std::to_string(dyna);
  return ratio >= 4.0 && scramble <= 0.1 && dyna > rem && dyna > wake &&
         dyna > scramble;
}

bool reversal(std::string& detail) {
  const json a = agg("s3-05");
  const double rem = a["rem_benefit_fraction"];
  const double nrem_rem = a["nrem_rem_benefit_fraction"];
  detail = "rem benefit " + std::to_string(rem) + ", nrem+rem " +
           std::to_string(nrem_rem);
  return rem >= 0.05 && nrem_rem < rem;
}

bool determinism(const fs::path& root_a, const fs::path& root_b,
                 std::string& detail) {
  int compared = 0;
  for (const auto& e : phasor::exp::registry()) {
    const fs::path dir_a = root_a / e.id;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
      const std::string name = entry.path().filename().string();
      if (name == "run_info.json") continue;  // wall clock lives here
      const fs::path other = root_b / e.id / name;
      if (!fs::exists(other)) {
        detail = e.id + "/" + name + " missing from the second run";
        return false;
      }
      if (read_file(entry.path()) != read_file(other)) {
        detail = e.id + "/" + name + " differs between runs";
        return false;
      }
      ++compared;
    }
  }
  detail = std::to_string(compared) + " artifact files byte-identical across runs";
  return compared > 0;
}

bool invariants(std::string& detail) {
  // Trace decay is exactly exponential.
  {
    PlasticityState s = PlasticityState::make(2);
    s.e_fast(0, 1) = 1.0;
    const double dt = 0.03;
    for (int t = 0; t < 100; ++t) update_traces(s, RMat::Zero(2, 2), dt);
    if (std::abs(s.e_fast(0, 1) - std::exp(-100 * dt / s.tau_f)) > 1e-12) {
      detail = "trace decay not exactly exponential";
      return false;
    }
  }
  // Gate budget accounting matches the analytic open count.
  {
    GateConfig gate;
    gate.mode = GateConfig::Mode::spindle_burst;
    gate.burst_schedule = {{5, 10}, {50, 20}};
    long manual = 0;
    for (long t = 0; t < 100; ++t) manual += gate_value(gate, 0.0, t);
    if (manual != expected_gate_opens(gate, 100, 0.05) || manual != 30) {
      detail = "gate budget mismatch";
      return false;
    }
  }
  // Hebbian storage stays Hermitian.
  {
    Rng rng = make_stream("acceptance", 1, "hermitian");
    HoloMemory memory(12);
    for (int p = 0; p < 4; ++p) {
      CVec x(12);
      for (int i = 0; i < 12; ++i) x(i) = std::polar(1.0, rng.uniform(-kPi, kPi));
      memory.store(x);
    }
    const CMat& w = memory.weights();
    if ((w - w.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
      detail = "storage not Hermitian";
      return false;
    }
  }
  // Overlap is invariant to a global phase rotation.
  {
    Rng rng = make_stream("acceptance", 2, "overlap");
    CVec x(20);
    for (int i = 0; i < 20; ++i) x(i) = std::polar(1.0, rng.uniform(-kPi, kPi));
    const CVec rotated = x * std::polar(1.0, 1.234);
    if (std::abs(overlap_metric(rotated, x) - 1.0) > 1e-12) {
      detail = "overlap not rotation invariant";
      return false;
    }
  }
  // Guardrails with zero gains are the identity.
  {
    Rng rng = make_stream("acceptance", 3, "guard");
    PhasorGraph g = PhasorGraph::make(4);
    for (int i = 0; i < 4; ++i) g.z(i) = std::polar(1.0, 0.5 * i);
    const CVec before = g.z;
    const double kappa = g.kappa;
    apply_guardrails(g, GuardrailConfig{}, 0.99, rng);
    if ((g.z - before).cwiseAbs().maxCoeff() != 0.0 || g.kappa != kappa) {
      detail = "zero-gain guardrails not the identity";
      return false;
    }
  }
  // Dyna-Q with zero planning steps reduces to Q-learning.
  {
    Rng maze_rng = make_stream("acceptance", 4, "maze");
    const GridMaze maze = GridMaze::generate(6, 6, 4, maze_rng);
    DynaQParams params;
    params.episodes = 15;
    params.planning_steps = 0;
    Rng a = make_stream("acceptance", 4, "dyna");
    const DynaQAgent agent = dyna_q(maze, params, a);
    Rng b = make_stream("acceptance", 4, "dyna");
    QTable q = QTable::make(maze.cells());
    std::vector<int> starts;
    for (int c = 0; c < maze.cells(); ++c) {
      if (maze.seen(c) && c != maze.goal) starts.push_back(c);
    }
    for (int ep = 0; ep < params.episodes; ++ep) {
      int s = starts[b.uniform_index(starts.size())];
      for (int t = 0; t < maze.step_cap() && s != maze.goal; ++t) {
        const int act = b.uniform() < params.epsilon
                            ? static_cast<int>(b.uniform_index(kMazeActions))
                            : q.greedy(s, &b);
        const int next = maze.step_from(s, act);
        const double r = next == maze.goal ? params.reward.goal_reward
                                           : params.reward.step_cost;
        q.q(s, act) += params.alpha *
                       (r + params.gamma * q.q.row(next).maxCoeff() - q.q(s, act));
        s = next;
      }
    }
    if ((agent.q.q - q.q).cwiseAbs().maxCoeff() != 0.0) {
      detail = "dyna(planning=0) != q-learning";
      return false;
    }
  }
  detail = "trace decay, gate budget, Hermiticity, overlap invariance, "
           "guardrail identity, dyna/q equivalence";
  return true;
}

}  // namespace

int main() {
  const fs::path root_a = "acceptance_artifacts/run1";
  const fs::path root_b = "acceptance_artifacts/run2";
  std::error_code ec;
  fs::remove_all("acceptance_artifacts", ec);

  std::string sweep_error;
  const auto sweeps_t0 = std::chrono::steady_clock::now();
  const bool sweeps_ok = run_everything(root_a, root_b, sweep_error);
  const double sweeps_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - sweeps_t0)
          .count();
  if (!sweeps_ok) {
    std::cout << "sweeps FAIL (" << sweep_error << ")\n";
    return 1;
  }
  std::fprintf(stderr, "  [sweep] all experiments twice in %.1fs\n", sweeps_secs);

  std::vector<Gate> gates = {
      {"AC01 limit-cycle radius", limit_cycle},
      {"AC02 critical coupling window (s1-04)", critical_window},
      {"AC03 input-mode fidelity (s1-05)", input_modes},
      {"AC04 credit-assignment horizon (s2-03)", credit_horizon},
      {"AC05 progress-timing specificity (s2-02)", timing_specificity},
      {"AC06 recall kernels (s3-01)", recall_kernels},
      {"AC07 capacity benchmark (s3-08)", capacity},
      {"AC08 coherent consolidation (s3-02)", coherence_necessity},
      {"AC09 sleep guardrails (s3-03)", guardrails},
      {"AC10 stability budget (s3-07)", budget},
      {"AC11 dream replay transfer (s3-04)", replay},
      {"AC12 latent learning (s3-06)", latent_learning},
      {"AC13 reversal recovery (s3-05)", reversal},
      {"AC14 determinism suite",
       [&](std::string& d) { return determinism(root_a, root_b, d); }},
      {"AC15 invariant suite", invariants},
  };

  int failures = 0;
  for (auto& gate : gates) {
    std::string detail;
    bool ok = false;
    try {
      ok = gate.check(detail);
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    if (!ok) ++failures;
    std::cout << gate.name << ": " << (ok ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << "  [" << detail << "]";
    std::cout << "\n";
  }
  std::cout << (failures == 0 ? "all criteria passed"
                              : std::to_string(failures) + " criteria failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}
