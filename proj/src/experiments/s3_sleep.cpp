#include <cmath>
#include <map>
#include <sstream>

#include "phasor/experiments.hpp"
#include "phasor/holo.hpp"
#include "phasor/scheduler.hpp"

namespace phasor::exp {

namespace {

CVec random_pattern(int n, Rng& rng) {
  CVec x(n);
  for (int i = 0; i < n; ++i) x(i) = std::polar(1.0, rng.uniform(-kPi, kPi));
  return x;
}

PhasorGraph task_graph(int n, double kappa, Rng& omega_rng) {
  PhasorGraph g = PhasorGraph::make(n);
  g.adjacency = RMat::Ones(n, n);
  g.adjacency.diagonal().setZero();
  g.weights = RMat::Zero(n, n);
  g.normalization = Normalization::row;
  g.kappa = kappa;
  for (int i = 0; i < n; ++i) g.omega(i) = omega_rng.uniform(0.8, 1.2);
  g.reset_history();
  return g;
}

// Wake provider: additive forcing toward the target pattern (optionally plus
// isotropic noise) and periodic reward pulses.
class PatternWakeHook : public CycleHook {
 public:
  PatternWakeHook(const CVec& pattern, double drive, double noise, long pulse_period,
                  double pulse_amplitude, Rng noise_rng)
      : pattern_(pattern),
        drive_(drive),
        noise_(noise),
        pulse_period_(pulse_period),
        pulse_amplitude_(pulse_amplitude),
        noise_rng_(noise_rng) {}

  std::optional<InputSignal> wake_input(long) override {
    InputSignal in;
    in.mode = InputSignal::Mode::additive;
    in.values = drive_ * pattern_;
    if (noise_ > 0) {
      for (int i = 0; i < in.values.size(); ++i)
        in.values(i) += Complex(noise_rng_.normal(0.0, noise_),
                                noise_rng_.normal(0.0, noise_));
    }
    return in;
  }

  void wake_pulses(long step, std::vector<double>& pulses) override {
    if (pulse_period_ > 0 && step % pulse_period_ == pulse_period_ - 1)
      pulses.push_back(pulse_amplitude_);
  }

 private:
  CVec pattern_;
  double drive_;
  double noise_;
  long pulse_period_;
  double pulse_amplitude_;
  Rng noise_rng_;
};

// Wake provider with interference: episodes alternate distractor, target,
// distractor, target, ... and the reward pulse lands on the last step of each
// target episode. The modulator tail outlasts the episode boundary, so wake
// learning unavoidably writes part of the following distractor episode too.
class InterferenceWakeHook : public CycleHook {
 public:
  InterferenceWakeHook(const CVec& target, const CVec& distractor, double drive,
                       double noise, long episode_len, double pulse_amplitude,
                       Rng noise_rng)
      : target_(target),
        distractor_(distractor),
        drive_(drive),
        noise_(noise),
        episode_len_(episode_len),
        pulse_amplitude_(pulse_amplitude),
        noise_rng_(noise_rng) {}

  bool target_episode(long step) const {
    return (step / episode_len_) % 2 == 1;
  }

  std::optional<InputSignal> wake_input(long step) override {
    InputSignal in;
    in.mode = InputSignal::Mode::additive;
    in.values = drive_ * (target_episode(step) ? target_ : distractor_);
    if (noise_ > 0) {
      for (int i = 0; i < in.values.size(); ++i)
        in.values(i) += Complex(noise_rng_.normal(0.0, noise_),
                                noise_rng_.normal(0.0, noise_));
    }
    return in;
  }

  void wake_pulses(long step, std::vector<double>& pulses) override {
    if (target_episode(step) && step % episode_len_ == episode_len_ - 1)
      pulses.push_back(pulse_amplitude_);
  }

 private:
  CVec target_;
  CVec distractor_;
  double drive_;
  double noise_;
  long episode_len_;
  double pulse_amplitude_;
  Rng noise_rng_;
};

// Recall probe: cue a fraction of nodes at the pattern phase, relax under the
// learned weights, score the final-state overlap with the pattern.
double recall_score(const PhasorGraph& trained, const CVec& pattern,
                    double cue_fraction, long steps, double dt, Rng rng,
                    int repeats) {
  double acc = 0.0;
  for (int rep = 0; rep < repeats; ++rep) {
    PhasorGraph g = trained;
    const int cue = static_cast<int>(std::lround(cue_fraction * g.n));
    std::vector<int> order(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    for (int i = 0; i < g.n; ++i) {
      const int node = order[static_cast<std::size_t>(i)];
      if (i < cue) {
        g.z(node) = pattern(node);
      } else {
        g.z(node) = std::polar(0.2, rng.uniform(-kPi, kPi));
      }
    }
    g.reset_history();
    for (long t = 0; t < steps; ++t) step(g, nullptr, dt);
    acc += overlap_metric(g.z, pattern);
  }
  return acc / repeats;
}

GateConfig spindle_gate(long nrem_steps, long period, long burst_len) {
  GateConfig gate;
  gate.mode = GateConfig::Mode::spindle_burst;
  for (long start = period / 2; start + burst_len <= nrem_steps; start += period)
    gate.burst_schedule.emplace_back(start, burst_len);
  return gate;
}

// --- s3-02: coherent vs phase-scrambled consolidation ----------------------

CellResult run_s3_02(const RunContext& ctx) {
  const json& c = ctx.config;
  const int n = c["n"];
  const double dt = c["dt"];

  Rng pattern_rng = ctx.stream("pattern");
  const CVec pattern = random_pattern(n, pattern_rng);
  Rng omega_rng = ctx.stream("omega");
  PhasorGraph wake_graph = task_graph(n, c["kappa"], omega_rng);
  PlasticityState plasticity = PlasticityState::make(n);
  plasticity.tau_f = c["tau_f"];
  plasticity.tau_s = c["tau_s"];

  // Wake: tag the pattern into fast/slow traces and a first weight imprint.
  SleepSchedule wake_schedule;
  wake_schedule.dt = dt;
  ScheduleSegment wake;
  wake.phase = SleepPhase::wake;
  wake.steps = c["wake_steps"];
  wake.eta = c["eta_wake"];
  wake.trace = TraceKind::fast;
  wake_schedule.segments.push_back(wake);
  PatternWakeHook hook(pattern, c["drive"], 0.0, c["pulse_period"],
                       c["pulse_amplitude"], ctx.stream("wake-noise"));
  Rng wake_rng = ctx.stream("wake-cycle");
  run_cycle(wake_graph, plasticity, wake_schedule, &hook, wake_rng);

  const double pre =
      recall_score(wake_graph, pattern, c["cue_fraction"], c["probe_steps"], dt,
                   ctx.stream("probe"), c["probe_repeats"]);

  auto sleep_pass = [&](bool scramble) {
    PhasorGraph g = wake_graph;
    PlasticityState p = plasticity;
    SleepSchedule schedule;
    schedule.dt = dt;
    ScheduleSegment nrem;
    nrem.phase = SleepPhase::nrem;
    nrem.steps = c["nrem_steps"];
    nrem.eta = c["eta_nrem"];
    nrem.input_enabled = false;
    nrem.trace = TraceKind::slow;
    nrem.modulator_source = ModulatorSource::PRP;
    nrem.gate = spindle_gate(nrem.steps, c["spindle_period"], c["spindle_len"]);
    nrem.scramble_phases = scramble;
    nrem.update_budget = c["update_budget"].get<double>();
    nrem.homeostasis.mode = HomeostasisConfig::Mode::linear_decay;
    nrem.homeostasis.decay_rate = c["decay_rate"];
    schedule.segments.push_back(nrem);
    Rng cycle_rng = ctx.stream("sleep-cycle");  // shared: identical scramble draws
    const RunMetrics metrics = run_cycle(g, p, schedule, nullptr, cycle_rng);
    const double post =
        recall_score(g, pattern, c["cue_fraction"], c["probe_steps"], dt,
                     ctx.stream("probe"), c["probe_repeats"]);
    return std::pair<double, long>(post, metrics.gate_open_steps);
  };

  const auto [post_coherent, gates_coherent] = sleep_pass(false);
  const auto [post_scrambled, gates_scrambled] = sleep_pass(true);

  CellResult result{ctx.condition, ctx.seed};
  result.summary["pre"] = pre;
  result.summary["gain_coherent"] = post_coherent - pre;
  result.summary["gain_scrambled"] = post_scrambled - pre;
  result.summary["gate_steps_coherent"] = gates_coherent;
  result.summary["gate_steps_scrambled"] = gates_scrambled;
  return result;
}

json summarize_s3_02(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::vector<double> coherent, scrambled;
  for (const CellResult& cell : cells) {
    coherent.push_back(cell.summary["gain_coherent"]);
    scrambled.push_back(cell.summary["gain_scrambled"]);
  }
  json agg;
  agg["mean_gain_coherent"] = mean(coherent);
  agg["mean_gain_scrambled"] = mean(scrambled);
  agg["p_one_sided"] = paired_t_pvalue(coherent, scrambled);
  agg["runs"] = cells.size();
  (void)config;
  (void)files;
  return agg;
}

// --- s3-03: synchrony guardrails -------------------------------------------

CellResult run_s3_03(const RunContext& ctx) {
  const json& c = ctx.config;
  const int n = c["n"];
  const double dt = c["dt"];

  Rng omega_rng = ctx.stream("omega");
  PhasorGraph g = task_graph(n, c["kappa"], omega_rng);
  g.weights = g.adjacency;
  Rng init_rng = ctx.stream("init");
  for (int i = 0; i < n; ++i) g.z(i) = std::polar(1.0, init_rng.uniform(-kPi, kPi));
  g.reset_history();
  PlasticityState plasticity = PlasticityState::make(n);

  SleepSchedule schedule;
  schedule.dt = dt;
  GuardrailConfig guard;
  guard.target_R = c["target_R"];
  guard.band_lo = c["band_lo"];
  guard.band_hi = c["band_hi"];
  if (ctx.condition == "guarded") {
    guard.kappa_gain = c["kappa_gain"];
    guard.kick_strength = c["kick_strength"];
    guard.rescue_jitter = c["rescue_jitter"];
  } else if (ctx.condition == "alpha_only") {
    guard.alpha_only = true;
    guard.alpha_gain = c["alpha_gain"];
  }
  schedule.guardrails = guard;
  ScheduleSegment sleep;
  sleep.phase = SleepPhase::nrem;
  sleep.steps = c["steps"];
  sleep.eta = 0.0;
  sleep.input_enabled = false;
  sleep.use_guardrails = ctx.condition != "unguarded";
  schedule.segments.push_back(sleep);

  Rng cycle_rng = ctx.stream("cycle:" + ctx.condition);
  const RunMetrics metrics = run_cycle(g, plasticity, schedule, nullptr, cycle_rng);
  const bool collapsed =
      metrics.diverged || sustained_collapse(metrics.rows, c["collapse_threshold"]);

  std::ostringstream csv;
  csv << "step,R\n";
  for (std::size_t i = 0; i < metrics.rows.size(); i += 10)
    csv << metrics.rows[i].step << ',' << fmt_double(metrics.rows[i].order_parameter)
        << '\n';

  CellResult result{ctx.condition, ctx.seed};
  result.summary["collapsed"] = collapsed;
  result.summary["final_R"] =
      metrics.rows.empty() ? 0.0 : metrics.rows.back().order_parameter;
  result.files.emplace_back("s3-03_" + ctx.condition + "_seed" +
                                std::to_string(ctx.seed) + "_R.csv",
                            csv.str());
  return result;
}

json summarize_s3_03(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::map<std::string, std::pair<int, int>> counts;  // condition -> (collapsed, total)
  for (const CellResult& cell : cells) {
    auto& [collapsed, total] = counts[cell.condition];
    if (cell.summary["collapsed"].get<bool>()) ++collapsed;
    ++total;
  }
  json agg;
  for (const auto& [cond, ct] : counts)
    agg[cond] = {{"collapse_rate", static_cast<double>(ct.first) / ct.second}};
  (void)config;
  (void)files;
  return agg;
}

// --- s3-07: stability budget ------------------------------------------------

struct BudgetOutcome {
  double score = 0.0;
  bool stable = true;
};

BudgetOutcome budget_run(const RunContext& ctx, double eta_wake, bool with_nrem) {
  const json& c = ctx.config;
  const int n = c["n"];
  const double dt = c["dt"];

  Rng pattern_rng = ctx.stream("pattern");
  const CVec pattern = random_pattern(n, pattern_rng);
  Rng distractor_rng = ctx.stream("distractor");
  const CVec distractor = random_pattern(n, distractor_rng);
  Rng omega_rng = ctx.stream("omega");
  PhasorGraph g = task_graph(n, c["kappa"], omega_rng);
  PlasticityState plasticity = PlasticityState::make(n);
  plasticity.tau_f = c["tau_f"];
  plasticity.tau_s = c["tau_s"];
  plasticity.tau_m = c["tau_m"];

  SleepSchedule schedule;
  schedule.dt = dt;
  schedule.budget = c["budget"].get<double>();
  const int cycles = c["cycles"];
  for (int cyc = 0; cyc < cycles; ++cyc) {
    ScheduleSegment wake;
    wake.phase = SleepPhase::wake;
    wake.steps = c["wake_steps"];
    wake.eta = eta_wake;
    wake.trace = TraceKind::fast;
    schedule.segments.push_back(wake);
    // NREM sits between wake bouts so both arms end on a wake segment.
    if (with_nrem && cyc + 1 < cycles) {
      ScheduleSegment nrem;
      nrem.phase = SleepPhase::nrem;
      nrem.steps = c["nrem_steps"];
      nrem.eta = c["eta_nrem"];
      nrem.input_enabled = false;
      nrem.trace = TraceKind::slow;
      nrem.modulator_source = ModulatorSource::PRP;
      nrem.gate = spindle_gate(nrem.steps, c["spindle_period"], c["spindle_len"]);
      nrem.update_budget = c["nrem_update_budget"].get<double>();
      if (c["homeostasis"] == "shrinkage") {
        // Selective pruning: weights far below shrink_scale decay
        // proportionally, consolidated ones lose only a constant margin.
        nrem.homeostasis.mode = HomeostasisConfig::Mode::nonlinear_shrinkage;
        nrem.homeostasis.shrink_base = c["shrink_base"];
        nrem.homeostasis.shrink_scale = c["shrink_scale"];
      } else {
        nrem.homeostasis.mode = HomeostasisConfig::Mode::linear_decay;
        nrem.homeostasis.decay_rate = c["decay_rate"];
      }
      schedule.segments.push_back(nrem);
    }
  }

  InterferenceWakeHook hook(pattern, distractor, c["drive"], c["wake_noise"],
                            c["episode_len"], c["pulse_amplitude"],
                            ctx.stream("wake-noise"));
  Rng cycle_rng = ctx.stream("cycle");
  const RunMetrics metrics = run_cycle(g, plasticity, schedule, &hook, cycle_rng);

  BudgetOutcome out;
  out.stable = !metrics.unstable && !metrics.diverged;
  // A partial cue alone yields a nonzero overlap even with empty weights;
  // score the recall as the gain over that untrained baseline so the arms are
  // compared on what learning actually added.
  PhasorGraph blank = g;
  blank.weights.setZero();
  const double baseline =
      recall_score(blank, pattern, c["cue_fraction"], c["probe_steps"], dt,
                   ctx.stream("probe"), c["probe_repeats"]);
  out.score = recall_score(g, pattern, c["cue_fraction"], c["probe_steps"], dt,
                           ctx.stream("probe"), c["probe_repeats"]) -
              baseline;
  return out;
}

CellResult run_s3_07(const RunContext& ctx) {
  const json& c = ctx.config;
  CellResult result{ctx.condition, ctx.seed};
  if (ctx.condition == "wake_only") {
    json per_eta = json::array();
    for (const auto& ev : c["eta_sweep"]) {
      const BudgetOutcome out = budget_run(ctx, ev.get<double>(), false);
      per_eta.push_back(
          {{"eta", ev.get<double>()}, {"score", out.score}, {"stable", out.stable}});
    }
    result.summary["per_eta"] = per_eta;
  } else {
    const BudgetOutcome out = budget_run(ctx, c["eta_wake_nrem"], true);
    result.summary["score"] = out.score;
    result.summary["stable"] = out.stable;
  }
  return result;
}

json summarize_s3_07(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  // Wake-only: per eta, mean score and stable fraction across seeds.
  std::map<double, std::vector<double>> scores;
  std::map<double, int> stable_counts;
  std::map<double, int> totals;
  std::vector<double> nrem_scores;
  int nrem_stable = 0, nrem_total = 0;
  for (const CellResult& cell : cells) {
    if (cell.condition == "wake_only") {
      for (const auto& row : cell.summary["per_eta"]) {
        const double eta = row["eta"];
        scores[eta].push_back(row["score"]);
        if (row["stable"].get<bool>()) ++stable_counts[eta];
        ++totals[eta];
      }
    } else {
      nrem_scores.push_back(cell.summary["score"]);
      if (cell.summary["stable"].get<bool>()) ++nrem_stable;
      ++nrem_total;
    }
  }
  const double stable_floor = config["stable_fraction"];
  double best_wake = 0.0;
  json per_eta = json::array();
  for (const auto& [eta, v] : scores) {
    const double frac = static_cast<double>(stable_counts[eta]) / totals[eta];
    const bool fully_stable = frac >= stable_floor;
    if (fully_stable) best_wake = std::max(best_wake, mean(v));
    per_eta.push_back({{"eta", eta},
                       {"mean_score", mean(v)},
                       {"stable_fraction", frac},
                       {"fully_stable", fully_stable}});
  }
  const double nrem_frac =
      nrem_total ? static_cast<double>(nrem_stable) / nrem_total : 0.0;
  json agg;
  agg["wake_only"] = per_eta;
  agg["wake_only_best_stable_score"] = best_wake;
  agg["wake_nrem"] = {{"mean_score", mean(nrem_scores)},
                      {"stable_fraction", nrem_frac},
                      {"fully_stable", nrem_frac >= stable_floor}};
  agg["score_ratio"] =
      best_wake > 0 && nrem_frac >= stable_floor ? mean(nrem_scores) / best_wake : 0.0;
  (void)files;
  return agg;
}

}  // namespace

void register_s3_sleep(std::vector<Experiment>& out) {
  {
    Experiment e;
    e.id = "s3-02";
    e.claim = "consolidation needs coherent sleep dynamics; phase-scrambled sleep with matched budget gains less";
    e.modules = "sleep-scheduler,plasticity,phasor-graph,holo-memory";
    e.defaults = {{"n", 16},          {"kappa", 0.6},
                  {"dt", 0.05},       {"tau_f", 0.2},
                  {"tau_s", 4.0},     {"wake_steps", 300},
                  {"eta_wake", 0.02}, {"drive", 0.6},
                  {"pulse_period", 50},
                  {"pulse_amplitude", 1.0},
                  {"nrem_steps", 400},
                  {"eta_nrem", 0.05},
                  {"spindle_period", 50},
                  {"spindle_len", 10},
                  {"update_budget", 1.0},
                  {"decay_rate", 0.0005},
                  {"cue_fraction", 0.3},
                  {"probe_steps", 150},
                  {"probe_repeats", 4}};
    e.fast_profile = json::object();
    e.paper_profile = {{"probe_repeats", 8}};
    e.conditions = {"default"};
    e.fast_seeds = [] {
      std::vector<std::uint64_t> s;
      for (std::uint64_t i = 1; i <= 30; ++i) s.push_back(i);
      return s;
    }();
    e.paper_seeds = [] {
      std::vector<std::uint64_t> s;
      for (std::uint64_t i = 1; i <= 60; ++i) s.push_back(i);
      return s;
    }();
    e.run_cell = run_s3_02;
    e.summarize = summarize_s3_02;
    out.push_back(std::move(e));
  }
  {
    Experiment e;
    e.id = "s3-03";
    e.claim = "phase-acting guardrails prevent synchrony collapse; amplitude-only feedback cannot";
    e.modules = "sleep-scheduler,phasor-graph";
    e.defaults = {{"n", 32},        {"kappa", 2.0},
                  {"dt", 0.05},     {"steps", 1200},
                  {"target_R", 0.76},
                  {"band_lo", 0.55},
                  {"band_hi", 0.9},
                  {"kappa_gain", 0.05},
                  {"kick_strength", 0.5},
                  {"rescue_jitter", 0.5},
                  {"alpha_gain", 0.05},
                  {"collapse_threshold", 0.95}};
    e.fast_profile = json::object();
    e.paper_profile = {{"steps", 4000}};
    e.conditions = {"unguarded", "guarded", "alpha_only"};
    e.fast_seeds = [] {
      std::vector<std::uint64_t> s;
      for (std::uint64_t i = 1; i <= 20; ++i) s.push_back(i);
      return s;
    }();
    e.paper_seeds = [] {
      std::vector<std::uint64_t> s;
      for (std::uint64_t i = 1; i <= 50; ++i) s.push_back(i);
      return s;
    }();
    e.run_cell = run_s3_03;
    e.summarize = summarize_s3_03;
    out.push_back(std::move(e));
  }
  {
    Experiment e;
    e.id = "s3-07";
    e.claim = "under a hard weight-norm budget, wake+NREM consolidation beats any fully-stable wake-only learning rate";
    e.modules = "sleep-scheduler,plasticity,phasor-graph";
    e.defaults = {{"n", 24},
                  {"kappa", 3.0},
                  {"dt", 0.05},
                  {"tau_f", 0.2},
                  {"tau_s", 4.0},
                  {"tau_m", 2.0},
                  {"budget", 2.0},
                  {"cycles", 5},
                  {"wake_steps", 200},
                  {"nrem_steps", 250},
                  {"eta_sweep", {0.0005, 0.001, 0.002, 0.004, 0.008}},
                  {"eta_wake_nrem", 0.0045},
                  {"eta_nrem", 0.001},
                  {"spindle_period", 50},
                  {"spindle_len", 10},
                  {"homeostasis", "decay"},
                  {"shrink_base", 0.02},
                  {"shrink_scale", 0.05},
                  {"nrem_update_budget", 10.0},
                  {"decay_rate", 0.003},
                  {"drive", 0.6},
                  {"wake_noise", 0.25},
                  {"episode_len", 50},
                  {"pulse_amplitude", 1.0},
                  {"cue_fraction", 0.3},
                  {"probe_steps", 150},
                  {"probe_repeats", 4},
                  {"stable_fraction", 1.0}};
    e.fast_profile = json::object();
    e.paper_profile = {{"probe_repeats", 8}};
    e.conditions = {"wake_only", "wake_nrem"};
    e.fast_seeds = {1, 2, 3, 4, 5};
    e.paper_seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    e.run_cell = run_s3_07;
    e.summarize = summarize_s3_07;
    out.push_back(std::move(e));
  }
}

}  // namespace phasor::exp
