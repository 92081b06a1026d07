#include <cmath>
#include <map>
#include <sstream>

#include "phasor/env.hpp"
#include "phasor/experiments.hpp"
#include "phasor/plasticity.hpp"
#include "phasor/progress.hpp"

namespace phasor::exp {

namespace {

// --- s2-03: delayed credit assignment --------------------------------------
//
// A fixed causal episode (groups of edges active in sequence) ends a fixed
// gap before the earliest possible modulator pulse; background bursts tick on
// every edge throughout. Credit consistency is the chance-normalized share of
// positive trace mass on causal edges at the pulse time.

struct CreditOutcome {
  std::map<long, double> fast_consistency;  // delay -> value
  std::map<long, double> slow_consistency;
};

CreditOutcome credit_trial(const json& c, Rng& rng) {
  const int n = c["n"];
  const double dt = c["dt"];
  const int groups = c["groups"];
  const int group_edges = c["group_edges"];
  const long group_steps = c["group_steps"];
  const long gap_steps = c["gap_steps"];
  const double episode_amplitude = c["episode_amplitude"];
  const long burst_period = c["burst_period"];
  const long burst_len = c["burst_len"];

  // Edge enumeration: row-major off-diagonal entries.
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) edges.emplace_back(i, j);
  const int causal_count = groups * group_edges;
  const double chance = static_cast<double>(causal_count) / edges.size();

  std::vector<long> offsets(edges.size());
  for (auto& o : offsets) o = static_cast<long>(rng.uniform_index(burst_period));

  std::vector<long> delays;
  for (const auto& d : c["delays"]) delays.push_back(d.get<long>());
  const long episode_end = groups * group_steps;
  const long first_pulse = episode_end + gap_steps;
  const long horizon = first_pulse + delays.back() + 1;

  PlasticityState state = PlasticityState::make(n);
  state.tau_f = c["tau_f"];
  state.tau_s = c["tau_s"];

  auto consistency = [&](const RMat& e) {
    double causal = 0.0, total = 0.0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const double v = e(edges[k].first, edges[k].second);
      if (v <= 0) continue;
      total += v;
      if (static_cast<int>(k) < causal_count) causal += v;
    }
    return total > 0 ? (causal / total) / chance : 0.0;
  };

  CreditOutcome out;
  RMat h = RMat::Zero(n, n);
  for (long t = 0; t < horizon; ++t) {
    h.setZero();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if ((t + offsets[k]) % burst_period < burst_len)
        h(edges[k].first, edges[k].second) += 1.0;
    }
    if (t < episode_end) {
      const int group = static_cast<int>(t / group_steps);
      for (int k = group * group_edges; k < (group + 1) * group_edges; ++k)
        h(edges[static_cast<std::size_t>(k)].first,
          edges[static_cast<std::size_t>(k)].second) += episode_amplitude;
    }
    update_traces(state, h, dt);
    for (const long d : delays) {
      if (t == first_pulse + d) {
        out.fast_consistency[d] = consistency(state.e_fast);
        out.slow_consistency[d] = consistency(state.e_slow);
      }
    }
  }
  return out;
}

CellResult run_s2_03(const RunContext& ctx) {
  const json& c = ctx.config;
  const int trials = c["trials"];
  Rng rng = ctx.stream("trials");

  std::map<long, std::vector<double>> fast, slow;
  for (int trial = 0; trial < trials; ++trial) {
    Rng trial_rng = rng.child(static_cast<std::uint64_t>(trial));
    const CreditOutcome out = credit_trial(c, trial_rng);
    for (const auto& [d, v] : out.fast_consistency) fast[d].push_back(v);
    for (const auto& [d, v] : out.slow_consistency) slow[d].push_back(v);
  }

  CellResult result{ctx.condition, ctx.seed};
  std::ostringstream csv;
  csv << "delay,fast_consistency,slow_consistency,ratio\n";
  json rows = json::array();
  for (const auto& [d, v] : fast) {
    const double f = mean(v);
    const double s = mean(slow[d]);
    const double ratio = f > 0 ? s / f : 0.0;
    csv << d << ',' << fmt_double(f) << ',' << fmt_double(s) << ','
        << fmt_double(ratio) << '\n';
    rows.push_back({{"delay", d}, {"fast", f}, {"slow", s}, {"ratio", ratio}});
  }
  result.summary["per_delay"] = rows;
  result.files.emplace_back("s2-03_seed" + std::to_string(ctx.seed) + ".csv",
                            csv.str());
  return result;
}

json summarize_s2_03(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::map<long, std::vector<double>> ratios;
  for (const CellResult& cell : cells)
    for (const auto& row : cell.summary["per_delay"])
      ratios[row["delay"].get<long>()].push_back(row["ratio"]);
  json out = json::array();
  bool monotone = true;
  double prev = 0.0;
  bool first = true;
  for (const auto& [d, v] : ratios) {
    const double r = mean(v);
    if (!first && r > prev + 1e-9) monotone = false;
    prev = r;
    first = false;
    out.push_back({{"delay", d}, {"ratio", r}});
  }
  json agg;
  agg["ratio_by_delay"] = out;
  agg["monotone_non_increasing"] = monotone;
  (void)config;
  (void)files;
  return agg;
}

// --- s2-02 / s2-04 shared predictor harness --------------------------------
//
// A small driven oscillator graph feeds a linear readout; structured blocks
// present one of a few omega-mod drive classes with one-hot targets, noise
// blocks present random forcing with random targets. Readout learning is
// three-factor style: an eligibility trace of error-scaled features, gated by
// the modulator.

struct PredictorHarness {
  PhasorGraph graph;
  ReadoutHead head;
  RMat trace;        // outputs x features
  double tau_e = 0.3;
  int classes = 4;
  std::vector<InputSignal> drives;

  static PredictorHarness make(const json& c, Rng& omega_rng) {
    PredictorHarness h;
    const int n = c["n"];
    h.classes = c["classes"];
    h.graph = PhasorGraph::make(n);
    h.graph.adjacency = RMat::Ones(n, n);
    h.graph.adjacency.diagonal().setZero();
    h.graph.weights = h.graph.adjacency;
    h.graph.normalization = Normalization::row;
    h.graph.kappa = c["kappa"];
    for (int i = 0; i < n; ++i) {
      h.graph.omega(i) = omega_rng.uniform(0.8, 1.2);
      h.graph.z(i) = std::polar(1.0, omega_rng.uniform(-kPi, kPi));
    }
    h.graph.reset_history();
    // Amplitude-only features: the collective phase free-runs, so any
    // phase-based feature averages to zero over a block and a static linear
    // readout cannot use it. Alpha-modulated drives give each class a
    // distinctive stationary amplitude pattern instead.
    h.head.mode = ReadoutHead::Mode::regression;
    h.head.use_cos = false;
    h.head.use_sin = false;
    for (int i = 0; i < n; ++i) h.head.nodes.push_back(i);
    h.head.weights = RMat::Zero(h.classes, n);
    h.trace = RMat::Zero(h.classes, n);
    h.tau_e = c["tau_e"];
    for (int cls = 0; cls < h.classes; ++cls)
      h.drives.push_back(encode_observation(cls, h.classes, n,
                                            InputSignal::Mode::alpha_mod,
                                            c["drive_amplitude"]));
    return h;
  }

  // Returns per-step squared error; err_out receives the error vector.
  double observe(const RVec& target, RVec& err_out, double dt) {
    const RVec f = readout_features(head, graph.z);
    const RVec y = head.weights * f;
    err_out = target - y;
    trace = trace * std::exp(-dt / tau_e) + dt * (err_out * f.transpose());
    return err_out.squaredNorm() / target.size();
  }

  void update(double lr, double modulator) {
    if (modulator > 0) head.weights += lr * modulator * trace;
  }
};

struct BlockPlan {
  bool structured;
  int cls;
};

std::vector<BlockPlan> block_plan(int blocks, int structured_per_noise, int classes) {
  std::vector<BlockPlan> plan;
  int cls = 0;
  for (int b = 0; b < blocks; ++b) {
    const bool structured = structured_per_noise <= 0 ||
                            b % (structured_per_noise + 1) != structured_per_noise;
    plan.push_back({structured, structured ? cls++ % classes : -1});
  }
  return plan;
}

CellResult run_s2_02(const RunContext& ctx) {
  const json& c = ctx.config;
  const double dt = c["dt"];
  const long block_steps = c["block_steps"];
  const int blocks = c["blocks"];
  const double lr = c["lr"];
  const double tonic = c["tonic_modulator"];
  const double noise_amp = c["noise_amplitude"];
  const auto plan = block_plan(blocks, c["structured_per_noise"], c["classes"]);
  const long horizon = blocks * block_steps;

  ProgressDetector::Params dp;
  dp.window_len = c["window_len"];
  dp.stride = c["stride"];
  dp.threshold = c["progress_threshold"];
  dp.refractory = c["refractory"];
  dp.pulse_gain = c["pulse_gain"];
  dp.pulse_cap = c["pulse_cap"];

  struct PassResult {
    double improvement = 0.0;
    double final_R = 0.0;
    std::vector<Pulse> pulses;
    std::vector<double> losses;  // structured steps only
    std::vector<double> all_losses;
  };

  auto run_pass = [&](const std::vector<Pulse>* forced_pulses) {
    PassResult res;
    Rng omega_rng = ctx.stream("omega");
    Rng noise_rng = ctx.stream("noise");
    Rng target_rng = ctx.stream("targets");
    PredictorHarness h = PredictorHarness::make(c, omega_rng);
    PlasticityState mod = PlasticityState::make(0);
    mod.tau_m = c["tau_m"];
    ProgressDetector detector(dp);
    std::size_t forced_idx = 0;

    RVec err(h.classes);
    double first_window = -1.0, last_window = 0.0;
    long window_count = 0;
    double window_acc = 0.0;
    for (long t = 0; t < horizon; ++t) {
      const BlockPlan& blk = plan[static_cast<std::size_t>(t / block_steps)];
      InputSignal input;
      RVec target = RVec::Zero(h.classes);
      if (blk.structured) {
        input = h.drives[static_cast<std::size_t>(blk.cls)];
        target(blk.cls) = 1.0;
      } else {
        input.mode = InputSignal::Mode::additive;
        input.values = CVec(h.graph.n);
        for (int i = 0; i < h.graph.n; ++i)
          input.values(i) = Complex(noise_rng.uniform(-noise_amp, noise_amp),
                                    noise_rng.uniform(-noise_amp, noise_amp));
        for (int k = 0; k < h.classes; ++k) target(k) = target_rng.uniform(-1.0, 1.0);
      }
      step(h.graph, &input, dt);
      const double loss = h.observe(target, err, dt);
      res.all_losses.push_back(loss);

      std::vector<double> pulses;
      if (forced_pulses) {
        while (forced_idx < forced_pulses->size() &&
               (*forced_pulses)[forced_idx].step == t) {
          pulses.push_back((*forced_pulses)[forced_idx].amplitude);
          ++forced_idx;
        }
        detector.observe(t, loss);  // keep detector state comparable
      } else {
        if (const auto pulse = detector.observe(t, loss)) {
          pulses.push_back(*pulse);
          res.pulses.push_back({t, *pulse});
        }
      }
      update_modulator(mod, pulses, dt);
      h.update(lr, tonic + mod.modulator);

      if (blk.structured) {
        res.losses.push_back(loss);
        window_acc += loss;
        if (++window_count == block_steps) {
          if (first_window < 0) first_window = window_acc / block_steps;
          last_window = window_acc / block_steps;
          window_acc = 0.0;
          window_count = 0;
        }
      }
    }
    res.improvement =
        first_window > 0 ? (first_window - last_window) / first_window : 0.0;
    res.final_R = order_parameter(h.graph.z);
    return res;
  };

  const PassResult real = run_pass(nullptr);
  Rng shuffle_rng = ctx.stream("shuffle");
  const std::vector<Pulse> shuffled =
      shuffle_schedule(real.pulses, horizon, shuffle_rng);
  const PassResult placebo = run_pass(&shuffled);

  // Causality: cross-correlation between the pulse train and the subsequent
  // drop in loss, scanned over lags.
  std::vector<double> pulse_train(static_cast<std::size_t>(horizon), 0.0);
  for (const Pulse& p : real.pulses) pulse_train[static_cast<std::size_t>(p.step)] = p.amplitude;
  std::vector<double> loss_drop(static_cast<std::size_t>(horizon), 0.0);
  for (long t = 1; t < horizon; ++t)
    loss_drop[static_cast<std::size_t>(t)] =
        real.all_losses[static_cast<std::size_t>(t - 1)] -
        real.all_losses[static_cast<std::size_t>(t)];
  int best_lag = 0;
  double best_corr = -2.0;
  const int max_lag = c["max_lag"];
  for (int lag = 0; lag <= max_lag; ++lag) {
    std::vector<double> a, b;
    for (long t = 0; t + lag < horizon; ++t) {
      a.push_back(pulse_train[static_cast<std::size_t>(t)]);
      b.push_back(loss_drop[static_cast<std::size_t>(t + lag)]);
    }
    const double r = pearson(a, b);
    if (r > best_corr) {
      best_corr = r;
      best_lag = lag;
    }
  }

  CellResult result{ctx.condition, ctx.seed};
  result.summary["improvement_real"] = real.improvement;
  result.summary["improvement_shuffled"] = placebo.improvement;
  result.summary["final_R"] = real.final_R;
  result.summary["pulse_count"] = real.pulses.size();
  result.summary["best_lag"] = best_lag;
  result.summary["lag_correlation"] = best_corr;

  std::ostringstream pulse_csv;
  pulse_csv << "step,delta,amplitude,shuffled\n";
  for (const Pulse& p : real.pulses)
    pulse_csv << p.step << ',' << fmt_double(p.amplitude) << ','
              << fmt_double(p.amplitude) << ",0\n";
  for (const Pulse& p : shuffled)
    pulse_csv << p.step << ",," << fmt_double(p.amplitude) << ",1\n";
  result.files.emplace_back("s2-02_seed" + std::to_string(ctx.seed) + "_pulses.csv",
                            pulse_csv.str());
  return result;
}

json summarize_s2_02(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::vector<double> real, shuffled, final_r, lag_corr;
  int improved = 0;
  for (const CellResult& cell : cells) {
    real.push_back(cell.summary["improvement_real"]);
    shuffled.push_back(cell.summary["improvement_shuffled"]);
    final_r.push_back(cell.summary["final_R"]);
    lag_corr.push_back(cell.summary["lag_correlation"]);
    if (real.back() > config["reliability_threshold"].get<double>()) ++improved;
  }
  json agg;
  // The four criteria columns.
  agg["reliability"] = static_cast<double>(improved) / cells.size();
  agg["causality_lag_corr"] = mean(lag_corr);
  agg["final_R"] = mean(final_r);
  agg["shuffle_control"] = {{"mean_real", mean(real)},
                            {"mean_shuffled", mean(shuffled)},
                            {"ratio", mean(shuffled) != 0.0
                                          ? mean(real) / mean(shuffled)
                                          : 0.0}};
  (void)files;
  return agg;
}

// --- s2-04: gate / delay ablation ------------------------------------------

CellResult run_s2_04(const RunContext& ctx) {
  const json& c = ctx.config;
  const double dt = c["dt"];
  const long horizon = c["steps"];
  const double lr = c["lr"];
  const double gate_threshold = c["gate_threshold"];
  const long episode_period = c["episode_period"];
  const long episode_len = c["episode_len"];
  const long reward_delay = c["reward_delay"];

  const bool no_delay = ctx.condition == "no_delay";
  const bool no_gate = ctx.condition == "no_gate";

  Rng omega_rng = ctx.stream("omega");
  Rng noise_rng = ctx.stream("noise");
  PredictorHarness h = PredictorHarness::make(c, omega_rng);
  if (no_delay) h.tau_e = dt / 10.0;  // trace forgets within a step

  // Episodic channel: a dedicated drive class (last class index) shown
  // briefly, rewarded after a delay.
  const int episodic_cls = h.classes - 1;
  PlasticityState mod = PlasticityState::make(0);
  mod.tau_m = c["tau_m"];

  RVec err(h.classes);
  std::vector<double> dense_losses;
  for (long t = 0; t < horizon; ++t) {
    const long phase = t % episode_period;
    const bool episodic = phase < episode_len;
    InputSignal input;
    RVec target = RVec::Zero(h.classes);
    if (episodic) {
      input = h.drives[static_cast<std::size_t>(episodic_cls)];
      target(episodic_cls) = 1.0;
    } else {
      const int cls = static_cast<int>((t / 7) % (h.classes - 1));
      input = h.drives[static_cast<std::size_t>(cls)];
      target(cls) = 1.0;
      for (int k = 0; k < h.classes; ++k)
        target(k) += noise_rng.uniform(-0.05, 0.05);
    }
    step(h.graph, &input, dt);
    const double loss = h.observe(target, err, dt);
    if (!episodic) dense_losses.push_back(loss);

    std::vector<double> pulses;
    if (phase == episode_len + reward_delay) pulses.push_back(1.0);
    update_modulator(mod, pulses, dt);

    // Dense pathway: tonic, surprise-gated updates. Episodic pathway rides
    // the delayed modulator through the same trace and is not gated — the
    // reward itself is the third factor there.
    const int gate = no_gate || loss > gate_threshold ? 1 : 0;
    h.update(lr, gate * c["tonic_modulator"].get<double>() + mod.modulator);
  }

  // Dense score: mean loss over the last 10% of dense steps. Episodic score:
  // clean response correlation with the episodic target.
  double dense_final = 0.0;
  const std::size_t tail = dense_losses.size() / 10;
  for (std::size_t i = dense_losses.size() - tail; i < dense_losses.size(); ++i)
    dense_final += dense_losses[i];
  dense_final /= tail;

  PhasorGraph probe = h.graph;
  probe.reset_history();
  double episodic_score = 0.0;
  for (long t = 0; t < 40; ++t) {
    step(probe, &h.drives[static_cast<std::size_t>(episodic_cls)], dt);
    if (t >= 30) {
      const RVec y = h.head.weights * readout_features(h.head, probe.z);
      episodic_score += y(episodic_cls) - y.sum() / h.classes;
    }
  }
  episodic_score /= 10.0;

  CellResult result{ctx.condition, ctx.seed};
  result.summary["dense_final_mse"] = dense_final;
  result.summary["episodic_score"] = episodic_score;
  return result;
}

json summarize_s2_04(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::map<std::string, std::vector<double>> mse, episodic;
  for (const CellResult& cell : cells) {
    mse[cell.condition].push_back(cell.summary["dense_final_mse"]);
    episodic[cell.condition].push_back(cell.summary["episodic_score"]);
  }
  json agg;
  const double full_mse = mean(mse["full"]);
  for (const auto& [cond, v] : mse) {
    agg[cond] = {{"dense_final_mse", mean(v)},
                 {"mse_change_pct",
                  full_mse > 0 ? 100.0 * (mean(v) - full_mse) / full_mse : 0.0},
                 {"episodic_score", mean(episodic[cond])}};
  }
  (void)config;
  (void)files;
  return agg;
}

}  // namespace

void register_s2(std::vector<Experiment>& out) {
  {
    Experiment e;
    e.id = "s2-02";
    e.claim = "compression-progress pulses improve prediction only at the right times; timestamp shuffles fail";
    e.modules = "intrinsic-progress,plasticity,phasor-graph,agent-env";
    e.defaults = {{"n", 8},
                  {"classes", 4},
                  {"kappa", 0.3},
                  {"dt", 0.05},
                  {"tau_e", 0.3},
                  {"tau_m", 0.5},
                  {"drive_amplitude", 0.6},
                  {"noise_amplitude", 0.5},
                  {"block_steps", 40},
                  {"blocks", 40},
                  {"structured_per_noise", 3},
                  {"lr", 0.1},
                  {"tonic_modulator", 0.02},
                  {"window_len", 80},
                  {"stride", 80},
                  {"progress_threshold", 0.01},
                  {"refractory", 80},
                  {"pulse_gain", 5.0},
                  {"pulse_cap", 1.0},
                  {"max_lag", 40},
                  {"reliability_threshold", 0.3}};
    e.fast_profile = json::object();
    e.paper_profile = {{"blocks", 80}};
    e.conditions = {"default"};
    e.fast_seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    e.paper_seeds = {1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                     11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    e.run_cell = run_s2_02;
    e.summarize = summarize_s2_02;
    out.push_back(std::move(e));
  }
  {
    Experiment e;
    e.id = "s2-03";
    e.claim = "slow eligibility traces hold credit consistency across modulator delays where fast traces cannot";
    e.modules = "plasticity";
    e.defaults = {{"n", 20},
                  {"dt", 0.05},
                  {"tau_f", 0.2},
                  {"tau_s", 4.0},
                  {"groups", 5},
                  {"group_edges", 8},
                  {"group_steps", 10},
                  {"gap_steps", 20},
                  {"episode_amplitude", 4.0},
                  {"burst_period", 40},
                  {"burst_len", 2},
                  {"delays", {0, 15, 30, 45, 60}},
                  {"trials", 30}};
    e.fast_profile = json::object();
    e.paper_profile = {{"trials", 100}};
    e.conditions = {"default"};
    e.fast_seeds = {1, 2, 3};
    e.paper_seeds = {1, 2, 3, 4, 5, 6, 7, 8};
    e.run_cell = run_s2_03;
    e.summarize = summarize_s2_03;
    out.push_back(std::move(e));
  }
  {
    Experiment e;
    e.id = "s2-04";
    e.claim = "removing the eligibility delay is catastrophic for sparse episodic learning; removing the gate is mild";
    e.modules = "plasticity,phasor-graph,agent-env";
    e.defaults = {{"n", 8},
                  {"classes", 4},
                  {"kappa", 0.3},
                  {"dt", 0.05},
                  {"tau_e", 0.4},
                  {"tau_m", 0.5},
                  {"drive_amplitude", 1.5},
                  {"steps", 2000},
                  {"episode_period", 100},
                  {"episode_len", 5},
                  {"reward_delay", 4},
                  {"lr", 0.3},
                  {"tonic_modulator", 0.05},
                  {"gate_threshold", 0.05}};
    e.fast_profile = json::object();
    e.paper_profile = {{"steps", 6000}};
    e.conditions = {"full", "no_delay", "no_gate"};
    e.fast_seeds = {1, 2, 3, 4};
    e.paper_seeds = {1, 2, 3, 4, 5, 6, 7, 8};
    e.run_cell = run_s2_04;
    e.summarize = summarize_s2_04;
    out.push_back(std::move(e));
  }
}

}  // namespace phasor::exp
