#include <cmath>
#include <map>
#include <sstream>

#include "phasor/env.hpp"
#include "phasor/experiments.hpp"

namespace phasor::exp {

namespace {

// Mazes are shared across seeds and conditions: keyed by maze index only.
GridMaze shared_maze(const std::string& id, int index, const json& c) {
  Rng rng(Rng::fold(Rng::fold(0x6d617a65ull, id), static_cast<std::uint64_t>(index)));
  for (;;) {
    GridMaze maze = GridMaze::generate(c["width"], c["height"], c["extra_openings"], rng);
    if (maze.goal_reachable_from_all()) return maze;
  }
}

PhasorCodebook shared_codebook(const std::string& id, int maze_index, int dim,
                               int cells) {
  Rng rng(Rng::fold(Rng::fold(0xc0debull, id), static_cast<std::uint64_t>(maze_index)));
  return PhasorCodebook::make(dim, cells, rng);
}

ReplayParams replay_params(const json& c, const GridMaze& maze) {
  const json& r = c["replay"];
  ReplayParams params;
  params.rollouts = r["rollouts"];
  params.horizon = r["horizon"];
  params.perturbation = r["perturbation"];
  params.old_bias = r["old_bias"];
  params.similarity_floor = r["similarity_floor"];
  params.alpha = r["alpha"];
  params.gamma = r["gamma"];
  params.beta_coh = r["beta_coh"];
  params.terminal = maze.goal;
  return params;
}

// --- s3-04: REM replay extends competence beyond the seen region ------------

CellResult run_s3_04(const RunContext& ctx) {
  const json& c = ctx.config;
  const int mazes = c["mazes"];
  const int dim = c["code_dim"];

  double seen_acc = 0.0, unseen_acc = 0.0, overall_acc = 0.0;
  int replay_truncated = 0;
  for (int m = 0; m < mazes; ++m) {
    const GridMaze maze = shared_maze(ctx.id, m, c);
    const std::string tag = "maze" + std::to_string(m);

    RegionSuccess success;
    Rng eval_rng = ctx.stream("eval:" + tag);
    if (ctx.condition == "dyna") {
      DynaQParams dp;
      dp.episodes = c["dyna"]["episodes"];
      dp.planning_steps = c["dyna"]["planning_steps"];
      dp.alpha = c["alpha"];
      dp.gamma = c["gamma"];
      dp.epsilon = c["epsilon"];
      Rng dyna_rng = ctx.stream("dyna:" + tag);
      DynaQAgent agent = dyna_q(maze, dp, dyna_rng);
      success = evaluate_regions(maze, agent.q, {}, eval_rng);
    } else {
      const PhasorCodebook cb = shared_codebook(ctx.id, m, dim, maze.cells());
      QTable q = QTable::make(maze.cells());
      HoloTransitionModel model =
          HoloTransitionModel::make(dim, maze.cells(), c["step_cost"]);

      WakeEpisodeParams wp;
      wp.epsilon = c["epsilon"];
      wp.alpha = c["alpha"];
      wp.gamma = c["gamma"];
      wp.reward = {c["goal_reward"], c["step_cost"]};
      Rng wake_rng = ctx.stream("wake:" + tag);  // identical across conditions
      std::vector<int> seen_starts;
      for (int cell = 0; cell < maze.cells(); ++cell)
        if (maze.seen(cell) && cell != maze.goal) seen_starts.push_back(cell);
      for (int ep = 0; ep < c["wake_episodes"].get<int>(); ++ep) {
        const int start = seen_starts[wake_rng.uniform_index(seen_starts.size())];
        wake_episode(maze, q, &model, &cb, wp, start, wake_rng);
      }

      if (ctx.condition == "rem" || ctx.condition == "gate_off" ||
          ctx.condition == "scramble") {
        ReplayParams rp = replay_params(c, maze);
        rp.gate_on = ctx.condition != "gate_off";
        rp.scramble = ctx.condition == "scramble";
        Rng replay_rng = ctx.stream("replay:" + tag);
        const ReplayStats stats = rem_replay(model, cb, q, rp, replay_rng);
        replay_truncated += stats.truncated;
      }
      // wake_only and idle leave Q untouched after wake.
      success = evaluate_regions(maze, q, {}, eval_rng);
    }
    seen_acc += success.seen;
    unseen_acc += success.unseen;
    overall_acc += success.overall;
  }

  CellResult result{ctx.condition, ctx.seed};
  result.summary["seen"] = seen_acc / mazes;
  result.summary["unseen"] = unseen_acc / mazes;
  result.summary["overall"] = overall_acc / mazes;
  result.summary["replay_truncated"] = replay_truncated;
  return result;
}

json summarize_s3_04(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::map<std::string, std::vector<double>> seen, unseen, overall;
  for (const CellResult& cell : cells) {
    seen[cell.condition].push_back(cell.summary["seen"]);
    unseen[cell.condition].push_back(cell.summary["unseen"]);
    overall[cell.condition].push_back(cell.summary["overall"]);
  }
  json agg;
  std::ostringstream csv;
  csv << "condition,region,success\n";
  for (const auto& [cond, v] : seen) {
    agg[cond] = {{"seen", mean(v)},
                 {"unseen", mean(unseen[cond])},
                 {"overall", mean(overall[cond])}};
    csv << cond << ",seen," << fmt_double(mean(v)) << '\n';
    csv << cond << ",unseen," << fmt_double(mean(unseen[cond])) << '\n';
  }
  agg["rem_minus_wake_seen_pts"] =
      100.0 * (mean(seen["rem"]) - mean(seen["wake_only"]));
  agg["idle_minus_wake_seen_pts"] =
      100.0 * (mean(seen["idle"]) - mean(seen["wake_only"]));
  agg["gate_off_minus_wake_seen_pts"] =
      100.0 * (mean(seen["gate_off"]) - mean(seen["wake_only"]));
  agg["scramble_unseen_minus_wake_unseen"] =
      mean(unseen["scramble"]) - mean(unseen["wake_only"]);
  files.emplace_back("s3-04_success_by_region.csv", csv.str());
  (void)config;
  return agg;
}

// --- s3-06: latent learning -------------------------------------------------

CellResult run_s3_06(const RunContext& ctx) {
  const json& c = ctx.config;
  const int mazes = c["mazes"];
  const int dim = c["code_dim"];

  double t0_acc = 0.0;
  for (int m = 0; m < mazes; ++m) {
    const GridMaze maze = shared_maze(ctx.id, m, c);
    const std::string tag = "maze" + std::to_string(m);
    Rng eval_rng = ctx.stream("eval:" + tag);
    RegionSuccess success;

    if (ctx.condition == "dyna") {
      DynaQParams dp;
      dp.episodes = c["latent_episodes"];
      dp.planning_steps = 0;  // no values to propagate during latent phase
      dp.alpha = c["alpha"];
      dp.gamma = c["gamma"];
      dp.epsilon = 1.0;  // undirected exploration
      dp.extrinsic_reward = false;
      Rng dyna_rng = ctx.stream("dyna:" + tag);
      DynaQAgent agent = dyna_q(maze, dp, dyna_rng);
      agent.plant_goal_reward(maze, {c["goal_reward"], c["step_cost"]});
      agent.plan(c["dyna"]["reveal_sweeps"], c["alpha"], c["gamma"], dyna_rng);
      success = evaluate_regions(maze, agent.q, {}, eval_rng);
    } else {
      const PhasorCodebook cb = shared_codebook(ctx.id, m, dim, maze.cells());
      QTable q = QTable::make(maze.cells());
      HoloTransitionModel model =
          HoloTransitionModel::make(dim, maze.cells(), c["step_cost"]);
      WakeEpisodeParams wp;
      wp.extrinsic_reward = false;  // latent: no reward signal at all
      wp.learn_q = false;
      wp.epsilon = 1.0;
      Rng wake_rng = ctx.stream("wake:" + tag);
      std::vector<int> seen_starts;
      for (int cell = 0; cell < maze.cells(); ++cell)
        if (maze.seen(cell) && cell != maze.goal) seen_starts.push_back(cell);
      for (int ep = 0; ep < c["latent_episodes"].get<int>(); ++ep) {
        const int start = seen_starts[wake_rng.uniform_index(seen_starts.size())];
        wake_episode(maze, q, &model, &cb, wp, start, wake_rng);
      }
      // Goal reveal: the reward association is planted, then evaluation
      // happens at t=0 -- before any rewarded environment experience.
      model.observe_reward(maze.goal, c["goal_reward"]);
      if (ctx.condition == "rem" || ctx.condition == "scramble") {
        ReplayParams rp = replay_params(c, maze);
        rp.scramble = ctx.condition == "scramble";
        Rng replay_rng = ctx.stream("replay:" + tag);
        rem_replay(model, cb, q, rp, replay_rng);
      }
      success = evaluate_regions(maze, q, {}, eval_rng);
    }
    t0_acc += success.overall;
  }

  CellResult result{ctx.condition, ctx.seed};
  result.summary["t0_success"] = t0_acc / mazes;
  return result;
}

json summarize_s3_06(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::map<std::string, std::vector<double>> t0;
  for (const CellResult& cell : cells)
    t0[cell.condition].push_back(cell.summary["t0_success"]);
  json agg;
  for (const auto& [cond, v] : t0) agg[cond] = {{"t0_success", mean(v)}};
  const double wake = mean(t0["wake_only"]);
  agg["rem_over_wake"] = wake > 0 ? mean(t0["rem"]) / wake : 1e9;
  (void)config;
  (void)files;
  return agg;
}

// --- s3-05: reversal learning ----------------------------------------------

struct ReversalFeatures {
  std::vector<RVec> features;  // one per input pattern
  ReadoutHead head;
};

// 10-node graph: 4 input, 4 hidden, 1 output, 1 bias. Features are the
// steady phase/amplitude readout of the hidden+output nodes after driving
// the inputs with the binary pattern.
ReversalFeatures reversal_features(const json& c, Rng& omega_rng,
                                   double phase_jitter, Rng* jitter_rng) {
  const int n = 10;
  PhasorGraph g = PhasorGraph::make(n);
  g.adjacency = RMat::Ones(n, n);
  g.adjacency.diagonal().setZero();
  g.weights = g.adjacency;
  g.normalization = Normalization::row;
  g.kappa = c["kappa"];
  for (int i = 0; i < n; ++i) g.omega(i) = omega_rng.uniform(0.8, 1.2);

  ReversalFeatures out;
  out.head.use_amplitude = true;
  for (int i = 4; i < 10; ++i) out.head.nodes.push_back(i);  // hidden + output + bias
  const double amp = c["drive_amplitude"];
  const long steps = c["trial_steps"];
  const double dt = c["dt"];
  for (int pattern = 0; pattern < 4; ++pattern) {
    PhasorGraph trial = g;
    for (int i = 0; i < n; ++i) {
      double phase = 0.0;
      if (jitter_rng && phase_jitter > 0)
        phase = jitter_rng->normal(0.0, phase_jitter);
      trial.z(i) = std::polar(1.0, phase);
    }
    trial.reset_history();
    InputSignal in;
    in.mode = InputSignal::Mode::omega_mod;
    in.values = CVec::Zero(n);
    for (int bit = 0; bit < 4; ++bit)
      in.values(bit) = Complex((pattern >> bit & 1) ? amp : -amp, 0.0);
    in.values(9) = Complex(amp, 0.0);  // bias node: constant drive
    for (long t = 0; t < steps; ++t) step(trial, &in, dt);
    out.features.push_back(readout_features(out.head, trial.z));
  }
  return out;
}

int predict(const RVec& w, const RVec& f) { return w.dot(f) >= 0 ? 1 : 0; }

CellResult run_s3_05(const RunContext& ctx) {
  const json& c = ctx.config;
  Rng omega_rng = ctx.stream("omega");
  const ReversalFeatures base = reversal_features(c, omega_rng, 0.0, nullptr);
  const int feat_dim = static_cast<int>(base.features[0].size());

  // Task A labels; task B is the reversal.
  const int labels_a[4] = {0, 1, 1, 0};
  const double lr = c["lr"];
  const long a_trials = c["a_trials"];
  const long b_trials = c["b_trials"];
  const long window = c["recovery_window"];
  const double recovery_acc = c["recovery_accuracy"];

  const bool rem = ctx.condition == "rem" || ctx.condition == "nrem_rem";
  const bool nrem = ctx.condition == "nrem_rem";

  Rng trial_rng = ctx.stream("trials");
  Rng replay_rng = ctx.stream("replay");
  Rng dream_omega = ctx.stream("omega");  // same graph; dreams re-run it

  RVec w = RVec::Zero(feat_dim);
  RVec w_cons = RVec::Zero(feat_dim);
  std::vector<int> episode_patterns;  // stored wake episodes, in order

  auto train_trial = [&](int pattern, int label) {
    const RVec& f = base.features[static_cast<std::size_t>(pattern)];
    const int pred = predict(w, f);
    if (pred != label) w += lr * (label ? 1.0 : -1.0) * f;
    return pred == label;
  };

  for (long t = 0; t < a_trials; ++t) {
    const int pattern = static_cast<int>(trial_rng.uniform_index(4));
    train_trial(pattern, labels_a[pattern]);
    episode_patterns.push_back(pattern);
    w_cons += c["consolidation_rate"].get<double>() * (w - w_cons);
  }

  // Reversal phase.
  long recovery = b_trials;
  std::vector<int> recent;
  for (long t = 0; t < b_trials; ++t) {
    if (rem && t % c["rem_every"].get<long>() == 0) {
      // REM: dream a stored episode (old-biased, phase-perturbed
      // reconstruction) and erode the weight component along it.
      for (int d = 0; d < c["rem_dreams"].get<int>(); ++d) {
        const std::size_t half = std::max<std::size_t>(1, episode_patterns.size() / 2);
        const std::size_t pick =
            replay_rng.uniform() < c["old_bias"].get<double>()
                ? replay_rng.uniform_index(half)
                : replay_rng.uniform_index(episode_patterns.size());
        Rng omega_copy = dream_omega;
        const ReversalFeatures dreamed = reversal_features(
            c, omega_copy, c["dream_perturbation"], &replay_rng);
        const RVec& f =
            dreamed.features[static_cast<std::size_t>(episode_patterns[pick])];
        const double norm2 = f.squaredNorm();
        if (norm2 > 0)
          w -= c["rem_erosion"].get<double>() * (w.dot(f) / norm2) * f;
      }
      if (nrem) w += c["nrem_pull"].get<double>() * (w_cons - w);
    }
    const int pattern = static_cast<int>(trial_rng.uniform_index(4));
    const bool correct = train_trial(pattern, 1 - labels_a[pattern]);
    recent.push_back(correct ? 1 : 0);
    if (static_cast<long>(recent.size()) > window) recent.erase(recent.begin());
    if (static_cast<long>(recent.size()) == window) {
      double acc = 0.0;
      for (const int v : recent) acc += v;
      if (acc / window >= recovery_acc) {
        recovery = t + 1;
        break;
      }
    }
  }

  CellResult result{ctx.condition, ctx.seed};
  result.summary["recovery_trials"] = recovery;
  return result;
}

json summarize_s3_05(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::map<std::string, std::vector<double>> rec;
  for (const CellResult& cell : cells)
    rec[cell.condition].push_back(cell.summary["recovery_trials"]);
  const double b_trials = config["b_trials"];
  json agg;
  for (const auto& [cond, v] : rec) agg[cond] = {{"mean_recovery_trials", mean(v)}};
  const double wake = mean(rec["wake_only"]);
  agg["rem_benefit_fraction"] = (wake - mean(rec["rem"])) / b_trials;
  agg["nrem_rem_benefit_fraction"] = (wake - mean(rec["nrem_rem"])) / b_trials;
  (void)files;
  return agg;
}

}  // namespace

void register_s3_maze(std::vector<Experiment>& out) {
  {
    Experiment e;
    e.id = "s3-04";
    e.claim = "REM replay from the transition model extends maze competence; falsifiers pin the mechanism";
    e.modules = "agent-env,holo-memory,phasor-graph";
    e.defaults = {{"width", 8},
                  {"height", 8},
                  {"extra_openings", 10},
                  {"code_dim", 64},
                  {"mazes", 10},
                  {"wake_episodes", 12},
                  {"epsilon", 0.3},
                  {"alpha", 0.2},
                  {"gamma", 0.95},
                  {"goal_reward", 1.0},
                  {"step_cost", -0.01},
                  {"replay",
                   {{"rollouts", 300},
                    {"horizon", 15},
                    {"perturbation", 0.1},
                    {"old_bias", 0.0},
                    {"similarity_floor", 0.15},
                    {"alpha", 0.2},
                    {"gamma", 0.95},
                    {"beta_coh", 5.0}}},
                  {"dyna", {{"episodes", 60}, {"planning_steps", 10}}}};
    e.fast_profile = json::object();
    e.paper_profile = {{"mazes", 20}, {"code_dim", 128}};
    e.conditions = {"wake_only", "idle", "gate_off", "rem", "scramble", "dyna"};
    e.fast_seeds = {1, 2, 3, 4, 5, 6};
    e.paper_seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    e.run_cell = run_s3_04;
    e.summarize = summarize_s3_04;
    out.push_back(std::move(e));
  }
  {
    Experiment e;
    e.id = "s3-05";
    e.claim = "REM-style erosion of dreamed old associations speeds reversal; adding NREM consolidation tempers it";
    e.modules = "agent-env,phasor-graph";
    e.defaults = {{"kappa", 0.4},
                  {"dt", 0.05},
                  {"trial_steps", 30},
                  {"drive_amplitude", 0.8},
                  {"lr", 0.2},
                  {"a_trials", 60},
                  {"b_trials", 200},
                  {"recovery_window", 10},
                  {"recovery_accuracy", 0.9},
                  {"rem_every", 2},
                  {"rem_dreams", 2},
                  {"old_bias", 0.9},
                  {"dream_perturbation", 0.2},
                  {"rem_erosion", 0.15},
                  {"consolidation_rate", 0.05},
                  {"nrem_pull", 0.1}};
    e.fast_profile = json::object();
    e.paper_profile = {{"b_trials", 400}};
    e.conditions = {"wake_only", "rem", "nrem_rem"};
    e.fast_seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    e.paper_seeds = [] {
      std::vector<std::uint64_t> s;
      for (std::uint64_t i = 1; i <= 25; ++i) s.push_back(i);
      return s;
    }();
    e.run_cell = run_s3_05;
    e.summarize = summarize_s3_05;
    out.push_back(std::move(e));
  }
  {
    Experiment e;
    e.id = "s3-06";
    e.claim = "REM replay converts unrewarded exploration into immediate goal-directed competence at reward onset";
    e.modules = "agent-env,holo-memory";
    e.defaults = {{"width", 8},
                  {"height", 8},
                  {"extra_openings", 10},
                  {"code_dim", 64},
                  {"mazes", 6},
                  {"latent_episodes", 40},
                  {"alpha", 0.2},
                  {"gamma", 0.95},
                  {"goal_reward", 1.0},
                  {"step_cost", -0.01},
                  {"replay",
                   {{"rollouts", 600},
                    {"horizon", 20},
                    {"perturbation", 0.1},
                    {"old_bias", 0.0},
                    {"similarity_floor", 0.15},
                    {"alpha", 0.2},
                    {"gamma", 0.95},
                    {"beta_coh", 5.0}}},
                  {"dyna", {{"reveal_sweeps", 4000}}}};
    e.fast_profile = json::object();
    e.paper_profile = {{"mazes", 12}, {"code_dim", 128}};
    e.conditions = {"wake_only", "rem", "scramble", "dyna"};
    e.fast_seeds = {1, 2, 3, 4};
    e.paper_seeds = {1, 2, 3, 4, 5, 6, 7, 8};
    e.run_cell = run_s3_06;
    e.summarize = summarize_s3_06;
    out.push_back(std::move(e));
  }
}

}  // namespace phasor::exp
