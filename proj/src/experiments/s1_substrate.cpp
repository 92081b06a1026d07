#include <cmath>
#include <map>
#include <sstream>

#include "phasor/env.hpp"
#include "phasor/experiments.hpp"
#include "phasor/graph.hpp"

namespace phasor::exp {

namespace {

RMat topology_adjacency(const std::string& name, int n, Rng& rng) {
  RMat a = RMat::Zero(n, n);
  auto link = [&](int i, int j) {
    if (i != j) a(i, j) = a(j, i) = 1.0;
  };
  if (name == "all_to_all") {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) link(i, j);
  } else if (name == "ring") {
    for (int i = 0; i < n; ++i)
      for (int k = 1; k <= 2; ++k) link(i, (i + k) % n);
  } else if (name == "star") {
    for (int i = 1; i < n; ++i) link(0, i);
  } else if (name == "modular") {
    const int blocks = 4;
    const int size = n / blocks;
    for (int b = 0; b < blocks; ++b) {
      const int lo = b * size;
      const int hi = b == blocks - 1 ? n : lo + size;
      for (int i = lo; i < hi; ++i)
        for (int j = i + 1; j < hi; ++j) link(i, j);
      link(lo, ((b + 1) * size) % n);  // one bridge per block
    }
  } else if (name == "random_sparse") {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.15) link(i, j);
    for (int i = 0; i < n; ++i) link(i, (i + 1) % n);  // keep it connected
  } else {
    throw std::invalid_argument("unknown topology '" + name + "'");
  }
  return a;
}

PhasorGraph base_graph(int n, double kappa, const RMat& adjacency,
                       Normalization norm, Rng& omega_rng, double omega_lo,
                       double omega_hi) {
  PhasorGraph g = PhasorGraph::make(n);
  g.kappa = kappa;
  g.adjacency = adjacency;
  g.weights = adjacency;
  g.normalization = norm;
  for (int i = 0; i < n; ++i) g.omega(i) = omega_rng.uniform(omega_lo, omega_hi);
  return g;
}

void random_phases(PhasorGraph& g, Rng& rng, double amplitude = 1.0) {
  for (int i = 0; i < g.n; ++i)
    g.z(i) = std::polar(amplitude, rng.uniform(-kPi, kPi));
  g.reset_history();
}

double tail_order_parameter(PhasorGraph& g, long steps, double dt,
                            const InputSignal* input, double tail_fraction) {
  const long tail_start = steps - std::max<long>(1, static_cast<long>(steps * tail_fraction));
  double acc = 0.0;
  long count = 0;
  for (long t = 0; t < steps; ++t) {
    step(g, input, dt);
    if (t >= tail_start) {
      acc += order_parameter(g.z);
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

Normalization parse_norm(const std::string& s) {
  if (s == "raw") return Normalization::raw;
  if (s == "row") return Normalization::row;
  if (s == "symmetric") return Normalization::symmetric;
  throw std::invalid_argument("unknown normalization '" + s + "'");
}

// --- s1-02: topology x normalization ---------------------------------------

RVec relative_phases(const CVec& z) {
  RVec out(z.size());
  const double ref = std::arg(z(0));
  for (int i = 0; i < z.size(); ++i) out(i) = wrap_angle(std::arg(z(i)) - ref);
  return out;
}

double phase_pattern_distance(const RVec& a, const RVec& b) {
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) acc += 1.0 - std::cos(a(i) - b(i));
  return acc;
}

CellResult run_s1_02(const RunContext& ctx) {
  const json& c = ctx.config;
  const int n = c["n"];
  const long steps = c["steps"];
  const double dt = c["dt"];
  const int classes = c["classes"];
  const int trials = c["trials"];
  const double amp = c["drive_amplitude"];

  CellResult result{ctx.condition, ctx.seed};
  std::ostringstream csv;
  csv << "topology,normalization,accuracy,final_R\n";
  json per_combo = json::array();

  Rng top_rng = ctx.stream("topology");
  for (const auto& topology : c["topologies"]) {
    const std::string top_name = topology.get<std::string>();
    const RMat adjacency = topology_adjacency(top_name, n, top_rng);
    for (const auto& norm_name : c["normalizations"]) {
      const Normalization norm = parse_norm(norm_name.get<std::string>());
      Rng omega_rng = ctx.stream("omega:" + top_name + ":" + norm_name.get<std::string>());
      Rng trial_rng = omega_rng.child("trials");

      // Class drive patterns and their clean templates.
      std::vector<InputSignal> drives;
      std::vector<RVec> templates;
      double final_r = 0.0;
      for (int cls = 0; cls < classes; ++cls) {
        drives.push_back(encode_observation(cls, classes, n,
                                            InputSignal::Mode::omega_mod, amp));
        PhasorGraph g = base_graph(n, c["kappa"], adjacency, norm, omega_rng,
                                   c["omega_lo"], c["omega_hi"]);
        g.z.setConstant(Complex(1.0, 0.0));
        g.reset_history();
        final_r += tail_order_parameter(g, steps, dt, &drives.back(), 0.1);
        templates.push_back(relative_phases(g.z));
      }
      final_r /= classes;

      int correct = 0;
      for (int trial = 0; trial < trials; ++trial) {
        const int cls = trial % classes;
        PhasorGraph g = base_graph(n, c["kappa"], adjacency, norm, omega_rng,
                                   c["omega_lo"], c["omega_hi"]);
        random_phases(g, trial_rng);
        tail_order_parameter(g, steps, dt, &drives[static_cast<std::size_t>(cls)], 0.1);
        const RVec probe = relative_phases(g.z);
        int best = 0;
        double best_d = phase_pattern_distance(probe, templates[0]);
        for (int k = 1; k < classes; ++k) {
          const double d = phase_pattern_distance(probe, templates[static_cast<std::size_t>(k)]);
          if (d < best_d) {
            best_d = d;
            best = k;
          }
        }
        if (best == cls) ++correct;
      }
      const double accuracy = static_cast<double>(correct) / trials;
      csv << top_name << ',' << norm_name.get<std::string>() << ','
          << fmt_double(accuracy) << ',' << fmt_double(final_r) << '\n';
      per_combo.push_back({{"topology", top_name},
                           {"normalization", norm_name},
                           {"accuracy", accuracy},
                           {"final_R", final_r}});
    }
  }
  result.summary["combos"] = per_combo;
  result.files.emplace_back("s1-02_seed" + std::to_string(ctx.seed) + ".csv",
                            csv.str());
  return result;
}

// --- s1-03: delayed-coupling multistability --------------------------------

CellResult run_s1_03(const RunContext& ctx) {
  const json& c = ctx.config;
  const int n = c["n"];
  const long steps = c["steps"];
  const double dt = c["dt"];
  const int ics = c["initial_conditions"];
  const int delay_steps =
      ctx.condition == "delayed" ? c["delay_steps"].get<int>() : 0;

  CellResult result{ctx.condition, ctx.seed};
  Rng ic_rng = ctx.stream("ics:" + ctx.condition);
  std::ostringstream trace_csv;
  trace_csv << "ic,step,R\n";
  std::vector<double> finals;
  std::vector<double> frequencies;

  RMat adjacency = RMat::Ones(n, n);
  adjacency.diagonal().setZero();
  for (int ic = 0; ic < ics; ++ic) {
    PhasorGraph g = PhasorGraph::make(n);
    g.adjacency = adjacency;
    g.weights = adjacency;
    g.normalization = Normalization::row;
    g.kappa = c["kappa"];
    g.omega.setConstant(c["omega"].get<double>());
    g.delay_steps = delay_steps;
    // Jittered-synchronized initial phases: a fully random phase pattern
    // produces a near-zero mean field whose transient erases any memory the
    // delay line carries, funneling every run into the same attractor.
    const double theta0 = ic_rng.uniform(0.0, 2.0 * kPi);
    const double jitter = c["ic_jitter"];
    for (int i = 0; i < n; ++i) {
      g.z(i) = std::polar(1.0, theta0 + jitter * ic_rng.uniform(-kPi, kPi));
    }
    if (delay_steps > 0) {
      // A delayed run's attractor basin depends on its past trajectory, not
      // just its instantaneous state: seed the delay line with a rotation at
      // a random frequency so distinct initial conditions can reach distinct
      // locked branches.  A constant history biases every run the same way.
      const double omega0 = c["omega"].get<double>();
      const double f0 = ic_rng.uniform(omega0 - g.kappa, omega0 + g.kappa);
      g.history.clear();
      for (int k = 0; k < delay_steps; ++k) {
        const double back = static_cast<double>(delay_steps - k) * dt;
        g.history.push_back((g.z * std::polar(1.0, -f0 * back)).eval());
      }
    }

    // Attractor signature: tail order parameter plus the locked collective
    // frequency of the mean field (delayed branches differ in frequency even
    // when R is identical).
    double tail_r = 0.0, tail_phase = 0.0;
    long tail_n = 0;
    double prev_arg = 0.0;
    bool have_prev = false;
    for (long t = 0; t < steps; ++t) {
      step(g, nullptr, dt);
      const double r = order_parameter(g.z);
      if (t % 20 == 0) trace_csv << ic << ',' << t << ',' << fmt_double(r) << '\n';
      if (t >= steps - steps / 10) {
        tail_r += r;
        ++tail_n;
        const double a = std::arg(g.z.mean());
        if (have_prev) tail_phase += wrap_angle(a - prev_arg);
        prev_arg = a;
        have_prev = true;
      }
    }
    finals.push_back(tail_r / static_cast<double>(tail_n));
    frequencies.push_back(tail_phase /
                          (static_cast<double>(tail_n - 1) * dt));
  }

  // Attractor clusters: distinct locked frequencies among coherent runs at
  // the given tolerance; any incoherent runs count as one extra cluster.
  const double tol = c["cluster_tolerance"];
  std::vector<double> locked;
  bool any_incoherent = false;
  for (std::size_t i = 0; i < finals.size(); ++i) {
    if (finals[i] > 0.6) {
      locked.push_back(frequencies[i]);
    } else {
      any_incoherent = true;
    }
  }
  std::sort(locked.begin(), locked.end());
  int clusters = locked.empty() ? 0 : 1;
  for (std::size_t i = 1; i < locked.size(); ++i)
    if (locked[i] - locked[i - 1] > tol) ++clusters;
  if (any_incoherent) ++clusters;

  result.summary["final_R"] = finals;
  result.summary["frequencies"] = frequencies;
  result.summary["clusters"] = clusters;
  result.files.emplace_back("s1-03_" + ctx.condition + "_seed" +
                                std::to_string(ctx.seed) + "_traces.csv",
                            trace_csv.str());
  return result;
}

// --- s1-04: critical window ------------------------------------------------

CellResult run_s1_04(const RunContext& ctx) {
  const json& c = ctx.config;
  const int n = c["n"];
  const long steps = c["steps"];
  const double dt = c["dt"];
  const int ics = c["initial_conditions"];

  CellResult result{ctx.condition, ctx.seed};
  RMat adjacency = RMat::Ones(n, n);
  adjacency.diagonal().setZero();

  std::ostringstream csv;
  csv << "kappa,ic,final_R\n";
  json per_kappa = json::array();
  for (const auto& kv : c["kappa_grid"]) {
    const double kappa = kv.get<double>();
    Rng omega_rng = ctx.stream("omega:" + fmt_double(kappa));
    Rng ic_rng = omega_rng.child("ics");
    std::vector<double> finals;
    for (int ic = 0; ic < ics; ++ic) {
      PhasorGraph g = base_graph(n, kappa, adjacency, Normalization::row,
                                 omega_rng, c["omega_lo"], c["omega_hi"]);
      random_phases(g, ic_rng);
      const double r = tail_order_parameter(g, steps, dt, nullptr, 0.1);
      finals.push_back(r);
      csv << fmt_double(kappa) << ',' << ic << ',' << fmt_double(r) << '\n';
    }
    per_kappa.push_back({{"kappa", kappa},
                         {"mean_R", mean(finals)},
                         {"var_R", sample_variance(finals)}});
  }
  result.summary["per_kappa"] = per_kappa;
  result.files.emplace_back("s1-04_seed" + std::to_string(ctx.seed) + ".csv",
                            csv.str());
  return result;
}

json summarize_s1_04(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  // Average across seeds per kappa.
  std::map<double, std::vector<double>> means, vars;
  for (const CellResult& cell : cells) {
    for (const auto& row : cell.summary["per_kappa"]) {
      means[row["kappa"]].push_back(row["mean_R"]);
      vars[row["kappa"]].push_back(row["var_R"]);
    }
  }
  json agg = json::array();
  double peak_var = 0.0;
  for (const auto& [kappa, v] : vars) peak_var = std::max(peak_var, mean(v));
  std::vector<double> window;
  for (const auto& [kappa, v] : vars) {
    const double var_r = mean(v);
    const bool critical = var_r > 0.5 * peak_var;
    if (critical) window.push_back(kappa);
    agg.push_back({{"kappa", kappa},
                   {"mean_R", mean(means[kappa])},
                   {"var_R", var_r},
                   {"critical_window", critical}});
  }
  json manifest;
  manifest["plot"] = {{"x", "kappa"},
                      {"y", "final_R"},
                      {"series", "scatter per initial condition"},
                      {"annotation", "shade kappa where var_R > 0.5 * peak"},
                      {"critical_window", window}};
  files.emplace_back("plot_manifest.json", manifest.dump(2) + "\n");
  json out;
  out["per_kappa"] = agg;
  out["critical_window"] = window;
  (void)config;
  return out;
}

// --- s1-05: input modes ----------------------------------------------------

CellResult run_s1_05(const RunContext& ctx) {
  const json& c = ctx.config;
  const long steps = c["steps"];
  const double dt = c["dt"];
  const double amp = c["amplitude"];
  const double omega_sig = c["signal_frequency"][ctx.condition];

  InputSignal::Mode mode = InputSignal::Mode::additive;
  if (ctx.condition == "omega_mod") mode = InputSignal::Mode::omega_mod;
  if (ctx.condition == "alpha_mod") mode = InputSignal::Mode::alpha_mod;

  PhasorGraph g = PhasorGraph::make(1);
  g.adjacency = RMat::Zero(1, 1);
  g.weights = RMat::Zero(1, 1);
  g.omega(0) = 1.0;
  Rng init = ctx.stream("init");
  g.z(0) = std::polar(1.0, init.uniform(-kPi, kPi));
  g.reset_history();

  const long skip = static_cast<long>(steps * c["skip_fraction"].get<double>());
  std::vector<double> signal, decoded;
  double prev_phase = std::arg(g.z(0));
  std::ostringstream csv;
  csv << "step,u,decoded\n";
  for (long t = 0; t < steps; ++t) {
    const double u = amp * std::sin(omega_sig * dt * static_cast<double>(t));
    InputSignal in;
    in.mode = mode;
    in.values = CVec::Constant(1, Complex(u, 0.0));
    step(g, &in, dt);
    const double phase = std::arg(g.z(0));
    double value;
    if (mode == InputSignal::Mode::omega_mod) {
      value = wrap_angle(phase - prev_phase) / dt - g.omega(0);
    } else {
      value = std::abs(g.z(0));
    }
    prev_phase = phase;
    if (t >= skip) {
      signal.push_back(u);
      decoded.push_back(value);
      if (t % 5 == 0)
        csv << t << ',' << fmt_double(u) << ',' << fmt_double(value) << '\n';
    }
  }
  // Remove the mean from the decoded channel (operating-point offset).
  const double dm = mean(decoded);
  for (double& v : decoded) v -= dm;

  CellResult result{ctx.condition, ctx.seed};
  result.summary["correlation"] = pearson(signal, decoded);
  result.files.emplace_back("s1-05_" + ctx.condition + "_seed" +
                                std::to_string(ctx.seed) + ".csv",
                            csv.str());
  return result;
}

json summarize_s1_05(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::map<std::string, std::vector<double>> by_mode;
  for (const CellResult& cell : cells)
    by_mode[cell.condition].push_back(cell.summary["correlation"]);
  json out;
  for (const auto& [mode, corrs] : by_mode) out[mode] = {{"mean_correlation", mean(corrs)}};
  (void)config;
  (void)files;
  return out;
}

json summarize_s1_02(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  // Mean accuracy per (topology, normalization), plus the across-topology
  // accuracy spread per normalization (the attenuation claim).
  std::map<std::string, std::map<std::string, std::vector<double>>> acc;
  for (const CellResult& cell : cells) {
    for (const auto& combo : cell.summary["combos"]) {
      acc[combo["normalization"]][combo["topology"]].push_back(combo["accuracy"]);
    }
  }
  json agg;
  for (const auto& [norm, by_top] : acc) {
    json per_top;
    double lo = 1.0, hi = 0.0;
    for (const auto& [top, v] : by_top) {
      const double m = mean(v);
      per_top[top] = m;
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    agg[norm] = {{"accuracy", per_top}, {"topology_spread", hi - lo}};
  }
  (void)config;
  (void)files;
  return agg;
}

json summarize_s1_03(const std::vector<CellResult>& cells, const json& config,
                     std::vector<std::pair<std::string, std::string>>& files) {
  std::map<std::string, std::vector<double>> clusters;
  for (const CellResult& cell : cells) {
    clusters[cell.condition].push_back(cell.summary["clusters"].get<double>());
  }
  json agg;
  for (const auto& [cond, v] : clusters) {
    agg[cond] = {{"mean_clusters", mean(v)}};
  }
  (void)config;
  (void)files;
  return agg;
}

}  // namespace

void register_s1(std::vector<Experiment>& out) {
  {
    Experiment e;
    e.id = "s1-02";
    e.claim = "apparent topology effects on phase-pattern classification attenuate under coupling normalization";
    e.modules = "phasor-graph,agent-env";
    e.defaults = {{"n", 20},          {"kappa", 0.1},
                  {"dt", 0.05},       {"steps", 400},
                  {"classes", 2},     {"trials", 10},
                  {"drive_amplitude", 0.6},
                  {"omega_lo", 0.8},  {"omega_hi", 1.2},
                  {"topologies", {"all_to_all", "ring", "star", "modular", "random_sparse"}},
                  {"normalizations", {"raw", "row", "symmetric"}}};
    e.fast_profile = json::object();
    e.paper_profile = {{"trials", 20}, {"steps", 800}};
    e.conditions = {"default"};
    e.fast_seeds = {1, 2};
    e.paper_seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    e.run_cell = run_s1_02;
    e.summarize = summarize_s1_02;
    out.push_back(std::move(e));
  }
  {
    Experiment e;
    e.id = "s1-03";
    e.claim = "delayed coupling induces multistability absent from the instantaneous baseline";
    e.modules = "phasor-graph";
    e.defaults = {{"n", 16},     {"kappa", 0.4},
                  {"omega", 1.0},
                  {"dt", 0.05},  {"steps", 2400},
                  // delay time 10 gives kappa * tau = 4: several locked
                  // branches of Omega = omega - kappa sin(Omega tau) coexist.
                  {"delay_steps", 200},
                  {"initial_conditions", 8},
                  {"ic_jitter", 0.3},
                  {"cluster_tolerance", 0.05}};
    e.fast_profile = json::object();
    e.paper_profile = {{"initial_conditions", 24}};
    e.conditions = {"instantaneous", "delayed"};
    e.fast_seeds = {1, 2};
    e.paper_seeds = {1, 2, 3, 4};
    e.run_cell = run_s1_03;
    e.summarize = summarize_s1_03;
    out.push_back(std::move(e));
  }
  {
    Experiment e;
    e.id = "s1-04";
    e.claim = "final-R spread across initial conditions localizes the critical coupling window";
    e.modules = "phasor-graph";
    e.defaults = {{"n", 20},
                  {"dt", 0.05},
                  {"steps", 1500},
                  {"initial_conditions", 25},
                  {"omega_lo", 0.8},
                  {"omega_hi", 1.2},
                  {"kappa_grid", {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95}}};
    e.fast_profile = json::object();
    e.paper_profile = {{"steps", 4000}};
    e.conditions = {"default"};
    e.fast_seeds = {1};
    e.paper_seeds = {1, 2, 3, 4, 5};
    e.run_cell = run_s1_04;
    e.summarize = summarize_s1_04;
    out.push_back(std::move(e));
  }
  {
    Experiment e;
    e.id = "s1-05";
    e.claim = "omega-modulation tracks input near-perfectly; alpha-modulation and forcing degrade";
    e.modules = "phasor-graph";
    e.defaults = {{"steps", 4000},
                  {"dt", 0.02},
                  {"amplitude", 0.3},
                  {"skip_fraction", 0.25},
                  {"signal_frequency", {{"omega_mod", 0.5}, {"alpha_mod", 4.0}, {"additive", 1.3}}}};
    e.fast_profile = json::object();
    e.paper_profile = {{"steps", 12000}};
    e.conditions = {"omega_mod", "alpha_mod", "additive"};
    e.fast_seeds = {1, 2, 3};
    e.paper_seeds = {1, 2, 3, 4, 5, 6, 7, 8};
    e.run_cell = run_s1_05;
    e.summarize = summarize_s1_05;
    out.push_back(std::move(e));
  }
}

}  // namespace phasor::exp
