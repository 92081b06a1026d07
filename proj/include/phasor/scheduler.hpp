#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "phasor/graph.hpp"
#include "phasor/plasticity.hpp"
#include "phasor/rng.hpp"

namespace phasor {

struct HomeostasisConfig {
  enum class Mode { none, linear_decay, adaptive_phase_noise, nonlinear_shrinkage };
  Mode mode = Mode::none;
  double decay_rate = 0.0;       // linear_decay, per applied step
  double percentile = 10.0;      // adaptive_phase_noise
  double noise_scale = 0.3;      // adaptive_phase_noise
  double shrink_base = 0.01;     // nonlinear_shrinkage
  double shrink_scale = 0.5;     // nonlinear_shrinkage
};

struct GuardrailConfig {
  double target_R = 0.76;
  double band_lo = 0.55;
  double band_hi = 0.9;
  double kappa_gain = 0.0;
  double kick_strength = 0.0;
  double rescue_jitter = 0.0;
  double collapse_threshold = 0.95;
  // Amplitude-only ablation: feedback acts on alpha instead of the phase
  // mechanisms (s3-03 control condition).
  bool alpha_only = false;
  double alpha_gain = 0.0;
};

enum class SleepPhase { wake, nrem, rem };

struct ScheduleSegment {
  SleepPhase phase = SleepPhase::wake;
  long steps = 0;
  double eta = 0.0;
  GateConfig gate;
  HomeostasisConfig homeostasis;
  bool input_enabled = true;
  TraceKind trace = TraceKind::fast;
  ModulatorSource modulator_source = ModulatorSource::M;
  bool scramble_phases = false;           // s3-02 falsifier
  bool use_guardrails = false;
  std::optional<double> update_budget;    // cap on sum |dW| within the segment
};

struct SleepSchedule {
  std::vector<ScheduleSegment> segments;
  std::optional<double> budget;  // Frobenius bound B on ||W||_F
  std::optional<GuardrailConfig> guardrails;
  CoincidenceForm coincidence_form = CoincidenceForm::complex_re;
  double dt = 0.05;
};

// Replay/input provider. Wake segments pull inputs and reward pulses; REM
// segments delegate the whole step's plasticity to the hook.
class CycleHook {
 public:
  virtual ~CycleHook() = default;
  virtual std::optional<InputSignal> wake_input(long segment_step) {
    (void)segment_step;
    return std::nullopt;
  }
  virtual void wake_pulses(long segment_step, std::vector<double>& pulses) {
    (void)segment_step;
    (void)pulses;
  }
  virtual void rem_step(PhasorGraph& graph, PlasticityState& plasticity,
                        const ScheduleSegment& segment, long segment_step) {
    (void)graph;
    (void)plasticity;
    (void)segment;
    (void)segment_step;
  }
};

struct MetricRow {
  long step = 0;
  SleepPhase phase = SleepPhase::wake;
  double order_parameter = 0.0;
  double weight_frobenius = 0.0;
  double modulator = 0.0;
  double prp = 0.0;
};

struct RunMetrics {
  std::vector<MetricRow> rows;
  bool unstable = false;   // budget exceeded at some evaluation point
  bool diverged = false;   // integration divergence aborted the run
  long gate_open_steps = 0;
  double total_update_magnitude = 0.0;
};

const char* phase_name(SleepPhase p);

// kappa feedback, repulsive kicks above the band, rescue jitter at collapse.
// With all gains zero this is the identity.
void apply_guardrails(PhasorGraph& graph, const GuardrailConfig& config,
                      double order_param, Rng& rng);

// Random permutation of the phase multiset; amplitudes untouched.
void phase_scramble(PhasorGraph& graph, Rng& rng);

// Execute the segments in order (Wake -> NREM -> REM composition).
RunMetrics run_cycle(PhasorGraph& graph, PlasticityState& plasticity,
                     const SleepSchedule& schedule, CycleHook* hook, Rng& rng);

// Collapse detector: R >= threshold for at least `fraction` of the final
// `tail_fraction` of recorded steps.
bool sustained_collapse(const std::vector<MetricRow>& rows, double threshold,
                        double fraction = 0.9, double tail_fraction = 0.2);

}  // namespace phasor
