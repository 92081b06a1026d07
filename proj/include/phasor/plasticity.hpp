#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "phasor/graph.hpp"
#include "phasor/rng.hpp"

namespace phasor {

enum class CoincidenceForm { phase_only, phase_amp, complex_re };
enum class TraceKind { fast, slow };
enum class ModulatorSource { M, PRP };

// Dual-timescale eligibility, phasic modulator M and slow PRP resource.
struct PlasticityState {
  RMat e_fast;
  RMat e_slow;
  double tau_f = 0.2;
  double tau_s = 4.0;
  double k_f = 1.0;
  double k_s = 1.0;
  double modulator = 0.0;
  double tau_m = 0.5;
  double prp = 0.0;
  double tau_p = 5.0;
  double prp_threshold = 0.5;
  double prp_gain = 1.0;

  static PlasticityState make(int n) {
    PlasticityState s;
    s.e_fast = RMat::Zero(n, n);
    s.e_slow = RMat::Zero(n, n);
    return s;
  }
};

struct GateConfig {
  enum class Mode { always, phase_window, spindle_burst };
  enum class Reference { master_clock, mean_field };
  Mode mode = Mode::always;
  Reference reference = Reference::master_clock;
  double clock_frequency = 1.0;  // master clock, radians per unit time
  double center = 0.0;
  double half_width = kPi / 2.0;
  // (start_step, duration_steps), non-overlapping, ordered.
  std::vector<std::pair<long, long>> burst_schedule;
};

// Per-edge coincidence h_ij on structural edges; zero elsewhere.
RMat coincidence(const CVec& z, const RMat& adjacency, CoincidenceForm form);

// Exact-exponential trace update. The slow trace integrates the fast trace
// value from before this step's drive.
void update_traces(PlasticityState& s, const RMat& h, double dt);

// Decay M, inject pulses landing in this step, then integrate PRP using the
// post-pulse M (pulses can trigger capture in the same step they arrive).
void update_modulator(PlasticityState& s, std::span<const double> pulse_amplitudes,
                      double dt);

int gate_value(const GateConfig& gate, double ref_phase, long step);

// Analytic count of open-gate steps for a fixed schedule; exact for
// spindle_burst, used by the gate-budget property tests.
long expected_gate_opens(const GateConfig& gate, long steps, double dt,
                         double initial_clock_phase = 0.0);

// dW_ij = eta * gate * modulator * u_ij * e_ij on structural edges.
// Returns sum |dW| (used for update-budget matching).
double apply_three_factor(RMat& weights, const RMat& adjacency,
                          const PlasticityState& s, int gate, double eta,
                          TraceKind trace, ModulatorSource source,
                          const RMat* sparsity_gate = nullptr);

void homeostasis_linear_decay(RMat& weights, double decay_rate);

// Magnitude-dependent shrinkage, stronger on weak weights:
// w <- w * (1 - base / (1 + |w| / scale)).
void homeostasis_nonlinear_shrinkage(RMat& weights, double base, double scale);

// Perturb the phases of the lowest-percentile-magnitude entries of a complex
// weight set (one call per action group). Entries with zero magnitude are
// ignored. Returns the number of perturbed entries.
int adaptive_phase_noise(CMat& weights, double percentile, double noise_scale,
                         Rng& rng);

}  // namespace phasor
