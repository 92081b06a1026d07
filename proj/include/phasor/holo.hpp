#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phasor/graph.hpp"
#include "phasor/rng.hpp"

namespace phasor {

struct HoloOptions {
  bool centering = false;
  bool zero_diagonal = true;
};

// Superposed complex Hebbian storage W = (1/N) sum_p x^p (x^p)^H, plus the
// stored-pattern registry used for evaluation.
class HoloMemory {
 public:
  HoloMemory(int n, HoloOptions options = {});

  // Patterns must be unit-phasor vectors (|x_i| = 1 within 1e-9).
  void store(const CVec& pattern);
  void store(std::span<const CVec> patterns);

  int n() const { return n_; }
  const CMat& weights() const { return weights_; }
  const std::vector<CVec>& stored() const { return stored_; }
  const HoloOptions& options() const { return options_; }

 private:
  int n_;
  HoloOptions options_;
  CMat weights_;
  std::vector<CVec> stored_;
};

struct RecallMetrics {
  double overlap = 0.0;
  double phase_rmse = 0.0;
  bool success = false;
  bool converged = false;
};

struct RecallParams {
  double clamp_fraction = 0.3;
  double jitter = 0.3;       // sigma_phi on the cue phases
  double omega_spread = 0.0;  // half-width of per-node detuning during recall
  CouplingKernel kernel = CouplingKernel::gate_rotate;
  double beta_coh = 3.0;
  double alpha = 1.0;
  double beta = 1.0;
  double kappa = 1.0;
  double dt = 0.1;
  int max_steps = 400;
  double unclamped_amplitude = 0.05;
  double convergence_tol = 1e-4;  // max phase change per step
  int convergence_steps = 10;     // consecutive steps under tol
  double overlap_threshold = 0.7;
  double rmse_threshold = 0.9;
  bool align_global_phase = false;  // flagged rmse variant
};

// (1/N)|sum unit(z_i) conj(x_i)| over nodes above the amplitude floor,
// renormalized by the included count. Throws AmplitudeDeath on all-zero state.
double overlap_metric(const CVec& state, const CVec& target);

double phase_rmse_metric(const CVec& state, const CVec& target,
                         bool align_global_phase = false);

// Retrieval field f = W z with the chosen kernel applied per node.
CVec retrieval_field(const CMat& weights, const CVec& z, CouplingKernel kernel,
                     double beta_coh);

// Partial-cue recall under Stuart-Landau dynamics. Clamped indices are held
// at the target phase each step; the rest start at low amplitude with phase
// jitter around the target.
std::pair<CVec, RecallMetrics> recall(const HoloMemory& memory,
                                      const CVec& target,
                                      const std::vector<int>& clamped,
                                      const RecallParams& params, Rng& rng);

enum class MemoryBackend { phasor, mhn, esn };

struct CapacityRow {
  std::string backend;
  int n = 0;
  int patterns = 0;
  double flip_noise = 0.0;
  double reliable_fraction = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
};

struct CapacityParams {
  double flip_noise = 0.1;
  int queries_per_pattern = 20;
  double bit_threshold = 0.95;    // bits that must be recovered
  double query_threshold = 0.95;  // queries that must succeed
  int retrieval_sweeps = 20;      // phasor backend
  double mhn_inverse_temp = 8.0;  // softmax sharpness
  int mhn_iterations = 3;
  int esn_reservoir_factor = 4;
  double esn_spectral_radius = 0.9;
  double esn_input_scale = 0.5;
  double esn_ridge = 1e-2;
  int esn_washout = 5;
  int esn_train_patterns = 128;  // readout training set (disjoint from stored)
  int esn_train_variants = 2;    // noisy copies per training pattern
};

// Bipolar patterns stored as phases {0, pi}; per P, the fraction of stored
// patterns that meet the reliability rule under bit-flip-corrupted queries.
std::vector<CapacityRow> capacity_benchmark(int n, std::span<const int> pattern_counts,
                                            MemoryBackend backend,
                                            const CapacityParams& params,
                                            std::uint64_t seed);

// Largest tested P whose reliable fraction reaches `fraction_floor`.
int reliable_capacity(std::span<const CapacityRow> rows, double fraction_floor = 0.99);

}  // namespace phasor
