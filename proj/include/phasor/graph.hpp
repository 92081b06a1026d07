#pragma once

#include <complex>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace phasor {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kAmplitudeFloor = 1e-12;

// Wrap an angle to the principal interval (-pi, pi].
double wrap_angle(double a);

enum class Normalization { raw, row, symmetric };
enum class CouplingKernel { diffusive, gate_only, gate_rotate };

struct IntegrationDivergence : std::runtime_error {
  IntegrationDivergence(int node_index, long step_index);
  int node;
  long step;
};

struct AmplitudeDeath : std::runtime_error {
  AmplitudeDeath() : std::runtime_error("all oscillator amplitudes below floor") {}
};

struct InputSignal {
  enum class Mode { additive, alpha_mod, omega_mod };
  Mode mode = Mode::additive;
  CVec values;  // complex for additive; real parts used for the modulations
};

struct GraphDiagnostics {
  double order_parameter = 0.0;
  double weight_frobenius = 0.0;
  double weight_max_abs = 0.0;
  double amp_mean = 0.0;
  double amp_var = 0.0;
  double band_occupancy = 0.0;
};

// A graph of Stuart-Landau oscillators: complex states, binary structural
// adjacency, real learnable coupling weights, per-node intrinsic frequencies.
struct PhasorGraph {
  int n = 0;
  CVec z;
  RVec omega;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma_shear = 0.0;
  double kappa = 0.1;
  RMat adjacency;  // 0/1, zero diagonal
  RMat weights;
  double sakaguchi_lag = 0.0;
  Normalization normalization = Normalization::raw;
  CouplingKernel kernel = CouplingKernel::diffusive;
  double beta_coh = 2.0;
  int delay_steps = 0;
  std::deque<CVec> history;  // past states, oldest first; size == delay_steps
  long step_count = 0;
  long zero_field_events = 0;  // gated-kernel fallbacks (see coupling_field)

  static PhasorGraph make(int n);

  // Fills history with the current state; call after setting delay_steps.
  void reset_history();
};

// raw -> A, row -> D^-1 A, symmetric -> D^-1/2 A D^-1/2.
// Degree-zero rows/columns stay zero.
RMat normalize_adjacency(const RMat& adjacency, Normalization mode);

// Coherence-gated combination of per-edge complex contributions. Shared by
// graph coupling and holographic retrieval (which uses complex weights).
// `raw` is the plain sum of `contribs`; `fallback` is returned when |raw|
// is below the amplitude floor (mismatch angle undefined).
Complex gated_combine(std::span<const Complex> contribs, Complex raw,
                      double beta_coh, CouplingKernel kernel, Complex fallback,
                      long* zero_field_counter = nullptr);

// Per-node complex coupling field under the graph's normalization.
// Diffusive: f_i = sum_j A^_ij W_ij (e^{i theta} z_j - z_i).
// Gated kernels act on contributions c_ij = A^_ij W_ij z_j.
CVec coupling_field(const PhasorGraph& g, CouplingKernel kernel, double beta_coh);
CVec coupling_field(PhasorGraph& g);  // uses g.kernel / g.beta_coh, counts fallbacks

// One splitting step: exact rotation for the oscillatory term, explicit
// Euler on coupling/input, then the radial alpha/beta flow integrated with
// its closed-form solution (stiff cubic handled without a step-size limit).
void step(PhasorGraph& g, const InputSignal* input, double dt);

// Order parameter R over unit phasors, excluding nodes with amplitude below
// the floor (renormalized over included nodes). Throws AmplitudeDeath when
// every node is below the floor.
double order_parameter(const CVec& z);

GraphDiagnostics diagnostics(const PhasorGraph& g, double band_lo,
                             double band_hi, std::span<const double> r_window);

}  // namespace phasor
