#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "phasor/graph.hpp"
#include "phasor/rng.hpp"

using namespace phasor;

namespace {

PhasorGraph all_to_all(int n) {
  PhasorGraph g = PhasorGraph::make(n);
  g.adjacency = RMat::Ones(n, n) - RMat::Identity(n, n);
  g.weights = g.adjacency;
  return g;
}

}  // namespace

TEST_CASE("single oscillator converges to the analytic limit-cycle radius") {
  Rng rng = make_stream("graph", 0, "limit-cycle");
  for (int trial = 0; trial < 5; ++trial) {
    PhasorGraph g = PhasorGraph::make(1);
    g.alpha = rng.uniform(0.3, 2.0);
    g.beta = rng.uniform(0.3, 2.0);
    g.z(0) = std::polar(rng.uniform(0.05, 2.0), rng.uniform(-kPi, kPi));
    for (int t = 0; t < 2000; ++t) step(g, nullptr, 0.05);
    CHECK(std::abs(std::abs(g.z(0)) - std::sqrt(g.alpha / g.beta)) < 1e-3);
  }
}

TEST_CASE("uncoupled pair drifts apart at the frequency difference") {
  PhasorGraph g = PhasorGraph::make(2);
  g.z << Complex(1, 0), Complex(1, 0);
  g.omega << 1.0, 1.2;
  g.kappa = 0.0;
  const double dt = 0.01;
  for (int t = 0; t < 1000; ++t) step(g, nullptr, dt);
  const double diff = wrap_angle(std::arg(g.z(1)) - std::arg(g.z(0)));
  CHECK(diff == doctest::Approx(0.2 * 10.0).epsilon(0.01));
}

TEST_CASE("all-to-all diffusive coupling synchronizes a heterogeneous network") {
  Rng rng = make_stream("graph", 1, "sync");
  PhasorGraph g = all_to_all(20);
  g.normalization = Normalization::row;
  g.kappa = 1.0;
  for (int i = 0; i < g.n; ++i) {
    g.omega(i) = 1.0 + 0.1 * rng.normal();
    g.z(i) = std::polar(1.0, rng.uniform(-kPi, kPi));
  }
  for (int t = 0; t < 5000; ++t) step(g, nullptr, 0.02);
  CHECK(order_parameter(g.z) > 0.8);
}

TEST_CASE("adjacency normalization matches hand-computed matrices") {
  // Directed 3-cycle with symmetric closure: every node has degree 2.
  RMat ring = RMat::Zero(3, 3);
  ring(0, 1) = ring(1, 0) = 1;
  ring(1, 2) = ring(2, 1) = 1;
  ring(2, 0) = ring(0, 2) = 1;
  const RMat row = normalize_adjacency(ring, Normalization::row);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(row(i, j) == doctest::Approx(i == j ? 0.0 : 0.5));
    }
  }

  // Star K_{1,4}: hub degree 4, leaves degree 1; D^-1/2 A D^-1/2 entries 0.5.
  RMat star = RMat::Zero(5, 5);
  for (int leaf = 1; leaf < 5; ++leaf) star(0, leaf) = star(leaf, 0) = 1;
  const RMat sym = normalize_adjacency(star, Normalization::symmetric);
  for (int leaf = 1; leaf < 5; ++leaf) {
    CHECK(sym(0, leaf) == doctest::Approx(0.5));
    CHECK(sym(leaf, 0) == doctest::Approx(0.5));
  }

  CHECK(normalize_adjacency(star, Normalization::raw) == star);

  // Degree-zero rows stay zero instead of dividing by zero.
  RMat isolated = RMat::Zero(2, 2);
  CHECK(normalize_adjacency(isolated, Normalization::row).isZero());
}

TEST_CASE("order parameter endpoints") {
  CVec aligned(4);
  for (int i = 0; i < 4; ++i) aligned(i) = std::polar(1.0 + 0.3 * i, 0.7);
  CHECK(order_parameter(aligned) == doctest::Approx(1.0));

  CVec balanced(4);
  for (int i = 0; i < 4; ++i) balanced(i) = std::polar(1.0, i * kPi / 2.0);
  CHECK(order_parameter(balanced) < 1e-9);

  // Nodes under the amplitude floor are excluded, not averaged in as zeros.
  CVec partial(3);
  partial << Complex(1, 0), Complex(0, 0), Complex(1, 0);
  CHECK(order_parameter(partial) == doctest::Approx(1.0));

  CVec dead = CVec::Zero(3);
  CHECK_THROWS_AS(order_parameter(dead), AmplitudeDeath);
}

TEST_CASE("gated combination weighs contributions by phase coherence") {
  const double beta_coh = 5.0;

  // A single contribution passes through both gated kernels unchanged.
  std::vector<Complex> one{Complex(0.4, 0.3)};
  const Complex raw1 = one[0];
  CHECK(std::abs(gated_combine(one, raw1, beta_coh, CouplingKernel::gate_only,
                               Complex(0, 0)) -
                 raw1) < 1e-12);
  CHECK(std::abs(gated_combine(one, raw1, beta_coh, CouplingKernel::gate_rotate,
                               Complex(0, 0)) -
                 raw1) < 1e-12);

  // One aligned and one anti-phase contribution: gains e^{+b} and e^{-b}.
  std::vector<Complex> pair{Complex(2, 0), Complex(-1, 0)};
  const Complex raw2 = pair[0] + pair[1];
  const double g_hi = std::exp(beta_coh), g_lo = std::exp(-beta_coh);
  const double expected_gate_only = (g_hi * 2.0 - g_lo * 1.0) / (g_hi + g_lo);
  const double expected_gate_rotate = (g_hi * 2.0 + g_lo * 1.0) / (g_hi + g_lo);
  CHECK(gated_combine(pair, raw2, beta_coh, CouplingKernel::gate_only,
                      Complex(0, 0))
            .real() == doctest::Approx(expected_gate_only));
  CHECK(gated_combine(pair, raw2, beta_coh, CouplingKernel::gate_rotate,
                      Complex(0, 0))
            .real() == doctest::Approx(expected_gate_rotate));

  // beta_coh = 0 degenerates to the plain average (gate_only) and the mean
  // magnitude rotated into the field phase (gate_rotate).
  CHECK(gated_combine(pair, raw2, 0.0, CouplingKernel::gate_only, Complex(0, 0))
            .real() == doctest::Approx(0.5));
  CHECK(gated_combine(pair, raw2, 0.0, CouplingKernel::gate_rotate,
                      Complex(0, 0))
            .real() == doctest::Approx(1.5));

  // Diffusive ignores the gating machinery entirely.
  CHECK(gated_combine(pair, raw2, beta_coh, CouplingKernel::diffusive,
                      Complex(7, 0)) == raw2);

  // Cancelling contributions fall back and count a zero-field event.
  std::vector<Complex> cancel{Complex(1, 0), Complex(-1, 0)};
  long events = 0;
  const Complex fb(0.25, 0.0);
  CHECK(gated_combine(cancel, Complex(0, 0), beta_coh,
                      CouplingKernel::gate_rotate, fb, &events) == fb);
  CHECK(events == 1);
}

TEST_CASE("delayed coupling with constant history matches the undelayed field") {
  Rng rng = make_stream("graph", 2, "delay");
  PhasorGraph g = all_to_all(6);
  g.kappa = 0.5;
  for (int i = 0; i < g.n; ++i) g.z(i) = std::polar(1.0, rng.uniform(-kPi, kPi));

  const CVec undelayed = coupling_field(g, CouplingKernel::diffusive, g.beta_coh);
  g.delay_steps = 4;
  g.reset_history();
  const CVec delayed = coupling_field(g, CouplingKernel::diffusive, g.beta_coh);
  CHECK((undelayed - delayed).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("omega modulation shifts the instantaneous frequency") {
  PhasorGraph g = PhasorGraph::make(1);
  g.z(0) = Complex(1, 0);
  g.omega(0) = 1.0;
  InputSignal input;
  input.mode = InputSignal::Mode::omega_mod;
  input.values = CVec::Constant(1, Complex(0.5, 0.0));
  const double dt = 0.005;
  double unwrapped = 0.0, prev = 0.0;
  for (int t = 0; t < 400; ++t) {
    step(g, &input, dt);
    const double phase = std::arg(g.z(0));
    unwrapped += wrap_angle(phase - prev);
    prev = phase;
  }
  CHECK(unwrapped == doctest::Approx(1.5 * 400 * dt).epsilon(0.01));
}

TEST_CASE("non-finite input aborts with a divergence error") {
  PhasorGraph g = PhasorGraph::make(2);
  g.z << Complex(1, 0), Complex(1, 0);
  InputSignal input;
  input.mode = InputSignal::Mode::additive;
  input.values = CVec::Zero(2);
  input.values(1) = Complex(std::nan(""), 0.0);
  CHECK_THROWS_AS(step(g, &input, 0.05), IntegrationDivergence);
}

TEST_CASE("diagnostics on a zero-weight graph") {
  PhasorGraph g = all_to_all(4);
  g.weights.setZero();
  for (int i = 0; i < 4; ++i) g.z(i) = std::polar(1.0, 0.3 * i);
  std::vector<double> window{0.5, 0.6, 0.7};
  const GraphDiagnostics d = diagnostics(g, 0.4, 0.8, window);
  CHECK(d.weight_frobenius == 0.0);
  CHECK(d.weight_max_abs == 0.0);
  CHECK(d.amp_mean == doctest::Approx(1.0));
  CHECK(d.amp_var == doctest::Approx(0.0));
  CHECK(d.band_occupancy == doctest::Approx(1.0));
  CHECK(d.order_parameter == doctest::Approx(order_parameter(g.z)));
}

TEST_CASE("wrap_angle maps onto the principal interval") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(2.5 * kPi) == doctest::Approx(0.5 * kPi));
  CHECK(wrap_angle(-7.0 * kPi) == doctest::Approx(kPi));
}
