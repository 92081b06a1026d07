#include "phasor/graph.hpp"

#include <cmath>
#include <string>

namespace phasor {

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

IntegrationDivergence::IntegrationDivergence(int node_index, long step_index)
    : std::runtime_error("non-finite state at node " + std::to_string(node_index) +
                         ", step " + std::to_string(step_index)),
      node(node_index),
      step(step_index) {}

PhasorGraph PhasorGraph::make(int n) {
  PhasorGraph g;
  g.n = n;
  g.z = CVec::Zero(n);
  g.omega = RVec::Ones(n);
  g.adjacency = RMat::Zero(n, n);
  g.weights = RMat::Zero(n, n);
  return g;
}

void PhasorGraph::reset_history() {
  history.clear();
  for (int k = 0; k < delay_steps; ++k) history.push_back(z);
}

RMat normalize_adjacency(const RMat& adjacency, Normalization mode) {
  const Eigen::Index n = adjacency.rows();
  if (mode == Normalization::raw) return adjacency;
  RVec degree = adjacency.rowwise().sum();
  RMat out = RMat::Zero(n, n);
  if (mode == Normalization::row) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (degree(i) > 0) out.row(i) = adjacency.row(i) / degree(i);
    }
  } else {
    RVec inv_sqrt = RVec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (degree(i) > 0) inv_sqrt(i) = 1.0 / std::sqrt(degree(i));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        out(i, j) = inv_sqrt(i) * adjacency(i, j) * inv_sqrt(j);
      }
    }
  }
  return out;
}

Complex gated_combine(std::span<const Complex> contribs, Complex raw,
                      double beta_coh, CouplingKernel kernel, Complex fallback,
                      long* zero_field_counter) {
  if (kernel == CouplingKernel::diffusive) return raw;
  if (std::abs(raw) < kAmplitudeFloor) {
    if (zero_field_counter) ++*zero_field_counter;
    return fallback;
  }
  const double field_phase = std::arg(raw);
  double norm = 0.0;
  Complex acc(0.0, 0.0);
  for (Complex c : contribs) {
    const double mag = std::abs(c);
    if (mag < kAmplitudeFloor) continue;
    const double mismatch = std::arg(c) - field_phase;
    const double g = std::exp(beta_coh * std::cos(mismatch));
    norm += g;
    if (kernel == CouplingKernel::gate_only) {
      acc += g * c;
    } else {
      acc += g * mag * std::polar(1.0, field_phase);
    }
  }
  if (norm < kAmplitudeFloor) {
    if (zero_field_counter) ++*zero_field_counter;
    return fallback;
  }
  return acc / norm;
}

namespace {

CVec coupling_field_impl(const PhasorGraph& g, CouplingKernel kernel,
                         double beta_coh, long* zero_field_counter) {
  const int n = g.n;
  const RMat norm_adj = normalize_adjacency(g.adjacency, g.normalization);
  const Complex lag = std::polar(1.0, g.sakaguchi_lag);
  const CVec& source =
      (g.delay_steps > 0 && !g.history.empty()) ? g.history.front() : g.z;

  CVec field(n);
  std::vector<Complex> contribs;
  for (int i = 0; i < n; ++i) {
    Complex diffusive(0.0, 0.0);
    Complex raw(0.0, 0.0);
    contribs.clear();
    for (int j = 0; j < n; ++j) {
      const double a = norm_adj(i, j);
      if (a == 0.0) continue;
      const double w = a * g.weights(i, j);
      diffusive += w * (lag * source(j) - g.z(i));
      const Complex c = w * source(j);
      raw += c;
      contribs.push_back(c);
    }
    field(i) = (kernel == CouplingKernel::diffusive)
                   ? diffusive
                   : gated_combine(contribs, raw, beta_coh, kernel, diffusive,
                                   zero_field_counter);
  }
  return field;
}

}  // namespace

CVec coupling_field(const PhasorGraph& g, CouplingKernel kernel, double beta_coh) {
  return coupling_field_impl(g, kernel, beta_coh, nullptr);
}

CVec coupling_field(PhasorGraph& g) {
  return coupling_field_impl(g, g.kernel, g.beta_coh, &g.zero_field_events);
}

void step(PhasorGraph& g, const InputSignal* input, double dt) {
  const int n = g.n;
  CVec force = g.kappa * coupling_field(g);

  RVec alpha_eff = RVec::Constant(n, g.alpha);
  RVec omega_eff = g.omega;
  if (input) {
    switch (input->mode) {
      case InputSignal::Mode::additive:
        force += input->values;
        break;
      case InputSignal::Mode::alpha_mod:
        alpha_eff += input->values.real();
        break;
      case InputSignal::Mode::omega_mod:
        omega_eff += input->values.real();
        break;
    }
  }

  const CVec z_prev = g.z;
  for (int i = 0; i < n; ++i) {
    // Splitting step: exact rotation for the oscillatory part, explicit Euler
    // on coupling/input, then the exact per-step solution of the radial
    // equation dr/dt = alpha r - beta r^3 so the discrete fixed point is
    // exactly sqrt(alpha/beta).
    Complex ze =
        std::polar(1.0, omega_eff(i) * dt) * z_prev(i) + dt * force(i);
    const double a2 = std::norm(ze);
    const double a = alpha_eff(i);
    double r2;
    if (std::abs(a) < 1e-12) {
      r2 = a2 / (1.0 + 2.0 * g.beta * a2 * dt);
    } else {
      const double e2 = std::exp(2.0 * a * dt);
      r2 = a * a2 * e2 / (a + g.beta * a2 * (e2 - 1.0));
    }
    Complex zn;
    if (a2 < kAmplitudeFloor * kAmplitudeFloor || !(r2 >= 0.0)) {
      if (!std::isfinite(ze.real()) || !std::isfinite(ze.imag())) {
        throw IntegrationDivergence(i, g.step_count);
      }
      zn = Complex(0.0, 0.0);
    } else {
      zn = ze * std::sqrt(r2 / a2);
      if (g.gamma_shear != 0.0) {
        zn *= std::polar(1.0, -g.gamma_shear * r2 * dt);
      }
    }
    if (!std::isfinite(zn.real()) || !std::isfinite(zn.imag())) {
      throw IntegrationDivergence(i, g.step_count);
    }
    g.z(i) = zn;
  }

  if (g.delay_steps > 0) {
    g.history.push_back(z_prev);
    while (static_cast<int>(g.history.size()) > g.delay_steps) g.history.pop_front();
  }
  ++g.step_count;
}

double order_parameter(const CVec& z) {
  Complex acc(0.0, 0.0);
  int count = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double r = std::abs(z(i));
    if (r < kAmplitudeFloor) continue;
    acc += z(i) / r;
    ++count;
  }
  if (count == 0) throw AmplitudeDeath();
  return std::abs(acc) / count;
}

GraphDiagnostics diagnostics(const PhasorGraph& g, double band_lo,
                             double band_hi, std::span<const double> r_window) {
  GraphDiagnostics d;
  d.order_parameter = order_parameter(g.z);
  d.weight_frobenius = g.weights.norm();
  d.weight_max_abs = g.weights.cwiseAbs().maxCoeff();
  const RVec amps = g.z.cwiseAbs();
  d.amp_mean = amps.mean();
  d.amp_var = (amps.array() - d.amp_mean).square().mean();
  if (!r_window.empty()) {
    int inside = 0;
    for (double r : r_window) {
      if (r >= band_lo && r <= band_hi) ++inside;
    }
    d.band_occupancy = static_cast<double>(inside) / r_window.size();
  }
  return d;
}

}  // namespace phasor
