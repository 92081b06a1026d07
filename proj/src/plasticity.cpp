#include "phasor/plasticity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phasor {

RMat coincidence(const CVec& z, const RMat& adjacency, CoincidenceForm form) {
  const Eigen::Index n = adjacency.rows();
  RMat h = RMat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (adjacency(i, j) == 0.0) continue;
      switch (form) {
        case CoincidenceForm::phase_only:
          h(i, j) = std::cos(std::arg(z(j)) - std::arg(z(i)));
          break;
        case CoincidenceForm::phase_amp:
          h(i, j) = std::abs(z(i)) * std::abs(z(j)) *
                    std::cos(std::arg(z(j)) - std::arg(z(i)));
          break;
        case CoincidenceForm::complex_re:
          h(i, j) = (z(i) * std::conj(z(j))).real();
          break;
      }
    }
  }
  return h;
}

void update_traces(PlasticityState& s, const RMat& h, double dt) {
  if (dt <= 0) throw std::invalid_argument("dt must be positive");
  const RMat fast_before = s.e_fast;
  s.e_fast = std::exp(-dt / s.tau_f) * s.e_fast + dt * s.k_f * h;
  s.e_slow = std::exp(-dt / s.tau_s) * s.e_slow + dt * s.k_s * fast_before;
}

void update_modulator(PlasticityState& s, std::span<const double> pulse_amplitudes,
                      double dt) {
  if (dt <= 0) throw std::invalid_argument("dt must be positive");
  s.modulator *= std::exp(-dt / s.tau_m);
  for (double a : pulse_amplitudes) {
    if (a < 0) throw std::invalid_argument("negative pulse amplitude");
    s.modulator += a;
  }
  s.prp = s.prp * std::exp(-dt / s.tau_p) +
          dt * s.prp_gain * (s.modulator > s.prp_threshold ? 1.0 : 0.0);
}

int gate_value(const GateConfig& gate, double ref_phase, long step) {
  switch (gate.mode) {
    case GateConfig::Mode::always:
      return 1;
    case GateConfig::Mode::phase_window: {
      const double off = wrap_angle(ref_phase - gate.center);
      return (off > -gate.half_width && off < gate.half_width) ? 1 : 0;
    }
    case GateConfig::Mode::spindle_burst: {
      for (const auto& [start, duration] : gate.burst_schedule) {
        if (step >= start && step < start + duration) return 1;
        if (step < start) break;
      }
      return 0;
    }
  }
  return 0;
}

long expected_gate_opens(const GateConfig& gate, long steps, double dt,
                         double initial_clock_phase) {
  switch (gate.mode) {
    case GateConfig::Mode::always:
      return steps;
    case GateConfig::Mode::spindle_burst: {
      long total = 0;
      for (const auto& [start, duration] : gate.burst_schedule) {
        const long lo = std::max(start, 0L);
        const long hi = std::min(start + duration, steps);
        if (hi > lo) total += hi - lo;
      }
      return total;
    }
    case GateConfig::Mode::phase_window: {
      long total = 0;
      for (long t = 0; t < steps; ++t) {
        const double phase = initial_clock_phase + gate.clock_frequency * dt * t;
        total += gate_value(gate, wrap_angle(phase), t);
      }
      return total;
    }
  }
  return 0;
}

double apply_three_factor(RMat& weights, const RMat& adjacency,
                          const PlasticityState& s, int gate, double eta,
                          TraceKind trace, ModulatorSource source,
                          const RMat* sparsity_gate) {
  if (eta < 0) throw std::invalid_argument("eta must be nonnegative");
  if (gate == 0 || eta == 0.0) return 0.0;
  const double mod = (source == ModulatorSource::M) ? s.modulator : s.prp;
  if (mod == 0.0) return 0.0;
  const RMat& e = (trace == TraceKind::fast) ? s.e_fast : s.e_slow;
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      if (adjacency(i, j) == 0.0) continue;
      double u = sparsity_gate ? (*sparsity_gate)(i, j) : 1.0;
      const double dw = eta * mod * u * e(i, j);
      weights(i, j) += dw;
      total += std::abs(dw);
    }
  }
  return total;
}

void homeostasis_linear_decay(RMat& weights, double decay_rate) {
  if (decay_rate < 0 || decay_rate >= 1) {
    throw std::invalid_argument("decay_rate must be in [0, 1)");
  }
  weights *= (1.0 - decay_rate);
}

void homeostasis_nonlinear_shrinkage(RMat& weights, double base, double scale) {
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      const double w = weights(i, j);
      const double s = base / (1.0 + std::abs(w) / scale);
      weights(i, j) = w * (1.0 - s);
    }
  }
}

int adaptive_phase_noise(CMat& weights, double percentile, double noise_scale,
                         Rng& rng) {
  if (percentile <= 0 || percentile >= 100) {
    throw std::invalid_argument("percentile must be in (0, 100)");
  }
  struct Entry {
    double mag;
    Eigen::Index i, j;
  };
  std::vector<Entry> entries;
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      const double m = std::abs(weights(i, j));
      if (m > 0) entries.push_back({m, i, j});
    }
  }
  if (entries.empty()) return 0;
  const auto k = static_cast<std::size_t>(
      std::floor(entries.size() * percentile / 100.0));
  if (k == 0) return 0;
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.mag < b.mag; });
  for (std::size_t idx = 0; idx < k; ++idx) {
    auto& [mag, i, j] = entries[idx];
    const double phase = std::arg(weights(i, j)) + rng.normal(0.0, noise_scale);
    weights(i, j) = std::polar(mag, phase);
  }
  return static_cast<int>(k);
}

}  // namespace phasor
