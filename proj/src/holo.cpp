#include "phasor/holo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace phasor {

HoloMemory::HoloMemory(int n, HoloOptions options)
    : n_(n), options_(options), weights_(CMat::Zero(n, n)) {}

void HoloMemory::store(const CVec& pattern) {
  if (pattern.size() != n_) throw std::invalid_argument("pattern dimension mismatch");
  for (Eigen::Index i = 0; i < pattern.size(); ++i) {
    if (std::abs(std::abs(pattern(i)) - 1.0) > 1e-9) {
      throw std::invalid_argument("patterns must be unit phasors");
    }
  }
  CVec x = pattern;
  if (options_.centering) {
    x.array() -= x.mean();
  }
  weights_ += (x * x.adjoint()) / static_cast<double>(n_);
  if (options_.zero_diagonal) {
    weights_.diagonal().setZero();
  }
  stored_.push_back(pattern);
}

void HoloMemory::store(std::span<const CVec> patterns) {
  for (const CVec& p : patterns) store(p);
}

double overlap_metric(const CVec& state, const CVec& target) {
  if (state.size() != target.size()) throw std::invalid_argument("dimension mismatch");
  Complex acc(0.0, 0.0);
  int count = 0;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double r = std::abs(state(i));
    if (r < kAmplitudeFloor) continue;
    acc += (state(i) / r) * std::conj(target(i));
    ++count;
  }
  if (count == 0) throw AmplitudeDeath();
  return std::abs(acc) / count;
}

double phase_rmse_metric(const CVec& state, const CVec& target,
                         bool align_global_phase) {
  if (state.size() != target.size()) throw std::invalid_argument("dimension mismatch");
  double shift = 0.0;
  if (align_global_phase) {
    Complex acc(0.0, 0.0);
    for (Eigen::Index i = 0; i < state.size(); ++i) {
      if (std::abs(state(i)) < kAmplitudeFloor) continue;
      acc += (state(i) / std::abs(state(i))) * std::conj(target(i));
    }
    shift = std::arg(acc);
  }
  double sq = 0.0;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double d = wrap_angle(std::arg(state(i)) - std::arg(target(i)) - shift);
    sq += d * d;
  }
  return std::sqrt(sq / state.size());
}

CVec retrieval_field(const CMat& weights, const CVec& z, CouplingKernel kernel,
                     double beta_coh) {
  const Eigen::Index n = weights.rows();
  CVec raw = weights * z;
  if (kernel == CouplingKernel::diffusive) return raw;
  CVec out(n);
  std::vector<Complex> contribs;
  for (Eigen::Index i = 0; i < n; ++i) {
    contribs.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex c = weights(i, j) * z(j);
      if (std::abs(c) > 0) contribs.push_back(c);
    }
    out(i) = gated_combine(contribs, raw(i), beta_coh, kernel, raw(i));
  }
  return out;
}

std::pair<CVec, RecallMetrics> recall(const HoloMemory& memory,
                                      const CVec& target,
                                      const std::vector<int>& clamped,
                                      const RecallParams& params, Rng& rng) {
  const int n = memory.n();
  if (clamped.empty()) throw std::invalid_argument("clamped fraction must be positive");
  std::vector<bool> is_clamped(n, false);
  for (int idx : clamped) is_clamped[static_cast<std::size_t>(idx)] = true;

  // The cue carries the jitter: clamped nodes hold a noisy copy of the target
  // phase for the whole evolution, unclamped nodes start as low-amplitude
  // phase noise and must be reconstructed from the cue through the memory.
  CVec z(n);
  std::vector<double> cue_phase(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (is_clamped[static_cast<std::size_t>(i)]) {
      cue_phase[static_cast<std::size_t>(i)] =
          std::arg(target(i)) + rng.normal(0.0, params.jitter);
      z(i) = std::polar(1.0, cue_phase[static_cast<std::size_t>(i)]);
    } else {
      z(i) = std::polar(params.unclamped_amplitude, rng.uniform(-kPi, kPi));
    }
  }

  // Heterogeneous detuning: retrieval has to hold the pattern against the
  // oscillators' drift, so kernels differ in how much coupling they waste on
  // incoherent crosstalk.
  RVec omega = RVec::Zero(n);
  if (params.omega_spread > 0.0) {
    for (int i = 0; i < n; ++i)
      omega(i) = rng.uniform(-params.omega_spread, params.omega_spread);
  }

  RecallMetrics metrics;
  RVec prev_phase(n);
  int quiet_steps = 0;
  for (int t = 0; t < params.max_steps; ++t) {
    for (int i = 0; i < n; ++i) prev_phase(i) = std::arg(z(i));
    const CVec field =
        retrieval_field(memory.weights(), z, params.kernel, params.beta_coh);
    for (int i = 0; i < n; ++i) {
      const Complex lin(params.alpha, omega(i));
      Complex ze = z(i) + params.dt * (lin * z(i) + params.kappa * field(i));
      ze /= 1.0 + params.dt * params.beta * std::norm(ze);
      if (!std::isfinite(ze.real()) || !std::isfinite(ze.imag())) {
        throw IntegrationDivergence(i, t);
      }
      z(i) = ze;
    }
    for (int i = 0; i < n; ++i) {
      if (is_clamped[static_cast<std::size_t>(i)]) {
        z(i) = std::polar(1.0, cue_phase[static_cast<std::size_t>(i)]);
      }
    }
    double max_change = 0.0;
    for (int i = 0; i < n; ++i) {
      max_change = std::max(max_change,
                            std::abs(wrap_angle(std::arg(z(i)) - prev_phase(i))));
    }
    quiet_steps = (max_change < params.convergence_tol) ? quiet_steps + 1 : 0;
    if (quiet_steps >= params.convergence_steps) {
      metrics.converged = true;
      break;
    }
  }

  metrics.overlap = overlap_metric(z, target);
  metrics.phase_rmse = phase_rmse_metric(z, target, params.align_global_phase);
  metrics.success = metrics.overlap >= params.overlap_threshold &&
                    metrics.phase_rmse <= params.rmse_threshold;
  return {z, metrics};
}

namespace {

CVec bits_to_phasor(const std::vector<int>& bits) {
  CVec x(static_cast<Eigen::Index>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) {
    x(static_cast<Eigen::Index>(i)) = bits[i] > 0 ? Complex(1, 0) : Complex(-1, 0);
  }
  return x;
}

int phasor_bit(Complex z) { return std::abs(wrap_angle(std::arg(z))) < kPi / 2 ? 1 : -1; }

double bit_accuracy(const CVec& state, const std::vector<int>& bits) {
  int correct = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (phasor_bit(state(static_cast<Eigen::Index>(i))) == bits[i]) ++correct;
  }
  return static_cast<double>(correct) / bits.size();
}

// Iterative phase retrieval: asynchronous sweeps z_i <- unit(f_i).
CVec phasor_retrieve(const CMat& weights, CVec z, int sweeps, double beta_coh) {
  const Eigen::Index n = weights.rows();
  for (int s = 0; s < sweeps; ++s) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Complex raw(0.0, 0.0);
      std::vector<Complex> contribs;
      contribs.reserve(static_cast<std::size_t>(n));
      for (Eigen::Index j = 0; j < n; ++j) {
        const Complex c = weights(i, j) * z(j);
        raw += c;
        if (std::abs(c) > 0) contribs.push_back(c);
      }
      const Complex f = gated_combine(contribs, raw, beta_coh,
                                      CouplingKernel::gate_rotate, raw);
      if (std::abs(f) < kAmplitudeFloor) continue;
      const Complex updated = f / std::abs(f);
      if (std::abs(updated - z(i)) > 1e-12) changed = true;
      z(i) = updated;
    }
    if (!changed) break;
  }
  return z;
}

struct Esn {
  RMat reservoir;
  RMat input_map;
  RMat readout;
};

Esn train_esn(int n, const CapacityParams& params, Rng& rng) {
  const int m = params.esn_reservoir_factor * n;
  Esn esn;
  esn.reservoir = RMat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) esn.reservoir(i, j) = rng.normal() / std::sqrt(m);
  }
  // Rescale to the target spectral radius.
  Eigen::EigenSolver<RMat> solver(esn.reservoir, /*computeEigenvectors=*/false);
  const double radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0) esn.reservoir *= params.esn_spectral_radius / radius;

  esn.input_map = RMat::Zero(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j)
      esn.input_map(i, j) =
          rng.uniform(-params.esn_input_scale, params.esn_input_scale);
  }

  // The readout is trained for denoising-completion on the reservoir's own
  // random pattern set. The benchmark patterns are only presented at query
  // time: a readout-only architecture has no storage operation, so it cannot
  // absorb them without retraining — which is what the benchmark probes.
  const int train_count = params.esn_train_patterns;
  const int variants = params.esn_train_variants;
  RMat states(m, train_count * variants);
  RMat targets(n, train_count * variants);
  int col = 0;
  for (int k = 0; k < train_count; ++k) {
    RVec x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    for (int v = 0; v < variants; ++v) {
      RVec noisy = x;
      for (int i = 0; i < n; ++i) {
        if (rng.uniform() < params.flip_noise) noisy(i) = -noisy(i);
      }
      RVec h = RVec::Zero(m);
      for (int t = 0; t < params.esn_washout; ++t) {
        h = (esn.reservoir * h + esn.input_map * noisy).array().tanh();
      }
      states.col(col) = h;
      targets.col(col) = x;
      ++col;
    }
  }
  const RMat gram =
      states * states.transpose() + params.esn_ridge * RMat::Identity(m, m);
  esn.readout = targets * states.transpose() * gram.inverse();
  return esn;
}

RVec esn_complete(const Esn& esn, const RVec& x, const CapacityParams& params) {
  RVec h = RVec::Zero(esn.reservoir.rows());
  for (int t = 0; t < params.esn_washout; ++t) {
    h = (esn.reservoir * h + esn.input_map * x).array().tanh();
  }
  return esn.readout * h;
}

// One MHN retrieval: xi <- X softmax(beta X^T xi), iterated, then sign.
RVec mhn_retrieve(const RMat& patterns_cols, RVec query,
                  const CapacityParams& params) {
  for (int it = 0; it < params.mhn_iterations; ++it) {
    RVec scores = params.mhn_inverse_temp * (patterns_cols.transpose() * query) /
                  std::sqrt(static_cast<double>(patterns_cols.rows()));
    const double mx = scores.maxCoeff();
    RVec probs = (scores.array() - mx).exp();
    probs /= probs.sum();
    query = patterns_cols * probs;
  }
  return query;
}

}  // namespace

std::vector<CapacityRow> capacity_benchmark(int n, std::span<const int> pattern_counts,
                                            MemoryBackend backend,
                                            const CapacityParams& params,
                                            std::uint64_t seed) {
  std::vector<CapacityRow> rows;
  const char* backend_name = backend == MemoryBackend::phasor ? "phasor"
                             : backend == MemoryBackend::mhn  ? "mhn"
                                                              : "esn";
  for (int p : pattern_counts) {
    Rng pattern_rng = make_stream("capacity", seed, "patterns").child(static_cast<std::uint64_t>(p));
    Rng query_rng = make_stream("capacity", seed, "queries").child(static_cast<std::uint64_t>(p));

    std::vector<std::vector<int>> patterns;
    for (int k = 0; k < p; ++k) {
      std::vector<int> bits(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) bits[static_cast<std::size_t>(i)] = pattern_rng.uniform() < 0.5 ? -1 : 1;
      patterns.push_back(std::move(bits));
    }

    HoloMemory memory(n, {.centering = false, .zero_diagonal = true});
    RMat pattern_cols(n, p);
    for (int k = 0; k < p; ++k) {
      memory.store(bits_to_phasor(patterns[static_cast<std::size_t>(k)]));
      for (int i = 0; i < n; ++i) {
        pattern_cols(i, k) = patterns[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      }
    }
    Esn esn;
    if (backend == MemoryBackend::esn) {
      Rng esn_rng = make_stream("capacity", seed, "esn").child(static_cast<std::uint64_t>(p));
      esn = train_esn(n, params, esn_rng);
    }

    int reliable = 0;
    for (int k = 0; k < p; ++k) {
      const auto& bits = patterns[static_cast<std::size_t>(k)];
      int good_queries = 0;
      for (int q = 0; q < params.queries_per_pattern; ++q) {
        std::vector<int> noisy = bits;
        for (int i = 0; i < n; ++i) {
          if (query_rng.uniform() < params.flip_noise) {
            noisy[static_cast<std::size_t>(i)] = -noisy[static_cast<std::size_t>(i)];
          }
        }
        double accuracy = 0.0;
        if (backend == MemoryBackend::phasor) {
          CVec z = phasor_retrieve(memory.weights(), bits_to_phasor(noisy),
                                   params.retrieval_sweeps, 5.0);
          accuracy = bit_accuracy(z, bits);
        } else if (backend == MemoryBackend::mhn) {
          RVec x(n);
          for (int i = 0; i < n; ++i) x(i) = noisy[static_cast<std::size_t>(i)];
          RVec out = mhn_retrieve(pattern_cols, x, params);
          int correct = 0;
          for (int i = 0; i < n; ++i) {
            if ((out(i) >= 0 ? 1 : -1) == bits[static_cast<std::size_t>(i)]) ++correct;
          }
          accuracy = static_cast<double>(correct) / n;
        } else {
          RVec x(n);
          for (int i = 0; i < n; ++i) x(i) = noisy[static_cast<std::size_t>(i)];
          RVec out = esn_complete(esn, x, params);
          int correct = 0;
          for (int i = 0; i < n; ++i) {
            if ((out(i) >= 0 ? 1 : -1) == bits[static_cast<std::size_t>(i)]) ++correct;
          }
          accuracy = static_cast<double>(correct) / n;
        }
        if (accuracy >= params.bit_threshold) ++good_queries;
      }
      if (good_queries >=
          static_cast<int>(std::ceil(params.query_threshold * params.queries_per_pattern))) {
        ++reliable;
      }
    }

    CapacityRow row;
    row.backend = backend_name;
    row.n = n;
    row.patterns = p;
    row.flip_noise = params.flip_noise;
    row.reliable_fraction = static_cast<double>(reliable) / p;
    row.trials = params.queries_per_pattern;
    row.seed = seed;
    rows.push_back(row);
  }
  return rows;
}

int reliable_capacity(std::span<const CapacityRow> rows, double fraction_floor) {
  int best = 0;
  for (const auto& row : rows) {
    if (row.reliable_fraction >= fraction_floor) best = std::max(best, row.patterns);
  }
  return best;
}

}  // namespace phasor
