#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

#include "phasor/rng.hpp"

namespace phasor {

// Compression-progress detector: compares the mean loss of two adjacent
// windows and emits a capped modulatory pulse when the recent window
// improves by more than the threshold. Consumes losses on external inputs
// only; there is deliberately no pathway to feed internal state in.
class ProgressDetector {
 public:
  struct Params {
    long window_len = 50;    // L
    long stride = 50;        // S; default non-overlapping (S = L)
    double threshold = 0.05; // theta_prog
    long refractory = 50;    // steps
    double pulse_gain = 1.0; // a
    double pulse_cap = 1.0;  // M_max
  };

  explicit ProgressDetector(Params p);

  // Push one loss sample; returns the emitted pulse amplitude, if any.
  // Evaluations happen at steps {2L, 2L+S, ...} counted from the first
  // observed sample. Negative losses are rejected.
  std::optional<double> observe(long step, double loss);

  // Last evaluated window difference (prev mean - curr mean).
  double last_delta() const { return last_delta_; }
  const Params& params() const { return params_; }

 private:
  Params params_;
  std::deque<double> buffer_;  // last 2L losses
  long samples_seen_ = 0;
  long last_pulse_step_ = -1;
  bool pulsed_ = false;
  double last_delta_ = 0.0;
};

struct Pulse {
  long step;
  double amplitude;
};

// Timestamp-shuffle placebo: identical amplitude multiset delivered at
// distinct uniformly resampled steps in [0, horizon). Output sorted by step.
std::vector<Pulse> shuffle_schedule(const std::vector<Pulse>& pulses,
                                    long horizon, Rng& rng);

}  // namespace phasor
