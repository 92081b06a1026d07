#include "phasor/progress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace phasor {

ProgressDetector::ProgressDetector(Params p) : params_(p) {
  if (p.window_len < 1 || p.stride < 1 || p.threshold < 0 || p.pulse_cap <= 0) {
    throw std::invalid_argument("invalid progress detector parameters");
  }
}

std::optional<double> ProgressDetector::observe(long step, double loss) {
  if (!(loss >= 0) || !std::isfinite(loss)) {
    throw std::invalid_argument("loss must be finite and nonnegative");
  }
  buffer_.push_back(loss);
  ++samples_seen_;
  const long two_l = 2 * params_.window_len;
  while (static_cast<long>(buffer_.size()) > two_l) buffer_.pop_front();

  if (samples_seen_ < two_l) return std::nullopt;
  if ((samples_seen_ - two_l) % params_.stride != 0) return std::nullopt;

  const long l = params_.window_len;
  double prev = 0.0, curr = 0.0;
  for (long k = 0; k < l; ++k) prev += buffer_[k];
  for (long k = l; k < two_l; ++k) curr += buffer_[k];
  prev /= l;
  curr /= l;
  last_delta_ = prev - curr;

  if (last_delta_ <= params_.threshold) return std::nullopt;
  if (pulsed_ && step - last_pulse_step_ < params_.refractory) return std::nullopt;

  last_pulse_step_ = step;
  pulsed_ = true;
  return std::min(params_.pulse_gain * last_delta_, params_.pulse_cap);
}

std::vector<Pulse> shuffle_schedule(const std::vector<Pulse>& pulses,
                                    long horizon, Rng& rng) {
  if (horizon < static_cast<long>(pulses.size())) {
    throw std::invalid_argument("horizon smaller than pulse count");
  }
  if (pulses.empty()) return {};

  // Distinct times drawn without replacement (Floyd's algorithm).
  std::vector<long> times;
  std::vector<bool> taken(static_cast<std::size_t>(horizon), false);
  const long k = static_cast<long>(pulses.size());
  for (long j = horizon - k; j < horizon; ++j) {
    long t = static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(j + 1)));
    if (taken[static_cast<std::size_t>(t)]) t = j;
    taken[static_cast<std::size_t>(t)] = true;
    times.push_back(t);
  }
  rng.shuffle(times);

  std::vector<Pulse> out;
  out.reserve(pulses.size());
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    out.push_back({times[i], pulses[i].amplitude});
  }
  std::sort(out.begin(), out.end(),
            [](const Pulse& a, const Pulse& b) { return a.step < b.step; });
  return out;
}

}  // namespace phasor
