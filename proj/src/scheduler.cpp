#include "phasor/scheduler.hpp"

#include <algorithm>
#include <cmath>

namespace phasor {

const char* phase_name(SleepPhase p) {
  switch (p) {
    case SleepPhase::wake:
      return "wake";
    case SleepPhase::nrem:
      return "nrem";
    case SleepPhase::rem:
      return "rem";
  }
  return "?";
}

void apply_guardrails(PhasorGraph& graph, const GuardrailConfig& config,
                      double order_param, Rng& rng) {
  if (config.alpha_only) {
    if (config.alpha_gain > 0) {
      // Floor keeps the limit cycle alive; pure alpha feedback must not
      // silently turn into amplitude death.
      graph.alpha = std::max(0.05, graph.alpha - config.alpha_gain *
                                                     (order_param - config.target_R));
    }
    return;
  }
  if (config.kappa_gain > 0) {
    graph.kappa = std::max(
        0.0, graph.kappa - config.kappa_gain * (order_param - config.target_R));
  }
  if (config.kick_strength > 0 && order_param > config.band_hi) {
    Complex mean(0.0, 0.0);
    for (Eigen::Index i = 0; i < graph.z.size(); ++i) mean += graph.z(i);
    const double mean_phase = std::arg(mean);
    const double kick = config.kick_strength * (order_param - config.band_hi);
    for (Eigen::Index i = 0; i < graph.z.size(); ++i) {
      const double r = std::abs(graph.z(i));
      if (r < kAmplitudeFloor) continue;
      const double off = wrap_angle(std::arg(graph.z(i)) - mean_phase);
      const double dir = off > 0 ? 1.0 : (off < 0 ? -1.0 : 0.0);
      graph.z(i) = std::polar(r, std::arg(graph.z(i)) + dir * kick);
    }
  }
  if (config.rescue_jitter > 0 && order_param >= config.collapse_threshold) {
    for (Eigen::Index i = 0; i < graph.z.size(); ++i) {
      const double r = std::abs(graph.z(i));
      if (r < kAmplitudeFloor) continue;
      graph.z(i) = std::polar(r, std::arg(graph.z(i)) +
                                     rng.normal(0.0, config.rescue_jitter));
    }
  }
}

void phase_scramble(PhasorGraph& graph, Rng& rng) {
  const Eigen::Index n = graph.z.size();
  if (n <= 1) return;
  std::vector<double> phases(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) phases[static_cast<std::size_t>(i)] = std::arg(graph.z(i));
  rng.shuffle(phases);
  for (Eigen::Index i = 0; i < n; ++i) {
    graph.z(i) = std::polar(std::abs(graph.z(i)), phases[static_cast<std::size_t>(i)]);
  }
}

RunMetrics run_cycle(PhasorGraph& graph, PlasticityState& plasticity,
                     const SleepSchedule& schedule, CycleHook* hook, Rng& rng) {
  RunMetrics metrics;
  Rng scramble_rng = rng.child("scramble");
  Rng guard_rng = rng.child("guardrails");

  long global_step = 0;
  std::vector<double> pulses;
  for (const ScheduleSegment& segment : schedule.segments) {
    double segment_updates = 0.0;
    for (long t = 0; t < segment.steps; ++t, ++global_step) {
      std::optional<InputSignal> input;
      if (segment.phase == SleepPhase::wake && segment.input_enabled && hook) {
        input = hook->wake_input(t);
      }
      try {
        step(graph, input ? &*input : nullptr, schedule.dt);
      } catch (const IntegrationDivergence&) {
        metrics.diverged = true;
        return metrics;
      }
      if (segment.scramble_phases) phase_scramble(graph, scramble_rng);

      const RMat h = coincidence(graph.z, graph.adjacency, schedule.coincidence_form);
      update_traces(plasticity, h, schedule.dt);

      pulses.clear();
      if (segment.phase == SleepPhase::wake && hook) hook->wake_pulses(t, pulses);
      update_modulator(plasticity, pulses, schedule.dt);

      double ref_phase = 0.0;
      if (segment.gate.mode == GateConfig::Mode::phase_window) {
        if (segment.gate.reference == GateConfig::Reference::master_clock) {
          ref_phase = wrap_angle(segment.gate.clock_frequency * schedule.dt *
                                 static_cast<double>(global_step));
        } else {
          Complex mean(0.0, 0.0);
          for (Eigen::Index i = 0; i < graph.z.size(); ++i) mean += graph.z(i);
          ref_phase = std::arg(mean);
        }
      }
      const int gate = gate_value(segment.gate, ref_phase, t);
      metrics.gate_open_steps += gate;

      const bool budget_left =
          !segment.update_budget || segment_updates < *segment.update_budget;
      if (segment.phase == SleepPhase::rem) {
        if (hook) hook->rem_step(graph, plasticity, segment, t);
      } else if (gate && budget_left && segment.eta > 0) {
        const double delta =
            apply_three_factor(graph.weights, graph.adjacency, plasticity, gate,
                               segment.eta, segment.trace, segment.modulator_source);
        segment_updates += delta;
        metrics.total_update_magnitude += delta;
      }

      switch (segment.homeostasis.mode) {
        case HomeostasisConfig::Mode::none:
          break;
        case HomeostasisConfig::Mode::linear_decay:
          homeostasis_linear_decay(graph.weights, segment.homeostasis.decay_rate);
          break;
        case HomeostasisConfig::Mode::nonlinear_shrinkage:
          homeostasis_nonlinear_shrinkage(graph.weights,
                                          segment.homeostasis.shrink_base,
                                          segment.homeostasis.shrink_scale);
          break;
        case HomeostasisConfig::Mode::adaptive_phase_noise:
          // Complex-weight variant lives in the transition model; for real
          // graph weights this mode is a no-op here.
          break;
      }

      double r = 0.0;
      try {
        r = order_parameter(graph.z);
      } catch (const AmplitudeDeath&) {
        metrics.diverged = true;
        return metrics;
      }
      if (segment.use_guardrails && schedule.guardrails) {
        apply_guardrails(graph, *schedule.guardrails, r, guard_rng);
      }

      MetricRow row;
      row.step = global_step;
      row.phase = segment.phase;
      row.order_parameter = r;
      row.weight_frobenius = graph.weights.norm();
      row.modulator = plasticity.modulator;
      row.prp = plasticity.prp;
      metrics.rows.push_back(row);
      if (schedule.budget && row.weight_frobenius > *schedule.budget) {
        metrics.unstable = true;
      }
    }
  }
  return metrics;
}

bool sustained_collapse(const std::vector<MetricRow>& rows, double threshold,
                        double fraction, double tail_fraction) {
  if (rows.empty()) return false;
  const std::size_t tail =
      std::max<std::size_t>(1, static_cast<std::size_t>(rows.size() * tail_fraction));
  std::size_t above = 0;
  for (std::size_t i = rows.size() - tail; i < rows.size(); ++i) {
    if (rows[i].order_parameter >= threshold) ++above;
  }
  return static_cast<double>(above) / tail >= fraction;
}

}  // namespace phasor
