#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rkpr/io.hpp"
#include "rkpr/random.hpp"
#include "rkpr/state.hpp"

namespace rkpr {

/// Phase thresholds: radius margin log d / sqrt(d) (times a scale), the
/// correlation threshold gamma1 and the basin threshold gamma2.
struct StoppingConfig {
  double gamma1 = 0.1;
  double gamma2 = kPi * kPi / 320.0;
  double radius_margin_scale = 1.0;
};

inline double radius_margin(std::int64_t d, const StoppingConfig& cfg) {
  return cfg.radius_margin_scale * std::log(static_cast<double>(d)) / std::sqrt(static_cast<double>(d));
}

struct StoppingTimes {
  std::optional<std::int64_t> tau1;
  std::optional<std::int64_t> tau2a;
  std::optional<std::int64_t> tau2b;
};

/// Streaming phase detection at exact step granularity. Conditions are
/// checked in order within a single observation, so tau1 <= tau2a <= tau2b.
class StoppingDetector {
 public:
  StoppingDetector(std::int64_t d, const StoppingConfig& cfg)
      : margin_(radius_margin(d, cfg)), cfg_(cfg) {}

  void observe(std::int64_t step, StateY y) {
    if (!times_.tau1 && std::fabs(y.r2 - 1.0) <= margin_) times_.tau1 = step;
    if (times_.tau1 && !times_.tau2a && std::fabs(y.s) >= cfg_.gamma1) times_.tau2a = step;
    if (times_.tau2a && !times_.tau2b && lyapunov(y) <= cfg_.gamma2) times_.tau2b = step;
  }

  const StoppingTimes& times() const { return times_; }

 private:
  double margin_;
  StoppingConfig cfg_;
  StoppingTimes times_;
};

struct Trajectory {
  std::int64_t d = 0;
  SeededStream stream;
  std::int64_t record_every = 1;
  std::vector<std::int64_t> steps;
  std::vector<StateY> states;
  StoppingTimes stopping;
  std::int64_t steps_run = 0;
  double final_psi = 0.0;
  std::optional<std::int64_t> success_step;
};

/// `step,r2,s,psi` rows at full double precision.
inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "step,r2,s,psi\n";
  for (size_t i = 0; i < traj.steps.size(); ++i) {
    const StateY& y = traj.states[i];
    out += std::to_string(traj.steps[i]) + "," + fmt_g17(y.r2) + "," + fmt_g17(y.s) + "," +
           fmt_g17(lyapunov(y)) + "\n";
  }
  return out;
}

/// Simulates the summary-state chain itself: one fresh two-coordinate
/// marginal per step.
inline Trajectory run_state_chain(StateY y0, std::int64_t d, std::int64_t max_steps,
                                  SeededStream stream, std::int64_t record_every = 1,
                                  const StoppingConfig& stopping = {},
                                  std::optional<double> stop_psi = std::nullopt) {
  if (max_steps < 1) throw std::invalid_argument("run_state_chain: max_steps must be >= 1");
  if (record_every < 1) throw std::invalid_argument("run_state_chain: record_every must be >= 1");
  y0 = clamp_to_state_space(y0);

  Trajectory traj;
  traj.d = d;
  traj.stream = stream;
  traj.record_every = record_every;
  StoppingDetector detector(d, stopping);
  RandomStream rs(stream);

  StateY y = y0;
  detector.observe(0, y);
  traj.steps.push_back(0);
  traj.states.push_back(y);

  std::int64_t k = 0;
  for (; k < max_steps;) {
    const auto [u, v] = sample_uv_marginal(d, rs);
    y = state_step(y, u, v, d);
    ++k;
    detector.observe(k, y);
    const bool due = (k % record_every == 0) || k == max_steps;
    if (due) {
      traj.steps.push_back(k);
      traj.states.push_back(y);
    }
    if (stop_psi && lyapunov(y) <= *stop_psi) {
      traj.success_step = k;
      if (!due) {
        traj.steps.push_back(k);
        traj.states.push_back(y);
      }
      break;
    }
  }
  traj.steps_run = k;
  traj.stopping = detector.times();
  traj.final_psi = lyapunov(y);
  return traj;
}

}  // namespace rkpr
