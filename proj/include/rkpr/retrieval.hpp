#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rkpr/random.hpp"
#include "rkpr/state.hpp"
#include "rkpr/trajectory.hpp"

namespace rkpr {

struct SignalProblem {
  std::vector<double> x_star;

  std::int64_t dim() const { return static_cast<std::int64_t>(x_star.size()); }
};

struct Measurement {
  std::vector<double> a;
  double b = 0.0;  // |<a, x*>|, recorded magnitude
};

struct SgdConfig {
  double eta0 = 1.0;  // step size is eta0 / d
  std::int64_t max_steps = 1;
  std::vector<double> init;
  std::int64_t record_every = 1;
  std::optional<double> stop_psi;  // optional early-out once psi falls below
  StoppingConfig stopping;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline Measurement measure(const SignalProblem& problem, std::vector<double> a) {
  if (static_cast<std::int64_t>(a.size()) != problem.dim()) {
    throw std::invalid_argument("measure: sampling vector dimension mismatch");
  }
  const double b = std::fabs(dot(a, problem.x_star));
  return Measurement{std::move(a), b};
}

/// One magnitude-matching step: x + eta (sign(<a,x>) b - <a,x>) a. When
/// eta ||a||^2 = 1 this is the projection onto the nearer of the two
/// hyperplanes |<a, x>| = b.
inline std::vector<double> sgd_step(const std::vector<double>& x, const Measurement& m, double eta) {
  if (x.size() != m.a.size()) throw std::invalid_argument("sgd_step: dimension mismatch");
  const double p = dot(m.a, x);
  const double c = eta * (sign_pos(p) * m.b - p);
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] + c * m.a[i];
  return out;
}

/// Distance to the signal up to global sign: min(||x - x*||, ||x + x*||).
inline double dist_to_signal(const std::vector<double>& x, const std::vector<double>& x_star) {
  if (x.size() != x_star.size()) throw std::invalid_argument("dist_to_signal: dimension mismatch");
  double minus = 0.0, plus = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dm = x[i] - x_star[i];
    const double dp = x[i] + x_star[i];
    minus += dm * dm;
    plus += dp * dp;
  }
  return std::sqrt(std::min(minus, plus));
}

/// Projects a full iterate to its summary state (r^2, s) = (||x||^2, <x, x*>).
inline StateY project_state(const std::vector<double>& x, const std::vector<double>& x_star) {
  if (x.size() != x_star.size()) throw std::invalid_argument("project_state: dimension mismatch");
  double n = 0.0;
  for (double xi : x_star) n += xi * xi;
  if (std::fabs(n - 1.0) > 1e-12) throw std::invalid_argument("project_state: x_star must have unit norm");
  double r2 = 0.0, s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    r2 += x[i] * x[i];
    s += x[i] * x_star[i];
  }
  return StateY{r2, s};
}

/// Online SGD with one fresh sqrt(d)-sphere measurement per step. Only the
/// projected state is recorded; the measurement vectors are never stored, so
/// memory stays O(d). The signal must be unit norm (the scale is a free
/// gauge; fixing it keeps the recorded state and psi aligned with
/// dist_to_signal^2).
inline Trajectory run_sgd(const SignalProblem& problem, const SgdConfig& config, SeededStream stream) {
  const std::int64_t d = problem.dim();
  if (d < 1) throw std::invalid_argument("run_sgd: dimension must be >= 1");
  if (std::fabs(dot(problem.x_star, problem.x_star) - 1.0) > 1e-12) {
    throw std::invalid_argument("run_sgd: x_star must have unit norm");
  }
  if (config.eta0 <= 0.0) throw std::invalid_argument("run_sgd: eta0 must be > 0");
  if (config.max_steps < 1) throw std::invalid_argument("run_sgd: max_steps must be >= 1");
  if (config.record_every < 1) throw std::invalid_argument("run_sgd: record_every must be >= 1");
  if (static_cast<std::int64_t>(config.init.size()) != d) {
    throw std::invalid_argument("run_sgd: init dimension mismatch");
  }

  const double eta = config.eta0 / static_cast<double>(d);
  std::vector<double> x = config.init;
  std::vector<double> a(static_cast<size_t>(d));

  Trajectory traj;
  traj.d = d;
  traj.stream = stream;
  traj.record_every = config.record_every;
  StoppingDetector detector(d, config.stopping);
  RandomStream rs(stream);

  StateY y = project_state(x, problem.x_star);
  detector.observe(0, y);
  traj.steps.push_back(0);
  traj.states.push_back(y);

  std::int64_t k = 0;
  for (; k < config.max_steps;) {
    // Fresh measurement; regeneration guards the zero-vector corner.
    double norm_sq = 0.0;
    do {
      norm_sq = 0.0;
      for (auto& ai : a) {
        ai = rs.normal();
        norm_sq += ai * ai;
      }
    } while (norm_sq == 0.0);
    const double scale = std::sqrt(static_cast<double>(d) / norm_sq);

    double u = 0.0, p = 0.0;
    for (std::int64_t i = 0; i < d; ++i) {
      a[static_cast<size_t>(i)] *= scale;
      u += a[static_cast<size_t>(i)] * problem.x_star[static_cast<size_t>(i)];
      p += a[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
    }
    const double c = eta * (sign_pos(p) * std::fabs(u) - p);
    for (std::int64_t i = 0; i < d; ++i) x[static_cast<size_t>(i)] += c * a[static_cast<size_t>(i)];

    ++k;
    y = project_state(x, problem.x_star);
    detector.observe(k, y);
    const bool due = (k % config.record_every == 0) || k == config.max_steps;
    if (due) {
      traj.steps.push_back(k);
      traj.states.push_back(y);
    }
    if (config.stop_psi && lyapunov(y) <= *config.stop_psi) {
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

/// Standard Gaussian direction scaled to the requested norm.
inline std::vector<double> random_init(std::int64_t d, double init_norm, RandomStream& rs) {
  if (d < 1) throw std::invalid_argument("random_init: dimension must be >= 1");
  std::vector<double> x(static_cast<size_t>(d));
  double n = 0.0;
  do {
    n = 0.0;
    for (auto& xi : x) {
      xi = rs.normal();
      n += xi * xi;
    }
  } while (n == 0.0);
  const double scale = init_norm / std::sqrt(n);
  for (auto& xi : x) xi *= scale;
  return x;
}

}  // namespace rkpr
