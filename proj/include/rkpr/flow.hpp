#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkpr/io.hpp"
#include "rkpr/state.hpp"

namespace rkpr {

/// Deterministic integral curve of the drift field, with the continuous-time
/// phase boundaries: tau1_bar (|r^2 - 1| <= 0.1) and tau2_bar (psi <= 0.2).
struct FlowPath {
  std::vector<double> times;
  std::vector<StateY> states;
  std::optional<double> tau1_bar;
  std::optional<double> tau2_bar;
};

/// Radius marginal of the flow in closed form: r^2(t) - 1 = e^{-t}(r0^2 - 1).
inline double closed_form_r2(double t, double r0_sq) {
  return 1.0 + std::exp(-t) * (r0_sq - 1.0);
}

/// Classical fixed-step RK4 on dy/dt = drift(y). Fixed steps keep the
/// stopping times trivially extractable at resolution dt.
inline FlowPath integrate_drift(StateY y0, double dt, double t_max) {
  if (!(dt > 0.0) || dt > 0.01) throw std::invalid_argument("integrate_drift: need 0 < dt <= 0.01");
  if (!(t_max > 0.0)) throw std::invalid_argument("integrate_drift: t_max must be > 0");
  if (!in_state_space(y0)) throw std::invalid_argument("integrate_drift: start outside the state space");

  const auto n = static_cast<std::int64_t>(std::ceil(t_max / dt - 1e-12));
  FlowPath path;
  path.times.reserve(static_cast<size_t>(n) + 1);
  path.states.reserve(static_cast<size_t>(n) + 1);

  StateY y = y0;
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    path.times.push_back(t);
    path.states.push_back(y);
    if (!path.tau1_bar && std::fabs(y.r2 - 1.0) <= 0.1) path.tau1_bar = t;
    if (!path.tau2_bar && lyapunov(y) <= 0.2) path.tau2_bar = t;
    if (k == n) break;

    const DriftVector k1 = drift(y);
    const DriftVector k2 = drift(StateY{y.r2 + 0.5 * dt * k1.dr2, y.s + 0.5 * dt * k1.ds});
    const DriftVector k3 = drift(StateY{y.r2 + 0.5 * dt * k2.dr2, y.s + 0.5 * dt * k2.ds});
    const DriftVector k4 = drift(StateY{y.r2 + dt * k3.dr2, y.s + dt * k3.ds});
    y.r2 += dt * (k1.dr2 + 2.0 * k2.dr2 + 2.0 * k3.dr2 + k4.dr2) / 6.0;
    y.s += dt * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds) / 6.0;
  }
  return path;
}

/// Measured contraction constant of psi after tau2_bar: the least-squares
/// slope of -log psi against t over the tail, or nothing if the tail is
/// unusable. The basin geometry fixes this constant; it is reported, not
/// assumed.
inline std::optional<double> phase3_contraction_estimate(const FlowPath& path) {
  if (!path.tau2_bar) return std::nullopt;
  std::vector<double> ts, logs;
  for (size_t i = 0; i < path.times.size(); ++i) {
    if (path.times[i] < *path.tau2_bar) continue;
    const double psi = lyapunov(path.states[i]);
    if (psi <= 1e-300) break;
    ts.push_back(path.times[i]);
    logs.push_back(std::log(psi));
  }
  if (ts.size() < 10) return std::nullopt;
  double mt = 0.0, ml = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    ml += logs[i];
  }
  mt /= static_cast<double>(ts.size());
  ml /= static_cast<double>(ts.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    num += (ts[i] - mt) * (logs[i] - ml);
    den += (ts[i] - mt) * (ts[i] - mt);
  }
  if (den == 0.0) return std::nullopt;
  return -num / den;
}

struct FieldPoint {
  StateY y;
  DriftVector v;
};

/// Drift evaluated on an n-by-n grid; points with s^2 > r^2 are omitted.
inline std::vector<FieldPoint> vector_field_grid(double r2_min, double r2_max, double s_min,
                                                 double s_max, int n) {
  if (n < 1) throw std::invalid_argument("vector_field_grid: n must be >= 1");
  if (r2_max < r2_min || s_max < s_min) throw std::invalid_argument("vector_field_grid: empty range");
  std::vector<FieldPoint> out;
  for (int i = 0; i < n; ++i) {
    const double r2 = n == 1 ? r2_min : r2_min + (r2_max - r2_min) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double s = n == 1 ? s_min : s_min + (s_max - s_min) * j / (n - 1);
      if (s * s > r2 || r2 < 0.0) continue;
      const StateY y{r2, s};
      out.push_back(FieldPoint{y, drift(y)});
    }
  }
  if (out.empty()) throw std::invalid_argument("vector_field_grid: grid misses the state space");
  return out;
}

/// `r2,s,alpha_bar,beta_bar` rows at full double precision.
inline std::string field_csv(const std::vector<FieldPoint>& field) {
  std::string out = "r2,s,alpha_bar,beta_bar\n";
  for (const FieldPoint& p : field) {
    out += fmt_g17(p.y.r2) + "," + fmt_g17(p.y.s) + "," + fmt_g17(p.v.dr2) + "," + fmt_g17(p.v.ds) + "\n";
  }
  return out;
}

}  // namespace rkpr
