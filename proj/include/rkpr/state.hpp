#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkpr/io.hpp"

namespace rkpr {

inline constexpr double kPi = std::numbers::pi;

/// Absolute slack on s^2 <= r^2 used to absorb round-off; anything worse is
/// treated as a formula bug, not clamped away.
inline constexpr double kStateSlack = 1e-12;

/// Summary state of an iterate: squared norm r^2 and signal correlation s.
struct StateY {
  double r2 = 0.0;
  double s = 0.0;
};

struct StateSpaceError : std::logic_error {
  using std::logic_error::logic_error;
};

inline bool in_state_space(StateY y, double slack = kStateSlack) {
  return y.r2 >= -slack && y.s * y.s <= y.r2 + slack;
}

inline StateY clamp_to_state_space(StateY y, double slack = kStateSlack) {
  if (y.r2 < 0.0) {
    if (y.r2 < -slack) {
      throw StateSpaceError("state (" + fmt_g17(y.r2) + ", " + fmt_g17(y.s) +
                            ") has negative squared norm beyond slack");
    }
    y.r2 = 0.0;
  }
  const double excess = y.s * y.s - y.r2;
  if (excess > 0.0) {
    if (excess > slack) {
      throw StateSpaceError("state (" + fmt_g17(y.r2) + ", " + fmt_g17(y.s) +
                            ") violates s^2 <= r^2 beyond slack");
    }
    y.s = (y.s < 0.0 ? -1.0 : 1.0) * std::sqrt(y.r2);
  }
  return y;
}

/// sign with sign(0) := +1.
inline double sign_pos(double x) { return x < 0.0 ? -1.0 : 1.0; }

/// Angle between the iterate and the signal; pi/2 by convention at r = 0.
inline double theta_of(StateY y) {
  if (y.r2 <= 0.0) return 0.5 * kPi;
  const double c = y.s / std::sqrt(y.r2);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Squared distance to the nearer global minimum: r^2 - 2|s| + 1.
inline double lyapunov(StateY y) { return y.r2 - 2.0 * std::fabs(y.s) + 1.0; }

/// Sign-mismatch event between the measurement as seen from the iterate and
/// as seen from the signal.
inline bool event_A(double theta, double u, double v) {
  return sign_pos(std::cos(theta) * u + std::sin(theta) * v) != sign_pos(u);
}

/// One-measurement increment of (r^2, s), before the 1/d step scaling.
struct StateIncrement {
  double dr2 = 0.0;
  double ds = 0.0;
};

inline StateIncrement kernel_increment(StateY y, double u, double v) {
  const double r = std::sqrt(y.r2);
  double axial;  // r cos(theta) = s
  double ortho;  // r sin(theta)
  double dir;    // cos(theta) u + sin(theta) v, sign decides the mismatch event
  if (r == 0.0) {
    axial = 0.0;
    ortho = 0.0;
    dir = v;
  } else {
    axial = y.s;
    ortho = std::sqrt(std::max(y.r2 - y.s * y.s, 0.0));
    dir = (axial * u + ortho * v) / r;
  }
  const bool mismatch = sign_pos(dir) != sign_pos(u);
  // <a, x> restricted to the (signal, iterate) plane.
  const double p = axial * u + ortho * v;
  // dr2 = <a,x*>^2 - <a,x>^2; expanding the square gives the uv coefficient
  // -2 r^2 sin(theta) cos(theta).
  const double dr2 = u * u - p * p;
  const double ds = (1.0 - axial - (mismatch ? 2.0 : 0.0)) * u * u - ortho * u * v;
  return {dr2, ds};
}

inline StateY state_step(StateY y, double u, double v, std::int64_t d) {
  if (d < 1) throw std::invalid_argument("state_step: dimension must be >= 1");
  y = clamp_to_state_space(y);
  const StateIncrement inc = kernel_increment(y, u, v);
  const double inv_d = 1.0 / static_cast<double>(d);
  return clamp_to_state_space(StateY{y.r2 + inc.dr2 * inv_d, y.s + inc.ds * inv_d});
}

/// Expected increment of (r^2, s) per measurement.
struct DriftVector {
  double dr2 = 0.0;
  double ds = 0.0;
};

inline DriftVector drift(StateY y) {
  // Computed through |s| so the odd symmetry in s is bitwise exact.
  const double sa = std::fabs(y.s);
  const double r = std::sqrt(y.r2);
  double ds_pos;
  if (sa == 0.0) {
    ds_pos = 0.0;
  } else {
    const double theta = std::acos(std::clamp(sa / r, -1.0, 1.0));
    ds_pos = 1.0 - sa - (2.0 * theta - std::sin(2.0 * theta)) / kPi;
  }
  return {1.0 - y.r2, y.s < 0.0 ? -ds_pos : ds_pos};
}

/// P of the sign-mismatch event as a function of the angle.
inline double prob_A(double theta) { return theta / kPi; }

/// E{u^2 1_A(theta)} for rotationally symmetric (u, v).
inline double moment_a1sq_A(double theta) {
  return (2.0 * theta - std::sin(2.0 * theta)) / (2.0 * kPi);
}

/// E{u v 1_A(theta)} for rotationally symmetric (u, v).
inline double moment_a1a2_A(double theta) {
  return (std::cos(2.0 * theta) - 1.0) / (2.0 * kPi);
}

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1]; Newton on the recurrence.
template <int N>
inline const std::array<std::pair<double, double>, N>& gauss_legendre() {
  static const std::array<std::pair<double, double>, N> table = [] {
    std::array<std::pair<double, double>, N> t{};
    for (int k = 0; k < (N + 1) / 2; ++k) {
      double x = std::cos(kPi * (k + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= N; ++j) {
          double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = N * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::fabs(dx) < 1e-15) break;
      }
      double w = 2.0 / ((1.0 - x * x) * dp * dp);
      t[static_cast<size_t>(k)] = {x, w};
      t[static_cast<size_t>(N - 1 - k)] = {-x, w};
    }
    return t;
  }();
  return table;
}

template <class Fn>
inline double integrate_gl32(Fn&& fn, double a, double b) {
  const auto& gl = gauss_legendre<32>();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (const auto& [x, w] : gl) sum += w * fn(mid + half * x);
  return sum * half;
}

}  // namespace detail

struct BetaMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the s-increment at a frozen state, in the Gaussian
/// limit of (u, v). In polar coordinates (u, v) = R (cos t, sin t) the
/// increment factorizes as R^2 h(t) with R^2 and t independent, E R^2 = 2 and
/// E R^4 = 8, so both moments reduce to 1-D integrals of h and h^2 over the
/// circle, split at the points where either cosine factor changes sign.
inline BetaMoments beta_moments_quadrature(StateY y) {
  y = clamp_to_state_space(y);
  const double r = std::sqrt(y.r2);
  const double axial = (r == 0.0) ? 0.0 : y.s;
  const double ortho = (r == 0.0) ? 0.0 : std::sqrt(std::max(y.r2 - y.s * y.s, 0.0));
  const double theta = theta_of(y);

  const auto mismatch = [&](double t) {
    return sign_pos(std::cos(t - theta)) != sign_pos(std::cos(t));
  };

  const double two_pi = 2.0 * kPi;
  std::vector<double> cuts = {0.0, two_pi, 0.5 * kPi, 1.5 * kPi};
  for (double raw : {theta + 0.5 * kPi, theta + 1.5 * kPi}) {
    double t = std::fmod(raw, two_pi);
    if (t > 0.0 && t < two_pi) cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double int_h = 0.0, int_h2 = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b - a < 1e-14) continue;
    // Resolve the indicator once per smooth piece.
    const bool flag = mismatch(0.5 * (a + b));
    const auto piece = [&](double t) {
      const double c = std::cos(t);
      const double sn = std::sin(t);
      return (1.0 - axial - (flag ? 2.0 : 0.0)) * c * c - ortho * c * sn;
    };
    int_h += detail::integrate_gl32(piece, a, b);
    int_h2 += detail::integrate_gl32([&](double t) { const double p = piece(t); return p * p; }, a, b);
  }

  const double mean = 2.0 * int_h / two_pi;
  const double second = 8.0 * int_h2 / two_pi;
  return {mean, std::max(second - mean * mean, 0.0)};
}

inline double beta_variance(StateY y) { return beta_moments_quadrature(y).variance; }

struct DriftBounds {
  double b_min = 0.0;
  double b_max = 0.0;
};

/// Grid scan of the ratio (s-drift)/s: the supremum over {r >= 1/2, 0 < s <= r}
/// and the infimum over {|s| <= 1-epsilon, |r^2-1| <= eta}. The ratio decays in
/// r, so the radial extent of the sup scan is capped at r = 4.
inline DriftBounds drift_bounds_scan(double epsilon, double eta, double grid_step) {
  if (grid_step <= 0.0) throw std::invalid_argument("drift_bounds_scan: grid_step must be > 0");
  if (epsilon <= 0.0 || epsilon >= 1.0) throw std::invalid_argument("drift_bounds_scan: epsilon in (0,1)");
  if (eta <= 0.0) throw std::invalid_argument("drift_bounds_scan: eta > 0");

  double b_max = -std::numeric_limits<double>::infinity();
  {
    const double r_lo = 0.5, r_hi = 4.0;
    const auto nr = static_cast<std::int64_t>(std::floor((r_hi - r_lo) / grid_step)) + 1;
    for (std::int64_t i = 0; i < nr; ++i) {
      const double r = r_lo + static_cast<double>(i) * grid_step;
      const auto ns = static_cast<std::int64_t>(std::floor(r / grid_step));
      for (std::int64_t j = 1; j <= ns; ++j) {
        const double s = static_cast<double>(j) * grid_step;
        b_max = std::max(b_max, drift(StateY{r * r, s}).ds / s);
      }
    }
    if (!std::isfinite(b_max)) throw std::invalid_argument("drift_bounds_scan: empty sup grid");
  }

  double b_min = std::numeric_limits<double>::infinity();
  {
    const double r2_lo = 1.0 - eta, r2_hi = 1.0 + eta;
    const auto nr = static_cast<std::int64_t>(std::floor((r2_hi - r2_lo) / grid_step)) + 1;
    for (std::int64_t i = 0; i < nr; ++i) {
      const double r2 = r2_lo + static_cast<double>(i) * grid_step;
      if (r2 <= 0.0) continue;
      const double s_hi = std::min(1.0 - epsilon, std::sqrt(r2));
      const auto ns = static_cast<std::int64_t>(std::floor(s_hi / grid_step));
      for (std::int64_t j = 1; j <= ns; ++j) {
        const double s = static_cast<double>(j) * grid_step;
        b_min = std::min(b_min, drift(StateY{r2, s}).ds / s);
      }
    }
    if (!std::isfinite(b_min)) throw std::invalid_argument("drift_bounds_scan: empty inf grid");
  }
  return {b_min, b_max};
}

/// Drift-and-variance scan rows: `r2,s,alpha_bar,beta_bar,sigma2`.
inline std::string drift_scan_csv(const std::vector<StateY>& states) {
  std::string out = "r2,s,alpha_bar,beta_bar,sigma2\n";
  for (const StateY& y : states) {
    const DriftVector v = drift(y);
    out += fmt_g17(y.r2) + "," + fmt_g17(y.s) + "," + fmt_g17(v.dr2) + "," + fmt_g17(v.ds) + "," +
           fmt_g17(beta_variance(y)) + "\n";
  }
  return out;
}

}  // namespace rkpr
