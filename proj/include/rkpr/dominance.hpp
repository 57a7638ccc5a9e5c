#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rkpr/parallel.hpp"
#include "rkpr/random.hpp"
#include "rkpr/state.hpp"
#include "rkpr/stats.hpp"

namespace rkpr {

inline std::int64_t default_epoch_length(std::int64_t d) {
  return static_cast<std::int64_t>(
      std::ceil(std::pow(static_cast<double>(d), 2.0 / 3.0) * std::log(static_cast<double>(d))));
}

/// Epoch-comparison parameters. All quantities downstream are expressed in
/// chain units: one epoch moves s by (1/d) * sum of B raw increments, so the
/// Gaussian surrogate gets drift (B/d) ds-drift and standard deviation
/// (sqrt(B)/d) sigma0, with sigma0^2 the raw increment variance.
struct ComparisonConfig {
  std::int64_t d = 0;
  std::int64_t B = 0;  // 0 means ceil(d^{2/3} log d)
  double kappa = 0.1;
  double c_eps = 0.01;
  double gamma1 = 0.1;
  double domain_margin_scale = 1.0;  // radius margin multiplier for the comparison region

  std::int64_t epoch_length() const { return B > 0 ? B : default_epoch_length(d); }

  void validate() const {
    if (d < 3) throw std::invalid_argument("ComparisonConfig: d must be >= 3");
    // kappa = 0 and c_eps = 0 are degenerate but legal: they turn the
    // comparison process into a plain Gaussian walk, which the tests use.
    if (kappa < 0.0 || kappa >= 1.0) throw std::invalid_argument("ComparisonConfig: kappa in [0,1)");
    if (c_eps < 0.0) throw std::invalid_argument("ComparisonConfig: c_eps must be >= 0");
    if (gamma1 <= 0.0 || gamma1 >= 0.5) throw std::invalid_argument("ComparisonConfig: gamma1 in (0,1/2)");
  }
};

/// Sign-preserving shrinkage: sign(x) (|x| - a)_+.
inline double soft_threshold(double x, double a) {
  if (a < 0.0) throw std::invalid_argument("soft_threshold: a must be >= 0");
  const double mag = std::fabs(x) - a;
  return mag > 0.0 ? sign_pos(x) * mag : 0.0;
}

/// Epoch approximation-error bound: c_eps (B^2 log d / d^2) (|s| v sqrt(log d / B)).
inline double epsilon_err(double s, const ComparisonConfig& cfg) {
  const double d = static_cast<double>(cfg.d);
  const double B = static_cast<double>(cfg.epoch_length());
  const double logd = std::log(d);
  return cfg.c_eps * (B * B * logd / (d * d)) * std::max(std::fabs(s), std::sqrt(logd / B));
}

/// Linearized per-epoch drift: (1 + kappa B / d) s.
inline double drift_b(double s, const ComparisonConfig& cfg) {
  return (1.0 + cfg.kappa * static_cast<double>(cfg.epoch_length()) / static_cast<double>(cfg.d)) * s;
}

/// Batch kernel: B independent increments, all evaluated at the frozen state.
/// The output is a comparison device and is not clamped to the state space.
inline StateY batch_kernel_Q(StateY y, const ComparisonConfig& cfg, RandomStream& stream) {
  y = clamp_to_state_space(y);
  const std::int64_t B = cfg.epoch_length();
  double sum_dr2 = 0.0, sum_ds = 0.0;
  for (std::int64_t k = 0; k < B; ++k) {
    const auto [u, v] = sample_uv_marginal(cfg.d, stream);
    const StateIncrement inc = kernel_increment(y, u, v);
    sum_dr2 += inc.dr2;
    sum_ds += inc.ds;
  }
  const double inv_d = 1.0 / static_cast<double>(cfg.d);
  return StateY{y.r2 + sum_dr2 * inv_d, y.s + sum_ds * inv_d};
}

/// Deterministic core of the thresholded-Gaussian kernel, for a given
/// standard-normal draw g. sigma0 is the raw per-increment deviation at the
/// frozen state; the sqrt(B)/d factor converts to chain units.
inline double hat_s_step_with_g(double s_hat, double sigma0, const ComparisonConfig& cfg, double g) {
  const double B = static_cast<double>(cfg.epoch_length());
  const double noise = std::sqrt(B) * sigma0 / static_cast<double>(cfg.d);
  return soft_threshold(drift_b(s_hat, cfg) + noise * g, epsilon_err(s_hat, cfg));
}

inline double hat_s_step(double s_hat, StateY y, const ComparisonConfig& cfg, RandomStream& stream) {
  return hat_s_step_with_g(s_hat, std::sqrt(beta_variance(y)), cfg, stream.normal());
}

struct DominanceCheck {
  bool dominates = false;
  double gap = 0.0;  // sup_a (F_X(a) - F_Y(a))
};

/// CDF criterion for "X stochastically dominates Y up to error delta":
/// F_X <= F_Y + delta pointwise, applied to empirical CDFs.
inline DominanceCheck empirical_dominance_check(const std::vector<double>& samples_x,
                                                const std::vector<double>& samples_y, double delta) {
  if (samples_x.empty() || samples_y.empty()) {
    throw std::invalid_argument("empirical_dominance_check: empty sample");
  }
  if (delta < 0.0 || delta >= 1.0) throw std::invalid_argument("empirical_dominance_check: delta in [0,1)");
  const double gap = one_sided_cdf_gap(samples_x, samples_y);
  return {gap <= delta, gap};
}

enum class ProbeMode { Coupled, Idealized };

struct EpochMoments {
  std::int64_t k = 0;
  double m2 = 0.0;
  double m2_se = 0.0;
  double m4 = 0.0;
  double m4_se = 0.0;
};

struct MomentProbeResult {
  std::vector<EpochMoments> per_epoch;
  double final_ratio = 0.0;        // m2_T / sqrt(m4_T)
  double min_increase_lcb = 0.0;   // min over k of the bootstrap 2.5% bound of m2_{k+1} - m2_k
  std::int64_t paths = 0;
  std::int64_t epochs = 0;
  ProbeMode mode = ProbeMode::Idealized;
};

/// Simulates the thresholded comparison process from s_hat = 0 and reports
/// per-epoch second/fourth moments with bootstrap standard errors.
///
/// Coupled mode re-freezes the noise scale each epoch from a genuine chain
/// advanced alongside (frozen for good once |s| reaches gamma1); idealized
/// mode keeps y = (1, 0) throughout, isolating the moment recursion.
inline MomentProbeResult moment_recursion_probe(const ComparisonConfig& cfg, ProbeMode mode,
                                                std::int64_t epochs, std::int64_t paths,
                                                SeededStream stream) {
  cfg.validate();
  if (epochs < 1 || paths < 1) throw std::invalid_argument("moment_recursion_probe: need epochs, paths >= 1");
  const std::int64_t B = cfg.epoch_length();
  const double sigma0_idealized = std::sqrt(beta_variance(StateY{1.0, 0.0}));

  // sq[path * epochs + k] = s_hat^2 after epoch k+1.
  std::vector<double> sq(static_cast<size_t>(paths) * static_cast<size_t>(epochs));
  parallel_for(paths, [&](std::int64_t p) {
    RandomStream rs(stream.derived(static_cast<std::uint64_t>(p)));
    double s_hat = 0.0;
    StateY y{1.0, 0.0};
    bool frozen = (mode == ProbeMode::Idealized);
    double sigma0 = sigma0_idealized;
    for (std::int64_t k = 0; k < epochs; ++k) {
      if (mode == ProbeMode::Coupled) {
        sigma0 = std::sqrt(beta_variance(y));
        if (!frozen) {
          for (std::int64_t t = 0; t < B; ++t) {
            const auto [u, v] = sample_uv_marginal(cfg.d, rs);
            y = state_step(y, u, v, cfg.d);
            if (std::fabs(y.s) >= cfg.gamma1) {
              frozen = true;
              break;
            }
          }
        }
      }
      s_hat = hat_s_step_with_g(s_hat, sigma0, cfg, rs.normal());
      sq[static_cast<size_t>(p) * static_cast<size_t>(epochs) + static_cast<size_t>(k)] = s_hat * s_hat;
    }
  });

  MomentProbeResult result;
  result.paths = paths;
  result.epochs = epochs;
  result.mode = mode;

  std::vector<double> m2(static_cast<size_t>(epochs), 0.0), m4(static_cast<size_t>(epochs), 0.0);
  for (std::int64_t p = 0; p < paths; ++p) {
    for (std::int64_t k = 0; k < epochs; ++k) {
      const double v = sq[static_cast<size_t>(p) * static_cast<size_t>(epochs) + static_cast<size_t>(k)];
      m2[static_cast<size_t>(k)] += v;
      m4[static_cast<size_t>(k)] += v * v;
    }
  }
  for (std::int64_t k = 0; k < epochs; ++k) {
    m2[static_cast<size_t>(k)] /= static_cast<double>(paths);
    m4[static_cast<size_t>(k)] /= static_cast<double>(paths);
  }

  // Paired bootstrap over paths: per-epoch SEs plus a lower confidence bound
  // on each consecutive increase of m2.
  const int n_boot = 200;
  std::vector<std::vector<double>> boot_m2(static_cast<size_t>(epochs)),
      boot_m4(static_cast<size_t>(epochs));
  for (auto& v : boot_m2) v.reserve(n_boot);
  for (auto& v : boot_m4) v.reserve(n_boot);
  RandomStream boot_rs(stream.derived(0x626f6f74ULL));
  std::vector<double> acc2(static_cast<size_t>(epochs)), acc4(static_cast<size_t>(epochs));
  for (int b = 0; b < n_boot; ++b) {
    std::fill(acc2.begin(), acc2.end(), 0.0);
    std::fill(acc4.begin(), acc4.end(), 0.0);
    for (std::int64_t i = 0; i < paths; ++i) {
      const auto p = static_cast<std::int64_t>(boot_rs.uniform() * static_cast<double>(paths));
      const size_t base = static_cast<size_t>(std::min(p, paths - 1)) * static_cast<size_t>(epochs);
      for (std::int64_t k = 0; k < epochs; ++k) {
        const double v = sq[base + static_cast<size_t>(k)];
        acc2[static_cast<size_t>(k)] += v;
        acc4[static_cast<size_t>(k)] += v * v;
      }
    }
    for (std::int64_t k = 0; k < epochs; ++k) {
      boot_m2[static_cast<size_t>(k)].push_back(acc2[static_cast<size_t>(k)] / static_cast<double>(paths));
      boot_m4[static_cast<size_t>(k)].push_back(acc4[static_cast<size_t>(k)] / static_cast<double>(paths));
    }
  }

  result.per_epoch.resize(static_cast<size_t>(epochs));
  for (std::int64_t k = 0; k < epochs; ++k) {
    auto& row = result.per_epoch[static_cast<size_t>(k)];
    row.k = k + 1;
    row.m2 = m2[static_cast<size_t>(k)];
    row.m4 = m4[static_cast<size_t>(k)];
    row.m2_se = std::sqrt(moments_of(boot_m2[static_cast<size_t>(k)]).variance);
    row.m4_se = std::sqrt(moments_of(boot_m4[static_cast<size_t>(k)]).variance);
  }

  double min_lcb = std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k < epochs; ++k) {
    std::vector<double> diffs(n_boot);
    for (int b = 0; b < n_boot; ++b) {
      const double prev = k == 0 ? 0.0 : boot_m2[static_cast<size_t>(k - 1)][static_cast<size_t>(b)];
      diffs[static_cast<size_t>(b)] = boot_m2[static_cast<size_t>(k)][static_cast<size_t>(b)] - prev;
    }
    std::sort(diffs.begin(), diffs.end());
    min_lcb = std::min(min_lcb, percentile_sorted(diffs, 0.025));
  }
  result.min_increase_lcb = min_lcb;

  const double m4_last = m4[static_cast<size_t>(epochs - 1)];
  result.final_ratio = m4_last > 0.0 ? m2[static_cast<size_t>(epochs - 1)] / std::sqrt(m4_last) : 0.0;
  return result;
}

struct OneStepDominanceReport {
  double gap = 0.0;            // achieved sup(F_chain^2 - F_surrogate^2)
  double delta_budget = 0.0;
  bool pass = false;
  double reference_delta = 0.0;    // theoretical error level 1/d^2 + 1/sqrt(B)
  double permutation_floor = 0.0;  // 95th percentile of the label-shuffled gap
  double control_gap = 0.0;    // surrogate with doubled noise must lose
  bool control_fails = true;
  std::int64_t paths = 0;
};

/// One epoch of the true chain against the thresholded Gaussian surrogate,
/// both squared, compared through the empirical CDF criterion.
inline OneStepDominanceReport one_step_dominance_probe(StateY y, const ComparisonConfig& cfg,
                                                       std::int64_t paths, SeededStream stream,
                                                       double delta_budget = 0.05) {
  cfg.validate();
  if (paths < 2) throw std::invalid_argument("one_step_dominance_probe: need paths >= 2");
  y = clamp_to_state_space(y);
  const double d = static_cast<double>(cfg.d);
  const double margin = cfg.domain_margin_scale * std::log(d) / std::sqrt(d);
  if (std::fabs(y.r2 - 1.0) > margin || std::fabs(y.s) >= cfg.gamma1) {
    throw std::invalid_argument("one_step_dominance_probe: state outside the comparison region");
  }

  const std::int64_t B = cfg.epoch_length();
  const double sigma0 = std::sqrt(beta_variance(y));
  const double noise = std::sqrt(static_cast<double>(B)) * sigma0 / d;
  const double shift = y.s + static_cast<double>(B) / d * drift(y).ds;
  const double eps = epsilon_err(y.s, cfg);

  std::vector<double> chain_sq(static_cast<size_t>(paths));
  std::vector<double> surr_sq(static_cast<size_t>(paths));
  std::vector<double> control_sq(static_cast<size_t>(paths));
  parallel_for(paths, [&](std::int64_t p) {
    RandomStream rs(stream.derived(static_cast<std::uint64_t>(p)));
    StateY yc = y;
    for (std::int64_t t = 0; t < B; ++t) {
      const auto [u, v] = sample_uv_marginal(cfg.d, rs);
      yc = state_step(yc, u, v, cfg.d);
    }
    chain_sq[static_cast<size_t>(p)] = yc.s * yc.s;
    const double g = rs.normal();
    const double s1 = soft_threshold(shift + noise * g, eps);
    const double s2 = soft_threshold(shift + 2.0 * noise * g, eps);
    surr_sq[static_cast<size_t>(p)] = s1 * s1;
    control_sq[static_cast<size_t>(p)] = s2 * s2;
  });

  OneStepDominanceReport report;
  report.paths = paths;
  report.delta_budget = delta_budget;
  report.reference_delta = 1.0 / (d * d) + 1.0 / std::sqrt(static_cast<double>(B));
  report.gap = one_sided_cdf_gap(chain_sq, surr_sq);
  report.pass = report.gap <= delta_budget;
  report.control_gap = one_sided_cdf_gap(chain_sq, control_sq);
  report.control_fails = report.control_gap > delta_budget;

  // Noise floor: gap distribution when the two labels carry the same law.
  {
    std::vector<double> pooled;
    pooled.reserve(chain_sq.size() + surr_sq.size());
    pooled.insert(pooled.end(), chain_sq.begin(), chain_sq.end());
    pooled.insert(pooled.end(), surr_sq.begin(), surr_sq.end());
    RandomStream rs(stream.derived(0x7065726dULL));
    const int reps = 100;
    std::vector<double> gaps(reps);
    std::vector<double> a(chain_sq.size()), b(surr_sq.size());
    for (int rep = 0; rep < reps; ++rep) {
      for (size_t i = pooled.size() - 1; i > 0; --i) {
        const auto j = static_cast<size_t>(rs.uniform() * static_cast<double>(i + 1));
        std::swap(pooled[i], pooled[std::min(j, i)]);
      }
      std::copy(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(a.size()), a.begin());
      std::copy(pooled.begin() + static_cast<std::ptrdiff_t>(a.size()), pooled.end(), b.begin());
      gaps[static_cast<size_t>(rep)] = one_sided_cdf_gap(a, b);
    }
    std::sort(gaps.begin(), gaps.end());
    report.permutation_floor = percentile_sorted(gaps, 0.95);
  }
  return report;
}

}  // namespace rkpr
