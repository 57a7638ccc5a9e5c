#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkpr/dominance.hpp"
#include "rkpr/io.hpp"
#include "rkpr/parallel.hpp"
#include "rkpr/retrieval.hpp"
#include "rkpr/stats.hpp"
#include "rkpr/trajectory.hpp"
#include "rkpr/version.hpp"

namespace rkpr {

/// Recorded-grid scan for the three phase-boundary steps, in order.
inline StoppingTimes detect_stopping_times(const Trajectory& traj, const StoppingConfig& cfg) {
  if (traj.states.empty()) throw std::invalid_argument("detect_stopping_times: empty trajectory");
  const double margin = radius_margin(traj.d, cfg);
  StoppingTimes t;
  for (size_t i = 0; i < traj.states.size(); ++i) {
    const StateY& y = traj.states[i];
    const std::int64_t step = traj.steps[i];
    if (!t.tau1 && std::fabs(y.r2 - 1.0) <= margin) t.tau1 = step;
    if (t.tau1 && !t.tau2a && std::fabs(y.s) >= cfg.gamma1) t.tau2a = step;
    if (t.tau2a && !t.tau2b && lyapunov(y) <= cfg.gamma2) t.tau2b = step;
  }
  return t;
}

struct DoobPaths {
  std::vector<StateIncrement> drift_path;  // cumulative conditional means
  std::vector<StateIncrement> fluct_path;  // residual martingale part
};

/// Splits a densely recorded trajectory into cumulative drift and
/// fluctuation, with y_k = y_0 + drift_k + fluct_k holding exactly.
inline DoobPaths doob_decompose(const Trajectory& traj) {
  if (traj.states.empty()) throw std::invalid_argument("doob_decompose: empty trajectory");
  if (traj.record_every != 1) {
    throw std::invalid_argument("doob_decompose: trajectory must be recorded at every step");
  }
  for (size_t i = 0; i < traj.steps.size(); ++i) {
    if (traj.steps[i] != static_cast<std::int64_t>(i)) {
      throw std::invalid_argument("doob_decompose: trajectory steps are not contiguous");
    }
  }
  const double inv_d = 1.0 / static_cast<double>(traj.d);
  DoobPaths paths;
  paths.drift_path.resize(traj.states.size());
  paths.fluct_path.resize(traj.states.size());
  double acc_r2 = 0.0, acc_s = 0.0;
  paths.drift_path[0] = {0.0, 0.0};
  paths.fluct_path[0] = {0.0, 0.0};
  for (size_t k = 1; k < traj.states.size(); ++k) {
    const DriftVector v = drift(traj.states[k - 1]);
    acc_r2 += v.dr2 * inv_d;
    acc_s += v.ds * inv_d;
    paths.drift_path[k] = {acc_r2, acc_s};
    paths.fluct_path[k] = {traj.states[k].r2 - traj.states[0].r2 - acc_r2,
                           traj.states[k].s - traj.states[0].s - acc_s};
  }
  return paths;
}

/// Per-step contraction of psi over the tail of a trajectory, from a
/// least-squares fit of log psi against the step index.
inline double fit_phase3_rate(const Trajectory& traj, std::int64_t from_step) {
  std::vector<double> xs, ys;
  for (size_t i = 0; i < traj.states.size(); ++i) {
    if (traj.steps[i] < from_step) continue;
    const double psi = lyapunov(traj.states[i]);
    if (psi <= 0.0) continue;
    xs.push_back(static_cast<double>(traj.steps[i]));
    ys.push_back(std::log(psi));
  }
  if (static_cast<std::int64_t>(xs.size()) < 5 * traj.d) {
    throw std::invalid_argument("fit_phase3_rate: fewer than 5d usable recorded steps in the tail");
  }
  return std::exp(linear_slope(xs, ys));
}

/// Largest |r^2 - 1| over a window of recorded states starting at from_step.
inline double sup_radius_deviation(const Trajectory& traj, std::int64_t from_step, std::int64_t horizon) {
  double sup = 0.0;
  for (size_t i = 0; i < traj.states.size(); ++i) {
    if (traj.steps[i] < from_step || traj.steps[i] > from_step + horizon) continue;
    sup = std::max(sup, std::fabs(traj.states[i].r2 - 1.0));
  }
  return sup;
}

struct RadiusMeanCheck {
  std::int64_t k = 0;
  double empirical = 0.0;
  double closed_form = 0.0;
  double z = 0.0;
};

struct RadiusProbeReport {
  std::int64_t d = 0;
  std::int64_t runs = 0;
  double r0_sq = 0.0;
  std::int64_t horizon = 0;
  std::vector<RadiusMeanCheck> mean_checks;
  double multiplier_threshold = 10.0;
  double fraction_exceeding = 0.0;
  double multiplier_p50 = 0.0;
  double multiplier_p99 = 0.0;
  double multiplier_max = 0.0;
  std::int64_t runs_without_tau1 = 0;
};

/// Mean recursion of r^2 - 1 at fixed checkpoints plus per-run sup-deviation
/// of the radius over a post-tau1 window, as multiples of log d / sqrt(d).
inline RadiusProbeReport radius_concentration_probe(std::int64_t d, std::int64_t runs, double r0_sq,
                                                    SeededStream stream,
                                                    std::int64_t horizon = 0,
                                                    std::vector<std::int64_t> checkpoints = {50, 100, 200},
                                                    double multiplier_threshold = 10.0) {
  if (runs < 2) throw std::invalid_argument("radius_concentration_probe: need runs >= 2");
  if (horizon <= 0) {
    horizon = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(d) * std::log(static_cast<double>(d))));
  }
  std::sort(checkpoints.begin(), checkpoints.end());
  const std::int64_t tau1_budget = 20 * horizon + checkpoints.back();
  const std::int64_t max_steps = tau1_budget + horizon;
  const double margin = std::log(static_cast<double>(d)) / std::sqrt(static_cast<double>(d));

  std::vector<std::vector<double>> at_checkpoint(checkpoints.size(),
                                                 std::vector<double>(static_cast<size_t>(runs)));
  std::vector<double> multipliers(static_cast<size_t>(runs), -1.0);

  parallel_for(runs, [&](std::int64_t run) {
    RandomStream rs(stream.derived(static_cast<std::uint64_t>(run)));
    StateY y{r0_sq, 0.0};
    std::optional<std::int64_t> tau1;
    double sup = 0.0;
    for (std::int64_t k = 1; k <= max_steps; ++k) {
      const auto [u, v] = sample_uv_marginal(d, rs);
      y = state_step(y, u, v, d);
      for (size_t c = 0; c < checkpoints.size(); ++c) {
        if (checkpoints[c] == k) at_checkpoint[c][static_cast<size_t>(run)] = y.r2 - 1.0;
      }
      if (!tau1 && std::fabs(y.r2 - 1.0) <= margin) tau1 = k;
      if (tau1) {
        if (k - *tau1 <= horizon) sup = std::max(sup, std::fabs(y.r2 - 1.0));
        if (k - *tau1 >= horizon && k >= checkpoints.back()) break;
      }
    }
    if (tau1) multipliers[static_cast<size_t>(run)] = sup / margin;
  });

  RadiusProbeReport report;
  report.d = d;
  report.runs = runs;
  report.r0_sq = r0_sq;
  report.horizon = horizon;
  report.multiplier_threshold = multiplier_threshold;
  for (size_t c = 0; c < checkpoints.size(); ++c) {
    const Moments m = moments_of(at_checkpoint[c]);
    RadiusMeanCheck check;
    check.k = checkpoints[c];
    check.empirical = m.mean;
    check.closed_form = (r0_sq - 1.0) * std::pow(1.0 - 1.0 / static_cast<double>(d),
                                                 static_cast<double>(checkpoints[c]));
    check.z = z_score(m, check.closed_form);
    report.mean_checks.push_back(check);
  }
  std::vector<double> valid;
  for (double m : multipliers) {
    if (m < 0.0) ++report.runs_without_tau1;
    else valid.push_back(m);
  }
  if (!valid.empty()) {
    std::sort(valid.begin(), valid.end());
    report.multiplier_p50 = percentile_sorted(valid, 0.5);
    report.multiplier_p99 = percentile_sorted(valid, 0.99);
    report.multiplier_max = valid.back();
    std::int64_t exceed = 0;
    for (double m : valid) {
      if (m > multiplier_threshold) ++exceed;
    }
    report.fraction_exceeding = static_cast<double>(exceed) / static_cast<double>(valid.size());
  }
  return report;
}

struct SweepRow {
  std::int64_t d = 0;
  std::int64_t runs = 0;
  double success_fraction = 0.0;
  double median_tau2b = 0.0;
  double tau2b_over_dlogd = 0.0;
};

struct SweepOptions {
  double eta0 = 1.0;
  double budget_factor = 50.0;   // step budget = budget_factor * d * log d
  double success_psi = 1e-6;
  bool init_at_signal = false;   // start every run at x* (fixture mode)
  StoppingConfig stopping;
};

/// Full-dimensional SGD from random unit initializations: success fraction
/// within the step budget and the scaling of the median tau2b.
inline std::vector<SweepRow> sweep_convergence(const std::vector<std::int64_t>& dims,
                                               std::int64_t runs_per_dim, SeededStream stream,
                                               const SweepOptions& opts = {}) {
  if (dims.empty()) throw std::invalid_argument("sweep_convergence: no dimensions");
  if (runs_per_dim < 1) throw std::invalid_argument("sweep_convergence: runs must be >= 1");
  std::vector<SweepRow> rows;
  for (size_t dim_index = 0; dim_index < dims.size(); ++dim_index) {
    const std::int64_t d = dims[dim_index];
    const double dlogd = static_cast<double>(d) * std::log(static_cast<double>(d));
    const auto budget = static_cast<std::int64_t>(std::ceil(opts.budget_factor * dlogd));

    SignalProblem problem;
    problem.x_star.assign(static_cast<size_t>(d), 0.0);
    problem.x_star[0] = 1.0;

    std::vector<std::uint8_t> success(static_cast<size_t>(runs_per_dim), 0);
    std::vector<double> tau2b(static_cast<size_t>(runs_per_dim),
                              std::numeric_limits<double>::quiet_NaN());
    const SeededStream dim_stream = stream.derived(0x73776565ULL + dim_index);
    parallel_for(runs_per_dim, [&](std::int64_t run) {
      RandomStream init_rs(dim_stream.derived(static_cast<std::uint64_t>(2 * run)));
      SgdConfig cfg;
      cfg.eta0 = opts.eta0;
      cfg.max_steps = budget;
      cfg.init = opts.init_at_signal ? problem.x_star : random_init(d, 1.0, init_rs);
      cfg.record_every = budget;  // stopping times are tracked exactly anyway
      cfg.stop_psi = opts.success_psi;
      cfg.stopping = opts.stopping;
      const Trajectory traj =
          run_sgd(problem, cfg, dim_stream.derived(static_cast<std::uint64_t>(2 * run + 1)));
      success[static_cast<size_t>(run)] = traj.success_step.has_value() ? 1 : 0;
      if (traj.stopping.tau2b) tau2b[static_cast<size_t>(run)] = static_cast<double>(*traj.stopping.tau2b);
    });

    SweepRow row;
    row.d = d;
    row.runs = runs_per_dim;
    std::int64_t ok = 0;
    std::vector<double> taus;
    for (std::int64_t run = 0; run < runs_per_dim; ++run) {
      ok += success[static_cast<size_t>(run)];
      if (!std::isnan(tau2b[static_cast<size_t>(run)])) taus.push_back(tau2b[static_cast<size_t>(run)]);
    }
    row.success_fraction = static_cast<double>(ok) / static_cast<double>(runs_per_dim);
    row.median_tau2b = taus.empty() ? std::numeric_limits<double>::quiet_NaN() : median(taus);
    row.tau2b_over_dlogd = row.median_tau2b / dlogd;
    rows.push_back(row);
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "d,runs,success_fraction,median_tau2b,median_tau2b_over_dlogd\n";
  for (const SweepRow& row : rows) {
    out += std::to_string(row.d) + "," + std::to_string(row.runs) + "," +
           fmt_g17(row.success_fraction) + "," + fmt_g17(row.median_tau2b) + "," +
           fmt_g17(row.tau2b_over_dlogd) + "\n";
  }
  return out;
}

struct DriftGridCheck {
  StateY y;
  double mean_dr2 = 0.0, z_dr2 = 0.0;
  double mean_ds = 0.0, z_ds = 0.0;
};

struct AngleIdentityCheck {
  double theta = 0.0;
  double z_prob = 0.0;
  double z_a1sq = 0.0;
  double z_a1a2 = 0.0;
};

struct McCheckReport {
  std::int64_t d = 0;
  std::int64_t samples = 0;
  std::vector<DriftGridCheck> grid;
  std::vector<AngleIdentityCheck> identities;
  double max_abs_z = 0.0;
};

inline std::vector<StateY> default_drift_grid() {
  std::vector<StateY> grid;
  for (double r2 : {0.5, 1.0, 1.5}) {
    const double r = std::sqrt(r2);
    for (double s : {-0.5, 0.0, 0.5 * r}) grid.push_back(StateY{r2, s});
  }
  return grid;
}

/// Monte Carlo audit of the closed forms: grid drift against sphere-marginal
/// increments, and the mismatch-event identities against Gaussian draws.
inline McCheckReport mc_drift_check(const std::vector<StateY>& grid, std::int64_t d,
                                    std::int64_t samples, SeededStream stream,
                                    const std::vector<double>& thetas = {kPi / 6.0, kPi / 3.0,
                                                                         kPi / 2.0, 2.0 * kPi / 3.0}) {
  if (samples < 2) throw std::invalid_argument("mc_drift_check: need samples >= 2");
  McCheckReport report;
  report.d = d;
  report.samples = samples;
  report.grid.resize(grid.size());
  report.identities.resize(thetas.size());

  parallel_for(static_cast<std::int64_t>(grid.size()), [&](std::int64_t gi) {
    const StateY y = grid[static_cast<size_t>(gi)];
    RandomStream rs(stream.derived(static_cast<std::uint64_t>(gi)));
    double sum1 = 0.0, sumsq1 = 0.0, sum2 = 0.0, sumsq2 = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
      const auto [u, v] = sample_uv_marginal(d, rs);
      const StateIncrement inc = kernel_increment(y, u, v);
      sum1 += inc.dr2;
      sumsq1 += inc.dr2 * inc.dr2;
      sum2 += inc.ds;
      sumsq2 += inc.ds * inc.ds;
    }
    const double n = static_cast<double>(samples);
    const DriftVector v = drift(y);
    DriftGridCheck check;
    check.y = y;
    check.mean_dr2 = sum1 / n;
    check.mean_ds = sum2 / n;
    const double se1 = std::sqrt(std::max(sumsq1 / n - check.mean_dr2 * check.mean_dr2, 0.0) / n);
    const double se2 = std::sqrt(std::max(sumsq2 / n - check.mean_ds * check.mean_ds, 0.0) / n);
    check.z_dr2 = se1 == 0.0 ? (check.mean_dr2 == v.dr2 ? 0.0 : std::numeric_limits<double>::infinity())
                             : (check.mean_dr2 - v.dr2) / se1;
    check.z_ds = se2 == 0.0 ? (check.mean_ds == v.ds ? 0.0 : std::numeric_limits<double>::infinity())
                            : (check.mean_ds - v.ds) / se2;
    report.grid[static_cast<size_t>(gi)] = check;
  });

  parallel_for(static_cast<std::int64_t>(thetas.size()), [&](std::int64_t ti) {
    const double theta = thetas[static_cast<size_t>(ti)];
    RandomStream rs(stream.derived(0x616e676cULL + static_cast<std::uint64_t>(ti)));
    double s_ind = 0.0, s_usq = 0.0, sq_usq = 0.0, s_uv = 0.0, sq_uv = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
      const double u = rs.normal();
      const double v = rs.normal();
      const bool in_event = event_A(theta, u, v);
      if (in_event) {
        s_ind += 1.0;
        s_usq += u * u;
        sq_usq += u * u * u * u;
        s_uv += u * v;
        sq_uv += u * v * u * v;
      }
    }
    const double n = static_cast<double>(samples);
    AngleIdentityCheck check;
    check.theta = theta;
    const double p_hat = s_ind / n;
    const double se_p = std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / n);
    check.z_prob = se_p == 0.0 ? (p_hat == prob_A(theta) ? 0.0 : std::numeric_limits<double>::infinity())
                               : (p_hat - prob_A(theta)) / se_p;
    const double m_usq = s_usq / n;
    const double se_usq = std::sqrt(std::max(sq_usq / n - m_usq * m_usq, 0.0) / n);
    check.z_a1sq = (m_usq - moment_a1sq_A(theta)) / se_usq;
    const double m_uv = s_uv / n;
    const double se_uv = std::sqrt(std::max(sq_uv / n - m_uv * m_uv, 0.0) / n);
    check.z_a1a2 = (m_uv - moment_a1a2_A(theta)) / se_uv;
    report.identities[static_cast<size_t>(ti)] = check;
  });

  for (const auto& c : report.grid) {
    report.max_abs_z = std::max({report.max_abs_z, std::fabs(c.z_dr2), std::fabs(c.z_ds)});
  }
  for (const auto& c : report.identities) {
    report.max_abs_z =
        std::max({report.max_abs_z, std::fabs(c.z_prob), std::fabs(c.z_a1sq), std::fabs(c.z_a1a2)});
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON report builders. Key order is fixed, all floats go through fmt_g17,
// so identical inputs produce identical bytes.

inline Json stopping_json(const StoppingTimes& t) {
  Json j = Json::object();
  j.put("tau1", t.tau1 ? Json::of(*t.tau1) : Json::of(std::int64_t{-1}));
  j.put("tau2a", t.tau2a ? Json::of(*t.tau2a) : Json::of(std::int64_t{-1}));
  j.put("tau2b", t.tau2b ? Json::of(*t.tau2b) : Json::of(std::int64_t{-1}));
  return j;
}

inline std::string mc_check_json(const McCheckReport& report, std::uint64_t seed) {
  Json config = Json::object();
  config.put("d", report.d);
  config.put("samples", report.samples);
  config.put("seed", seed);
  Json grid = Json::array();
  for (const auto& c : report.grid) {
    Json row = Json::object();
    row.put("r2", c.y.r2);
    row.put("s", c.y.s);
    row.put("mean_alpha", c.mean_dr2);
    row.put("alpha_bar", drift(c.y).dr2);
    row.put("z_alpha", c.z_dr2);
    row.put("mean_beta", c.mean_ds);
    row.put("beta_bar", drift(c.y).ds);
    row.put("z_beta", c.z_ds);
    grid.push_json(std::move(row));
  }
  Json identities = Json::array();
  for (const auto& c : report.identities) {
    Json row = Json::object();
    row.put("theta", c.theta);
    row.put("z_prob", c.z_prob);
    row.put("z_a1sq", c.z_a1sq);
    row.put("z_a1a2", c.z_a1a2);
    identities.push_json(std::move(row));
  }
  Json root = Json::object();
  root.put_json("config", std::move(config));
  root.put_json("drift_grid", std::move(grid));
  root.put_json("angle_identities", std::move(identities));
  root.put("max_abs_z", report.max_abs_z);
  root.put("version", kVersion);
  return root.dump();
}

inline Json comparison_config_json(const ComparisonConfig& cfg, std::uint64_t seed) {
  Json j = Json::object();
  j.put("d", cfg.d);
  j.put("B", cfg.epoch_length());
  j.put("kappa", cfg.kappa);
  j.put("c_eps", cfg.c_eps);
  j.put("gamma1", cfg.gamma1);
  j.put("seed", seed);
  // The surrogate noise scale: Gaussian-limit Var of the raw s-increment,
  // converted to chain units as sqrt(B) sigma0 / d. The true chain draws
  // sphere marginals, an O(1/d) mismatch absorbed by the delta budget.
  j.put("sigma_convention", "gaussian-limit, chain units: sqrt(B)*sigma0/d");
  return j;
}

inline std::string dominance_json(const OneStepDominanceReport& report, const ComparisonConfig& cfg,
                                  StateY y, std::uint64_t seed) {
  Json config = comparison_config_json(cfg, seed);
  config.put("paths", report.paths);
  config.put("r2", y.r2);
  config.put("s", y.s);
  Json dom = Json::object();
  dom.put("gap", report.gap);
  dom.put("delta_budget", report.delta_budget);
  dom.put("pass", report.pass);
  Json control = Json::object();
  control.put("gap", report.control_gap);
  control.put("fails", report.control_fails);
  Json root = Json::object();
  root.put_json("config", std::move(config));
  root.put_json("dominance", std::move(dom));
  root.put_json("negative_control", std::move(control));
  root.put("reference_delta", report.reference_delta);
  root.put("permutation_floor", report.permutation_floor);
  root.put("version", kVersion);
  return root.dump();
}

inline std::string moments_json(const MomentProbeResult& result, const ComparisonConfig& cfg,
                                std::uint64_t seed) {
  Json config = comparison_config_json(cfg, seed);
  config.put("paths", result.paths);
  config.put("epochs", result.epochs);
  config.put("mode", result.mode == ProbeMode::Coupled ? "coupled" : "idealized");
  Json per_epoch = Json::array();
  for (const auto& row : result.per_epoch) {
    Json j = Json::object();
    j.put("k", row.k);
    j.put("m2", row.m2);
    j.put("m2_se", row.m2_se);
    j.put("m4", row.m4);
    j.put("m4_se", row.m4_se);
    per_epoch.push_json(std::move(j));
  }
  Json root = Json::object();
  root.put_json("config", std::move(config));
  root.put_json("per_epoch", std::move(per_epoch));
  root.put("ratio_m2_over_sqrt_m4", result.final_ratio);
  root.put("min_m2_increase_lcb", result.min_increase_lcb);
  root.put("version", kVersion);
  return root.dump();
}

inline std::string radius_probe_json(const RadiusProbeReport& report, std::uint64_t seed) {
  Json config = Json::object();
  config.put("d", report.d);
  config.put("runs", report.runs);
  config.put("r0sq", report.r0_sq);
  config.put("horizon", report.horizon);
  config.put("seed", seed);
  Json mean_checks = Json::array();
  for (const auto& c : report.mean_checks) {
    Json j = Json::object();
    j.put("k", c.k);
    j.put("empirical", c.empirical);
    j.put("closed_form", c.closed_form);
    j.put("z", c.z);
    mean_checks.push_json(std::move(j));
  }
  Json sup = Json::object();
  sup.put("multiplier_threshold", report.multiplier_threshold);
  sup.put("fraction_exceeding", report.fraction_exceeding);
  sup.put("p50", report.multiplier_p50);
  sup.put("p99", report.multiplier_p99);
  sup.put("max", report.multiplier_max);
  sup.put("runs_without_tau1", report.runs_without_tau1);
  Json root = Json::object();
  root.put_json("config", std::move(config));
  root.put_json("mean_recursion", std::move(mean_checks));
  root.put_json("sup_deviation", std::move(sup));
  root.put("version", kVersion);
  return root.dump();
}

/// Single-run summary printed by the CLI `run` subcommand.
inline std::string run_report_json(const Trajectory& traj, const SgdConfig& cfg,
                                   const std::string& init_kind, std::uint64_t seed) {
  Json config = Json::object();
  config.put("d", traj.d);
  config.put("eta0", cfg.eta0);
  config.put("init", init_kind);
  config.put("max_steps", cfg.max_steps);
  config.put("record_every", cfg.record_every);
  config.put("seed", seed);
  Json root = Json::object();
  root.put_json("config", std::move(config));
  root.put("steps_run", traj.steps_run);
  root.put("final_psi", traj.final_psi);
  root.put_json("stopping", stopping_json(traj.stopping));
  double rate = std::numeric_limits<double>::quiet_NaN();
  if (traj.stopping.tau2b && traj.record_every == 1) {
    try {
      rate = fit_phase3_rate(traj, *traj.stopping.tau2b);
    } catch (const std::invalid_argument&) {
    }
  }
  root.put_json("phase3_rate", std::isfinite(rate) ? Json::of(rate) : Json::null());
  root.put("version", kVersion);
  return root.dump();
}

}  // namespace rkpr
