#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "rkpr/flow.hpp"
#include "rkpr/harness.hpp"
#include "rkpr/io.hpp"
#include "rkpr/svg.hpp"
#include "rkpr/version.hpp"

namespace {

std::vector<std::int64_t> parse_dims(const std::string& csv) {
  std::vector<std::int64_t> dims;
  std::string token;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!token.empty()) dims.push_back(std::stoll(token));
      token.clear();
    } else {
      token += c;
    }
  }
  if (dims.empty()) throw CLI::ValidationError("--dims", "expected a comma-separated list");
  return dims;
}

std::vector<double> read_init_file(const std::string& path, std::int64_t d) {
  std::ifstream is(path);
  if (!is) throw CLI::ValidationError("--init", "cannot open " + path);
  std::vector<double> x;
  double value;
  while (is >> value) x.push_back(value);
  if (static_cast<std::int64_t>(x.size()) != d) {
    throw CLI::ValidationError("--init", "file holds " + std::to_string(x.size()) +
                                             " values, expected " + std::to_string(d));
  }
  return x;
}

// Flat `key = value` config file; values act as defaults, explicit flags win.
// Only keys that name an option of the chosen subcommand are injected.
std::vector<std::string> with_config_defaults(const CLI::App& app, std::vector<std::string> args) {
  std::string config_path;
  for (size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") config_path = args[i + 1];
  }
  if (config_path.empty() || args.empty()) return args;
  const CLI::App* sub = nullptr;
  for (const CLI::App* s : app.get_subcommands(nullptr)) {
    if (s->get_name() == args[0]) sub = s;
  }
  if (sub == nullptr) return args;
  std::vector<std::string> injected;
  for (const auto& [key, value] : rkpr::read_config_file(config_path)) {
    const std::string flag = "--" + key;
    if (sub->get_option_no_throw(flag) != nullptr) {
      injected.push_back(flag);
      injected.push_back(value);
    }
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online SGD / randomized Kaczmarz phase retrieval lab"};
  app.set_version_flag("--version", rkpr::kVersion);
  app.require_subcommand(1);

  // run ----------------------------------------------------------------
  struct {
    std::int64_t d = 128;
    double eta0 = 1.0;
    std::string init = "random";
    double init_norm = 1.0;
    std::int64_t max_steps = 0;
    std::int64_t record_every = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
  } run_opts;
  CLI::App* run = app.add_subcommand("run", "full-dimensional SGD trajectory");
  run->add_option("--d", run_opts.d, "ambient dimension");
  run->add_option("--eta0", run_opts.eta0, "step size numerator (step = eta0/d)");
  run->add_option("--init", run_opts.init, "random|minus-star|star|file:PATH");
  auto* init_norm_opt = run->add_option("--init-norm", run_opts.init_norm, "norm of the initial iterate");
  run->add_option("--max-steps", run_opts.max_steps, "step budget (default 50 d log d)");
  run->add_option("--record-every", run_opts.record_every, "trajectory thinning (default max(1, d/10))");
  run->add_option("--seed", run_opts.seed, "stream seed");
  run->add_option("--out", run_opts.out, "trajectory CSV path")->required();
  run->add_option("--config", run_opts.config, "flat key = value defaults file");

  // state-run ------------------------------------------------------------
  struct {
    std::int64_t d = 128;
    double r2 = 1.0;
    double s = 0.0;
    std::int64_t steps = 1000;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
  } state_opts;
  CLI::App* state_run = app.add_subcommand("state-run", "summary-state chain trajectory");
  state_run->add_option("--d", state_opts.d, "ambient dimension");
  state_run->add_option("--r2", state_opts.r2, "initial squared norm");
  state_run->add_option("--s", state_opts.s, "initial signal correlation");
  state_run->add_option("--steps", state_opts.steps, "number of steps");
  state_run->add_option("--seed", state_opts.seed, "stream seed");
  state_run->add_option("--out", state_opts.out, "trajectory CSV path")->required();
  state_run->add_option("--config", state_opts.config, "flat key = value defaults file");

  // drift-field ----------------------------------------------------------
  struct {
    double r2_min = 0.0, r2_max = 4.0, s_min = -1.5, s_max = 1.5;
    int n = 24;
    std::string out;
    std::string svg;
    std::string config;
  } field_opts;
  CLI::App* field = app.add_subcommand("drift-field", "drift vector field on a grid");
  field->add_option("--r2-min", field_opts.r2_min, "grid lower bound for r^2");
  field->add_option("--r2-max", field_opts.r2_max, "grid upper bound for r^2");
  field->add_option("--s-min", field_opts.s_min, "grid lower bound for s");
  field->add_option("--s-max", field_opts.s_max, "grid upper bound for s");
  field->add_option("--n", field_opts.n, "grid size per axis");
  field->add_option("--out", field_opts.out, "field CSV path")->required();
  field->add_option("--svg", field_opts.svg, "optional SVG rendering path");
  field->add_option("--config", field_opts.config, "flat key = value defaults file");

  // mc-check ---------------------------------------------------------------
  struct {
    std::int64_t d = 2000;
    std::int64_t samples = 1000000;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
  } mc_opts;
  CLI::App* mc = app.add_subcommand("mc-check", "Monte Carlo audit of the closed forms");
  mc->add_option("--d", mc_opts.d, "marginal dimension");
  mc->add_option("--samples", mc_opts.samples, "draws per grid state");
  mc->add_option("--seed", mc_opts.seed, "stream seed");
  mc->add_option("--out", mc_opts.out, "JSON report path")->required();
  mc->add_option("--config", mc_opts.config, "flat key = value defaults file");

  // dominance ----------------------------------------------------------------
  struct {
    std::int64_t d = 4096;
    std::int64_t paths = 2000;
    double gamma1 = 0.1;
    double kappa = 0.1;
    double c_eps = 0.01;
    double delta_budget = 0.05;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
  } dom_opts;
  CLI::App* dom = app.add_subcommand("dominance", "one-epoch dominance probe at (1, 0)");
  dom->add_option("--d", dom_opts.d, "ambient dimension");
  dom->add_option("--paths", dom_opts.paths, "number of simulated epochs per arm");
  dom->add_option("--gamma1", dom_opts.gamma1, "correlation threshold");
  dom->add_option("--kappa", dom_opts.kappa, "linearized drift constant");
  dom->add_option("--c-eps", dom_opts.c_eps, "constant in the threshold level");
  dom->add_option("--delta-budget", dom_opts.delta_budget, "allowed CDF gap");
  dom->add_option("--seed", dom_opts.seed, "stream seed");
  dom->add_option("--out", dom_opts.out, "JSON report path")->required();
  dom->add_option("--config", dom_opts.config, "flat key = value defaults file");

  // moments ---------------------------------------------------------------
  struct {
    std::int64_t d = 10000;
    std::int64_t paths = 10000;
    std::int64_t epochs = 0;
    std::string mode = "idealized";
    double kappa = 0.1;
    double gamma1 = 0.1;
    double c_eps = 0.01;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
  } mom_opts;
  CLI::App* mom = app.add_subcommand("moments", "comparison-process moment recursion probe");
  mom->add_option("--d", mom_opts.d, "ambient dimension");
  mom->add_option("--paths", mom_opts.paths, "number of independent paths");
  mom->add_option("--epochs", mom_opts.epochs, "epochs (default ceil((d/B) log d))");
  mom->add_option("--mode", mom_opts.mode, "coupled|idealized")
      ->check(CLI::IsMember({"coupled", "idealized"}));
  mom->add_option("--kappa", mom_opts.kappa, "linearized drift constant");
  mom->add_option("--gamma1", mom_opts.gamma1, "correlation threshold");
  mom->add_option("--c-eps", mom_opts.c_eps, "constant in the threshold level");
  mom->add_option("--seed", mom_opts.seed, "stream seed");
  mom->add_option("--out", mom_opts.out, "JSON report path")->required();
  mom->add_option("--config", mom_opts.config, "flat key = value defaults file");

  // sweep ---------------------------------------------------------------
  struct {
    std::string dims = "32,64,128,256";
    std::int64_t runs = 200;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
  } sweep_opts;
  CLI::App* sweep = app.add_subcommand("sweep", "convergence sweep over dimensions");
  sweep->add_option("--dims", sweep_opts.dims, "comma-separated dimensions");
  sweep->add_option("--runs", sweep_opts.runs, "runs per dimension");
  sweep->add_option("--seed", sweep_opts.seed, "stream seed");
  sweep->add_option("--out", sweep_opts.out, "CSV report path")->required();
  sweep->add_option("--config", sweep_opts.config, "flat key = value defaults file");

  // radius-probe -----------------------------------------------------------
  struct {
    std::int64_t d = 100;
    std::int64_t runs = 5000;
    double r0sq = 4.0;
    std::int64_t horizon = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
  } radius_opts;
  CLI::App* radius = app.add_subcommand("radius-probe", "radius recursion and concentration probe");
  radius->add_option("--d", radius_opts.d, "ambient dimension");
  radius->add_option("--runs", radius_opts.runs, "number of chains");
  radius->add_option("--r0sq", radius_opts.r0sq, "initial squared norm");
  radius->add_option("--horizon", radius_opts.horizon, "post-tau1 window (default d log d)");
  radius->add_option("--seed", radius_opts.seed, "stream seed");
  radius->add_option("--out", radius_opts.out, "JSON report path")->required();
  radius->add_option("--config", radius_opts.config, "flat key = value defaults file");

  // Explicit flags must override config-file values.
  for (CLI::App* sub : app.get_subcommands(nullptr)) {
    for (CLI::Option* opt : sub->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = with_config_defaults(app, std::move(args));
    std::vector<const char*> cargs;
    cargs.push_back(argv[0]);
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (run->parsed()) {
      const std::int64_t d = run_opts.d;
      rkpr::SignalProblem problem;
      problem.x_star.assign(static_cast<size_t>(d), 0.0);
      problem.x_star[0] = 1.0;

      rkpr::SgdConfig cfg;
      cfg.eta0 = run_opts.eta0;
      cfg.max_steps = run_opts.max_steps > 0
                          ? run_opts.max_steps
                          : static_cast<std::int64_t>(std::ceil(50.0 * d * std::log(double(d))));
      cfg.record_every = run_opts.record_every > 0 ? run_opts.record_every : std::max<std::int64_t>(1, d / 10);

      const rkpr::SeededStream stream{run_opts.seed, 0};
      if (run_opts.init == "random") {
        rkpr::RandomStream init_rs(stream.derived(0x696e6974ULL));
        cfg.init = rkpr::random_init(d, run_opts.init_norm, init_rs);
      } else if (run_opts.init == "star" || run_opts.init == "minus-star") {
        const double sign = run_opts.init == "star" ? 1.0 : -1.0;
        cfg.init.assign(static_cast<size_t>(d), 0.0);
        cfg.init[0] = sign * run_opts.init_norm;
      } else if (run_opts.init.rfind("file:", 0) == 0) {
        cfg.init = read_init_file(run_opts.init.substr(5), d);
        if (init_norm_opt->count() > 0) {
          const double n = rkpr::norm(cfg.init);
          if (n == 0.0) throw std::invalid_argument("init file holds a zero vector");
          for (double& xi : cfg.init) xi *= run_opts.init_norm / n;
        }
      } else {
        throw std::invalid_argument("unknown --init value: " + run_opts.init);
      }

      const rkpr::Trajectory traj = rkpr::run_sgd(problem, cfg, stream);
      rkpr::write_text_file(run_opts.out, rkpr::trajectory_csv(traj));
      std::cout << rkpr::run_report_json(traj, cfg, run_opts.init, run_opts.seed);
    } else if (state_run->parsed()) {
      const rkpr::Trajectory traj =
          rkpr::run_state_chain(rkpr::StateY{state_opts.r2, state_opts.s}, state_opts.d,
                                state_opts.steps, rkpr::SeededStream{state_opts.seed, 0});
      rkpr::write_text_file(state_opts.out, rkpr::trajectory_csv(traj));
      std::cout << "wrote " << state_opts.out << "\n";
    } else if (field->parsed()) {
      const auto grid = rkpr::vector_field_grid(field_opts.r2_min, field_opts.r2_max,
                                                field_opts.s_min, field_opts.s_max, field_opts.n);
      rkpr::write_text_file(field_opts.out, rkpr::field_csv(grid));
      if (!field_opts.svg.empty()) {
        // Overlay the integral curve started high on the radius axis with a
        // slight signal correlation, as in the phase-portrait view.
        double s0 = 0.05 * std::max(std::fabs(field_opts.s_min), std::fabs(field_opts.s_max));
        if (field_opts.s_max <= 0.0) s0 = -s0;
        double r2_0 = field_opts.r2_max;
        if (s0 * s0 > r2_0) s0 = 0.0;
        const rkpr::FlowPath curve = rkpr::integrate_drift(rkpr::StateY{r2_0, s0}, 1e-3, 30.0);
        rkpr::write_text_file(field_opts.svg, rkpr::vector_field_svg(grid, &curve));
      }
      std::cout << "wrote " << field_opts.out << "\n";
    } else if (mc->parsed()) {
      const rkpr::McCheckReport report =
          rkpr::mc_drift_check(rkpr::default_drift_grid(), mc_opts.d, mc_opts.samples,
                               rkpr::SeededStream{mc_opts.seed, 0});
      rkpr::write_text_file(mc_opts.out, rkpr::mc_check_json(report, mc_opts.seed));
      std::cout << "max |z| = " << rkpr::fmt_g17(report.max_abs_z) << "\n";
    } else if (dom->parsed()) {
      rkpr::ComparisonConfig cfg;
      cfg.d = dom_opts.d;
      cfg.gamma1 = dom_opts.gamma1;
      cfg.kappa = dom_opts.kappa;
      cfg.c_eps = dom_opts.c_eps;
      const rkpr::StateY y{1.0, 0.0};
      const rkpr::OneStepDominanceReport report = rkpr::one_step_dominance_probe(
          y, cfg, dom_opts.paths, rkpr::SeededStream{dom_opts.seed, 0}, dom_opts.delta_budget);
      rkpr::write_text_file(dom_opts.out, rkpr::dominance_json(report, cfg, y, dom_opts.seed));
      std::cout << (report.pass ? "dominance holds" : "dominance FAILS") << ", gap = "
                << rkpr::fmt_g17(report.gap) << "\n";
    } else if (mom->parsed()) {
      rkpr::ComparisonConfig cfg;
      cfg.d = mom_opts.d;
      cfg.kappa = mom_opts.kappa;
      cfg.gamma1 = mom_opts.gamma1;
      cfg.c_eps = mom_opts.c_eps;
      const std::int64_t B = cfg.epoch_length();
      const std::int64_t epochs =
          mom_opts.epochs > 0
              ? mom_opts.epochs
              : static_cast<std::int64_t>(std::ceil(static_cast<double>(mom_opts.d) /
                                                    static_cast<double>(B) *
                                                    std::log(static_cast<double>(mom_opts.d))));
      const rkpr::ProbeMode mode =
          mom_opts.mode == "coupled" ? rkpr::ProbeMode::Coupled : rkpr::ProbeMode::Idealized;
      const rkpr::MomentProbeResult result = rkpr::moment_recursion_probe(
          cfg, mode, epochs, mom_opts.paths, rkpr::SeededStream{mom_opts.seed, 0});
      rkpr::write_text_file(mom_opts.out, rkpr::moments_json(result, cfg, mom_opts.seed));
      std::cout << "m2/sqrt(m4) at T = " << rkpr::fmt_g17(result.final_ratio) << "\n";
    } else if (sweep->parsed()) {
      const auto rows = rkpr::sweep_convergence(parse_dims(sweep_opts.dims), sweep_opts.runs,
                                                rkpr::SeededStream{sweep_opts.seed, 0});
      rkpr::write_text_file(sweep_opts.out, rkpr::sweep_csv(rows));
      std::cout << "wrote " << sweep_opts.out << "\n";
    } else if (radius->parsed()) {
      const rkpr::RadiusProbeReport report = rkpr::radius_concentration_probe(
          radius_opts.d, radius_opts.runs, radius_opts.r0sq,
          rkpr::SeededStream{radius_opts.seed, 0}, radius_opts.horizon);
      rkpr::write_text_file(radius_opts.out, rkpr::radius_probe_json(report, radius_opts.seed));
      std::cout << "wrote " << radius_opts.out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
