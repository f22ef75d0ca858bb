#pragma once

// Command-line surface: simulate, stationary, gradcheck, analyze, sweep.
// Exit codes: 0 success, 1 model errors (no-convergence, blow-up), 2 usage or
// config errors.  Diagnostics go to stderr; machine-readable artifacts to the
// run directory.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ks/analysis.hpp"
#include "ks/config.hpp"
#include "ks/dynamics.hpp"
#include "ks/errors.hpp"
#include "ks/gradcheck.hpp"
#include "ks/io.hpp"
#include "ks/stationary.hpp"

namespace ks {

namespace cli_detail {

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::config_error, "cannot read config file " + path);
  return parse_config(in);
}

inline State initial_state(const RunConfig& cfg, const Params& params) {
  if (cfg.ic.kind == InitialConditionKind::cosine_perturbation)
    return cosine_perturbation_state(cfg, params);
  State st = read_state_csv(cfg.ic.file);
  require(st.grid()->same_as(*params.grid), errc::config_error,
          "ic_file grid does not match the configured grid");
  return st;
}

inline nlohmann::ordered_json config_echo(const RunConfig& cfg, const Params& params) {
  nlohmann::ordered_json j;
  j["a"] = cfg.a;
  j["b"] = cfg.b;
  j["c"] = cfg.c;
  j["d"] = cfg.d;
  j["k"] = cfg.k;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["f"] = cfg.f;
  j["delta"] = params.delta;
  j["n"] = cfg.n;
  j["ic_kind"] = cfg.ic.kind == InitialConditionKind::cosine_perturbation
                     ? "cosine_perturbation"
                     : "from_file";
  j["eps_u"] = cfg.ic.eps_u;
  j["eps_rho"] = cfg.ic.eps_rho;
  j["m_u"] = cfg.ic.m_u;
  j["m_rho"] = cfg.ic.m_rho;
  j["ic_file"] = cfg.ic.file;
  j["dt_max"] = cfg.control.dt_max;
  j["dt_min"] = cfg.control.dt_min;
  j["cfl_safety"] = cfg.control.cfl_safety;
  j["t_end"] = cfg.control.t_end;
  j["snapshot_stride"] = cfg.control.snapshot_stride;
  j["seed"] = cfg.seed;
  return j;
}

inline RunConfig config_from_echo(const nlohmann::ordered_json& j) {
  RunConfig cfg;
  cfg.a = j.at("a");
  cfg.b = j.at("b");
  cfg.c = j.at("c");
  cfg.d = j.at("d");
  cfg.k = j.at("k");
  cfg.alpha = j.at("alpha");
  cfg.beta = j.at("beta");
  cfg.f = j.at("f");
  cfg.delta = j.at("delta");
  cfg.n = j.at("n");
  cfg.ic.kind = j.at("ic_kind") == "from_file" ? InitialConditionKind::from_file
                                               : InitialConditionKind::cosine_perturbation;
  cfg.ic.eps_u = j.at("eps_u");
  cfg.ic.eps_rho = j.at("eps_rho");
  cfg.ic.m_u = j.at("m_u");
  cfg.ic.m_rho = j.at("m_rho");
  cfg.ic.file = j.at("ic_file");
  cfg.control.dt_max = j.at("dt_max");
  cfg.control.dt_min = j.at("dt_min");
  cfg.control.cfl_safety = j.at("cfl_safety");
  cfg.control.t_end = j.at("t_end");
  cfg.control.snapshot_stride = j.at("snapshot_stride");
  cfg.seed = j.at("seed");
  return cfg;
}

inline std::string classification_of(const StationaryState& omega, const Params& params) {
  const StationaryState cs = constant_state(params);
  const State diff{omega.state.v - cs.state.v, omega.state.rho - cs.state.rho, 0.0};
  const double dist = norm_state(diff, NormKind::X, params);
  const double scale = 1.0 + norm_state(cs.state, NormKind::X, params);
  return dist <= 1e-6 * scale ? "constant" : "nonconstant";
}

inline void report_into(nlohmann::ordered_json& j,
                        const std::optional<ConvergenceReport>& rep) {
  if (rep) {
    j["theta_hat"] = rep->theta_hat;
    j["d_hat"] = rep->D_hat;
    j["eps_hat"] = rep->eps_hat;
    j["eps_prime_hat"] = rep->epsP_hat;
    j["eps_double_prime_hat"] = rep->epsPP_hat;
    j["rate_constant"] = rep->rate_constant;
    j["rate_violations"] = rep->rate_violations;
    j["fit_t_lo"] = rep->fit_t_lo;
    j["fit_t_hi"] = rep->fit_t_hi;
    j["fit_residual"] = rep->fit_residual;
  } else {
    for (const char* key : {"theta_hat", "d_hat", "eps_hat", "eps_prime_hat",
                            "eps_double_prime_hat", "rate_constant",
                            "rate_violations", "fit_t_lo", "fit_t_hi",
                            "fit_residual"})
      j[key] = nullptr;
  }
}

struct PipelineResult {
  int exit_code = 0;
  bool converged = false;
  std::string classification = "none";
  int kernel_dim = -1;
  double final_phi = 0.0;
  double theta_hat = std::numeric_limits<double>::quiet_NaN();
};

// simulate + (on convergence) hessian spectrum + convergence report,
// serialized into outdir.
inline PipelineResult run_simulation_pipeline(const RunConfig& cfg,
                                              const std::string& outdir,
                                              std::ostream& log) {
  const auto wall_start = std::chrono::steady_clock::now();
  Params params = cfg.make_params();
  const State initial = initial_state(cfg, params);
  Trajectory traj = simulate(initial, params, cfg.control);

  PipelineResult result;
  result.converged = traj.converged;
  result.final_phi = traj.rows.back().phi;

  std::optional<ConvergenceReport> report;
  if (traj.converged) {
    result.classification = classification_of(*traj.omega_limit, params);
    try {
      KernelResult kernel = kernel_of_hessian(*traj.omega_limit, params);
      result.kernel_dim = kernel.dimension;
    } catch (const error& e) {
      log << "ks: hessian spectrum skipped: " << e.what() << "\n";
    }
    try {
      report = build_report(traj);
      result.theta_hat = report->theta_hat;
    } catch (const error& e) {
      log << "ks: convergence report skipped: " << e.what() << "\n";
    }
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(outdir, ec);
  require(!ec, errc::io_failure, "cannot create output directory " + outdir);

  if (cfg.write_csv) write_timeseries(traj, outdir + "/timeseries.csv");
  write_snapshots(traj, outdir + "/snapshots");

  if (cfg.write_json) {
    nlohmann::ordered_json j;
    j["config"] = config_echo(cfg, params);
    j["converged"] = traj.converged;
    j["classification"] = result.classification;
    j["final_phi"] = result.final_phi;
    if (result.kernel_dim >= 0)
      j["kernel_dim"] = result.kernel_dim;
    else
      j["kernel_dim"] = nullptr;
    report_into(j, report);
    j["observed_r"] = observed_r(traj);
    if (result.classification == "nonconstant") {
      const double const_phi = lyapunov(constant_state(params).state, params);
      require(result.final_phi < const_phi, errc::no_convergence,
              "nonconstant omega-limit with energy above the constant state");
    }
    write_json_file(j, outdir + "/summary.json");
  }

  const auto wall_end = std::chrono::steady_clock::now();
  const double seconds =
      std::chrono::duration<double>(wall_end - wall_start).count();
  log << "ks: run " << (traj.converged ? "converged" : "did not converge")
      << ", classification " << result.classification << ", final phi "
      << result.final_phi << ", wall time " << seconds << " s\n";

  result.exit_code = traj.converged ? 0 : 1;
  if (!traj.converged) log << "ks: no-convergence within t_end\n";
  return result;
}

inline int cmd_simulate(const std::string& config_path) {
  const RunConfig cfg = load_config_file(config_path);
  return run_simulation_pipeline(cfg, cfg.output_dir(), std::cerr).exit_code;
}

inline int cmd_stationary(const std::string& config_path, const std::string& seed_from) {
  const RunConfig cfg = load_config_file(config_path);
  Params params = cfg.make_params();
  State seed = seed_from.empty() ? initial_state(cfg, params)
                                 : read_state_csv(seed_from);
  require(seed.grid()->same_as(*params.grid), errc::config_error,
          "seed state grid does not match the configured grid");

  StationaryState sol =
      solve_stationary(params, seed, params.grid->length() * params.f);
  std::optional<KernelResult> kernel;
  if (sol.converged) kernel = kernel_of_hessian(sol, params);

  const std::string outdir = cfg.output_dir();
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  require(!ec, errc::io_failure, "cannot create output directory " + outdir);
  write_state_csv(sol.state, outdir + "/stationary_state.csv");

  // Node-wise spread of a log u - k rho (zero for an exact Boltzmann pair).
  const VectorXd u = sol.state.density_values(params);
  double wmin = std::numeric_limits<double>::infinity(), wmax = -wmin;
  for (int j = 0; j < params.grid->n(); ++j) {
    const double w = params.a * std::log(u[j]) - params.k * sol.state.rho.values()[j];
    wmin = std::min(wmin, w);
    wmax = std::max(wmax, w);
  }

  nlohmann::ordered_json j;
  j["config"] = config_echo(cfg, params);
  j["converged"] = sol.converged;
  j["residual"] = sol.residual;
  j["mass"] = sol.mass;
  j["phi"] = lyapunov(sol.state, params);
  j["classification"] = classification_of(sol, params);
  j["boltzmann_spread"] = wmax - wmin;
  if (kernel) {
    j["kernel_dim"] = kernel->dimension;
    j["smallest_eigenvalues"] = sol.hessian_summary->smallest_eigenvalues;
  } else {
    j["kernel_dim"] = nullptr;
    j["smallest_eigenvalues"] = nullptr;
  }
  write_json_file(j, outdir + "/stationary.json");

  if (!sol.converged) {
    std::cerr << "ks: no-convergence in solve_stationary (residual " << sol.residual
              << ")\n";
    return 1;
  }
  return 0;
}

inline int cmd_gradcheck(const std::string& config_path) {
  const RunConfig cfg = load_config_file(config_path);
  Params params = cfg.make_params();
  const GradCheckResult res = run_gradcheck(params, 100, cfg.seed);
  std::cout << "gradient max relative error = " << res.gradient_max_rel_error << "\n";
  std::cout << "hessian max relative error = " << res.hessian_max_rel_error << "\n";
  const bool ok =
      res.gradient_max_rel_error <= 1e-6 && res.hessian_max_rel_error <= 1e-5;
  if (!ok) std::cerr << "ks: gradcheck outside tolerance\n";
  return ok ? 0 : 1;
}

inline int cmd_analyze(const std::string& run_dir) {
  const nlohmann::ordered_json summary = read_json_file(run_dir + "/summary.json");
  const RunConfig cfg = config_from_echo(summary.at("config"));
  Params params = cfg.make_params();

  Trajectory traj;
  traj.params = params;
  traj.rows = read_timeseries(run_dir + "/timeseries.csv");
  traj.snapshots = read_snapshots(run_dir + "/snapshots");
  require(!traj.rows.empty() && !traj.snapshots.empty(), errc::io_failure,
          "run directory has no data");
  // Match snapshots to rows by time (17-digit serialization round-trips).
  size_t row = 0;
  for (const State& s : traj.snapshots) {
    while (row < traj.rows.size() && traj.rows[row].t < s.t) ++row;
    require(row < traj.rows.size(), errc::io_failure,
            "snapshot time beyond the recorded rows");
    traj.snapshot_rows.push_back(row);
  }

  std::optional<StationaryState> omega = detect_convergence(traj, params);
  nlohmann::ordered_json j;
  j["grid_n"] = params.grid->n();
  if (!omega) {
    j["converged"] = false;
    report_into(j, std::nullopt);
    write_json_file(j, run_dir + "/report.json");
    std::cerr << "ks: trajectory did not reach stationarity; no report\n";
    return 1;
  }
  traj.converged = true;
  traj.omega_limit = std::move(omega);

  const ConvergenceReport rep = build_report(traj);
  j["converged"] = true;
  j["classification"] = classification_of(*traj.omega_limit, params);
  report_into(j, rep);
  write_json_file(j, run_dir + "/report.json");

  const bool accepted = rep.rate_violations == 0 && rep.eps_hat > 0 &&
                        rep.epsP_hat > 0 && rep.epsPP_hat > 0;
  if (!accepted) std::cerr << "ks: convergence report not accepted\n";
  return accepted ? 0 : 1;
}

struct SweepSpec {
  std::string key;
  double lo = 0, hi = 0, step = 0;
};

inline SweepSpec parse_vary(const std::string& text) {
  SweepSpec spec;
  const auto eq = text.find('=');
  require(eq != std::string::npos, errc::usage_error,
          "--vary expects key=lo:hi:step");
  spec.key = text.substr(0, eq);
  const std::string rest = text.substr(eq + 1);
  const auto c1 = rest.find(':');
  const auto c2 = rest.find(':', c1 + 1);
  require(c1 != std::string::npos && c2 != std::string::npos, errc::usage_error,
          "--vary expects key=lo:hi:step");
  try {
    spec.lo = std::stod(rest.substr(0, c1));
    spec.hi = std::stod(rest.substr(c1 + 1, c2 - c1 - 1));
    spec.step = std::stod(rest.substr(c2 + 1));
  } catch (const std::exception&) {
    fail(errc::usage_error, "--vary expects numeric lo:hi:step");
  }
  require(spec.step > 0 && spec.hi >= spec.lo, errc::usage_error,
          "--vary needs step > 0 and hi >= lo");
  return spec;
}

inline void apply_vary(RunConfig& cfg, const std::string& key, double value) {
  if (key == "a") cfg.a = value;
  else if (key == "b") cfg.b = value;
  else if (key == "c") cfg.c = value;
  else if (key == "d") cfg.d = value;
  else if (key == "k") cfg.k = value;
  else if (key == "f") cfg.f = value;
  else if (key == "delta") cfg.delta = value;
  else if (key == "eps_u") cfg.ic.eps_u = value;
  else if (key == "eps_rho") cfg.ic.eps_rho = value;
  else if (key == "t_end") cfg.control.t_end = value;
  else fail(errc::usage_error, "--vary does not support key '" + key + "'");
}

inline int cmd_sweep(const std::string& config_path, const std::string& vary,
                     int jobs) {
  const RunConfig base = load_config_file(config_path);
  const SweepSpec spec = parse_vary(vary);
  require(jobs >= 1, errc::usage_error, "--jobs must be at least 1");

  std::vector<double> values;
  for (double v = spec.lo; v <= spec.hi + 1e-12 * spec.step; v += spec.step)
    values.push_back(v);

  const std::string root = base.output_dir();
  struct RunSlot {
    double value = 0;
    std::string dir;
    PipelineResult result;
    std::string log;
    bool failed = false;
    std::string error;
  };
  std::vector<RunSlot> slots(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    char tag[64];
    std::snprintf(tag, sizeof tag, "%s_%g", spec.key.c_str(), values[i]);
    slots[i].value = values[i];
    slots[i].dir = root + "/" + tag;
  }

  std::atomic<size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = cursor.fetch_add(1);
      if (i >= slots.size()) return;
      RunConfig cfg = base;
      apply_vary(cfg, spec.key, slots[i].value);
      std::ostringstream log;
      try {
        slots[i].result = run_simulation_pipeline(cfg, slots[i].dir, log);
      } catch (const std::exception& e) {
        slots[i].failed = true;
        slots[i].error = e.what();
      }
      slots[i].log = log.str();
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min<int>(jobs, static_cast<int>(slots.size()));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  int exit_code = 0;
  for (const RunSlot& s : slots) {
    std::cerr << s.log;
    nlohmann::ordered_json row;
    row[spec.key] = s.value;
    row["dir"] = s.dir;
    if (s.failed) {
      std::cerr << "ks: sweep run at " << spec.key << " = " << s.value
                << " failed: " << s.error << "\n";
      row["converged"] = false;
      row["classification"] = "none";
      row["kernel_dim"] = nullptr;
      row["theta_hat"] = nullptr;
      row["final_phi"] = nullptr;
      exit_code = 1;
      runs.push_back(row);
      continue;
    }
    row["converged"] = s.result.converged;
    row["classification"] = s.result.classification;
    if (s.result.kernel_dim >= 0)
      row["kernel_dim"] = s.result.kernel_dim;
    else
      row["kernel_dim"] = nullptr;
    if (std::isfinite(s.result.theta_hat))
      row["theta_hat"] = s.result.theta_hat;
    else
      row["theta_hat"] = nullptr;
    row["final_phi"] = s.result.final_phi;
    if (s.result.exit_code != 0) exit_code = 1;
    runs.push_back(row);
  }

  nlohmann::ordered_json j;
  j["vary"] = spec.key;
  j["lo"] = spec.lo;
  j["hi"] = spec.hi;
  j["step"] = spec.step;
  j["runs"] = runs;
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  require(!ec, errc::io_failure, "cannot create output directory " + root);
  write_json_file(j, root + "/sweep.json");
  return exit_code;
}

}  // namespace cli_detail

inline int run_command(const std::vector<std::string>& args) {
  CLI::App app{"one-dimensional Keller-Segel gradient-flow toolkit"};
  app.require_subcommand(1);

  std::string config_path, run_dir, seed_from, vary;
  int jobs = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));

  CLI::App* sim = app.add_subcommand("simulate", "run the dynamics and write diagnostics");
  sim->add_option("config", config_path, "run configuration file")->required();

  CLI::App* stat = app.add_subcommand("stationary", "solve for a stationary state");
  stat->add_option("config", config_path, "run configuration file")->required();
  stat->add_option("--seed-from", seed_from, "seed the solver from a state file");

  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient/Hessian check");
  grad->add_option("config", config_path, "run configuration file")->required();

  CLI::App* ana = app.add_subcommand("analyze", "fit the convergence machinery of a run");
  ana->add_option("rundir", run_dir, "directory written by simulate")->required();

  CLI::App* swp = app.add_subcommand("sweep", "grid of independent simulate runs");
  swp->add_option("config", config_path, "run configuration file")->required();
  swp->add_option("--vary", vary, "key=lo:hi:step")->required();
  swp->add_option("--jobs", jobs, "max concurrent runs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cli_detail::cmd_simulate(config_path);
    if (stat->parsed()) return cli_detail::cmd_stationary(config_path, seed_from);
    if (grad->parsed()) return cli_detail::cmd_gradcheck(config_path);
    if (ana->parsed()) return cli_detail::cmd_analyze(run_dir);
    if (swp->parsed()) return cli_detail::cmd_sweep(config_path, vary, jobs);
  } catch (const error& e) {
    std::cerr << "ks: " << e.what() << "\n";
    return (e.code() == errc::config_error || e.code() == errc::usage_error) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "ks: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace ks
