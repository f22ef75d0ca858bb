#pragma once

// Flat `key = value` run configuration with `#` comments.  Unknown keys are
// errors; the required keys are a, b, c, d, k, alpha, beta, f.

#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "ks/dynamics.hpp"
#include "ks/errors.hpp"
#include "ks/params.hpp"
#include "ks/state.hpp"

namespace ks {

enum class InitialConditionKind { cosine_perturbation, from_file };

struct InitialConditionSpec {
  InitialConditionKind kind = InitialConditionKind::cosine_perturbation;
  double eps_u = 0.2;
  double eps_rho = 0.1;
  int m_u = 1;
  int m_rho = 1;
  std::string file;
};

struct RunConfig {
  double a = 0, b = 0, c = 0, d = 0, k = 0;
  double alpha = 0, beta = 0;
  double f = 0;
  double delta = -1.0;  // default f/2, resolved in make_params
  int n = 256;
  InitialConditionSpec ic;
  StepControl control;
  std::string outputs;  // default: $KS_OUTPUT_DIR or ./out
  bool write_csv = true;
  bool write_json = true;
  unsigned long long seed = 0;

  Params make_params() const {
    Params p;
    p.a = a;
    p.b = b;
    p.c = c;
    p.d = d;
    p.k = k;
    p.f = f;
    p.delta = delta > 0 ? delta : 0.5 * f;
    p.grid = make_grid(alpha, beta, n);
    p.validate();
    return p;
  }

  std::string output_dir() const {
    if (!outputs.empty()) return outputs;
    if (const char* env = std::getenv("KS_OUTPUT_DIR")) return env;
    return "out";
  }
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& what, const std::string& key,
                                     int line) {
  fail(errc::config_error,
       what + " '" + key + "' at line " + std::to_string(line));
}

inline double parse_real(const std::string& key, const std::string& value, int line) {
  try {
    size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (pos != value.size() || !std::isfinite(x)) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    config_fail("invalid-value: non-numeric value for key", key, line);
  }
}

inline long long parse_int(const std::string& key, const std::string& value, int line) {
  try {
    size_t pos = 0;
    const long long x = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    config_fail("invalid-value: non-integer value for key", key, line);
  }
}

inline std::string trim(const std::string& s) {
  const auto l = s.find_first_not_of(" \t\r");
  if (l == std::string::npos) return "";
  const auto r = s.find_last_not_of(" \t\r");
  return s.substr(l, r - l + 1);
}

}  // namespace detail

// Strict key-value parsing.  Documented defaults: n = 256, dt_max = 1e-2,
// dt_min = 1e-10, cfl_safety = 0.5, t_end = 200, delta = f/2.
inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string raw;
  int line = 0;

  auto constraint = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok)
      fail(errc::config_error, "invalid-value: key '" + key + "' " + what +
                                   " at line " + std::to_string(line));
  };

  while (std::getline(in, raw)) {
    ++line;
    std::string text = raw;
    if (const auto hash = text.find('#'); hash != std::string::npos)
      text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      fail(errc::config_error,
           "invalid-value: expected 'key = value' at line " + std::to_string(line));
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty() || value.empty())
      fail(errc::config_error,
           "invalid-value: empty key or value at line " + std::to_string(line));
    if (!seen.insert(key).second)
      detail::config_fail("invalid-value: duplicate key", key, line);

    if (key == "a" || key == "b" || key == "c" || key == "d" || key == "k" ||
        key == "f") {
      const double x = detail::parse_real(key, value, line);
      constraint(x > 0, key, "must be strictly positive");
      if (key == "a") cfg.a = x;
      else if (key == "b") cfg.b = x;
      else if (key == "c") cfg.c = x;
      else if (key == "d") cfg.d = x;
      else if (key == "k") cfg.k = x;
      else cfg.f = x;
    } else if (key == "alpha") {
      cfg.alpha = detail::parse_real(key, value, line);
    } else if (key == "beta") {
      cfg.beta = detail::parse_real(key, value, line);
    } else if (key == "delta") {
      cfg.delta = detail::parse_real(key, value, line);
      constraint(cfg.delta > 0, key, "must be strictly positive");
    } else if (key == "n") {
      const long long x = detail::parse_int(key, value, line);
      constraint(x >= 8, key, "must be at least 8");
      cfg.n = static_cast<int>(x);
    } else if (key == "ic_kind") {
      if (value == "cosine_perturbation")
        cfg.ic.kind = InitialConditionKind::cosine_perturbation;
      else if (value == "from_file")
        cfg.ic.kind = InitialConditionKind::from_file;
      else
        constraint(false, key, "must be cosine_perturbation or from_file");
    } else if (key == "eps_u") {
      cfg.ic.eps_u = detail::parse_real(key, value, line);
      constraint(cfg.ic.eps_u >= 0 && cfg.ic.eps_u < 1, key,
                 "must lie in [0, 1) so that min u0 > 0");
    } else if (key == "eps_rho") {
      cfg.ic.eps_rho = detail::parse_real(key, value, line);
    } else if (key == "m_u") {
      const long long x = detail::parse_int(key, value, line);
      constraint(x >= 1, key, "must be at least 1");
      cfg.ic.m_u = static_cast<int>(x);
    } else if (key == "m_rho") {
      const long long x = detail::parse_int(key, value, line);
      constraint(x >= 1, key, "must be at least 1");
      cfg.ic.m_rho = static_cast<int>(x);
    } else if (key == "ic_file") {
      cfg.ic.file = value;
    } else if (key == "dt_max") {
      cfg.control.dt_max = detail::parse_real(key, value, line);
      constraint(cfg.control.dt_max > 0, key, "must be positive");
    } else if (key == "dt_min") {
      cfg.control.dt_min = detail::parse_real(key, value, line);
      constraint(cfg.control.dt_min > 0, key, "must be positive");
    } else if (key == "cfl_safety") {
      cfg.control.cfl_safety = detail::parse_real(key, value, line);
      constraint(cfg.control.cfl_safety > 0 && cfg.control.cfl_safety <= 1, key,
                 "must lie in (0, 1]");
    } else if (key == "t_end") {
      cfg.control.t_end = detail::parse_real(key, value, line);
      constraint(cfg.control.t_end > 0, key, "must be positive");
    } else if (key == "snapshot_stride") {
      const long long x = detail::parse_int(key, value, line);
      constraint(x >= 1, key, "must be at least 1");
      cfg.control.snapshot_stride = static_cast<int>(x);
    } else if (key == "outputs") {
      cfg.outputs = value;
    } else if (key == "formats") {
      cfg.write_csv = value.find("csv") != std::string::npos;
      cfg.write_json = value.find("json") != std::string::npos;
      constraint(cfg.write_csv || cfg.write_json, key, "must name csv and/or json");
    } else if (key == "seed") {
      const long long x = detail::parse_int(key, value, line);
      constraint(x >= 0, key, "must be nonnegative");
      cfg.seed = static_cast<unsigned long long>(x);
    } else {
      detail::config_fail("unknown-key", key, line);
    }
  }

  for (const char* req : {"a", "b", "c", "d", "k", "alpha", "beta", "f"})
    if (!seen.count(req))
      fail(errc::config_error, std::string("missing-required: key '") + req + "'");
  if (cfg.beta <= cfg.alpha)
    fail(errc::config_error, "invalid-value: key 'beta' must exceed alpha");
  if (cfg.delta > 0 && cfg.delta > cfg.f)
    fail(errc::config_error, "invalid-value: key 'delta' must not exceed f");
  cfg.control.dt = cfg.control.dt_max;
  if (cfg.control.dt_min > cfg.control.dt_max)
    fail(errc::config_error, "invalid-value: key 'dt_min' must not exceed dt_max");
  if (cfg.ic.kind == InitialConditionKind::from_file && cfg.ic.file.empty())
    fail(errc::config_error, "missing-required: key 'ic_file'");
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

// u0 = f (1 + eps_u cos(m_u pi (x-alpha)/L)),
// rho0 = (c f / d)(1 + eps_rho cos(m_rho pi (x-alpha)/L)).
inline State cosine_perturbation_state(const RunConfig& cfg, const Params& p) {
  const Grid& g = *p.grid;
  VectorXd v = VectorXd::Zero(g.n());
  VectorXd rho = VectorXd::Zero(g.n());
  require(cfg.ic.m_u < g.n() && cfg.ic.m_rho < g.n(), errc::config_error,
          "perturbation mode exceeds the grid resolution");
  v[cfg.ic.m_u] = p.f * cfg.ic.eps_u;
  const double rho_bar = p.c * p.f / p.d;
  rho[0] = rho_bar;
  rho[cfg.ic.m_rho] += rho_bar * cfg.ic.eps_rho;
  return make_state(Field::from_coeffs(p.grid, std::move(v)),
                    Field::from_coeffs(p.grid, std::move(rho)), 0.0);
}

}  // namespace ks
