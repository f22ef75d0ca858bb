#pragma once

// Deterministic serialization: diagnostics CSV, spectral state snapshots,
// and flat JSON summaries.  Reals are written with 17 significant digits so
// identical runs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ks/analysis.hpp"
#include "ks/dynamics.hpp"
#include "ks/errors.hpp"
#include "ks/state.hpp"

namespace ks {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline constexpr const char* kTimeseriesHeader =
    "t,mass,min_u,positivity_floor,phi,dphi_dt_chain,dissipation,grad_norm_Z,"
    "vel_norm_Zstar,dist_X_to_ref";

inline void write_timeseries(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io_failure, "cannot open " + path);
  out << kTimeseriesHeader << "\n";
  for (const DiagnosticsRow& r : traj.rows) {
    out << fmt17(r.t) << ',' << fmt17(r.mass) << ',' << fmt17(r.min_u) << ','
        << fmt17(r.positivity_floor) << ',' << fmt17(r.phi) << ','
        << fmt17(r.dphi_dt_chain) << ',' << fmt17(r.dissipation) << ','
        << fmt17(r.grad_norm_Z) << ',' << fmt17(r.vel_norm_Zstar) << ','
        << fmt17(r.dist_X_to_ref) << "\n";
  }
  require(out.good(), errc::io_failure, "write failed for " + path);
}

inline std::vector<DiagnosticsRow> read_timeseries(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_failure, "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), errc::io_failure,
          "empty timeseries " + path);
  require(line == kTimeseriesHeader, errc::io_failure,
          "unexpected timeseries header in " + path);
  std::vector<DiagnosticsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    DiagnosticsRow r;
    double* slots[10] = {&r.t,   &r.mass,        &r.min_u,       &r.positivity_floor,
                         &r.phi, &r.dphi_dt_chain, &r.dissipation, &r.grad_norm_Z,
                         &r.vel_norm_Zstar, &r.dist_X_to_ref};
    size_t pos = 0;
    for (int i = 0; i < 10; ++i) {
      size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      *slots[i] = std::strtod(line.c_str() + pos, nullptr);
      pos = next + 1;
    }
    rows.push_back(r);
  }
  return rows;
}

// Snapshot format: 3-line header (grid alpha/beta/n) and one
// "v-coefficient,rho-coefficient" row per cosine mode.
inline void write_state_csv(const State& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io_failure, "cannot open " + path);
  const Grid& g = *state.grid();
  out << "# alpha = " << fmt17(g.alpha()) << "\n";
  out << "# beta = " << fmt17(g.beta()) << "\n";
  out << "# n = " << g.n() << "\n";
  for (int m = 0; m < g.n(); ++m)
    out << fmt17(state.v.coeffs()[m]) << ',' << fmt17(state.rho.coeffs()[m]) << "\n";
  require(out.good(), errc::io_failure, "write failed for " + path);
}

inline State read_state_csv(const std::string& path, double t = 0.0) {
  std::ifstream in(path);
  require(in.good(), errc::io_failure, "cannot open " + path);
  std::string line;
  double alpha = 0, beta = 0;
  long n = 0;
  auto header = [&](const char* fmt, auto* out) {
    require(static_cast<bool>(std::getline(in, line)), errc::io_failure,
            "truncated header in " + path);
    require(std::sscanf(line.c_str(), fmt, out) == 1, errc::io_failure,
            "bad header line in " + path + ": " + line);
  };
  header("# alpha = %lf", &alpha);
  header("# beta = %lf", &beta);
  header("# n = %ld", &n);
  GridPtr grid = make_grid(alpha, beta, static_cast<int>(n));
  VectorXd v(n), rho(n);
  for (long m = 0; m < n; ++m) {
    require(static_cast<bool>(std::getline(in, line)), errc::io_failure,
            "truncated state in " + path);
    char* end = nullptr;
    v[m] = std::strtod(line.c_str(), &end);
    require(end && *end == ',', errc::io_failure, "bad state row in " + path);
    rho[m] = std::strtod(end + 1, nullptr);
  }
  return State{Field::from_coeffs(grid, std::move(v)),
               Field::from_coeffs(grid, std::move(rho)), t};
}

// Snapshot directory: snap_%06zu.csv files plus an index.csv manifest
// carrying the snapshot times.
inline void write_snapshots(const Trajectory& traj, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, errc::io_failure, "cannot create " + dir);
  std::ofstream index(dir + "/index.csv", std::ios::binary);
  require(index.good(), errc::io_failure, "cannot open " + dir + "/index.csv");
  index << "index,t,file\n";
  for (size_t i = 0; i < traj.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%06zu.csv", i);
    write_state_csv(traj.snapshots[i], dir + "/" + name);
    index << i << ',' << fmt17(traj.snapshots[i].t) << ',' << name << "\n";
  }
  require(index.good(), errc::io_failure, "write failed for " + dir + "/index.csv");
}

inline std::vector<State> read_snapshots(const std::string& dir) {
  std::ifstream index(dir + "/index.csv");
  require(index.good(), errc::io_failure, "cannot open " + dir + "/index.csv");
  std::string line;
  std::getline(index, line);
  std::vector<State> out;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    require(c1 != std::string::npos && c2 != std::string::npos, errc::io_failure,
            "bad index row in " + dir);
    const double t = std::strtod(line.c_str() + c1 + 1, nullptr);
    out.push_back(read_state_csv(dir + "/" + line.substr(c2 + 1), t));
  }
  return out;
}

inline void write_json_file(const nlohmann::ordered_json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io_failure, "cannot open " + path);
  out << j.dump(2) << "\n";
  require(out.good(), errc::io_failure, "write failed for " + path);
}

inline nlohmann::ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_failure, "cannot open " + path);
  nlohmann::ordered_json j;
  in >> j;
  return j;
}

}  // namespace ks
