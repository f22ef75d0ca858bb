#pragma once

#include <stdexcept>
#include <string>

namespace ks {

enum class errc {
  invalid_interval,
  too_coarse,
  not_zero_mean,
  nonpositive_delta,
  nonpositive_density,
  precondition,
  blow_up,
  stagnation,
  not_stationary,
  no_convergence,
  not_converged,
  window_too_short,
  energy_gap_at_noise_floor,
  degenerate_row,
  io_failure,
  config_error,
  usage_error,
};

inline const char* to_string(errc c) {
  switch (c) {
    case errc::invalid_interval: return "invalid-interval";
    case errc::too_coarse: return "too-coarse";
    case errc::not_zero_mean: return "not-zero-mean";
    case errc::nonpositive_delta: return "nonpositive-delta";
    case errc::nonpositive_density: return "nonpositive-density";
    case errc::precondition: return "precondition-violation";
    case errc::blow_up: return "blow-up";
    case errc::stagnation: return "stagnation";
    case errc::not_stationary: return "not-stationary";
    case errc::no_convergence: return "no-convergence";
    case errc::not_converged: return "not-converged";
    case errc::window_too_short: return "window-too-short";
    case errc::energy_gap_at_noise_floor: return "energy-gap-at-noise-floor";
    case errc::degenerate_row: return "degenerate-row";
    case errc::io_failure: return "io-failure";
    case errc::config_error: return "config-error";
    case errc::usage_error: return "usage-error";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc c, const std::string& msg) { throw error(c, msg); }

inline void require(bool cond, errc c, const std::string& msg) {
  if (!cond) fail(c, msg);
}

}  // namespace ks
