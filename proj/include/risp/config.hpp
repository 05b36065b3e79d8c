#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "risp/errors.hpp"

namespace risp {

inline constexpr double kSpeedOfLight = 3.0e8;

/// Scenario parameters for one experiment. N = Nx * Ny RIS elements; the BS
/// array is a UPA with Mx * My = M (My = 1 gives a ULA). T_L = tau * T_S.
struct SystemConfig {
  std::size_t M = 4;
  std::size_t Mx = 4;
  std::size_t My = 1;
  std::size_t K = 4;
  std::size_t Nx = 8;
  std::size_t Ny = 5;
  std::size_t L_G = 3;
  std::size_t L_k = 3;
  double f_c = 28e9;
  double v_max = 3.0;
  std::size_t T_S = 1;       // slots per small-timescale step
  std::size_t tau = 16;      // T_L / T_S
  std::size_t S = 4;         // prediction window length (steps)
  double snr_db = 10.0;
  double slot_duration_s = 1e-4;
  std::uint64_t seed = 1;

  std::size_t N() const noexcept { return Nx * Ny; }
  double f_max() const noexcept { return f_c * v_max / kSpeedOfLight; }
  /// Seconds spanned by one small-timescale step.
  double step_duration_s() const noexcept {
    return static_cast<double>(T_S) * slot_duration_s;
  }
  double noise_variance() const noexcept {
    return std::pow(10.0, -snr_db / 10.0);  // pilot power fixed to 1
  }

  void validate() const {
    if (M < 1 || K < 1 || Nx < 1 || Ny < 1 || L_G < 1 || L_k < 1 || T_S < 1 ||
        tau < 1 || S < 1) {
      throw InvalidInputError("SystemConfig: counts must all be >= 1");
    }
    if (Mx * My != M) throw InvalidInputError("SystemConfig: Mx*My must equal M");
    if (f_c <= 0.0) throw InvalidInputError("SystemConfig: f_c must be > 0");
    if (v_max < 0.0) throw InvalidInputError("SystemConfig: v_max must be >= 0");
    if (slot_duration_s <= 0.0) {
      throw InvalidInputError("SystemConfig: slot_duration_s must be > 0");
    }
  }
};

/// Largest divisor of n that is <= sqrt(n); pairs a near-square grid.
inline std::size_t default_grid_ny(std::size_t n) {
  std::size_t best = 1;
  for (std::size_t d = 1; d * d <= n; ++d)
    if (n % d == 0) best = d;
  return best;
}

inline void set_ris_elements(SystemConfig& cfg, std::size_t n) {
  cfg.Ny = default_grid_ny(n);
  cfg.Nx = n / cfg.Ny;
}

inline void to_json(nlohmann::json& j, const SystemConfig& c) {
  j = nlohmann::json{{"M", c.M},           {"Mx", c.Mx},
                     {"My", c.My},         {"K", c.K},
                     {"Nx", c.Nx},         {"Ny", c.Ny},
                     {"L_G", c.L_G},       {"L_k", c.L_k},
                     {"f_c", c.f_c},       {"v_max", c.v_max},
                     {"T_S", c.T_S},       {"tau", c.tau},
                     {"S", c.S},           {"snr_db", c.snr_db},
                     {"slot_duration_s", c.slot_duration_s},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, SystemConfig& c) {
  SystemConfig d;
  c.M = j.value("M", d.M);
  c.Mx = j.value("Mx", c.M);  // ULA default when Mx is omitted
  c.My = j.value("My", std::size_t{1});
  c.K = j.value("K", d.K);
  c.Nx = j.value("Nx", d.Nx);
  c.Ny = j.value("Ny", d.Ny);
  c.L_G = j.value("L_G", d.L_G);
  c.L_k = j.value("L_k", d.L_k);
  c.f_c = j.value("f_c", d.f_c);
  c.v_max = j.value("v_max", d.v_max);
  c.T_S = j.value("T_S", d.T_S);
  c.tau = j.value("tau", d.tau);
  c.S = j.value("S", d.S);
  c.snr_db = j.value("snr_db", d.snr_db);
  c.slot_duration_s = j.value("slot_duration_s", d.slot_duration_s);
  c.seed = j.value("seed", d.seed);
  c.validate();
}

/// Named parameter presets. "table3" is the full-scale reference scenario;
/// "table3-desk" keeps its physics but shrinks the RIS for fast runs;
/// "desk" is the small learning benchmark.
inline SystemConfig preset(const std::string& name) {
  SystemConfig c;  // defaults are the table3 scenario (M=K=4, N=40)
  if (name == "table3") {
    c.tau = 16;
  } else if (name == "table3-desk") {
    c.Nx = 4;
    c.Ny = 2;
    c.tau = 16;
  } else if (name == "desk") {
    c.M = 2;
    c.Mx = 2;
    c.K = 2;
    c.Nx = 4;
    c.Ny = 2;
    c.tau = 16;
  } else {
    throw InvalidInputError("unknown preset: " + name);
  }
  c.validate();
  return c;
}

}  // namespace risp
