#pragma once

// Run configuration for the command-line tool.  Frequencies are entered in Hz
// and converted to rad/s here; times are seconds unless
// `dimensionless_time` is set, in which case they are in units of 1/(eta Omega).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qcorr/fitting.hpp"
#include "qcorr/noise.hpp"
#include "qcorr/sideband.hpp"

namespace qcorr {

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;
};

struct StarkConfig {
  std::optional<double> rabi_hz;  // default: one Stark period per t_max
  double detuning_hz = 400e9;
  double lifetime_s = 7.1e-9;
  double t_max_s = 25e-6;
  double wavelength_m = 397e-9;
};

struct FitConfig {
  std::optional<double> nbar;
  std::optional<double> omega_hz;
  std::optional<double> delta0_hz;
  std::optional<double> sigma_delta_hz;
  int n_starts = 8;
  int max_iterations = 200;
};

struct SynthConfig {
  GridSpec times{0.0, 500e-6, 30};
  int n_shots = 1000;
  bool shot_noise = true;
};

struct RunConfig {
  std::string preset;
  double eta = 0.04;
  double omega_hz = 100e3;
  double delta0_hz = 0.0;
  double sigma_delta_hz = 0.0;
  double nbar = 0.2;
  std::optional<int> n_max;
  int n_quad = kDefaultQuadratureNodes;
  double truncation_eps = kDefaultTruncationEps;
  bool dimensionless_time = false;

  std::optional<GridSpec> t0_grid;
  std::optional<GridSpec> t1_grid;
  std::optional<double> t0;          // flop: preparation time
  std::optional<double> t1_max;      // timeavg window
  std::optional<int> t1_samples;     // timeavg samples
  double extended_factor = 10.0;     // maxdist: extended t1 range multiplier
  int points_per_period = 40;        // grid density floor per 2 pi / Omega_0

  std::uint64_t seed = 1;
  std::string out_dir = ".";

  StarkConfig stark;
  FitConfig fit;
  SynthConfig synth;
};

// Named parameter sets: ground-state (nbar 0), sideband-cooled (0.2),
// doppler-cooled (5.9), avg-sideband-cooled (0.19), avg-doppler-cooled (5.6).
const std::vector<std::string>& preset_names();
RunConfig apply_preset(RunConfig base, const std::string& name);

// Overlays the fields present in `j` onto `base`; unknown keys are rejected.
RunConfig merge_json(RunConfig base, const nlohmann::json& j);
RunConfig load_config_file(const std::string& path, RunConfig base = {});
nlohmann::json to_json(const RunConfig& cfg);

void validate(const RunConfig& cfg);

// Derived physical objects (angular units).
SidebandParams sideband_params(const RunConfig& cfg);
SidebandModel sideband_model(const RunConfig& cfg);
DetuningDistribution detuning_distribution(const RunConfig& cfg);
StarkParams stark_params(const RunConfig& cfg);

// eta * Omega in rad/s; the scale of the dimensionless time axis.
double time_scale(const RunConfig& cfg);
// Converts a user-facing time value to seconds.
double to_seconds(const RunConfig& cfg, double t);

}  // namespace qcorr
