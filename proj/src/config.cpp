#include "qcorr/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace qcorr {

namespace {

using nlohmann::json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& dst) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    dst.reset();
    return;
  }
  T v{};
  read(j, key, v);
  dst = v;
}

GridSpec read_grid(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown(j, {"start", "stop", "count"}, where);
  GridSpec g;
  read(j, "start", g.start);
  read(j, "stop", g.stop);
  read(j, "count", g.count);
  return g;
}

void read_grid(const json& j, const char* key, std::optional<GridSpec>& dst) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    dst.reset();
  else
    dst = read_grid(j.at(key), key);
}

json grid_json(const GridSpec& g) { return {{"start", g.start}, {"stop", g.stop}, {"count", g.count}}; }

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"ground-state", "sideband-cooled", "doppler-cooled",
                                              "avg-sideband-cooled", "avg-doppler-cooled"};
  return names;
}

RunConfig apply_preset(RunConfig base, const std::string& name) {
  if (name == "ground-state") {
    base.nbar = 0.0;
  } else if (name == "sideband-cooled") {
    base.nbar = 0.2;
  } else if (name == "doppler-cooled") {
    base.nbar = 5.9;
  } else if (name == "avg-sideband-cooled") {
    base.nbar = 0.19;
  } else if (name == "avg-doppler-cooled") {
    base.nbar = 5.6;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  base.preset = name;
  base.eta = 0.04;
  base.omega_hz = 100e3;
  base.n_max.reset();
  return base;
}

RunConfig merge_json(RunConfig cfg, const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(j,
                 {"preset", "eta", "omega_hz", "delta0_hz", "sigma_delta_hz", "nbar", "n_max",
                  "n_quad", "truncation_eps", "dimensionless_time", "t0_grid", "t1_grid", "t0",
                  "t1_max", "t1_samples", "extended_factor", "points_per_period", "seed",
                  "out_dir", "stark", "fit", "synth"},
                 "configuration");
  if (j.contains("preset") && !j.at("preset").is_null())
    cfg = apply_preset(cfg, j.at("preset").get<std::string>());
  read(j, "eta", cfg.eta);
  read(j, "omega_hz", cfg.omega_hz);
  read(j, "delta0_hz", cfg.delta0_hz);
  read(j, "sigma_delta_hz", cfg.sigma_delta_hz);
  read(j, "nbar", cfg.nbar);
  read(j, "n_max", cfg.n_max);
  read(j, "n_quad", cfg.n_quad);
  read(j, "truncation_eps", cfg.truncation_eps);
  read(j, "dimensionless_time", cfg.dimensionless_time);
  read_grid(j, "t0_grid", cfg.t0_grid);
  read_grid(j, "t1_grid", cfg.t1_grid);
  read(j, "t0", cfg.t0);
  read(j, "t1_max", cfg.t1_max);
  read(j, "t1_samples", cfg.t1_samples);
  read(j, "extended_factor", cfg.extended_factor);
  read(j, "points_per_period", cfg.points_per_period);
  read(j, "seed", cfg.seed);
  read(j, "out_dir", cfg.out_dir);
  if (j.contains("stark")) {
    const auto& s = j.at("stark");
    reject_unknown(s, {"rabi_hz", "detuning_hz", "lifetime_s", "t_max_s", "wavelength_m"}, "stark");
    read(s, "rabi_hz", cfg.stark.rabi_hz);
    read(s, "detuning_hz", cfg.stark.detuning_hz);
    read(s, "lifetime_s", cfg.stark.lifetime_s);
    read(s, "t_max_s", cfg.stark.t_max_s);
    read(s, "wavelength_m", cfg.stark.wavelength_m);
  }
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    reject_unknown(f, {"nbar", "omega_hz", "delta0_hz", "sigma_delta_hz", "n_starts",
                       "max_iterations"},
                   "fit");
    read(f, "nbar", cfg.fit.nbar);
    read(f, "omega_hz", cfg.fit.omega_hz);
    read(f, "delta0_hz", cfg.fit.delta0_hz);
    read(f, "sigma_delta_hz", cfg.fit.sigma_delta_hz);
    read(f, "n_starts", cfg.fit.n_starts);
    read(f, "max_iterations", cfg.fit.max_iterations);
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    reject_unknown(s, {"times", "n_shots", "shot_noise"}, "synth");
    if (s.contains("times")) cfg.synth.times = read_grid(s.at("times"), "synth.times");
    read(s, "n_shots", cfg.synth.n_shots);
    read(s, "shot_noise", cfg.synth.shot_noise);
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return merge_json(std::move(base), j);
}

json to_json(const RunConfig& cfg) {
  json j;
  j["preset"] = cfg.preset.empty() ? json(nullptr) : json(cfg.preset);
  j["eta"] = cfg.eta;
  j["omega_hz"] = cfg.omega_hz;
  j["delta0_hz"] = cfg.delta0_hz;
  j["sigma_delta_hz"] = cfg.sigma_delta_hz;
  j["nbar"] = cfg.nbar;
  j["n_max"] = opt_json(cfg.n_max);
  j["n_quad"] = cfg.n_quad;
  j["truncation_eps"] = cfg.truncation_eps;
  j["dimensionless_time"] = cfg.dimensionless_time;
  j["t0_grid"] = cfg.t0_grid ? grid_json(*cfg.t0_grid) : json(nullptr);
  j["t1_grid"] = cfg.t1_grid ? grid_json(*cfg.t1_grid) : json(nullptr);
  j["t0"] = opt_json(cfg.t0);
  j["t1_max"] = opt_json(cfg.t1_max);
  j["t1_samples"] = opt_json(cfg.t1_samples);
  j["extended_factor"] = cfg.extended_factor;
  j["points_per_period"] = cfg.points_per_period;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["stark"] = {{"rabi_hz", opt_json(cfg.stark.rabi_hz)},
                {"detuning_hz", cfg.stark.detuning_hz},
                {"lifetime_s", cfg.stark.lifetime_s},
                {"t_max_s", cfg.stark.t_max_s},
                {"wavelength_m", cfg.stark.wavelength_m}};
  j["fit"] = {{"nbar", opt_json(cfg.fit.nbar)},
              {"omega_hz", opt_json(cfg.fit.omega_hz)},
              {"delta0_hz", opt_json(cfg.fit.delta0_hz)},
              {"sigma_delta_hz", opt_json(cfg.fit.sigma_delta_hz)},
              {"n_starts", cfg.fit.n_starts},
              {"max_iterations", cfg.fit.max_iterations}};
  j["synth"] = {{"times", grid_json(cfg.synth.times)},
                {"n_shots", cfg.synth.n_shots},
                {"shot_noise", cfg.synth.shot_noise}};
  return j;
}

void validate(const RunConfig& cfg) {
  auto check_grid = [](const std::optional<GridSpec>& g, const char* name) {
    if (!g) return;
    if (g->count < 1) throw ConfigError(std::string(name) + ".count must be at least 1");
    if (!(g->stop >= g->start)) throw ConfigError(std::string(name) + " range is empty");
    if (g->start < 0.0) throw ConfigError(std::string(name) + " must start at t >= 0");
  };
  if (!(cfg.eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(cfg.omega_hz > 0.0)) throw ConfigError("omega_hz must be positive");
  if (!(cfg.nbar >= 0.0)) throw ConfigError("nbar must be non-negative");
  if (!(cfg.sigma_delta_hz >= 0.0)) throw ConfigError("sigma_delta_hz must be non-negative");
  if (cfg.n_quad < 1) throw ConfigError("n_quad must be at least 1");
  if (cfg.n_max && *cfg.n_max < 1) throw ConfigError("n_max must be at least 1");
  if (!(cfg.truncation_eps > 0.0 && cfg.truncation_eps < 1.0))
    throw ConfigError("truncation_eps must lie in (0,1)");
  check_grid(cfg.t0_grid, "t0_grid");
  check_grid(cfg.t1_grid, "t1_grid");
  if (cfg.t0 && *cfg.t0 < 0.0) throw ConfigError("t0 must be non-negative");
  if (cfg.t1_max && !(*cfg.t1_max > 0.0)) throw ConfigError("t1_max must be positive");
  if (cfg.t1_samples && *cfg.t1_samples < 2) throw ConfigError("t1_samples must be at least 2");
  if (!(cfg.extended_factor >= 1.0)) throw ConfigError("extended_factor must be at least 1");
  if (cfg.points_per_period < 1) throw ConfigError("points_per_period must be at least 1");
  if (cfg.synth.n_shots < 1) throw ConfigError("synth.n_shots must be at least 1");
  if (cfg.synth.times.count < 8) throw ConfigError("synth.times.count must be at least 8");
  if (cfg.fit.n_starts < 1) throw ConfigError("fit.n_starts must be at least 1");
  if (cfg.fit.max_iterations < 1) throw ConfigError("fit.max_iterations must be at least 1");
}

SidebandParams sideband_params(const RunConfig& cfg) {
  return make_params(cfg.eta, kTwoPi * cfg.omega_hz, kTwoPi * cfg.delta0_hz, cfg.nbar, cfg.n_max,
                     cfg.truncation_eps);
}

SidebandModel sideband_model(const RunConfig& cfg) {
  return SidebandModel::thermal(sideband_params(cfg), cfg.truncation_eps);
}

DetuningDistribution detuning_distribution(const RunConfig& cfg) {
  return {kTwoPi * cfg.delta0_hz, kTwoPi * cfg.sigma_delta_hz, cfg.n_quad};
}

StarkParams stark_params(const RunConfig& cfg) {
  StarkParams s;
  s.delta_s = kTwoPi * cfg.stark.detuning_hz;
  s.gamma = 1.0 / cfg.stark.lifetime_s;
  s.t_max = cfg.stark.t_max_s;
  s.wavelength = cfg.stark.wavelength_m;
  s.omega_s = cfg.stark.rabi_hz ? kTwoPi * *cfg.stark.rabi_hz
                                : stark_rabi_for_period(s.delta_s, s.t_max);
  return s;
}

double time_scale(const RunConfig& cfg) { return cfg.eta * kTwoPi * cfg.omega_hz; }

double to_seconds(const RunConfig& cfg, double t) {
  return cfg.dimensionless_time ? t / time_scale(cfg) : t;
}

}  // namespace qcorr
