#include "qcorr/commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "qcorr/detection.hpp"
#include "qcorr/noise.hpp"

namespace qcorr {

namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

// Default grids, in units of 1/(eta Omega).
constexpr GridSpec kDefaultT0Grid{0.0, 2.0 * kPi, 101};
constexpr GridSpec kDefaultT1Grid{0.0, 4.0 * kPi, 201};
constexpr double kDefaultAverageWindow = 200.0;

std::vector<double> seconds_grid(const RunConfig& cfg, const std::optional<GridSpec>& user,
                                 const GridSpec& fallback) {
  if (user) {
    auto g = linspace(user->start, user->stop, user->count);
    for (double& t : g) t = to_seconds(cfg, t);
    return g;
  }
  auto g = linspace(fallback.start, fallback.stop, fallback.count);
  for (double& t : g) t /= time_scale(cfg);
  return g;
}

// Config echo for outputs; the destination is not part of the run.
json config_echo(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("out_dir");
  return j;
}

std::vector<std::string> base_metadata(const std::string& command, const RunConfig& cfg,
                                       const SidebandModel& model) {
  return {"qcorr " + command, "config: " + config_echo(cfg).dump(),
          "n_max: " + std::to_string(model.params().n_max),
          "time_scale_rad_per_s: " + format_double(time_scale(cfg))};
}

void check_density(const RunConfig& cfg, const SidebandModel& model,
                   const std::vector<double>& grid, const char* name,
                   std::vector<std::string>& warnings) {
  if (grid.size() < 2) return;
  const double step = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  if (step > grid_step_for(model, cfg.points_per_period) * (1.0 + 1e-9))
    warnings.push_back(std::string(name) + " has fewer than " +
                       std::to_string(cfg.points_per_period) + " points per sideband period");
}

bool noisy(const DetuningDistribution& dist) {
  return dist.delta0 != 0.0 || !dist.deterministic();
}

std::string slug(const RunConfig& cfg) { return cfg.preset.empty() ? "custom" : cfg.preset; }

CommandOutput flop_one(const RunConfig& cfg, const std::string& file) {
  const auto model = sideband_model(cfg);
  const auto dist = detuning_distribution(cfg);
  const double t0 = cfg.t0 ? to_seconds(cfg, *cfg.t0)
                           : kPi / (2.0 * model.spectrum().omegas.front());
  const auto t1s = seconds_grid(cfg, cfg.t1_grid, kDefaultT1Grid);
  CommandOutput out;
  check_density(cfg, model, t1s, "t1 grid", out.warnings);

  CsvTable table;
  table.metadata = base_metadata("flop", cfg, model);
  table.metadata.push_back("t0_s: " + format_double(t0));
  table.columns = {"t1_s", "t1_dimensionless", "p_e", "p_e_dephased", "d"};
  for (double t1 : t1s) {
    const double pe = averaged_population_e(model, dist, t0 + t1);
    const double pd = averaged_population_e_dephased(model, dist, t0, t1);
    const double d = averaged_population_difference(model, dist, t0, t1);
    table.rows.push_back({t1, t1 * time_scale(cfg), pe, pd, d});
  }
  out.files.push_back({file, table.render()});
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string CsvTable::render() const {
  std::ostringstream os;
  for (const auto& m : metadata) os << "# " << m << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
  return os.str();
}

void write_outputs(const CommandOutput& out, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  for (const auto& f : out.files) {
    const auto path = std::filesystem::path(dir) / f.name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write '" + path.string() + "'");
    os << f.content;
    if (!os) throw IoError("failed writing '" + path.string() + "'");
  }
}

CommandOutput cmd_flop(const RunConfig& cfg, bool both_presets) {
  if (!both_presets) return flop_one(cfg, "flop_" + slug(cfg) + ".csv");
  CommandOutput all;
  for (const char* name : {"sideband-cooled", "doppler-cooled"}) {
    auto one = flop_one(apply_preset(cfg, name), std::string("flop_") + name + ".csv");
    for (auto& f : one.files) all.files.push_back(std::move(f));
    for (auto& w : one.warnings) all.warnings.push_back(std::move(w));
  }
  return all;
}

CommandOutput cmd_scan(const RunConfig& cfg) {
  const auto model = sideband_model(cfg);
  const auto dist = detuning_distribution(cfg);
  const auto t0s = seconds_grid(cfg, cfg.t0_grid, kDefaultT0Grid);
  const auto t1s = seconds_grid(cfg, cfg.t1_grid, kDefaultT1Grid);
  CommandOutput out;
  check_density(cfg, model, t0s, "t0 grid", out.warnings);
  check_density(cfg, model, t1s, "t1 grid", out.warnings);

  CsvTable table;
  table.metadata = base_metadata("scan", cfg, model);
  table.columns = {"t0_s", "t1_s", "t0_dimensionless", "t1_dimensionless", "local_distance",
                   "discord_trace", "p_e", "p_e_dephased"};
  const double scale = time_scale(cfg);
  for (double t0 : t0s) {
    const double discord = averaged_discord_trace(model, dist, t0);
    for (double t1 : t1s) {
      const double ld = averaged_local_distance(model, dist, t0, t1);
      if (ld > discord + 1e-10) {
        std::ostringstream os;
        os << "local distance " << ld << " exceeds discord " << discord << " at t0 = " << t0
           << ", t1 = " << t1;
        throw AccuracyError(os.str());
      }
      table.rows.push_back({t0, t1, t0 * scale, t1 * scale, ld, discord,
                            averaged_population_e(model, dist, t0 + t1),
                            averaged_population_e_dephased(model, dist, t0, t1)});
    }
  }
  out.files.push_back({"scan_" + slug(cfg) + ".csv", table.render()});
  return out;
}

CommandOutput cmd_maxdist(const RunConfig& cfg) {
  const auto model = sideband_model(cfg);
  const auto dist = detuning_distribution(cfg);
  const auto t0s = seconds_grid(cfg, cfg.t0_grid, kDefaultT0Grid);
  const auto t1s = seconds_grid(cfg, cfg.t1_grid, kDefaultT1Grid);
  const double steps = static_cast<double>(t1s.size()) - 1.0;
  const int ext_count = static_cast<int>(std::ceil(steps * cfg.extended_factor)) + 1;
  const double ext_stop = t1s.front() + (t1s.back() - t1s.front()) * cfg.extended_factor;
  const auto t1_ext = linspace(t1s.front(), ext_stop, ext_count);
  CommandOutput out;
  check_density(cfg, model, t1s, "t1 grid", out.warnings);

  auto best_over = [&](double t0, const std::vector<double>& grid) {
    MaxDistance best{grid.front(), -1.0};
    for (double t1 : grid) {
      const double v = averaged_local_distance(model, dist, t0, t1);
      if (v > best.value) best = {t1, v};
    }
    return best;
  };
  auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };

  CsvTable table;
  table.metadata = base_metadata("maxdist", cfg, model);
  table.metadata.push_back("extended_t1_max_s: " + format_double(t1_ext.back()));
  table.columns = {"t0_s",         "t0_dimensionless", "max_local_distance", "best_t1_s",
                   "discord_trace", "ratio",           "extended_max",       "extended_best_t1_s",
                   "extended_ratio"};
  for (double t0 : t0s) {
    const double discord = averaged_discord_trace(model, dist, t0);
    const auto m = best_over(t0, t1s);
    const auto e = best_over(t0, t1_ext);
    table.rows.push_back({t0, t0 * time_scale(cfg), m.value, m.t1, discord, ratio(m.value, discord),
                          e.value, e.t1, ratio(e.value, discord)});
  }
  out.files.push_back({"maxdist_" + slug(cfg) + ".csv", table.render()});
  return out;
}

CommandOutput cmd_timeavg(const RunConfig& cfg) {
  const auto model = sideband_model(cfg);
  const auto dist = detuning_distribution(cfg);
  const auto t0s = seconds_grid(cfg, cfg.t0_grid, kDefaultT0Grid);
  const double window = cfg.t1_max ? to_seconds(cfg, *cfg.t1_max)
                                   : kDefaultAverageWindow / time_scale(cfg);
  CommandOutput out;
  const bool resonant = !noisy(dist);
  if (!resonant)
    out.warnings.push_back(
        "detuning is nonzero: the time-average identity is derived for a resonant drive");

  double fastest = 0.0;
  for (std::size_t n = 0; n < model.populations().size(); ++n)
    if (model.populations()[n] > 1e-12)
      fastest = std::max(fastest, std::hypot(model.spectrum().omegas[n], std::abs(dist.delta0) +
                                                                             3.0 * dist.sigma_delta));
  const int samples = cfg.t1_samples
                          ? *cfg.t1_samples
                          : static_cast<int>(std::ceil(window * fastest / kTwoPi *
                                                       cfg.points_per_period)) + 1;
  const int half_samples = std::max(2, (samples + 1) / 2);

  auto average = [&](double t0, double t_window, int n) {
    if (resonant) return time_averaged_hs(model, t0, t_window, n);
    const double h = t_window / (n - 1);
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double d = averaged_population_difference(model, dist, t0, k * h);
      acc += ((k == 0 || k == n - 1) ? 0.5 : 1.0) * 2.0 * d * d;
    }
    return acc * h / t_window;
  };

  CsvTable table;
  table.metadata = base_metadata("timeavg", cfg, model);
  table.metadata.push_back("t1_max_s: " + format_double(window));
  table.metadata.push_back("t1_samples: " + std::to_string(samples));
  for (const auto& w : out.warnings) table.metadata.push_back("warning: " + w);
  table.columns = {"t0_s",        "t0_dimensionless", "time_average", "half_discord_hs",
                   "deviation",   "relative_deviation", "time_average_half_window",
                   "deviation_half_window"};
  for (double t0 : t0s) {
    const double ref = 0.5 * averaged_discord_hs(model, dist, t0);
    const double avg = average(t0, window, samples);
    const double avg_half = average(t0, 0.5 * window, half_samples);
    table.rows.push_back({t0, t0 * time_scale(cfg), avg, ref, avg - ref,
                          ref > 0.0 ? (avg - ref) / ref : 0.0, avg_half, avg_half - ref});
  }
  out.files.push_back({"timeavg_" + slug(cfg) + ".csv", table.render()});
  return out;
}

CommandOutput cmd_synth(const RunConfig& cfg) {
  FitOptions opt;
  opt.eta = cfg.eta;
  opt.n_quad = cfg.n_quad;
  opt.truncation_eps = cfg.truncation_eps;
  const FitParams truth{cfg.nbar, kTwoPi * cfg.omega_hz, kTwoPi * cfg.delta0_hz,
                        kTwoPi * cfg.sigma_delta_hz};
  const auto& g = cfg.synth.times;
  auto times = linspace(g.start, g.stop, g.count);
  for (double& t : times) t = to_seconds(cfg, t);
  const auto data =
      synthesize_dataset(truth, times, cfg.synth.n_shots, cfg.synth.shot_noise, cfg.seed, opt);
  CommandOutput out;
  out.files.push_back(
      {"dataset_" + slug(cfg) + ".csv",
       render_dataset(data, {"qcorr synth", "config: " + config_echo(cfg).dump()})});
  return out;
}

CommandOutput cmd_fit(const std::string& dataset_path, const RunConfig& cfg) {
  const auto data = read_dataset(dataset_path);
  FitParams initial;
  initial.nbar = cfg.fit.nbar.value_or(cfg.nbar);
  initial.omega = kTwoPi * cfg.fit.omega_hz.value_or(cfg.omega_hz);
  initial.delta0 = kTwoPi * cfg.fit.delta0_hz.value_or(cfg.delta0_hz);
  initial.sigma_delta = kTwoPi * cfg.fit.sigma_delta_hz.value_or(cfg.sigma_delta_hz);
  FitOptions opt;
  opt.eta = cfg.eta;
  opt.n_quad = cfg.n_quad;
  opt.truncation_eps = cfg.truncation_eps;
  opt.n_starts = cfg.fit.n_starts;
  opt.max_iterations = cfg.fit.max_iterations;
  opt.seed = cfg.seed;
  const auto fit = fit_population(data, initial, FitBounds::defaults_for(initial), opt);
  json j = fit_result_json(fit);
  j["config"] = config_echo(cfg);
  j["dataset"] = dataset_path;
  CommandOutput out;
  out.warnings = fit.warnings;
  out.files.push_back({"fit_result.json", j.dump(2) + "\n"});
  return out;
}

nlohmann::json budget_json(const RunConfig& cfg) {
  const auto stark = stark_params(cfg);
  const auto b = scattering_budget(stark);
  const double isat = saturation_intensity(stark.wavelength, stark.tau());
  json j;
  j["stark"] = {{"rabi_hz", stark.omega_s / kTwoPi},
                {"detuning_hz", stark.delta_s / kTwoPi},
                {"lifetime_s", stark.tau()},
                {"t_max_s", stark.t_max},
                {"wavelength_m", stark.wavelength}};
  j["saturation_parameter"] = b.s;
  j["rho_ee"] = b.rho_ee;
  j["scattering_rate_per_s"] = b.rate;
  j["scattering_events"] = b.events;
  j["optimal_detuning_hz"] = b.optimal_delta / kTwoPi;
  j["scattering_rate_at_optimum_per_s"] = b.rate_at_optimum;
  j["scattering_events_at_optimum"] = b.events_at_optimum;
  j["stark_shift_hz"] = stark_angular_frequency(stark) / kTwoPi;
  j["stark_period_s"] = stark_period(stark);
  j["saturation_intensity_w_per_m2"] = isat;
  j["saturation_intensity_mw_per_cm2"] = w_per_m2_to_mw_per_cm2(isat);
  json sweep = json::array();
  for (double f : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    StarkParams s = stark;
    s.delta_s = f * b.optimal_delta;
    if (s.delta_s / s.gamma <= 100.0) continue;
    const auto bs = scattering_budget(s);
    sweep.push_back({{"detuning_hz", s.delta_s / kTwoPi},
                     {"scattering_rate_per_s", bs.rate},
                     {"scattering_events", bs.events},
                     {"stark_period_s", stark_period(s)}});
  }
  j["detuning_sweep"] = sweep;
  return j;
}

CommandOutput cmd_budget(const RunConfig& cfg) {
  json j = budget_json(cfg);
  j["config"] = config_echo(cfg);
  CommandOutput out;
  out.files.push_back({"budget.json", j.dump(2) + "\n"});
  return out;
}

nlohmann::json fit_result_json(const FitResult& fit) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  const auto& e = fit.estimate;
  const auto& u = fit.uncertainty;
  json j;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["best_start"] = fit.best_start;
  j["nbar"] = {{"value", e.nbar}, {"sigma", num(u(0))}};
  j["omega_rad_per_s"] = {{"value", e.omega}, {"sigma", num(u(1))}};
  j["omega_hz"] = {{"value", e.omega / kTwoPi}, {"sigma", num(u(1) / kTwoPi)}};
  j["delta0_hz"] = {{"value", e.delta0 / kTwoPi}, {"sigma", num(u(2) / kTwoPi)}};
  j["sigma_delta_hz"] = {{"value", e.sigma_delta / kTwoPi}, {"sigma", num(u(3) / kTwoPi)}};
  j["chi2"] = fit.chi2;
  j["dof"] = fit.dof;
  j["chi2_per_dof"] = fit.dof > 0 ? json(fit.chi2 / fit.dof) : json(nullptr);
  j["residual_norm"] = fit.residual_norm;
  json cov = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(num(fit.covariance(r, c)));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["covariance_order"] = {"nbar", "omega_rad_per_s", "delta0_rad_per_s", "sigma_delta_rad_per_s"};
  j["warnings"] = fit.warnings;
  j["eta"] = fit.eta;
  j["n_quad"] = fit.n_quad;
  return j;
}

PopulationDataset parse_dataset(std::istream& in) {
  PopulationDataset data;
  std::string line;
  int lineno = 0;
  bool header = false;
  auto fail = [&](const std::string& msg) {
    throw ConfigError("dataset line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!header) {
      if (cells != std::vector<std::string>{"t_s", "p_e", "n_shots"})
        fail("expected header 't_s,p_e,n_shots'");
      header = true;
      continue;
    }
    if (cells.size() != 3) fail("expected 3 columns, found " + std::to_string(cells.size()));
    double t = 0.0, p = 0.0;
    long long n = 0;
    auto parse_d = [&](const std::string& s, double& v, const char* what) {
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
        fail(std::string("cannot parse ") + what + " '" + s + "'");
    };
    parse_d(cells[0], t, "t_s");
    parse_d(cells[1], p, "p_e");
    const auto r = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), n);
    if (r.ec != std::errc() || r.ptr != cells[2].data() + cells[2].size() || cells[2].empty())
      fail("cannot parse n_shots '" + cells[2] + "'");
    if (!(p >= 0.0 && p <= 1.0)) fail("p_e outside [0,1]");
    if (n < 1 || n > std::numeric_limits<int>::max()) fail("n_shots must be a positive integer");
    if (!data.times.empty() && !(t > data.times.back())) fail("times must be strictly increasing");
    data.times.push_back(t);
    data.p_e.push_back(p);
    data.n_shots.push_back(static_cast<int>(n));
  }
  if (!header) throw ConfigError("dataset is empty");
  if (data.size() == 0) throw ConfigError("dataset has a header but no rows");
  return data;
}

PopulationDataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return parse_dataset(in);
}

std::string render_dataset(const PopulationDataset& data,
                           const std::vector<std::string>& metadata) {
  std::ostringstream os;
  for (const auto& m : metadata) os << "# " << m << '\n';
  os << "t_s,p_e,n_shots\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    os << format_double(data.times[i]) << ',' << format_double(data.p_e[i]) << ','
       << data.n_shots[i] << '\n';
  return os.str();
}

}  // namespace qcorr
