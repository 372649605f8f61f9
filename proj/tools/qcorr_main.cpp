// qcorr: command-line front end for the local quantum-correlation detection
// simulator.  See README.md for the subcommands and file formats.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "qcorr/commands.hpp"

namespace {

using qcorr::ExitCode;

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool dimensionless = false;
  std::optional<double> t0;
  std::optional<double> t0_start, t0_stop, t1_start, t1_stop;
  std::optional<int> t0_count, t1_count;
  std::optional<double> t1_max;
  std::optional<int> t1_samples;
  std::optional<double> nbar, delta0_hz, sigma_delta_hz;
  std::optional<int> n_max;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON configuration file");
  cmd->add_option("--preset", f.preset, "named parameter preset");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_flag("--dimensionless-time", f.dimensionless,
                "interpret time values in units of 1/(eta Omega)");
  cmd->add_option("--nbar", f.nbar, "mean thermal occupation");
  cmd->add_option("--delta0-hz", f.delta0_hz, "centre detuning (Hz)");
  cmd->add_option("--sigma-delta-hz", f.sigma_delta_hz, "detuning standard deviation (Hz)");
  cmd->add_option("--n-max", f.n_max, "Fock cutoff override");
  cmd->add_option("--t0", f.t0, "preparation time");
  cmd->add_option("--t0-start", f.t0_start);
  cmd->add_option("--t0-stop", f.t0_stop);
  cmd->add_option("--t0-count", f.t0_count);
  cmd->add_option("--t1-start", f.t1_start);
  cmd->add_option("--t1-stop", f.t1_stop);
  cmd->add_option("--t1-count", f.t1_count);
  cmd->add_option("--t1-max", f.t1_max, "time-average window");
  cmd->add_option("--t1-samples", f.t1_samples, "time-average samples");
}

std::optional<qcorr::GridSpec> override_grid(std::optional<qcorr::GridSpec> g,
                                             const std::optional<double>& start,
                                             const std::optional<double>& stop,
                                             const std::optional<int>& count) {
  if (!start && !stop && !count) return g;
  if (!g) {
    if (!(start && stop && count))
      throw qcorr::ConfigError("grid overrides need --*-start, --*-stop and --*-count together");
    return qcorr::GridSpec{*start, *stop, *count};
  }
  if (start) g->start = *start;
  if (stop) g->stop = *stop;
  if (count) g->count = *count;
  return g;
}

qcorr::RunConfig resolve(const CommonFlags& f) {
  qcorr::RunConfig cfg;
  if (!f.preset.empty()) cfg = qcorr::apply_preset(cfg, f.preset);
  if (!f.config_path.empty()) cfg = qcorr::load_config_file(f.config_path, cfg);
  if (!f.preset.empty() && !f.config_path.empty()) cfg.preset = f.preset;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (f.seed) cfg.seed = *f.seed;
  if (f.dimensionless) cfg.dimensionless_time = true;
  if (f.nbar) cfg.nbar = *f.nbar;
  if (f.delta0_hz) cfg.delta0_hz = *f.delta0_hz;
  if (f.sigma_delta_hz) cfg.sigma_delta_hz = *f.sigma_delta_hz;
  if (f.n_max) cfg.n_max = *f.n_max;
  if (f.t0) cfg.t0 = *f.t0;
  if (f.t1_max) cfg.t1_max = *f.t1_max;
  if (f.t1_samples) cfg.t1_samples = *f.t1_samples;
  cfg.t0_grid = override_grid(cfg.t0_grid, f.t0_start, f.t0_stop, f.t0_count);
  cfg.t1_grid = override_grid(cfg.t1_grid, f.t1_start, f.t1_stop, f.t1_count);
  qcorr::validate(cfg);
  return cfg;
}

void report(const qcorr::CommandOutput& out, const std::string& dir) {
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
  qcorr::write_outputs(out, dir);
  for (const auto& f : out.files) std::cout << "wrote " << dir << '/' << f.name << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local detection of qubit-motion quantum correlations in a trapped ion"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string dataset;

  auto* flop = app.add_subcommand("flop", "original vs dephased excited-state population");
  auto* scan = app.add_subcommand("scan", "local distance over a (t0, t1) grid");
  auto* maxdist = app.add_subcommand("maxdist", "maximum local distance vs discord per t0");
  auto* timeavg = app.add_subcommand("timeavg", "time-averaged HS distance vs HS discord");
  auto* synth = app.add_subcommand("synth", "synthetic population dataset");
  auto* fit = app.add_subcommand("fit", "fit a population dataset");
  auto* budget = app.add_subcommand("budget", "Stark-beam scattering and saturation budget");
  for (auto* c : {flop, scan, maxdist, timeavg, synth, fit, budget}) add_common(c, flags);
  fit->add_option("dataset", dataset, "CSV with columns t_s,p_e,n_shots")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    const auto cfg = resolve(flags);
    qcorr::CommandOutput out;
    if (flop->parsed()) {
      out = qcorr::cmd_flop(cfg, flags.preset.empty() && flags.config_path.empty());
    } else if (scan->parsed()) {
      out = qcorr::cmd_scan(cfg);
    } else if (maxdist->parsed()) {
      out = qcorr::cmd_maxdist(cfg);
    } else if (timeavg->parsed()) {
      out = qcorr::cmd_timeavg(cfg);
    } else if (synth->parsed()) {
      out = qcorr::cmd_synth(cfg);
    } else if (fit->parsed()) {
      try {
        out = qcorr::cmd_fit(dataset, cfg);
      } catch (const qcorr::FitConvergenceError& e) {
        auto j = qcorr::fit_result_json(e.best);
        j["error"] = e.what();
        qcorr::CommandOutput diag;
        diag.files.push_back({"fit_result.json", j.dump(2) + "\n"});
        report(diag, cfg.out_dir);
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numerical);
      }
    } else if (budget->parsed()) {
      out = qcorr::cmd_budget(cfg);
      std::cout << out.files.front().content;
    }
    report(out, cfg.out_dir);
  } catch (const qcorr::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::io);
  } catch (const qcorr::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const qcorr::TruncationError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::numerical);
  } catch (const qcorr::AccuracyError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::numerical);
  } catch (const qcorr::ConvergenceError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::numerical);
  } catch (const qcorr::ValidationError& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::numerical);
  }
  return static_cast<int>(ExitCode::ok);
}
