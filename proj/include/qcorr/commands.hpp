#pragma once

// Figure-level commands behind the `qcorr` executable.  Each command renders
// its output to text (CSV or JSON) so that it can be compared byte for byte;
// the write_* helpers put that text on disk.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "qcorr/config.hpp"
#include "qcorr/fitting.hpp"

namespace qcorr {

// Exit codes of the command-line tool.
enum class ExitCode : int { ok = 0, usage = 1, io = 2, numerical = 3 };

struct CsvTable {
  std::vector<std::string> metadata;  // emitted as "# ..." lines
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  // Doubles are printed with 17 significant digits.
  std::string render() const;
};

std::string format_double(double x);

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string content;
};

struct CommandOutput {
  std::vector<OutputFile> files;
  std::vector<std::string> warnings;
};

// Writes every file under `dir`, creating it if needed.  Throws IoError.
void write_outputs(const CommandOutput& out, const std::string& dir);

// Original and dephased populations after a preparation pulse t0 over a
// detection grid.  Runs the sideband-cooled and doppler-cooled presets when
// `both_presets` is set, otherwise the configuration as given.
CommandOutput cmd_flop(const RunConfig& cfg, bool both_presets);

// Local distance over a (t0, t1) grid plus discord per t0.  Throws
// AccuracyError if any cell exceeds its row's discord.
CommandOutput cmd_scan(const RunConfig& cfg);

// Per t0: maximum local distance over the t1 grid and over an extended grid,
// discord and their ratios.
CommandOutput cmd_maxdist(const RunConfig& cfg);

// Per t0: time-averaged local squared HS distance over [0, t1_max] and over
// half that window, against half the HS discord.
CommandOutput cmd_timeavg(const RunConfig& cfg);

// Synthetic population dataset in the fit input format.
CommandOutput cmd_synth(const RunConfig& cfg);

// Fits a dataset; the returned JSON holds estimates, uncertainties and
// residuals.  Non-convergence throws FitConvergenceError.
CommandOutput cmd_fit(const std::string& dataset_path, const RunConfig& cfg);

// Scattering and saturation budget of the Stark dephasing beam.
CommandOutput cmd_budget(const RunConfig& cfg);

// Dataset CSV with header t_s,p_e,n_shots; '#' lines and blank lines are
// skipped.  Errors name the offending line.
PopulationDataset parse_dataset(std::istream& in);
PopulationDataset read_dataset(const std::string& path);
std::string render_dataset(const PopulationDataset& data, const std::vector<std::string>& metadata);

nlohmann::json fit_result_json(const FitResult& fit);
nlohmann::json budget_json(const RunConfig& cfg);

}  // namespace qcorr
