#pragma once

// Weighted least-squares estimation of (nbar, Omega, delta0, sigma_delta)
// from sampled excited-state populations of a blue-sideband flop.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcorr/errors.hpp"
#include "qcorr/noise.hpp"

namespace qcorr {

struct PopulationDataset {
  std::vector<double> times;  // s, strictly increasing
  std::vector<double> p_e;
  std::vector<int> n_shots;

  std::size_t size() const { return times.size(); }
};

void validate(const PopulationDataset& data);

// sqrt(p(1-p)/n), never below sqrt(0.25/n)/10 so that p in {0,1} keeps a
// finite weight.
double binomial_sigma(double p, int n_shots);

// Parameter vector order: nbar, omega (rad/s), delta0 (rad/s), sigma_delta (rad/s).
struct FitParams {
  double nbar = 0.0;
  double omega = 0.0;
  double delta0 = 0.0;
  double sigma_delta = 0.0;

  Eigen::Vector4d vec() const { return {nbar, omega, delta0, sigma_delta}; }
  static FitParams from(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }
};

struct FitBounds {
  Eigen::Vector4d lower;
  Eigen::Vector4d upper;

  // nbar in [0, 50], omega in [0.1, 10] x guess, delta0 within +-2 pi x 10 kHz,
  // sigma_delta in [0, 2 pi x 5 kHz].
  static FitBounds defaults_for(const FitParams& initial);
};

struct FitOptions {
  double eta = 0.04;
  int n_quad = kDefaultQuadratureNodes;
  double truncation_eps = kDefaultTruncationEps;
  int n_starts = 8;
  std::uint64_t seed = 1;
  int max_iterations = 200;
  // Converged when an accepted step lowers chi^2 by less than this fraction.
  double rel_tolerance = 1e-12;
};

struct FitResult {
  FitParams estimate;
  Eigen::Vector4d uncertainty = Eigen::Vector4d::Zero();  // NaN where not identifiable
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  double chi2 = 0.0;
  int dof = 0;
  double residual_norm = 0.0;  // sqrt(chi2 / N)
  bool converged = false;
  int iterations = 0;
  int best_start = 0;
  std::vector<double> objective_history;  // chi^2 after each accepted step of the best start
  std::vector<std::string> warnings;
  double eta = 0.04;
  int n_quad = kDefaultQuadratureNodes;
};

// Thrown when no start converges within the iteration cap; carries the best
// result found.
struct FitConvergenceError : ConvergenceError {
  FitConvergenceError(const std::string& what, FitResult best)
      : ConvergenceError(what), best(std::move(best)) {}
  FitResult best;
};

SidebandModel fit_model(const FitParams& params, const FitOptions& options);
DetuningDistribution fit_detuning(const FitParams& params, const FitOptions& options);

// Detuning-averaged p_e(t) for the given parameters.
double model_population_e(const FitParams& params, double t, const FitOptions& options);

// Single damped least-squares run from `start`.
FitResult fit_from_start(const PopulationDataset& data, const FitParams& start,
                         const FitBounds& bounds, const FitOptions& options);

// Multi-start fit: start 0 is `initial`, the others are drawn from a seeded
// generator around it.  The smallest chi^2 wins, ties by start index.
FitResult fit_population(const PopulationDataset& data, const FitParams& initial,
                         const FitBounds& bounds, const FitOptions& options = {});

// Dephased-state population <e|rho'_S(t0+t1)|e> over the detection grid,
// evaluated with the fitted parameters.
std::vector<double> predict_dephased(const FitResult& fit, double t0,
                                     std::span<const double> t1_grid);
// Original-state population over the same grid.
std::vector<double> predict_original(const FitResult& fit, double t0,
                                     std::span<const double> t1_grid);

// Exact model populations, optionally with binomial shot noise.
PopulationDataset synthesize_dataset(const FitParams& truth, std::span<const double> times,
                                     int n_shots, bool shot_noise, std::uint64_t seed,
                                     const FitOptions& options = {});

}  // namespace qcorr
