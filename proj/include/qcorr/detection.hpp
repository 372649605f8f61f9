#pragma once

// Local detection of system-environment quantum correlations: dephase the
// qubit at t0, evolve both the original and the dephased state for a further
// t1, and compare the qubit states.  Every quantity here is a finite sum over
// sideband pairs built from the closed-form propagator elements.

#include <span>
#include <vector>

#include "qcorr/sideband.hpp"

namespace qcorr {

// (Phi (x) I) rho(t0) in the computational basis: only the diagonal survives.
State dephased_state(const SidebandModel& model, double t0);

// <e| rho_S(t0+t1) |e>
double population_e_original(const SidebandModel& model, double t0, double t1);
// <e| rho'_S(t0+t1) |e>
double population_e_dephased(const SidebandModel& model, double t0, double t1);

// d(t0,t1) = <e| rho_S(t0+t1) - rho'_S(t0+t1) |e>, signed.
double population_difference(const SidebandModel& model, double t0, double t1);

// Trace distance of the two qubit states, |d(t0,t1)| (both are diagonal).
double local_distance(const SidebandModel& model, double t0, double t1);

// Trace distance between rho(t0) and its dephased counterpart.
double discord_trace(const SidebandModel& model, double t0);

// Squared Hilbert-Schmidt distance between rho(t0) and its dephased counterpart.
double discord_hs(const SidebandModel& model, double t0);

struct MaxDistance {
  double t1 = 0.0;
  double value = 0.0;
};

// Largest local distance over a grid of detection times; ties go to the
// smallest t1.  Throws ValidationError on an empty grid.
MaxDistance max_local_distance(const SidebandModel& model, double t0,
                               std::span<const double> t1_grid);

// local_distance(t0,t0), checked against p_e(2 t0)/2 to `tol`.  The identity
// holds for a resonant drive only; delta != 0 throws ContractError.
double equal_time_identity(const SidebandModel& model, double t0, double tol = 1e-10);

// Uniform-grid average of the local squared Hilbert-Schmidt distance
// 2 d(t0,t1)^2 over t1 in [0, t1_max].  Approaches discord_hs/2 for long
// windows on resonance; delta != 0 throws ContractError.
double time_averaged_hs(const SidebandModel& model, double t0, double t1_max, int n_samples);

// Uniform grid of `count` points on [start, stop] (count == 1 gives start).
std::vector<double> linspace(double start, double stop, int count);

// Time step giving `points_per_period` samples per period 2 pi / Omega_0.
double grid_step_for(const SidebandModel& model, int points_per_period = 40);

// Rows indexed by t0, columns by t1.
struct ProtocolTrace {
  std::vector<double> t0_grid;
  std::vector<double> t1_grid;
  Eigen::MatrixXd p_e_original;
  Eigen::MatrixXd p_e_dephased;
  Eigen::MatrixXd local_distance;
  std::vector<double> discord_trace;
  std::vector<double> discord_hs;
};

ProtocolTrace protocol_trace(const SidebandModel& model, std::span<const double> t0_grid,
                             std::span<const double> t1_grid);

}  // namespace qcorr
