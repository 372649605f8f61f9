#pragma once

// Experimental imperfections: a Gaussian-distributed sideband detuning,
// dephasing by sampled AC-Stark phases and the photon-scattering budget of the
// far-detuned Stark beam.

#include <functional>
#include <span>
#include <vector>

#include "qcorr/sideband.hpp"

namespace qcorr {

inline constexpr int kDefaultQuadratureNodes = 15;

// delta ~ N(delta0, sigma_delta^2); sigma_delta is a standard deviation.
struct DetuningDistribution {
  double delta0 = 0.0;
  double sigma_delta = 0.0;
  int n_quad = kDefaultQuadratureNodes;

  bool deterministic() const { return sigma_delta == 0.0 || n_quad == 1; }
};

void validate(const DetuningDistribution& dist);

struct DetuningNode {
  double delta;
  double weight;
};

// Quadrature nodes in detuning; a single node at delta0 when deterministic.
std::vector<DetuningNode> detuning_nodes(const DetuningDistribution& dist);

using Observable = std::function<double(const SidebandModel&)>;

// Weighted average of `observable` over the detuning ensemble.  The model's
// own detuning is replaced by each node.
double detuning_averaged(const SidebandModel& model, const DetuningDistribution& dist,
                         const Observable& observable);

// Ensemble versions of the protocol quantities.  Linear quantities (p_e, d)
// are averaged first; absolute values and norms are taken on the averaged
// (mixed) state.
double averaged_population_e(const SidebandModel& model, const DetuningDistribution& dist,
                             double t);
double averaged_population_e_dephased(const SidebandModel& model,
                                      const DetuningDistribution& dist, double t0, double t1);
double averaged_population_difference(const SidebandModel& model,
                                      const DetuningDistribution& dist, double t0, double t1);
double averaged_local_distance(const SidebandModel& model, const DetuningDistribution& dist,
                               double t0, double t1);
// Trace distance between the ensemble state at t0 and its dephased version.
double averaged_discord_trace(const SidebandModel& model, const DetuningDistribution& dist,
                              double t0);
double averaged_discord_hs(const SidebandModel& model, const DetuningDistribution& dist,
                           double t0);

// Far-detuned Stark beam on the dipole transition.
struct StarkParams {
  double omega_s = 0.0;     // Rabi frequency, rad/s
  double delta_s = 0.0;     // detuning, rad/s
  double gamma = 0.0;       // decay rate 1/tau, 1/s
  double t_max = 0.0;       // longest dephasing pulse, s
  double wavelength = 0.0;  // m

  double tau() const { return 1.0 / gamma; }
};

void validate(const StarkParams& stark);

// 397 nm, tau = 7.1 ns, t_max = 25 us, Delta = 2 pi x 400 GHz, with the Rabi
// frequency chosen so that one Stark oscillation period equals t_max.
StarkParams default_stark_params();

// Omega_s^2 / (4 Delta_s), the angular frequency of the qubit coherence.
double stark_angular_frequency(const StarkParams& stark);
double stark_phase(const StarkParams& stark, double t);
// 8 pi Delta_s / Omega_s^2
double stark_period(const StarkParams& stark);
// Detuning at which one period just fits into t_max: t_max Omega_s^2 / (8 pi).
double optimal_stark_detuning(double omega_s, double t_max);
// Rabi frequency for which the period at detuning delta_s equals t_max.
double stark_rabi_for_period(double delta_s, double t_max);
// s = 2 Omega^2 / Gamma^2
double saturation_parameter(double omega_s, double gamma);

struct ScatteringBudget {
  double s = 0.0;
  double rho_ee = 0.0;              // excited population at delta_s
  double rate = 0.0;                // Gamma rho_ee, 1/s
  double events = 0.0;              // rate * t_max
  double optimal_delta = 0.0;       // t_max Omega^2 / (8 pi)
  double rate_at_optimum = 0.0;     // closed form at the optimal detuning
  double events_at_optimum = 0.0;
};

ScatteringBudget scattering_budget(const StarkParams& stark);

// I_sat = (pi/3) h c / (lambda^3 tau), in W/m^2.
double saturation_intensity(double wavelength, double tau);
inline double w_per_m2_to_mw_per_cm2(double x) { return x * 0.1; }

// Z(phi) = diag(e^{i phi}, 1) on the qubit.
Matrix stark_rotation(double phi);

// (1/M) sum_k (Z(phi_k) (x) I) rho (Z(phi_k) (x) I)^dagger.  Diagonal system
// blocks are copied untouched, so populations never change.
State sampled_dephasing(const State& rho, std::span<const double> phases,
                        const BipartiteLayout& layout);

// 2 pi k / M, k = 0..M-1
std::vector<double> equally_spaced_phases(int m);

// Stark phases accumulated by pulses of the given lengths.
std::vector<double> stark_phases(const StarkParams& stark, std::span<const double> pulse_lengths);

}  // namespace qcorr
