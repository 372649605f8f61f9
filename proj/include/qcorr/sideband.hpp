#pragma once

// First blue sideband of a trapped ion: |g,n> <-> |e,n+1> with Lamb-Dicke
// corrected Rabi frequencies, closed-form pair propagators and a brute-force
// time-ordered propagator on the truncated Fock space.
//
// All frequencies are angular (rad/s), times in seconds.

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "qcorr/quantum_core.hpp"

namespace qcorr {

using Complex = std::complex<double>;
using Matrix = CMatrix<double>;
using State = DensityOperator<double>;

inline constexpr double kDefaultTruncationEps = 1e-8;
inline constexpr int kMinThermalCutoff = 8;

struct SidebandParams {
  double eta = 0.04;
  double omega = 0.0;  // carrier Rabi frequency
  double delta = 0.0;  // detuning from the sideband resonance
  double nbar = 0.0;
  int n_max = 9;       // highest Fock level kept; env_dim = n_max + 1

  BipartiteLayout layout() const { return BipartiteLayout::qubit_fock(n_max); }
  // Number of {|g,n>,|e,n+1>} pairs that fit below the cutoff.
  int n_pairs() const { return n_max; }
};

// Smallest cutoff whose thermal tail (nbar/(nbar+1))^(n+1) is below eps,
// floored at kMinThermalCutoff, plus one level so that the topmost populated
// pair (g,n) <-> (e,n+1) still fits.
int choose_n_max(double nbar, double eps = kDefaultTruncationEps);

SidebandParams make_params(double eta, double omega, double delta, double nbar,
                           std::optional<int> n_max = std::nullopt,
                           double eps = kDefaultTruncationEps);

// Probability mass of the thermal distribution above level n_max.
double thermal_tail(double nbar, int n_max);

// Throws ValidationError on out-of-range fields and TruncationError when the
// population dropped by the cutoff exceeds eps.
void validate(const SidebandParams& p, double eps = kDefaultTruncationEps);

// p_n = nbar^n / (nbar+1)^(n+1) for n = 0..n_max.  Not renormalised.
std::vector<double> thermal_populations(double nbar, int n_max,
                                        double eps = kDefaultTruncationEps);

// Effective sideband Rabi frequency of the pair (g,n) <-> (e,n+1).
double rabi_frequency(int n, double eta, double omega);

struct RabiSpectrum {
  std::vector<double> omegas;      // Omega_n
  std::vector<double> omegas_gen;  // sqrt(Omega_n^2 + delta^2)
};

RabiSpectrum rabi_spectrum(const SidebandParams& p);

struct PairAmplitudes {
  Complex gg;  // <g,n|U|g,n>
  Complex eg;  // <e,n+1|U|g,n>
};

struct PropagatorElements {
  std::vector<Complex> u_gg;
  std::vector<Complex> u_eg;
  double t0 = 0.0;
  double t1 = 0.0;

  PairAmplitudes pair(std::size_t n) const { return {u_gg[n], u_eg[n]}; }
  std::size_t size() const { return u_gg.size(); }
};

// Closed-form amplitudes for one pair with Rabi frequency `omega_n`.
PairAmplitudes pair_propagator(double omega_n, double delta, double t_start, double t_end);

PropagatorElements propagator_elements(const RabiSpectrum& spec, double delta, double t_start,
                                       double t_end);
PropagatorElements propagator_elements(const SidebandParams& p, double t_start, double t_end);

// Full unitary on the truncated space with the pair structure
// <g,n|U|g,n> = u_gg, <e,n+1|U|g,n> = u_eg, <g,n|U|e,n+1> = -conj(u_eg),
// <e,n+1|U|e,n+1> = conj(u_gg); uncoupled levels |e,0> and |g,n_max> are
// left unchanged.
Matrix propagator_matrix(const PropagatorElements& el, int n_max);

// Motional populations of the pairs together with the parameters and Rabi
// spectrum.  Each pair n starts in |g,n> with weight populations[n]; the
// environment need not be thermal.
class SidebandModel {
 public:
  SidebandModel(SidebandParams params, std::vector<double> populations);

  static SidebandModel thermal(const SidebandParams& params, double eps = kDefaultTruncationEps);
  // Environment prepared in the Fock state |n0>.
  static SidebandModel fock(const SidebandParams& params, int n0);

  const SidebandParams& params() const { return params_; }
  const RabiSpectrum& spectrum() const { return spectrum_; }
  std::span<const double> populations() const { return populations_; }
  double delta() const { return params_.delta; }
  BipartiteLayout layout() const { return params_.layout(); }

  // Same populations and Rabi frequencies, different detuning.
  SidebandModel with_detuning(double delta) const;

  PropagatorElements propagator(double t_start, double t_end) const {
    return propagator_elements(spectrum_, params_.delta, t_start, t_end);
  }

  // rho_0 = sum_n p_n |g,n><g,n|
  State initial_state() const;

 private:
  SidebandParams params_;
  std::vector<double> populations_;
  RabiSpectrum spectrum_;
};

// rho(t0) = U(t0,0) rho_0 U(t0,0)^dagger assembled pair by pair.
State evolve_thermal_closed_form(const SidebandModel& model, double t0);
State evolve_thermal_closed_form(const SidebandParams& params, double t0);

// sum_n p_n |u_eg^n(t,0)|^2
double reduced_population_e(const SidebandModel& model, double t);
double reduced_population_e(const SidebandParams& params, double t);

// Interaction-picture Hamiltonian (units of hbar) on the truncated space:
// sum_n ( i Omega_n/2 e^{-i delta t} sigma_+ |n+1><n| + h.c. ).
Matrix sideband_hamiltonian(const SidebandParams& p, double t);

// Largest step (rad) allowed by oracle_propagator: step * max(Omega~_n, |delta|).
inline constexpr double kOracleMaxPhaseStep = 0.05;

// Step count giving a phase step no larger than `phase_step`.
int oracle_steps_for(const SidebandParams& p, double t_start, double t_end, double phase_step);

// Time-ordered product of per-step exponentials of the full Hamiltonian,
// built with no knowledge of the pair structure.  Each step uses the
// two-point Gauss-Legendre Magnus expansion (fourth order).
// For delta = 0 the Hamiltonian is constant and a single exponential is used.
Matrix oracle_propagator(const SidebandParams& p, double t_start, double t_end, int n_steps);

// U rho U^dagger
State evolve(const State& rho, const Matrix& u);

}  // namespace qcorr
