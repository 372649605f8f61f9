#include "qcorr/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qcorr/detection.hpp"
#include "qcorr/quadrature.hpp"

namespace qcorr {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPlanck = 6.62607015e-34;      // J s
constexpr double kSpeedOfLight = 299792458.0;   // m/s

// Per-pair coherence <g,n| rho(t0) |e,n+1> / p_n averaged over the ensemble.
std::vector<Complex> averaged_coherences(const SidebandModel& model,
                                         const DetuningDistribution& dist, double t0) {
  std::vector<Complex> coh(model.populations().size(), Complex(0.0, 0.0));
  for (const auto& node : detuning_nodes(dist)) {
    const auto el = model.with_detuning(node.delta).propagator(0.0, t0);
    for (std::size_t n = 0; n < coh.size(); ++n)
      coh[n] += node.weight * std::conj(el.u_eg[n]) * el.u_gg[n];
  }
  return coh;
}

}  // namespace

void validate(const DetuningDistribution& dist) {
  if (!(dist.sigma_delta >= 0.0)) throw ValidationError("sigma_delta must be non-negative");
  if (dist.n_quad < 1) throw ValidationError("n_quad must be at least 1");
  if (!std::isfinite(dist.delta0)) throw ValidationError("delta0 must be finite");
}

std::vector<DetuningNode> detuning_nodes(const DetuningDistribution& dist) {
  validate(dist);
  if (dist.deterministic()) return {{dist.delta0, 1.0}};
  const auto rule = gauss_hermite_normal(dist.n_quad);
  std::vector<DetuningNode> nodes;
  nodes.reserve(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    nodes.push_back({dist.delta0 + dist.sigma_delta * rule.nodes[i], rule.weights[i]});
  return nodes;
}

double detuning_averaged(const SidebandModel& model, const DetuningDistribution& dist,
                         const Observable& observable) {
  double acc = 0.0;
  for (const auto& node : detuning_nodes(dist))
    acc += node.weight * observable(model.with_detuning(node.delta));
  return acc;
}

double averaged_population_e(const SidebandModel& model, const DetuningDistribution& dist,
                             double t) {
  return detuning_averaged(model, dist,
                           [t](const SidebandModel& m) { return reduced_population_e(m, t); });
}

double averaged_population_e_dephased(const SidebandModel& model,
                                      const DetuningDistribution& dist, double t0, double t1) {
  return detuning_averaged(model, dist, [t0, t1](const SidebandModel& m) {
    return population_e_dephased(m, t0, t1);
  });
}

double averaged_population_difference(const SidebandModel& model,
                                      const DetuningDistribution& dist, double t0, double t1) {
  return detuning_averaged(model, dist, [t0, t1](const SidebandModel& m) {
    return population_difference(m, t0, t1);
  });
}

double averaged_local_distance(const SidebandModel& model, const DetuningDistribution& dist,
                               double t0, double t1) {
  return std::abs(averaged_population_difference(model, dist, t0, t1));
}

// The ensemble state keeps the pair-block structure, and each block of
// rho - rho' is [[0, c], [c*, 0]] with eigenvalues +-|c|.
double averaged_discord_trace(const SidebandModel& model, const DetuningDistribution& dist,
                              double t0) {
  const auto coh = averaged_coherences(model, dist, t0);
  const auto pops = model.populations();
  double sum = 0.0;
  for (std::size_t n = 0; n < coh.size(); ++n) sum += pops[n] * std::abs(coh[n]);
  return sum;
}

double averaged_discord_hs(const SidebandModel& model, const DetuningDistribution& dist,
                           double t0) {
  const auto coh = averaged_coherences(model, dist, t0);
  const auto pops = model.populations();
  double sum = 0.0;
  for (std::size_t n = 0; n < coh.size(); ++n) sum += pops[n] * pops[n] * std::norm(coh[n]);
  return 2.0 * sum;
}

void validate(const StarkParams& stark) {
  if (!(stark.omega_s > 0.0 && stark.delta_s > 0.0 && stark.gamma > 0.0 && stark.t_max > 0.0 &&
        stark.wavelength > 0.0))
    throw ValidationError("Stark parameters must all be strictly positive");
  if (stark.delta_s / stark.gamma <= 100.0) {
    std::ostringstream os;
    os << "Stark beam is not far detuned: delta_s/gamma = " << stark.delta_s / stark.gamma
       << " (need > 100)";
    throw ValidationError(os.str());
  }
}

StarkParams default_stark_params() {
  StarkParams s;
  s.wavelength = 397e-9;
  s.gamma = 1.0 / 7.1e-9;
  s.t_max = 25e-6;
  s.delta_s = 2.0 * kPi * 400e9;
  s.omega_s = stark_rabi_for_period(s.delta_s, s.t_max);
  return s;
}

double stark_angular_frequency(const StarkParams& stark) {
  return stark.omega_s * stark.omega_s / (4.0 * stark.delta_s);
}

double stark_phase(const StarkParams& stark, double t) { return stark_angular_frequency(stark) * t; }

double stark_period(const StarkParams& stark) {
  return 8.0 * kPi * stark.delta_s / (stark.omega_s * stark.omega_s);
}

double optimal_stark_detuning(double omega_s, double t_max) {
  return t_max * omega_s * omega_s / (8.0 * kPi);
}

double stark_rabi_for_period(double delta_s, double t_max) {
  return std::sqrt(8.0 * kPi * delta_s / t_max);
}

double saturation_parameter(double omega_s, double gamma) {
  return 2.0 * omega_s * omega_s / (gamma * gamma);
}

ScatteringBudget scattering_budget(const StarkParams& stark) {
  validate(stark);
  ScatteringBudget b;
  b.s = saturation_parameter(stark.omega_s, stark.gamma);
  const double x = 2.0 * stark.delta_s / stark.gamma;
  b.rho_ee = (b.s / 2.0) / (1.0 + b.s + x * x);
  b.rate = stark.gamma * b.rho_ee;
  b.events = b.rate * stark.t_max;
  b.optimal_delta = optimal_stark_detuning(stark.omega_s, stark.t_max);
  const double y = stark.t_max * stark.gamma * b.s / (8.0 * kPi);
  b.rate_at_optimum = (stark.gamma * b.s / 2.0) / (1.0 + b.s + y * y);
  b.events_at_optimum = b.rate_at_optimum * stark.t_max;
  return b;
}

double saturation_intensity(double wavelength, double tau) {
  if (!(wavelength > 0.0 && tau > 0.0))
    throw ValidationError("wavelength and lifetime must be positive");
  return (kPi / 3.0) * kPlanck * kSpeedOfLight / (wavelength * wavelength * wavelength * tau);
}

Matrix stark_rotation(double phi) {
  Matrix z = Matrix::Identity(2, 2);
  z(0, 0) = std::polar(1.0, phi);
  return z;
}

State sampled_dephasing(const State& rho, std::span<const double> phases,
                        const BipartiteLayout& layout) {
  if (phases.empty()) throw ValidationError("at least one dephasing phase is required");
  if (layout.system_dim != 2) throw DimensionError("Stark dephasing acts on a qubit");
  if (rho.dim() != layout.dim()) throw DimensionError("state dimension does not match layout");
  // Block (g,e) picks up e^{i phi}, block (e,g) e^{-i phi}.
  Complex factor(0.0, 0.0);
  for (double phi : phases) factor += std::polar(1.0, phi);
  factor /= static_cast<double>(phases.size());
  // Below the rounding of the phases themselves the mean is zero: equally
  // spaced sets then give exactly the projective channel.
  double largest = 1.0;
  for (double phi : phases) largest = std::max(largest, std::abs(phi));
  if (std::abs(factor) <= 8.0 * std::numeric_limits<double>::epsilon() * largest)
    factor = Complex(0.0, 0.0);

  const auto ne = layout.env_dim;
  Matrix out = rho.matrix();
  out.block(0, ne, ne, ne) *= factor;
  out.block(ne, 0, ne, ne) *= std::conj(factor);
  return State(std::move(out));
}

std::vector<double> equally_spaced_phases(int m) {
  if (m < 1) throw ValidationError("need at least one phase");
  std::vector<double> phases(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) phases[k] = 2.0 * kPi * k / m;
  return phases;
}

std::vector<double> stark_phases(const StarkParams& stark, std::span<const double> pulse_lengths) {
  std::vector<double> phases;
  phases.reserve(pulse_lengths.size());
  for (double t : pulse_lengths) phases.push_back(stark_phase(stark, t));
  return phases;
}

}  // namespace qcorr
