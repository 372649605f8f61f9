#include "qcorr/detection.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace qcorr {

namespace {

void require_resonant(const SidebandModel& model, const char* what) {
  if (model.delta() != 0.0) {
    std::ostringstream os;
    os << what << " holds only for a resonant drive (delta = 0), got delta = " << model.delta();
    throw ContractError(os.str());
  }
}

}  // namespace

State dephased_state(const SidebandModel& model, double t0) {
  const auto layout = model.layout();
  const auto el = model.propagator(0.0, t0);
  const auto pops = model.populations();
  Matrix m = Matrix::Zero(layout.dim(), layout.dim());
  for (std::size_t n = 0; n < pops.size(); ++n) {
    const auto g = layout.index(0, static_cast<Eigen::Index>(n));
    const auto e = layout.index(1, static_cast<Eigen::Index>(n) + 1);
    m(g, g) = pops[n] * std::norm(el.u_gg[n]);
    m(e, e) = pops[n] * std::norm(el.u_eg[n]);
  }
  return State(std::move(m));
}

double population_e_original(const SidebandModel& model, double t0, double t1) {
  return reduced_population_e(model, t0 + t1);
}

double population_e_dephased(const SidebandModel& model, double t0, double t1) {
  const auto pops = model.populations();
  const auto& spec = model.spectrum();
  double pe = 0.0;
  for (std::size_t n = 0; n < pops.size(); ++n) {
    if (pops[n] == 0.0) continue;
    const auto prep = pair_propagator(spec.omegas[n], model.delta(), 0.0, t0);
    const auto det = pair_propagator(spec.omegas[n], model.delta(), t0, t0 + t1);
    pe += pops[n] * (std::norm(prep.gg) * std::norm(det.eg) + std::norm(prep.eg) * std::norm(det.gg));
  }
  return pe;
}

double population_difference(const SidebandModel& model, double t0, double t1) {
  const auto pops = model.populations();
  const auto& spec = model.spectrum();
  double d = 0.0;
  for (std::size_t n = 0; n < pops.size(); ++n) {
    if (pops[n] == 0.0) continue;
    const auto prep = pair_propagator(spec.omegas[n], model.delta(), 0.0, t0);
    const auto det = pair_propagator(spec.omegas[n], model.delta(), t0, t0 + t1);
    // z + conj(z) = 2 Re z
    d += pops[n] * 2.0 * (std::conj(prep.eg) * prep.gg * det.eg * det.gg).real();
  }
  return d;
}

double local_distance(const SidebandModel& model, double t0, double t1) {
  return std::abs(population_difference(model, t0, t1));
}

double discord_trace(const SidebandModel& model, double t0) {
  const auto pops = model.populations();
  const auto& spec = model.spectrum();
  double sum = 0.0;
  for (std::size_t n = 0; n < pops.size(); ++n) {
    if (pops[n] == 0.0) continue;
    const auto a = pair_propagator(spec.omegas[n], model.delta(), 0.0, t0);
    sum += pops[n] * std::abs(a.eg * a.gg);
  }
  return sum;
}

double discord_hs(const SidebandModel& model, double t0) {
  const auto pops = model.populations();
  const auto& spec = model.spectrum();
  double sum = 0.0;
  for (std::size_t n = 0; n < pops.size(); ++n) {
    if (pops[n] == 0.0) continue;
    const auto a = pair_propagator(spec.omegas[n], model.delta(), 0.0, t0);
    sum += pops[n] * pops[n] * std::norm(a.eg) * std::norm(a.gg);
  }
  return 2.0 * sum;
}

MaxDistance max_local_distance(const SidebandModel& model, double t0,
                               std::span<const double> t1_grid) {
  if (t1_grid.empty()) throw ValidationError("detection-time grid is empty");
  MaxDistance best{t1_grid.front(), -1.0};
  for (double t1 : t1_grid) {
    const double v = local_distance(model, t0, t1);
    if (v > best.value || (v == best.value && t1 < best.t1)) best = {t1, v};
  }
  return best;
}

double equal_time_identity(const SidebandModel& model, double t0, double tol) {
  require_resonant(model, "the equal-time identity");
  const double lhs = local_distance(model, t0, t0);
  const double rhs = 0.5 * reduced_population_e(model, 2.0 * t0);
  if (std::abs(lhs - rhs) > tol) {
    std::ostringstream os;
    os << "equal-time identity violated: |d(t0,t0)| = " << lhs << ", p_e(2 t0)/2 = " << rhs;
    throw ContractError(os.str());
  }
  return lhs;
}

double time_averaged_hs(const SidebandModel& model, double t0, double t1_max, int n_samples) {
  require_resonant(model, "the time-average identity");
  if (n_samples < 2) throw ValidationError("time average needs at least two samples");
  if (!(t1_max > 0.0)) throw ValidationError("averaging window must be positive");
  // Trapezoid weights on a uniform grid.
  const double h = t1_max / (n_samples - 1);
  double acc = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const double d = population_difference(model, t0, k * h);
    const double w = (k == 0 || k == n_samples - 1) ? 0.5 : 1.0;
    acc += w * 2.0 * d * d;
  }
  return acc * h / t1_max;
}

std::vector<double> linspace(double start, double stop, int count) {
  if (count < 1) throw ValidationError("grid needs at least one point");
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = start;
    return g;
  }
  const double h = (stop - start) / (count - 1);
  for (int i = 0; i < count; ++i) g[i] = start + i * h;
  g.back() = stop;
  return g;
}

double grid_step_for(const SidebandModel& model, int points_per_period) {
  const double w0 = model.spectrum().omegas.front();
  return 2.0 * std::numbers::pi / (w0 * points_per_period);
}

ProtocolTrace protocol_trace(const SidebandModel& model, std::span<const double> t0_grid,
                             std::span<const double> t1_grid) {
  ProtocolTrace tr;
  tr.t0_grid.assign(t0_grid.begin(), t0_grid.end());
  tr.t1_grid.assign(t1_grid.begin(), t1_grid.end());
  const auto rows = static_cast<Eigen::Index>(t0_grid.size());
  const auto cols = static_cast<Eigen::Index>(t1_grid.size());
  tr.p_e_original.resize(rows, cols);
  tr.p_e_dephased.resize(rows, cols);
  tr.local_distance.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double t0 = t0_grid[i];
    tr.discord_trace.push_back(discord_trace(model, t0));
    tr.discord_hs.push_back(discord_hs(model, t0));
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double t1 = t1_grid[j];
      tr.p_e_original(i, j) = population_e_original(model, t0, t1);
      tr.p_e_dephased(i, j) = population_e_dephased(model, t0, t1);
      tr.local_distance(i, j) = local_distance(model, t0, t1);
    }
  }
  return tr;
}

}  // namespace qcorr
