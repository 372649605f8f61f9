#include "qcorr/sideband.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseCore>

namespace qcorr {

namespace {

constexpr Complex kI{0.0, 1.0};

using SparseMatrix = Eigen::SparseMatrix<Complex>;

double tail_ratio(double nbar) { return nbar / (nbar + 1.0); }

// exp(-i k dt) for Hermitian k.
Matrix expm_hermitian(const Matrix& k, double dt) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  const auto& v = es.eigenvectors();
  Eigen::VectorXcd phases(k.rows());
  for (Eigen::Index i = 0; i < k.rows(); ++i) phases(i) = std::exp(-kI * es.eigenvalues()(i) * dt);
  return v * phases.asDiagonal() * v.adjoint();
}

// exp(-i k dt) by a Taylor series with scaling and squaring.  Step
// exponentials are close to the identity and keep the sparsity of k.
SparseMatrix expm_sparse(const SparseMatrix& k, double dt) {
  SparseMatrix a = (-kI * dt) * k;
  double norm1 = 0.0;
  for (Eigen::Index j = 0; j < a.outerSize(); ++j) {
    double col = 0.0;
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) col += std::abs(it.value());
    norm1 = std::max(norm1, col);
  }
  int squarings = 0;
  if (norm1 > 0.25) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.25)));
    a *= std::ldexp(1.0, -squarings);
    norm1 = std::ldexp(norm1, -squarings);
  }
  SparseMatrix result(a.rows(), a.cols());
  result.setIdentity();
  SparseMatrix term = result;
  double bound = 1.0;
  for (int j = 1; j <= 40 && bound >= 1e-18; ++j) {
    term = SparseMatrix(term * a) / static_cast<double>(j);
    result += term;
    bound *= norm1 / j;
  }
  for (int s = 0; s < squarings; ++s) result = SparseMatrix(result * result);
  return result;
}

}  // namespace

int choose_n_max(double nbar, double eps) {
  if (!(nbar >= 0.0)) throw ValidationError("nbar must be non-negative");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("truncation eps must lie in (0,1)");
  int n = 0;
  if (nbar > 0.0) {
    const double r = tail_ratio(nbar);
    // r^(n+1) <= eps
    n = static_cast<int>(std::ceil(std::log(eps) / std::log(r) - 1.0));
    while (n > 0 && std::pow(r, n) <= eps) --n;
    while (std::pow(r, n + 1) > eps) ++n;
  }
  return std::max(n, kMinThermalCutoff) + 1;
}

SidebandParams make_params(double eta, double omega, double delta, double nbar,
                           std::optional<int> n_max, double eps) {
  SidebandParams p{eta, omega, delta, nbar, n_max ? *n_max : choose_n_max(nbar, eps)};
  validate(p, eps);
  return p;
}

double thermal_tail(double nbar, int n_max) {
  if (nbar <= 0.0) return 0.0;
  return std::pow(tail_ratio(nbar), n_max + 1);
}

void validate(const SidebandParams& p, double eps) {
  if (!(p.eta > 0.0)) throw ValidationError("eta must be positive");
  if (!(p.omega >= 0.0)) throw ValidationError("omega must be non-negative");
  if (!std::isfinite(p.delta)) throw ValidationError("delta must be finite");
  if (!(p.nbar >= 0.0)) throw ValidationError("nbar must be non-negative");
  if (p.n_max < 1) throw ValidationError("n_max must be at least 1");
  // Pairs n = 0..n_max-1 are representable, so the dropped mass starts at n_max.
  const double dropped = thermal_tail(p.nbar, p.n_max - 1);
  if (dropped > eps) {
    std::ostringstream os;
    os << "thermal population above the Fock cutoff is " << dropped << " > " << eps
       << "; raise n_max (suggested " << choose_n_max(p.nbar, eps) << ")";
    throw TruncationError(os.str());
  }
}

std::vector<double> thermal_populations(double nbar, int n_max, double eps) {
  if (!(nbar >= 0.0)) throw ValidationError("nbar must be non-negative");
  if (n_max < 0) throw ValidationError("n_max must be non-negative");
  const double tail = thermal_tail(nbar, n_max);
  if (tail > eps) {
    std::ostringstream os;
    os << "thermal tail " << tail << " above level " << n_max << " exceeds " << eps
       << "; raise n_max";
    throw TruncationError(os.str());
  }
  std::vector<double> p(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double r = tail_ratio(nbar);
  p[0] = 1.0 / (nbar + 1.0);
  for (std::size_t n = 1; n < p.size(); ++n) p[n] = p[n - 1] * r;
  return p;
}

double rabi_frequency(int n, double eta, double omega) {
  // sum_k (-eta^2)^k n! / (k! (k+1)! (n-k)!) via t_{k+1} = t_k (-eta^2)(n-k)/((k+1)(k+2))
  const double x = -eta * eta;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < n; ++k) {
    term *= x * static_cast<double>(n - k) / (static_cast<double>(k + 1) * (k + 2));
    sum += term;
  }
  return eta * std::sqrt(static_cast<double>(n) + 1.0) * omega * std::exp(-eta * eta / 2.0) * sum;
}

RabiSpectrum rabi_spectrum(const SidebandParams& p) {
  RabiSpectrum s;
  s.omegas.resize(static_cast<std::size_t>(p.n_pairs()));
  s.omegas_gen.resize(s.omegas.size());
  for (int n = 0; n < p.n_pairs(); ++n) {
    const double w = rabi_frequency(n, p.eta, p.omega);
    s.omegas[n] = w;
    s.omegas_gen[n] = std::hypot(w, p.delta);
  }
  return s;
}

PairAmplitudes pair_propagator(double omega_n, double delta, double t_start, double t_end) {
  const double tau = t_end - t_start;
  const double gen = std::hypot(omega_n, delta);
  if (gen == 0.0) return {Complex(1.0, 0.0), Complex(0.0, 0.0)};
  const double half = gen * tau / 2.0;
  const double c = std::cos(half);
  const double s = std::sin(half);
  const Complex gg = Complex(c, -delta / gen * s) * std::exp(kI * (delta * tau / 2.0));
  const Complex eg = (omega_n / gen) * s * std::exp(-kI * (delta * (t_end + t_start) / 2.0));
  return {gg, eg};
}

PropagatorElements propagator_elements(const RabiSpectrum& spec, double delta, double t_start,
                                       double t_end) {
  PropagatorElements el;
  el.t0 = t_start;
  el.t1 = t_end;
  el.u_gg.resize(spec.omegas.size());
  el.u_eg.resize(spec.omegas.size());
  for (std::size_t n = 0; n < spec.omegas.size(); ++n) {
    const auto a = pair_propagator(spec.omegas[n], delta, t_start, t_end);
    el.u_gg[n] = a.gg;
    el.u_eg[n] = a.eg;
  }
  return el;
}

PropagatorElements propagator_elements(const SidebandParams& p, double t_start, double t_end) {
  if (t_end < t_start) throw ValidationError("propagator requires t_end >= t_start");
  return propagator_elements(rabi_spectrum(p), p.delta, t_start, t_end);
}

Matrix propagator_matrix(const PropagatorElements& el, int n_max) {
  const auto layout = BipartiteLayout::qubit_fock(n_max);
  Matrix u = Matrix::Identity(layout.dim(), layout.dim());
  for (std::size_t n = 0; n < el.size(); ++n) {
    const auto g = layout.index(0, static_cast<Eigen::Index>(n));
    const auto e = layout.index(1, static_cast<Eigen::Index>(n) + 1);
    u(g, g) = el.u_gg[n];
    u(e, g) = el.u_eg[n];
    u(g, e) = -std::conj(el.u_eg[n]);
    u(e, e) = std::conj(el.u_gg[n]);
  }
  return u;
}

SidebandModel::SidebandModel(SidebandParams params, std::vector<double> populations)
    : params_(params), populations_(std::move(populations)), spectrum_(rabi_spectrum(params_)) {
  if (populations_.size() != static_cast<std::size_t>(params_.n_pairs()))
    throw DimensionError("one population per sideband pair is required");
  for (double p : populations_)
    if (!(p >= 0.0)) throw ValidationError("populations must be non-negative");
}

SidebandModel SidebandModel::thermal(const SidebandParams& params, double eps) {
  validate(params, eps);
  return SidebandModel(params, thermal_populations(params.nbar, params.n_pairs() - 1, eps));
}

SidebandModel SidebandModel::fock(const SidebandParams& params, int n0) {
  if (n0 < 0 || n0 >= params.n_pairs())
    throw ValidationError("Fock level must be below the cutoff so that its pair fits");
  std::vector<double> pops(static_cast<std::size_t>(params.n_pairs()), 0.0);
  pops[static_cast<std::size_t>(n0)] = 1.0;
  return SidebandModel(params, std::move(pops));
}

SidebandModel SidebandModel::with_detuning(double delta) const {
  SidebandModel copy = *this;
  copy.params_.delta = delta;
  for (std::size_t n = 0; n < copy.spectrum_.omegas.size(); ++n)
    copy.spectrum_.omegas_gen[n] = std::hypot(copy.spectrum_.omegas[n], delta);
  return copy;
}

State SidebandModel::initial_state() const {
  const auto layout = params_.layout();
  Matrix m = Matrix::Zero(layout.dim(), layout.dim());
  for (std::size_t n = 0; n < populations_.size(); ++n) {
    const auto g = layout.index(0, static_cast<Eigen::Index>(n));
    m(g, g) = populations_[n];
  }
  return State(std::move(m));
}

State evolve_thermal_closed_form(const SidebandModel& model, double t0) {
  const auto layout = model.layout();
  const auto el = model.propagator(0.0, t0);
  const auto pops = model.populations();
  Matrix m = Matrix::Zero(layout.dim(), layout.dim());
  for (std::size_t n = 0; n < pops.size(); ++n) {
    const auto g = layout.index(0, static_cast<Eigen::Index>(n));
    const auto e = layout.index(1, static_cast<Eigen::Index>(n) + 1);
    const Complex a = el.u_gg[n];
    const Complex b = el.u_eg[n];
    m(g, g) = pops[n] * std::norm(a);
    m(g, e) = pops[n] * std::conj(b) * a;
    m(e, g) = pops[n] * b * std::conj(a);
    m(e, e) = pops[n] * std::norm(b);
  }
  return State(std::move(m));
}

State evolve_thermal_closed_form(const SidebandParams& params, double t0) {
  return evolve_thermal_closed_form(SidebandModel::thermal(params), t0);
}

double reduced_population_e(const SidebandModel& model, double t) {
  const auto pops = model.populations();
  const auto& spec = model.spectrum();
  double pe = 0.0;
  for (std::size_t n = 0; n < pops.size(); ++n) {
    if (pops[n] == 0.0) continue;
    pe += pops[n] * std::norm(pair_propagator(spec.omegas[n], model.delta(), 0.0, t).eg);
  }
  return pe;
}

double reduced_population_e(const SidebandParams& params, double t) {
  return reduced_population_e(SidebandModel::thermal(params), t);
}

Matrix sideband_hamiltonian(const SidebandParams& p, double t) {
  const auto layout = p.layout();
  Matrix h = Matrix::Zero(layout.dim(), layout.dim());
  const Complex phase = std::exp(-kI * (p.delta * t));
  for (int n = 0; n < p.n_pairs(); ++n) {
    const auto g = layout.index(0, n);
    const auto e = layout.index(1, n + 1);
    const Complex coupling = kI * (rabi_frequency(n, p.eta, p.omega) / 2.0) * phase;
    h(e, g) = coupling;
    h(g, e) = std::conj(coupling);
  }
  return h;
}

int oracle_steps_for(const SidebandParams& p, double t_start, double t_end, double phase_step) {
  double rate = std::abs(p.delta);
  for (int n = 0; n < p.n_pairs(); ++n)
    rate = std::max(rate, std::hypot(rabi_frequency(n, p.eta, p.omega), p.delta));
  const double span = std::abs(t_end - t_start);
  return std::max(1, static_cast<int>(std::ceil(rate * span / phase_step)));
}

Matrix oracle_propagator(const SidebandParams& p, double t_start, double t_end, int n_steps) {
  if (t_end < t_start) throw ValidationError("propagator requires t_end >= t_start");
  if (n_steps < 1) throw AccuracyError("oracle needs at least one step");
  const auto dim = p.layout().dim();
  if (t_end == t_start) return Matrix::Identity(dim, dim);
  if (p.delta == 0.0) return expm_hermitian(sideband_hamiltonian(p, t_start), t_end - t_start);

  const double h = (t_end - t_start) / n_steps;
  const int needed = oracle_steps_for(p, t_start, t_end, kOracleMaxPhaseStep);
  if (n_steps < needed) {
    std::ostringstream os;
    os << "oracle step too coarse: " << n_steps << " steps given, at least " << needed
       << " needed for a phase step of " << kOracleMaxPhaseStep << " rad";
    throw AccuracyError(os.str());
  }

  // Gauss-Legendre nodes at the step midpoint -/+ h sqrt(3)/6.
  const double c = std::sqrt(3.0) / 6.0;
  Matrix u = Matrix::Identity(dim, dim);
  for (int k = 0; k < n_steps; ++k) {
    const double mid = t_start + (k + 0.5) * h;
    const SparseMatrix h1 = sideband_hamiltonian(p, mid - c * h).sparseView();
    const SparseMatrix h2 = sideband_hamiltonian(p, mid + c * h).sparseView();
    // Omega_4 = -i h/2 (H1+H2) - sqrt(3) h^2/12 [H2,H1] = -i h K with K Hermitian.
    const SparseMatrix comm = SparseMatrix(h2 * h1) - SparseMatrix(h1 * h2);
    const SparseMatrix k_eff = 0.5 * (h1 + h2) - kI * (std::sqrt(3.0) * h / 12.0) * comm;
    u = Matrix(expm_sparse(k_eff, h) * u);
  }
  return u;
}

State evolve(const State& rho, const Matrix& u) {
  if (u.rows() != rho.dim() || u.cols() != rho.dim())
    throw DimensionError("propagator and state dimensions differ");
  return State(u * rho.matrix() * u.adjoint());
}

}  // namespace qcorr
