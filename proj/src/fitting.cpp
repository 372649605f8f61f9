#include "qcorr/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "qcorr/detection.hpp"

namespace qcorr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr const char* kParamNames[4] = {"nbar", "omega", "delta0", "sigma_delta"};

struct Problem {
  const PopulationDataset& data;
  const FitOptions& options;
  std::vector<double> sigma;

  Eigen::VectorXd residuals(const Eigen::Vector4d& x) const {
    const auto params = FitParams::from(x);
    const auto model = fit_model(params, options);
    const auto n = static_cast<Eigen::Index>(data.size());
    // Same node order and summation as averaged_population_e, one model per node.
    Eigen::VectorXd pe = Eigen::VectorXd::Zero(n);
    for (const auto& node : detuning_nodes(fit_detuning(params, options))) {
      const auto m = model.with_detuning(node.delta);
      for (Eigen::Index i = 0; i < n; ++i)
        pe(i) += node.weight * reduced_population_e(m, data.times[i]);
    }
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = (pe(i) - data.p_e[i]) / sigma[i];
    return r;
  }
};

Eigen::Vector4d clamp(const Eigen::Vector4d& x, const FitBounds& b) {
  return x.cwiseMax(b.lower).cwiseMin(b.upper);
}

// Forward differences, stepping backwards at an upper bound.
Eigen::MatrixXd jacobian(const Problem& prob, const Eigen::Vector4d& x, const Eigen::VectorXd& r0,
                         const FitBounds& bounds, const Eigen::Vector4d& scale) {
  Eigen::MatrixXd jac(r0.size(), 4);
  for (int j = 0; j < 4; ++j) {
    double h = 1e-7 * std::max(std::abs(x(j)), scale(j));
    if (x(j) + h > bounds.upper(j)) h = -h;
    if (x(j) + h < bounds.lower(j)) {
      jac.col(j).setZero();  // parameter pinned by equal bounds
      continue;
    }
    Eigen::Vector4d xp = x;
    xp(j) += h;
    jac.col(j) = (prob.residuals(xp) - r0) / h;
  }
  return jac;
}

// Pseudo-inverse of J^T J, computed on unit-norm columns since the
// parameters differ in scale by ten orders of magnitude.  Pinned parameters
// get zero variance.
void fill_covariance(FitResult& res, const Eigen::MatrixXd& jac, const FitBounds& bounds) {
  const Eigen::Vector4d norms = jac.colwise().norm().transpose();
  Eigen::Vector4d inv = Eigen::Vector4d::Zero();
  std::array<bool, 4> pinned{};
  for (int j = 0; j < 4; ++j) {
    pinned[j] = bounds.lower(j) == bounds.upper(j);
    if (norms(j) > 0.0 && !pinned[j]) inv(j) = 1.0 / norms(j);
  }
  Eigen::Matrix4d info = inv.asDiagonal() * (jac.transpose() * jac) * inv.asDiagonal();
  for (int j = 0; j < 4; ++j)
    if (pinned[j]) info(j, j) = 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(info);
  const double cutoff = 1e-12 * std::max(es.eigenvalues().maxCoeff(), 0.0);
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  for (int k = 0; k < 4; ++k) {
    const double ev = es.eigenvalues()(k);
    if (ev > cutoff && ev > 0.0)
      cov += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose() / ev;
  }
  cov = inv.asDiagonal() * cov * inv.asDiagonal();
  res.covariance = 0.5 * (cov + cov.transpose());
  const bool singular = es.eigenvalues().minCoeff() <= cutoff;
  for (int j = 0; j < 4; ++j) {
    const bool identifiable = pinned[j] || (norms(j) > 0.0 && !singular);
    res.uncertainty(j) =
        identifiable ? std::sqrt(std::max(res.covariance(j, j), 0.0))
                     : std::numeric_limits<double>::quiet_NaN();
  }
  if (singular)
    res.warnings.push_back("information matrix is singular; some parameters are not identifiable");
}

}  // namespace

void validate(const PopulationDataset& data) {
  const auto n = data.times.size();
  if (data.p_e.size() != n || data.n_shots.size() != n)
    throw ValidationError("dataset columns have different lengths");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(data.p_e[i] >= 0.0 && data.p_e[i] <= 1.0))
      throw ValidationError("population outside [0,1] at row " + std::to_string(i));
    if (data.n_shots[i] < 1)
      throw ValidationError("n_shots must be at least 1 at row " + std::to_string(i));
    if (i > 0 && !(data.times[i] > data.times[i - 1]))
      throw ValidationError("times must be strictly increasing at row " + std::to_string(i));
  }
}

double binomial_sigma(double p, int n_shots) {
  const double n = static_cast<double>(n_shots);
  const double floor = std::sqrt(0.25 / n) / 10.0;
  return std::max(std::sqrt(p * (1.0 - p) / n), floor);
}

FitBounds FitBounds::defaults_for(const FitParams& initial) {
  FitBounds b;
  b.lower = {0.0, 0.1 * initial.omega, -kTwoPi * 10e3, 0.0};
  b.upper = {50.0, 10.0 * initial.omega, kTwoPi * 10e3, kTwoPi * 5e3};
  return b;
}

SidebandModel fit_model(const FitParams& params, const FitOptions& options) {
  SidebandParams p;
  p.eta = options.eta;
  p.omega = params.omega;
  p.delta = params.delta0;
  p.nbar = params.nbar;
  p.n_max = choose_n_max(params.nbar, options.truncation_eps);
  return SidebandModel::thermal(p, options.truncation_eps);
}

DetuningDistribution fit_detuning(const FitParams& params, const FitOptions& options) {
  return {params.delta0, params.sigma_delta, options.n_quad};
}

double model_population_e(const FitParams& params, double t, const FitOptions& options) {
  return averaged_population_e(fit_model(params, options), fit_detuning(params, options), t);
}

FitResult fit_from_start(const PopulationDataset& data, const FitParams& start,
                         const FitBounds& bounds, const FitOptions& options) {
  validate(data);
  if (data.size() < 8) throw ValidationError("at least 8 data points are required");
  Problem prob{data, options, {}};
  prob.sigma.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    prob.sigma.push_back(binomial_sigma(data.p_e[i], data.n_shots[i]));

  const Eigen::Vector4d scale(1.0, std::max(std::abs(start.omega), 1.0), kTwoPi * 1e3,
                              kTwoPi * 1e3);
  Eigen::Vector4d x = clamp(start.vec(), bounds);
  Eigen::VectorXd r = prob.residuals(x);
  double cost = r.squaredNorm();

  FitResult res;
  res.eta = options.eta;
  res.n_quad = options.n_quad;
  res.objective_history.push_back(cost);
  double lambda = 1e-3;
  Eigen::MatrixXd jac = jacobian(prob, x, r, bounds, scale);

  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d grad = jac.transpose() * r;
    Eigen::Vector4d diag = jtj.diagonal();
    for (int j = 0; j < 4; ++j) diag(j) = std::max(diag(j), 1e-12 * std::max(diag.maxCoeff(), 1.0));

    bool accepted = false;
    double new_cost = cost;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::Matrix4d a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::Vector4d step = a.ldlt().solve(-grad);
      const Eigen::Vector4d xn = clamp(x + step, bounds);
      if ((xn - x).cwiseAbs().maxCoeff() == 0.0) {
        lambda *= 4.0;
        continue;
      }
      const Eigen::VectorXd rn = prob.residuals(xn);
      new_cost = rn.squaredNorm();
      if (std::isfinite(new_cost) && new_cost < cost) {
        x = xn;
        r = rn;
        accepted = true;
        lambda = std::max(lambda / 3.0, 1e-12);
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // No downhill step at any damping: a (bound-constrained) minimum.
      res.converged = true;
      break;
    }
    const double decrease = cost - new_cost;
    cost = new_cost;
    res.objective_history.push_back(cost);
    jac = jacobian(prob, x, r, bounds, scale);
    if (decrease <= options.rel_tolerance * std::max(cost, 1e-300) || cost < 1e-28) {
      res.converged = true;
      break;
    }
  }

  res.estimate = FitParams::from(x);
  res.chi2 = cost;
  res.dof = static_cast<int>(data.size()) - 4;
  res.residual_norm = std::sqrt(cost / static_cast<double>(data.size()));
  fill_covariance(res, jac, bounds);
  for (int j = 0; j < 4; ++j) {
    const double span = bounds.upper(j) - bounds.lower(j);
    const double tol = 1e-9 * std::max(span, 1e-300);
    if (bounds.upper(j) > bounds.lower(j) &&
        (x(j) - bounds.lower(j) <= tol || bounds.upper(j) - x(j) <= tol))
      res.warnings.push_back(std::string("parameter ") + kParamNames[j] + " is at its bound");
  }
  return res;
}

FitResult fit_population(const PopulationDataset& data, const FitParams& initial,
                         const FitBounds& bounds, const FitOptions& options) {
  if (options.n_starts < 1) throw ValidationError("need at least one start");
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<FitParams> starts{initial};
  for (int k = 1; k < options.n_starts; ++k) {
    FitParams s;
    s.nbar = std::min(bounds.upper(0), bounds.lower(0) + unit(rng) * (2.0 * initial.nbar + 1.0));
    s.omega = initial.omega * std::exp(std::log(0.8) + unit(rng) * std::log(1.25 / 0.8));
    s.delta0 = bounds.lower(2) + unit(rng) * (bounds.upper(2) - bounds.lower(2));
    s.delta0 *= 0.2;
    s.sigma_delta = bounds.lower(3) + unit(rng) * 0.5 * (bounds.upper(3) - bounds.lower(3));
    starts.push_back(FitParams::from(clamp(s.vec(), bounds)));
  }

  FitResult best;
  bool have = false;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    FitResult r = fit_from_start(data, starts[k], bounds, options);
    r.best_start = static_cast<int>(k);
    if (!have || r.chi2 < best.chi2) {
      best = std::move(r);
      have = true;
    }
  }
  if (!best.converged) {
    std::ostringstream os;
    os << "fit did not converge within " << options.max_iterations
       << " iterations (best chi2 = " << best.chi2 << ")";
    throw FitConvergenceError(os.str(), best);
  }
  return best;
}

std::vector<double> predict_dephased(const FitResult& fit, double t0,
                                     std::span<const double> t1_grid) {
  FitOptions opt;
  opt.eta = fit.eta;
  opt.n_quad = fit.n_quad;
  const auto model = fit_model(fit.estimate, opt);
  const auto dist = fit_detuning(fit.estimate, opt);
  std::vector<double> out;
  out.reserve(t1_grid.size());
  for (double t1 : t1_grid) out.push_back(averaged_population_e_dephased(model, dist, t0, t1));
  return out;
}

std::vector<double> predict_original(const FitResult& fit, double t0,
                                     std::span<const double> t1_grid) {
  FitOptions opt;
  opt.eta = fit.eta;
  opt.n_quad = fit.n_quad;
  const auto model = fit_model(fit.estimate, opt);
  const auto dist = fit_detuning(fit.estimate, opt);
  std::vector<double> out;
  out.reserve(t1_grid.size());
  for (double t1 : t1_grid) out.push_back(averaged_population_e(model, dist, t0 + t1));
  return out;
}

PopulationDataset synthesize_dataset(const FitParams& truth, std::span<const double> times,
                                     int n_shots, bool shot_noise, std::uint64_t seed,
                                     const FitOptions& options) {
  if (n_shots < 1) throw ValidationError("n_shots must be at least 1");
  const auto model = fit_model(truth, options);
  const auto dist = fit_detuning(truth, options);
  std::mt19937_64 rng(seed);
  PopulationDataset data;
  for (double t : times) {
    double p = std::clamp(averaged_population_e(model, dist, t), 0.0, 1.0);
    if (shot_noise) {
      std::binomial_distribution<int> draw(n_shots, p);
      p = static_cast<double>(draw(rng)) / n_shots;
    }
    data.times.push_back(t);
    data.p_e.push_back(p);
    data.n_shots.push_back(n_shots);
  }
  return data;
}

}  // namespace qcorr
