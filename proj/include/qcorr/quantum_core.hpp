#pragma once

// Dense linear algebra on qubit (x) oscillator states.
//
// Basis ordering is |g,0>,...,|g,N>,|e,0>,...,|e,N>: the system index is the
// slow one, so a state splits into system_dim x system_dim blocks of size
// env_dim.  The sideband propagator pairs |g,n> with |e,n+1>, which in this
// ordering are rows n and env_dim + n + 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcorr/errors.hpp"

namespace qcorr {

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real = double>
struct Tolerances {
  Real hermiticity = Real(1e-12);
  Real trace = Real(1e-10);
  Real positivity = Real(1e-10);
  Real orthonormality = Real(1e-12);
  Real unitarity = Real(1e-12);
};

struct BipartiteLayout {
  Eigen::Index system_dim = 2;
  Eigen::Index env_dim = 1;

  static BipartiteLayout qubit_fock(Eigen::Index n_max) { return {2, n_max + 1}; }

  Eigen::Index dim() const { return system_dim * env_dim; }
  Eigen::Index index(Eigen::Index sys, Eigen::Index env) const { return sys * env_dim + env; }
};

// Thin value wrapper around a square complex matrix.  Construction does not
// validate; call validate() where the invariants are required (states built
// from a truncated thermal distribution carry a small trace deficit).
template <typename Real = double>
class DensityOperator {
 public:
  using Matrix = CMatrix<Real>;

  DensityOperator() = default;
  explicit DensityOperator(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionError("density operator must be square");
  }

  static DensityOperator pure(const CVector<Real>& psi) {
    return DensityOperator(psi * psi.adjoint());
  }
  static DensityOperator basis_projector(Eigen::Index dim, Eigen::Index k) {
    Matrix m = Matrix::Zero(dim, dim);
    m(k, k) = Real(1);
    return DensityOperator(std::move(m));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  std::complex<Real> operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  std::complex<Real> trace() const { return m_.trace(); }

 private:
  Matrix m_;
};

template <typename Real>
Real hermiticity_defect(const CMatrix<Real>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

template <typename Real>
RVector<Real> hermitian_eigenvalues(const CMatrix<Real>& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Throws ValidationError naming the first violated invariant.
template <typename Real>
void validate(const DensityOperator<Real>& rho, const Tolerances<Real>& tol = {}) {
  const auto& m = rho.matrix();
  if (m.size() == 0) throw ValidationError("empty density operator");
  const Real herm = hermiticity_defect(m);
  if (herm > tol.hermiticity) {
    std::ostringstream os;
    os << "density operator not Hermitian (defect " << herm << ")";
    throw ValidationError(os.str());
  }
  const Real tr_err = std::abs(m.trace() - std::complex<Real>(1));
  if (tr_err > tol.trace) {
    std::ostringstream os;
    os << "density operator trace differs from 1 by " << tr_err;
    throw ValidationError(os.str());
  }
  const Real min_ev = hermitian_eigenvalues<Real>(m).minCoeff();
  if (min_ev < -tol.positivity) {
    std::ostringstream os;
    os << "density operator has negative eigenvalue " << min_ev;
    throw ValidationError(os.str());
  }
}

namespace detail {

template <typename Real>
void require_layout(const DensityOperator<Real>& rho, const BipartiteLayout& layout) {
  if (rho.dim() != layout.dim()) {
    std::ostringstream os;
    os << "state dimension " << rho.dim() << " does not match layout " << layout.system_dim
       << " x " << layout.env_dim;
    throw DimensionError(os.str());
  }
}

template <typename Real>
void require_same_dim(const DensityOperator<Real>& a, const DensityOperator<Real>& b) {
  if (a.dim() != b.dim()) throw DimensionError("operands have different dimensions");
}

}  // namespace detail

template <typename Real>
DensityOperator<Real> partial_trace_env(const DensityOperator<Real>& rho,
                                        const BipartiteLayout& layout) {
  detail::require_layout(rho, layout);
  const auto ns = layout.system_dim;
  const auto ne = layout.env_dim;
  CMatrix<Real> out(ns, ns);
  for (Eigen::Index a = 0; a < ns; ++a)
    for (Eigen::Index b = 0; b < ns; ++b)
      out(a, b) = rho.matrix().block(a * ne, b * ne, ne, ne).trace();
  return DensityOperator<Real>(std::move(out));
}

template <typename Real>
DensityOperator<Real> partial_trace_system(const DensityOperator<Real>& rho,
                                           const BipartiteLayout& layout) {
  detail::require_layout(rho, layout);
  const auto ne = layout.env_dim;
  CMatrix<Real> out = CMatrix<Real>::Zero(ne, ne);
  for (Eigen::Index a = 0; a < layout.system_dim; ++a)
    out += rho.matrix().block(a * ne, a * ne, ne, ne);
  return DensityOperator<Real>(std::move(out));
}

namespace detail {

// Lexicographic order on the entries, so that a - b and b - a are formed in
// one fixed orientation.
template <typename Real>
bool entries_less(const CMatrix<Real>& a, const CMatrix<Real>& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const auto x = a.data()[k];
    const auto y = b.data()[k];
    if (x.real() != y.real()) return x.real() < y.real();
    if (x.imag() != y.imag()) return x.imag() < y.imag();
  }
  return false;
}

}  // namespace detail

// Half the trace norm of a - b, from the spectrum of the Hermitian difference.
// Exactly symmetric in its arguments.
template <typename Real>
Real trace_distance(const DensityOperator<Real>& a, const DensityOperator<Real>& b) {
  detail::require_same_dim(a, b);
  const bool swap = detail::entries_less(a.matrix(), b.matrix());
  const CMatrix<Real> diff = swap ? CMatrix<Real>(b.matrix() - a.matrix())
                                  : CMatrix<Real>(a.matrix() - b.matrix());
  return hermitian_eigenvalues<Real>(diff).cwiseAbs().sum() / Real(2);
}

template <typename Real>
Real hs_distance_sq(const DensityOperator<Real>& a, const DensityOperator<Real>& b) {
  detail::require_same_dim(a, b);
  return (a.matrix() - b.matrix()).squaredNorm();
}

template <typename Real = double>
class DephasingBasis {
 public:
  // Columns of `vectors` are the basis vectors.
  explicit DephasingBasis(CMatrix<Real> vectors, Real tol = Real(1e-12))
      : v_(std::move(vectors)) {
    if (v_.rows() != v_.cols() || v_.rows() == 0)
      throw ValidationError("dephasing basis must be a complete set of vectors");
    const CMatrix<Real> gram = v_.adjoint() * v_;
    const Real defect = (gram - CMatrix<Real>::Identity(v_.rows(), v_.cols())).cwiseAbs().maxCoeff();
    if (defect > tol) {
      std::ostringstream os;
      os << "dephasing basis not orthonormal (defect " << defect << ")";
      throw ValidationError(os.str());
    }
  }

  static DephasingBasis computational(Eigen::Index dim) {
    return DephasingBasis(CMatrix<Real>::Identity(dim, dim));
  }

  Eigen::Index dim() const { return v_.rows(); }
  const CMatrix<Real>& vectors() const { return v_; }
  CVector<Real> vector(Eigen::Index i) const { return v_.col(i); }

 private:
  CMatrix<Real> v_;
};

// Phi (x) I with Phi(X) = sum_i |i><i| X |i><i|, written as the projector sum
// directly: block (a,b) of the result is sum_i v_i[a] conj(v_i[b]) M_i with
// M_i = sum_{c,d} conj(v_i[c]) rho_{cd} v_i[d].  With computational basis
// vectors the off-diagonal system blocks come out as exact zeros.
template <typename Real>
DensityOperator<Real> dephase_system(const DensityOperator<Real>& rho,
                                     const DephasingBasis<Real>& basis,
                                     const BipartiteLayout& layout) {
  detail::require_layout(rho, layout);
  if (basis.dim() != layout.system_dim)
    throw DimensionError("dephasing basis dimension does not match system dimension");
  const auto ns = layout.system_dim;
  const auto ne = layout.env_dim;
  const auto& m = rho.matrix();
  CMatrix<Real> out = CMatrix<Real>::Zero(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < ns; ++i) {
    const CVector<Real> v = basis.vector(i);
    CMatrix<Real> env = CMatrix<Real>::Zero(ne, ne);
    for (Eigen::Index c = 0; c < ns; ++c)
      for (Eigen::Index d = 0; d < ns; ++d) {
        const std::complex<Real> w = std::conj(v(c)) * v(d);
        if (w != std::complex<Real>(0)) env += w * m.block(c * ne, d * ne, ne, ne);
      }
    for (Eigen::Index a = 0; a < ns; ++a)
      for (Eigen::Index b = 0; b < ns; ++b) {
        const std::complex<Real> w = v(a) * std::conj(v(b));
        if (w != std::complex<Real>(0)) out.block(a * ne, b * ne, ne, ne) += w * env;
      }
  }
  return DensityOperator<Real>(std::move(out));
}

namespace detail {

// (u (x) I) m (u (x) I)^dagger without forming the Kronecker product.
template <typename Real>
CMatrix<Real> conjugate_system(const CMatrix<Real>& m, const CMatrix<Real>& u,
                               const BipartiteLayout& layout) {
  const auto ns = layout.system_dim;
  const auto ne = layout.env_dim;
  CMatrix<Real> left = CMatrix<Real>::Zero(m.rows(), m.cols());
  for (Eigen::Index a = 0; a < ns; ++a)
    for (Eigen::Index c = 0; c < ns; ++c)
      if (u(a, c) != std::complex<Real>(0))
        left.middleRows(a * ne, ne) += u(a, c) * m.middleRows(c * ne, ne);
  CMatrix<Real> out = CMatrix<Real>::Zero(m.rows(), m.cols());
  for (Eigen::Index b = 0; b < ns; ++b)
    for (Eigen::Index d = 0; d < ns; ++d)
      if (u(b, d) != std::complex<Real>(0))
        out.middleCols(b * ne, ne) += std::conj(u(b, d)) * left.middleCols(d * ne, ne);
  return out;
}

}  // namespace detail

// Dephasing in the basis {u|i>}: rotate by u^dagger, drop the off-diagonal
// system blocks, rotate back.
template <typename Real>
DensityOperator<Real> dephase_rotated(const DensityOperator<Real>& rho, const CMatrix<Real>& u,
                                      const BipartiteLayout& layout,
                                      Real unitarity_tol = Real(1e-12)) {
  detail::require_layout(rho, layout);
  if (u.rows() != layout.system_dim || u.cols() != layout.system_dim)
    throw DimensionError("rotation dimension does not match system dimension");
  const Real defect =
      (u.adjoint() * u - CMatrix<Real>::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
  if (defect > unitarity_tol) {
    std::ostringstream os;
    os << "rotation is not unitary (defect " << defect << ")";
    throw ValidationError(os.str());
  }
  const auto ne = layout.env_dim;
  CMatrix<Real> rotated = detail::conjugate_system<Real>(rho.matrix(), u.adjoint(), layout);
  for (Eigen::Index a = 0; a < layout.system_dim; ++a)
    for (Eigen::Index b = 0; b < layout.system_dim; ++b)
      if (a != b) rotated.block(a * ne, b * ne, ne, ne).setZero();
  return DensityOperator<Real>(detail::conjugate_system<Real>(rotated, u, layout));
}

// Orthonormal eigenvectors sorted by descending eigenvalue.  Each vector is
// rephased so that its largest-magnitude component is real and positive
// (first such index on ties).  Eigenvalues equal within `degeneracy_tol`
// span an eigenspace in which any basis is valid; there the computational
// basis vectors are used when they lie in the eigenspace, which covers the
// fully mixed qubit.
template <typename Real>
DephasingBasis<Real> eigenbasis_of(const DensityOperator<Real>& rho_s,
                                   Real degeneracy_tol = Real(1e-12)) {
  const auto n = rho_s.dim();
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(rho_s.matrix());
  const RVector<Real>& evals = es.eigenvalues();

  CMatrix<Real> vecs(n, n);
  // SelfAdjointEigenSolver sorts ascending; walk groups of equal eigenvalue
  // from the top.
  Eigen::Index out_col = 0;
  Eigen::Index hi = n - 1;
  while (hi >= 0) {
    Eigen::Index lo = hi;
    while (lo > 0 && std::abs(evals(lo - 1) - evals(hi)) <= degeneracy_tol) --lo;
    const Eigen::Index mult = hi - lo + 1;
    if (mult == 1) {
      vecs.col(out_col++) = es.eigenvectors().col(hi);
    } else {
      const CMatrix<Real> space = es.eigenvectors().middleCols(lo, mult);
      const CMatrix<Real> proj = space * space.adjoint();
      std::vector<Eigen::Index> picked;
      for (Eigen::Index k = 0; k < n && static_cast<Eigen::Index>(picked.size()) < mult; ++k)
        if (std::abs(proj(k, k) - std::complex<Real>(1)) <= Real(1e-9)) picked.push_back(k);
      if (static_cast<Eigen::Index>(picked.size()) == mult) {
        for (auto k : picked) vecs.col(out_col++) = CVector<Real>::Unit(n, k);
      } else {
        for (Eigen::Index c = hi; c >= lo; --c) vecs.col(out_col++) = es.eigenvectors().col(c);
      }
    }
    hi = lo - 1;
  }

  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index best = 0;
    Real best_mag = Real(-1);
    for (Eigen::Index r = 0; r < n; ++r) {
      const Real mag = std::abs(vecs(r, c));
      if (mag > best_mag + Real(1e-14)) {
        best_mag = mag;
        best = r;
      }
    }
    const std::complex<Real> phase = vecs(best, c) / best_mag;
    vecs.col(c) *= std::conj(phase);
    vecs(best, c) = std::complex<Real>(std::abs(vecs(best, c)), Real(0));
  }
  return DephasingBasis<Real>(std::move(vecs), Real(1e-10));
}

}  // namespace qcorr
