#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qcorr/sideband.hpp"

using namespace qcorr;

namespace {

constexpr double kPi = std::numbers::pi;
const double kOmega = 2 * kPi * 100e3;

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix closed_form(const SidebandParams& p, double ts, double te) {
  return propagator_matrix(propagator_elements(p, ts, te), p.n_max);
}

}  // namespace

TEST_CASE("thermal populations") {
  SUBCASE("ground state") {
    const auto p = thermal_populations(0.0, 9);
    CHECK(p[0] == 1.0);
    for (std::size_t n = 1; n < p.size(); ++n) CHECK(p[n] == 0.0);
  }
  SUBCASE("nbar = 1 halves at each level") {
    const auto p = thermal_populations(1.0, 40);
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p[2] == doctest::Approx(0.125).epsilon(1e-15));
  }
  SUBCASE("sideband cooled ground population") {
    const auto p = thermal_populations(0.2, 20);
    CHECK(p[0] == doctest::Approx(1.0 / 1.2).epsilon(1e-14));
  }
  SUBCASE("not renormalised: the sum misses exactly the tail") {
    for (double nbar : {0.19, 1.0, 5.6}) {
      const int n_max = choose_n_max(nbar);
      const auto p = thermal_populations(nbar, n_max);
      double sum = 0.0;
      for (double x : p) sum += x;
      CHECK(std::abs(sum - (1.0 - thermal_tail(nbar, n_max))) < 1e-13);
    }
  }
  SUBCASE("tail above eps is an error") {
    CHECK_THROWS_AS(thermal_populations(5.9, 10), TruncationError);
    CHECK_THROWS_AS(thermal_populations(-0.1, 10), ValidationError);
  }
}

TEST_CASE("cutoff selection") {
  for (double nbar : {0.0, 0.2, 1.0, 5.6, 5.9, 20.0}) {
    const int n_max = choose_n_max(nbar);
    CHECK(n_max >= kMinThermalCutoff + 1);
    // The topmost representable pair is n_max - 1; the mass above it is within eps.
    CHECK(thermal_tail(nbar, n_max - 1) <= kDefaultTruncationEps);
    if (n_max - 1 > kMinThermalCutoff)
      CHECK(thermal_tail(nbar, n_max - 2) > kDefaultTruncationEps);
    CHECK_NOTHROW(make_params(0.04, kOmega, 0.0, nbar));
  }
  CHECK(choose_n_max(0.0) == kMinThermalCutoff + 1);

  SUBCASE("explicit cutoff that is too small") {
    CHECK_THROWS_AS(make_params(0.04, kOmega, 0.0, 5.9, 20), TruncationError);
    CHECK_THROWS_AS(SidebandModel::thermal(SidebandParams{0.04, kOmega, 0.0, 5.9, 20}),
                    TruncationError);
  }
  SUBCASE("field validation") {
    CHECK_THROWS_AS(make_params(0.0, kOmega, 0.0, 0.2), ValidationError);
    CHECK_THROWS_AS(make_params(0.04, kOmega, 0.0, -1.0), ValidationError);
    CHECK_THROWS_AS(make_params(0.04, kOmega, 0.0, 0.0, 0), ValidationError);
  }
}

TEST_CASE("Rabi frequencies") {
  SUBCASE("ground level is a single term") {
    for (double eta : {0.01, 0.04, 0.2})
      CHECK(rabi_frequency(0, eta, kOmega) ==
            doctest::Approx(eta * kOmega * std::exp(-eta * eta / 2)).epsilon(1e-15));
  }
  SUBCASE("characteristic strength at eta = 0.04 is 4 kHz") {
    const double f0 = rabi_frequency(0, 0.04, kOmega) / (2 * kPi);
    CHECK(f0 == doctest::Approx(4000.0 * std::exp(-0.0008)).epsilon(1e-14));
    CHECK(std::abs(f0 / 4000.0 - 1.0) < 1e-3);
  }
  SUBCASE("series against exact rational arithmetic") {
    // eta^2 = num/den exactly representable as a ratio; eta itself enters only as a prefactor.
    const struct { long num, den; } cases[] = {{16, 10000}, {1, 100}, {4, 100}, {1, 25}};
    for (auto c : cases) {
      const double eta = std::sqrt(static_cast<double>(c.num) / c.den);
      for (int n : {0, 1, 5, 12, 20, 60}) {
        const double exact = oracle::laguerre_series_exact(n, c.num, c.den);
        const double series =
            rabi_frequency(n, eta, 1.0) / (eta * std::sqrt(n + 1.0) * std::exp(-eta * eta / 2));
        CHECK(std::abs(series - exact) <= 1e-13 * std::max(1.0, std::abs(exact)));
      }
    }
  }
  SUBCASE("small eta limit has O(eta^2) relative error") {
    for (int n : {0, 3, 10}) {
      double prev = 0.0;
      for (double eta : {1e-2, 5e-3, 2.5e-3}) {
        const double lead = eta * std::sqrt(n + 1.0) * kOmega;
        const double rel = std::abs(rabi_frequency(n, eta, kOmega) / lead - 1.0);
        CHECK(rel < (n + 2) * eta * eta);
        if (prev > 0.0) CHECK(rel / prev == doctest::Approx(0.25).epsilon(0.02));
        prev = rel;
      }
    }
  }
  SUBCASE("spectrum ordering") {
    const auto p = make_params(0.04, kOmega, 2 * kPi * 1e3, 1.0);
    const auto s = rabi_spectrum(p);
    CHECK(s.omegas.size() == static_cast<std::size_t>(p.n_pairs()));
    for (std::size_t n = 0; n < s.omegas.size(); ++n) {
      CHECK(s.omegas[n] > 0.0);
      CHECK(s.omegas_gen[n] >= s.omegas[n]);
    }
    const auto s0 = rabi_spectrum(make_params(0.04, kOmega, 0.0, 1.0));
    for (std::size_t n = 0; n < s0.omegas.size(); ++n) CHECK(s0.omegas_gen[n] == s0.omegas[n]);
  }
}

TEST_CASE("closed-form propagator elements") {
  const auto p0 = make_params(0.04, kOmega, 0.0, 1.0);
  const double w0 = rabi_frequency(0, 0.04, kOmega);

  SUBCASE("zero duration is the identity") {
    const auto el = propagator_elements(make_params(0.1, kOmega, 0.3 * w0, 1.0), 3e-5, 3e-5);
    for (std::size_t n = 0; n < el.size(); ++n) {
      CHECK(el.u_gg[n] == Complex(1.0, 0.0));
      CHECK(el.u_eg[n] == Complex(0.0, 0.0));
    }
  }
  SUBCASE("resonant pi pulse on each pair") {
    const auto spec = rabi_spectrum(p0);
    for (int n : {0, 1, 4}) {
      const auto a = pair_propagator(spec.omegas[n], 0.0, 0.0, kPi / spec.omegas[n]);
      CHECK(std::abs(std::abs(a.eg) - 1.0) < 1e-14);
      CHECK(std::abs(a.gg) < 1e-14);
    }
  }
  SUBCASE("detuned by Omega_0: ground-state population stays at one half") {
    const double wt = std::hypot(w0, w0);
    const auto a = pair_propagator(w0, w0, 0.0, kPi / wt);
    CHECK(std::norm(a.gg) == doctest::Approx(0.5).epsilon(1e-14));
    const auto p = make_params(0.04, kOmega, w0, 0.0, 3);
    const Matrix u = oracle_propagator(p, 0.0, kPi / wt, 4000);
    CHECK(std::abs(u(0, 0) - a.gg) < 1e-9);
  }
  SUBCASE("per-pair unitarity") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> t(0.0, 2e-3), d(-2.0, 2.0);
    for (int k = 0; k < 50; ++k) {
      const double ts = t(rng);
      const double te = ts + t(rng);
      const auto el = propagator_elements(make_params(0.04, kOmega, d(rng) * w0, 1.0), ts, te);
      for (std::size_t n = 0; n < el.size(); ++n)
        CHECK(std::abs(std::norm(el.u_gg[n]) + std::norm(el.u_eg[n]) - 1.0) < 1e-12);
    }
  }
  SUBCASE("composition keeps the phase bookkeeping") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(0.0, 5e-4), d(-2.0, 2.0);
    for (int k = 0; k < 30; ++k) {
      const auto p = make_params(0.04, kOmega, d(rng) * w0, 0.5);
      const double t0 = t(rng), t1 = t0 + t(rng), t2 = t1 + t(rng);
      const Matrix direct = closed_form(p, t0, t2);
      const Matrix composed = closed_form(p, t1, t2) * closed_form(p, t0, t1);
      CHECK(max_abs(direct - composed) < 1e-12);
    }
  }
  SUBCASE("full matrix is unitary and the uncoupled levels are fixed") {
    const auto p = make_params(0.04, kOmega, 0.7 * w0, 0.5);
    const Matrix u = closed_form(p, 1e-4, 4e-4);
    const auto n = u.rows();
    CHECK(max_abs(u.adjoint() * u - Matrix::Identity(n, n)) < 1e-13);
    const auto layout = p.layout();
    const auto e0 = layout.index(1, 0), gtop = layout.index(0, p.n_max);
    CHECK(u(e0, e0) == Complex(1.0, 0.0));
    CHECK(u(gtop, gtop) == Complex(1.0, 0.0));
  }
  SUBCASE("reversed interval") {
    CHECK_THROWS_AS(propagator_elements(p0, 2e-4, 1e-4), ValidationError);
  }
}

TEST_CASE("closed-form state evolution") {
  const double w0 = rabi_frequency(0, 0.04, kOmega);

  SUBCASE("t0 = 0 gives the thermal state") {
    const auto p = make_params(0.04, kOmega, 0.0, 1.0);
    const auto model = SidebandModel::thermal(p);
    CHECK(max_abs(evolve_thermal_closed_form(model, 0.0).matrix() -
                  model.initial_state().matrix()) == 0.0);
  }
  SUBCASE("ground state after a pi/2 pulse is maximally entangled") {
    const auto p = make_params(0.04, kOmega, 0.0, 0.0);
    const auto rho = evolve_thermal_closed_form(p, kPi / (2 * w0));
    const auto layout = p.layout();
    const auto g0 = layout.index(0, 0), e1 = layout.index(1, 1);
    CHECK(std::abs(rho(g0, g0) - 0.5) < 1e-15);
    CHECK(std::abs(rho(e1, e1) - 0.5) < 1e-15);
    CHECK(std::abs(std::abs(rho(g0, e1)) - 0.5) < 1e-15);
    const auto rho_s = partial_trace_env(rho, layout).matrix();
    CHECK(std::abs(rho_s(0, 0) - 0.5) < 1e-15);
    CHECK(std::abs(rho_s(0, 1)) == 0.0);
    CHECK_NOTHROW(validate(rho));
  }
  SUBCASE("support only on the sideband pairs") {
    const auto p = make_params(0.04, kOmega, 0.4 * w0, 1.0);
    const auto rho = evolve_thermal_closed_form(p, 3.3e-4).matrix();
    const auto layout = p.layout();
    auto pair_of = [&](Eigen::Index i) -> Eigen::Index {
      const auto sys = i / layout.env_dim, env = i % layout.env_dim;
      return sys == 0 ? env : env - 1;  // |e,0> maps to -1, never populated
    };
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
      for (Eigen::Index j = 0; j < rho.cols(); ++j)
        if (pair_of(i) != pair_of(j) || pair_of(i) < 0) CHECK(rho(i, j) == Complex(0.0, 0.0));
  }
  SUBCASE("agrees with the brute-force propagator") {
    const auto p = make_params(0.04, kOmega, 0.0, 1.0, 20, 1e-6);
    const auto model = SidebandModel::thermal(p, 1e-6);
    for (double t0 : {1e-5, 7.3e-5, 2.9e-4}) {
      const auto exact = evolve(model.initial_state(), oracle_propagator(p, 0.0, t0, 1));
      CHECK(max_abs(exact.matrix() - evolve_thermal_closed_form(model, t0).matrix()) < 1e-9);
    }
  }
  SUBCASE("excited population") {
    const auto p = make_params(0.04, kOmega, 0.0, 0.0);
    CHECK(reduced_population_e(p, 0.0) == 0.0);
    CHECK(reduced_population_e(p, kPi / w0) == doctest::Approx(1.0).epsilon(1e-14));
    const auto hot = make_params(0.04, kOmega, 0.0, 5.9);
    // Many incommensurate Rabi frequencies: the flop never reaches full contrast again.
    double late_max = 0.0;
    for (int k = 0; k < 400; ++k)
      late_max = std::max(late_max, reduced_population_e(hot, 20 * kPi / w0 + k * 1e-6));
    CHECK(late_max < 0.9);
    const auto m = SidebandModel::thermal(hot);
    for (double t : {1e-5, 1e-4, 1e-3}) {
      const double pe = reduced_population_e(m, t);
      CHECK(pe >= 0.0);
      CHECK(pe <= 1.0);
      CHECK(std::abs(pe - std::real(partial_trace_env(evolve_thermal_closed_form(m, t),
                                                      m.layout())(1, 1))) < 1e-14);
    }
  }
}

TEST_CASE("brute-force propagator") {
  const double w0 = rabi_frequency(0, 0.04, kOmega);

  SUBCASE("resonant drive agrees to 1e-10 and ignores the step count") {
    const auto p = make_params(0.04, kOmega, 0.0, 1.0, 20, 1e-6);
    const Matrix a = oracle_propagator(p, 1e-5, 3e-4, 1);
    const Matrix b = oracle_propagator(p, 1e-5, 3e-4, 100);
    CHECK(max_abs(a - b) == 0.0);
    CHECK(max_abs(a - closed_form(p, 1e-5, 3e-4)) < 1e-10);
  }
  SUBCASE("no drive is the identity") {
    const auto p = make_params(0.04, 0.0, 0.0, 0.0);
    const Matrix u = oracle_propagator(p, 0.0, 1e-3, 1);
    CHECK(max_abs(u - Matrix::Identity(u.rows(), u.cols())) == 0.0);
  }
  SUBCASE("detuned drive converges at fourth order") {
    const auto p = make_params(0.04, kOmega, 0.6 * w0, 0.0, 10);
    const double ts = 2e-5, te = 2e-4;
    const int base = oracle_steps_for(p, ts, te, kOracleMaxPhaseStep);
    const Matrix ref = closed_form(p, ts, te);
    const double e1 = max_abs(oracle_propagator(p, ts, te, base) - ref);
    const double e2 = max_abs(oracle_propagator(p, ts, te, 2 * base) - ref);
    CHECK(e1 < 1e-8);
    CHECK(e2 < e1 / 10.0);
  }
  SUBCASE("step criterion is enforced") {
    const auto p = make_params(0.04, kOmega, 0.6 * w0, 0.0, 10);
    const int need = oracle_steps_for(p, 0.0, 2e-4, kOracleMaxPhaseStep);
    CHECK_THROWS_AS(oracle_propagator(p, 0.0, 2e-4, need - 1), AccuracyError);
    CHECK_NOTHROW(oracle_propagator(p, 0.0, 2e-4, need));
  }
  SUBCASE("Hamiltonian is Hermitian and couples only sideband pairs") {
    const auto p = make_params(0.04, kOmega, 0.6 * w0, 0.0, 6);
    const Matrix h = sideband_hamiltonian(p, 1.234e-4);
    CHECK(max_abs(h - h.adjoint()) == 0.0);
    const auto layout = p.layout();
    CHECK(std::abs(h(layout.index(1, 1), layout.index(0, 0))) ==
          doctest::Approx(w0 / 2).epsilon(1e-15));
    CHECK(h.block(0, 0, layout.env_dim, layout.env_dim).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("models") {
  const auto p = make_params(0.04, kOmega, 0.0, 1.0);
  SUBCASE("Fock environment") {
    const auto m = SidebandModel::fock(p, 3);
    CHECK(m.populations()[3] == 1.0);
    CHECK(m.initial_state().trace() == Complex(1.0, 0.0));
    CHECK_THROWS_AS(SidebandModel::fock(p, p.n_pairs()), ValidationError);
  }
  SUBCASE("population count must match the pairs") {
    CHECK_THROWS_AS(SidebandModel(p, std::vector<double>(3, 0.1)), DimensionError);
  }
  SUBCASE("retuning keeps the Rabi frequencies") {
    const auto m = SidebandModel::thermal(p).with_detuning(1e3);
    CHECK(m.delta() == 1e3);
    CHECK(m.spectrum().omegas == rabi_spectrum(p).omegas);
    CHECK(m.spectrum().omegas_gen[0] == std::hypot(m.spectrum().omegas[0], 1e3));
  }
}
