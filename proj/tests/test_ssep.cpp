#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <numbers>

#include "asep/errors.hpp"
#include "asep/oracle.hpp"
#include "asep/ssep.hpp"

using namespace asep;
using namespace asep::ssep;

namespace {

const double kTwoOverPi = 2.0 / std::numbers::pi;

double max_abs(const Eigen::VectorXcd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

oracle::Observables oracle_at(const Rates& r, int L, double rho, double t) {
  auto gen = oracle::build_generator(r, LatticeTruncation(L));
  const auto pi0 = oracle::bernoulli(gen.space(), rho);
  return oracle::observables(gen.space(), oracle::evolve(gen, pi0, t));
}

}  // namespace

TEST_CASE("correlation solver guards") {
  const LatticeTruncation tr(6);
  CHECK_THROWS_AS(solve_theorem2(0.2, 1.0, Rates::tasep(0.4, 0.3), tr, 2), UnsupportedError);
  CHECK_THROWS_AS(solve_theorem2(0.2, 1.0, Rates(0.7, 0.3, 0.4, 0.3), tr, 2), UnsupportedError);
  CHECK_THROWS_AS(solve_theorem2(0.2, cplx(-0.5, 0.0), Rates::ssep(0.4, 0.3), tr, 2), DomainError);
  CHECK_THROWS_AS(solve_theorem2(1.2, 1.0, Rates::ssep(0.4, 0.3), tr, 2), DomainError);
  CHECK_THROWS_AS(solve_theorem2(0.2, 1.0, Rates::ssep(0.4, 0.3), tr, 7), DomainError);
}

TEST_CASE("recursion equals the block-triangular solve") {
  const LatticeTruncation tr(8);
  const Rates r = Rates::ssep(0.4, 0.3);
  for (double rho : {0.0, 0.3}) {
    for (cplx s : {cplx(1.5, 0.0), cplx(0.4, 2.0)}) {
      const auto a = solve_theorem2(rho, s, r, tr, 4);
      const auto b = solve_theorem2_block(rho, s, r, tr, 4);
      REQUIRE(a.psihat.size() == 5);
      CHECK(std::abs(a.psihat[0][0] - 1.0 / s) <= 1e-15);
      for (int n = 0; n <= 4; ++n) CHECK(max_abs(a.psihat[n] - b.psihat[n]) <= 1e-10);
    }
  }
}

TEST_CASE("stationary density is preserved at a transform node") {
  const LatticeTruncation tr(10);
  const Rates r = Rates::ssep(0.4, 0.3);
  const double rho = 0.4 / 0.7;
  const cplx s(1.3, 0.2);
  const auto st = solve_theorem2(rho, s, r, tr, 5);
  double dev = 0.0;
  for (int n = 0; n <= 5; ++n)
    dev = std::max(dev, (st.psihat[n].array() - std::pow(rho, n) / s).abs().maxCoeff());
  CHECK(dev <= 1e-10);
}

TEST_CASE("stationary density is preserved in time") {
  const LatticeTruncation tr(10);
  const Rates r = Rates::ssep(0.4, 0.3);
  const double rho = 0.4 / 0.7;
  for (double t : {0.5, 1.0, 2.0}) {
    const auto psi = correlations(rho, t, r, tr, 4);
    double dev = 0.0;
    for (int n = 0; n <= 4; ++n) dev = std::max(dev, (psi[n].array() - std::pow(rho, n)).abs().maxCoeff());
    CHECK(dev <= 2e-4);
  }
}

TEST_CASE("one- and two-point correlations match the generator exponential") {
  const int L = 10;
  const Rates r = Rates::ssep(0.4, 0.3);
  for (double rho : {0.0, 0.25}) {
    for (double t : {0.5, 1.0, 2.0}) {
      const auto psi = correlations(rho, t, r, LatticeTruncation(L), 2);
      const auto obs = oracle_at(r, L, rho, t);
      for (int n = 1; n <= 2; ++n) {
        double dev = 0.0;
        for (std::size_t k = 0; k < obs.Psi[n].size(); ++k)
          dev = std::max(dev, std::abs(psi[n][static_cast<Eigen::Index>(k)] - obs.Psi[n][k]));
        CAPTURE(rho);
        CAPTURE(t);
        CAPTURE(n);
        CHECK(dev <= 2e-4);
        CHECK(dev <= 1e-8);
      }
      for (const auto& block : psi)
        CHECK(((block.array() >= -1e-8) && (block.array() <= 1.0 + 1e-8)).all());
    }
  }
}

TEST_CASE("empty start on the half-line reproduces the occupation transform") {
  open::SolverOptions opts;
  opts.geometry = open::Geometry::half_line;
  const Rates r = Rates::ssep(0.4, 0.3);
  const LatticeTruncation tr(32);
  for (cplx s : {cplx(1.5, 0.0), cplx(3.0, 1.0)}) {
    const auto st = solve_theorem2(0.0, s, r, tr, 1, opts);
    double dev = 0.0;
    for (int x = 0; x < tr.L; ++x)
      dev = std::max(dev, std::abs(st.psihat[1][x] - occupancy_laplace(x, s, 0.0, 0.4, 0.3)));
    CHECK(dev <= 1e-9);
  }
}

TEST_CASE("occupation transform examples") {
  const double a = 0.4, b = 0.3, g = a + b;
  for (cplx s : {cplx(0.3, 0.0), cplx(2.0, 1.0)})
    for (int x : {0, 3})
      CHECK(std::abs(occupancy_laplace(x, s, a / g, a, b) - (a / g) / s) <= 1e-15);

  const double alpha = 0.7;
  const double phi = 2.0 / (2.0 + std::sqrt(8.0));
  const double expected = 0.5 * alpha * phi / (1.0 + alpha * phi);
  CHECK(std::abs(occupancy_laplace(0, 2.0, 0.0, alpha, 0.0) - expected) <= 1e-15);
  CHECK(std::abs(phi00(2.0) - phi) <= 1e-15);

  CHECK_THROWS_AS(occupancy_laplace(-1, 1.0, 0.0, a, b), DomainError);
  CHECK_THROWS_AS(occupancy_laplace(0, cplx(-1.0, 0.0), 0.0, a, b), DomainError);
  CHECK_THROWS_AS(occupancy_laplace(0, 1.0, 0.0, 0.0, 0.0), DomainError);
}

TEST_CASE("inverted occupation matches the generator exponential") {
  const int L = 10;
  const Rates r = Rates::ssep(0.4, 0.3);
  const auto obs = oracle_at(r, L, 0.0, 1.0);
  double dev = 0.0;
  for (int x = 0; x < L; ++x) {
    const double v =
        laplace::invert([&](cplx s) { return occupancy_laplace(x, s, 0.0, 0.4, 0.3); }, 1.0);
    dev = std::max(dev, std::abs(v - obs.Psi[1][static_cast<std::size_t>(x)]));
  }
  CHECK(dev <= 2e-4);
}

TEST_CASE("net exchanged particle number") {
  SUBCASE("stationary density gives zero") {
    for (cplx s : {cplx(0.1, 0.0), cplx(1.0, 2.0)}) CHECK(std::abs(deltaN_mean_laplace(s, 0.5, 0.5, 0.5)) == 0.0);
    CHECK(deltaN_mean_asymptotic(10.0, 0.25, 0.25, 0.75) == 0.0);
  }
  SUBCASE("small-s behaviour") {
    for (auto [a, b, rho] : {std::tuple{1.0, 0.0, 0.0}, {0.5, 0.5, 0.0}, {0.4, 0.3, 0.8}}) {
      const double s = 1e-6;
      const double c = deltaN_small_s_coefficient(rho, a, b);
      CHECK(std::abs(std::pow(s, 1.5) * deltaN_mean_laplace(s, rho, a, b).real() / c - 1.0) <= 1e-3);
    }
  }
  SUBCASE("asymptotic law") {
    CHECK(deltaN_mean_asymptotic(100.0, 0.0, 1.0, 0.0) == doctest::Approx(7.97885).epsilon(1e-6));
    CHECK(deltaN_mean_asymptotic(100.0, 0.9, 0.4, 0.3) < 0.0);
    CHECK(deltaN_mean(50.0, 0.9, 0.4, 0.3) < 0.0);
  }
  SUBCASE("closed-form summation equals the transform") {
    for (cplx s : {cplx(0.05, 0.0), cplx(1.0, 0.0), cplx(0.5, 3.0)})
      CHECK(std::abs(occupancy_excess_laplace(s, 0.25, 0.5, 0.5) - deltaN_mean_laplace(s, 0.25, 0.5, 0.5)) <=
            1e-12 * std::abs(deltaN_mean_laplace(s, 0.25, 0.5, 0.5)));
  }
  SUBCASE("inverted transform equals the site-by-site sum") {
    const double a = 0.5, b = 0.5, rho = 0.25;
    for (double t : {1.0, 5.0}) {
      double sum = 0.0;
      for (int x = 0; x < 200; ++x)
        sum += laplace::invert([&](cplx s) { return occupancy_laplace(x, s, rho, a, b); }, t) - rho;
      CHECK(std::abs(deltaN_mean(t, rho, a, b) - sum) <= 1e-5);
    }
  }
  SUBCASE("agrees with the generator exponential") {
    const Rates r = Rates::ssep(0.4, 0.3);
    auto gen = oracle::build_generator(r, LatticeTruncation(10));
    const auto m = oracle::delta_n_moments(gen, oracle::bernoulli(gen.space(), 0.2), 1.0);
    CHECK(std::abs(deltaN_mean(1.0, 0.2, 0.4, 0.3) - m.mean) <= 1e-6);
  }
}

TEST_CASE("sech integral") {
  const auto q = sech_identity();
  CHECK(q.deviation <= 1e-10);
  CHECK(q.value == doctest::Approx(0.6366198).epsilon(1e-7));

  boost::math::quadrature::sinh_sinh<double> whole;
  const double full = whole.integrate(sech_integrand, 1e-14);
  CHECK(std::abs(0.5 * full - q.value) <= 1e-12);

  const double truncated = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(sech_integrand, 0.0, 40.0, 15);
  CHECK(2.0 * std::exp(-std::numbers::pi * 40.0 / 2.0) < 1e-20);
  CHECK(std::abs(truncated - q.value) <= 1e-10);
  for (double xi : {0.5, 3.0, 10.0}) CHECK(sech_integrand(xi) <= 2.0 * std::exp(-std::numbers::pi * xi / 2.0));
}

TEST_CASE("J kernels") {
  for (auto [x, y] : {std::pair{0.3, 1.7}, {2.0, 0.5}, {0.0, 1.0}, {5.0, 4.0}}) {
    CHECK(std::abs(j1_kernel(x, y) - j1_kernel_fourier(x, y)) <= 1e-8);
    CHECK(j1_kernel(x, y) == doctest::Approx(j1_kernel(y, x)).epsilon(1e-15));
    CHECK(j2_kernel(x, y) == doctest::Approx(j2_kernel(y, x)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(j1_kernel(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(j2_kernel(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(j_kernel_inner_product(0.1, 40.0), DomainError);
  CHECK_THROWS_AS(j_kernel_inner_product(0.02, 20.0), DomainError);
}

TEST_CASE("J-kernel inner product converges to 2/pi") {
  const auto conv = j_kernel_convergence(0.08, 40.0);
  REQUIRE(conv.values.size() == 3);
  MESSAGE("J inner product errors: ", conv.values[0] - kTwoOverPi, " ", conv.values[1] - kTwoOverPi, " ",
          conv.values[2] - kTwoOverPi, " ratio ", conv.ratio);
  CHECK(conv.passed);
  CHECK(conv.steps[2] == doctest::Approx(0.02));
  CHECK(std::abs(conv.values[2] - kTwoOverPi) <= 1e-3);
}

TEST_CASE("second-moment experiment reports against the conjectured slope") {
  const auto rows = deltaN_second_moment_experiment(1.0, 0.0, {25.0, 100.0}, 2000, 17);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.target == doctest::Approx(kTwoOverPi));
    CHECK(r.mean_square_over_t > 0.0);
    CHECK(r.std_error > 0.0);
    MESSAGE("t = ", r.t, " <dN^2>/t = ", r.mean_square_over_t, " +- ", r.std_error, " target ", r.target,
            " Var(dN/sqrt t) = ", r.scaled_variance);
  }
  CHECK(deltaN_second_moment_experiment(0.5, 0.5, {10.0}, 1000, 1)[0].target == doctest::Approx(kTwoOverPi / 4.0));
}
