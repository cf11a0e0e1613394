#include <doctest.h>

#include <cmath>

#include "asep/bethe.hpp"
#include "asep/errors.hpp"
#include "asep/oracle.hpp"
#include "asep/single_particle.hpp"

using namespace asep;
using namespace asep::single;

namespace {

// Probability of exactly one particle at time t, one particle initially at y.
double oracle_one(const Rates& r, int y, double t, int L) {
  oracle::GeneratorMatrix gen(r, oracle::StateSpace::capped(LatticeTruncation(L), 2));
  auto d = oracle::evolve(gen, oracle::point_mass(gen.space(), Configuration{y}), t);
  return oracle::observables(gen.space(), d).count_probability[1];
}

}  // namespace

TEST_CASE("xi_plus roots") {
  CHECK(xi_plus(0.0, Rates(0.3, 0.7)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(xi_plus(0.0, Rates(0.5, 0.5)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(xi_plus(0.0, Rates(0.7, 0.3)) == doctest::Approx(0.7 / 0.3).epsilon(1e-14));
  CHECK(std::abs(xi_plus(0.5, Rates(0.5, 0.5)) - (1.5 + std::sqrt(1.25))) <= 1e-12);
  CHECK_THROWS_AS(xi_plus(1.0, Rates(1.0, 0.0)), UnsupportedError);
  CHECK_THROWS_AS(xi_plus(-0.1, Rates(0.5, 0.5)), DomainError);
}

TEST_CASE("xi_plus solves epsilon(xi) = s and is monotone") {
  for (double p : {0.2, 0.5, 0.8}) {
    const Rates r(p, 1.0 - p);
    double prev = 0.0;
    for (double s = 0.0; s <= 5.0; s += 0.25) {
      const double xi = xi_plus(s, r);
      CHECK(std::abs(bethe::epsilon(xi, r) - s) <= 1e-12);
      CHECK(xi >= 1.0 - 1e-15);
      CHECK(xi > prev);
      prev = xi;
    }
    for (cplx s : {cplx(0.3, 2.0), cplx(2.0, -1.0), cplx(0.01, 0.5)}) {
      const cplx xi = xi_plus(s, r);
      CHECK(std::abs(bethe::epsilon(xi, r) - s) <= 1e-12);
      CHECK(std::abs(xi) > 1.0);
      CHECK(std::abs(xi_plus(s.real(), r) - xi_plus(cplx(s.real(), 0.0), r)) <= 1e-13);
    }
  }
}

TEST_CASE("phi_0y matches the Bethe n = 1 transform") {
  const Rates r(0.6, 0.4);
  for (cplx s : {cplx(1.0, 0.0), cplx(2.0, 1.0)})
    for (int y = 0; y <= 6; ++y)
      CHECK(std::abs(phi_0y(y, s, r) - bethe::transition_laplace_n1(0, y, s, r).value) <= 1e-10);
}

TEST_CASE("ejection laws") {
  auto a = ejection_stats(1, Rates(0.7, 0.3, 0.0, 0.5));
  CHECK(a.regime == Regime::transient);
  CHECK(std::abs(a.value - (1.0 - 0.5 * (3.0 / 7.0) / 0.9)) <= 1e-14);
  CHECK(std::abs(a.value - 0.761905) <= 1e-6);
  CHECK(mean_ejection_time(2, Rates(0.3, 0.7, 0.0, 0.5)) == doctest::Approx(8.5).epsilon(1e-14));
  CHECK(survival_tail_coefficient(1, Rates(0.5, 0.5, 0.0, 1.0)) ==
        doctest::Approx(3.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));
  CHECK_THROWS_AS(mean_ejection_time(1, Rates(0.7, 0.3, 0.0, 0.5)), RegimeError);
  CHECK_THROWS_AS(survival_probability(1, Rates(0.5, 0.5, 0.0, 0.5)), RegimeError);
  CHECK_THROWS_AS(ejection_stats(1, Rates(0.5, 0.5, 0.1, 0.5)), DomainError);
  CHECK_THROWS_AS(ejection_stats(1, Rates(0.5, 0.5, 0.0, 0.0)), DomainError);
}

TEST_CASE("survival transform limits reproduce the ejection laws") {
  // p < q: transform at 0 is the mean ejection time.
  CHECK(std::abs(survival_laplace(2, 1e-10, Rates(0.3, 0.7, 0.0, 0.5)).real() - 8.5) <= 1e-6);
  // p > q: s times the transform tends to the survival probability.
  const Rates up(0.7, 0.3, 0.0, 0.5);
  CHECK(std::abs(1e-10 * survival_laplace(1, 1e-10, up).real() - survival_probability(1, up)) <= 1e-8);
  // p = q: sqrt(2s) times the transform tends to 2y + 1/beta.
  const Rates sym(0.5, 0.5, 0.0, 1.0);
  const double s = 1e-10;
  CHECK(std::abs(std::sqrt(2.0 * s) * survival_laplace(1, s, sym).real() - 3.0) <= 1e-4);
}

TEST_CASE("inverted survival matches the oracle") {
  const Rates r(0.5, 0.5, 0.0, 1.0);
  const double v = survival(1, 4.0, r);
  CHECK(std::abs(v - oracle_one(r, 1, 4.0, 40)) <= 1e-4);
  for (double t : {0.5, 2.0}) {
    const Rates a(0.7, 0.3, 0.0, 0.5);
    CHECK(std::abs(survival(2, t, a) - oracle_one(a, 2, t, 40)) <= 1e-8);
  }
}

TEST_CASE("injection laws") {
  const Rates r(0.5, 0.5, 0.5, 0.0);
  const double want = 2.0 + 1.0 / (0.5 * (0.5 + std::sqrt(1.25)) - 0.5);
  CHECK(std::abs(injection_expected_time(0, r) - want) <= 1e-12);
  CHECK(std::abs(injection_expected_time(0, r) - 5.236068) <= 1e-6);
  double prev = injection_expected_time(0, r);
  for (int y = 1; y <= 10; ++y) {
    const double v = injection_expected_time(y, r);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(std::abs(injection_expected_time(200, r) - 2.0) <= 1e-12);
  CHECK_THROWS_AS(injection_expected_time(0, Rates(0.5, 0.5, 0.5, 0.1)), DomainError);
  // Transform at 0 is the expected time.
  CHECK(std::abs(injection_survival_laplace(3, 0.0, r).real() - injection_expected_time(3, r)) <= 1e-12);
}

TEST_CASE("inverted injection survival matches the oracle") {
  for (const Rates& r : {Rates(0.5, 0.5, 0.5, 0.0), Rates(0.8, 0.2, 1.0, 0.0)})
    for (int y : {0, 2})
      for (double t : {0.5, 1.0, 2.0}) {
        const double v = injection_survival(y, t, r);
        CHECK(std::abs(v - oracle_one(r, y, t, 40)) <= 1e-8);
      }
}
