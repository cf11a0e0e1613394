#include <doctest.h>

#include <cmath>

#include "asep/errors.hpp"
#include "asep/oracle.hpp"
#include "asep/tasep.hpp"

using namespace asep;
using namespace asep::tasep;

namespace {

double factorial(int k) { return std::tgamma(k + 1.0); }

std::vector<double> oracle_counts(double alpha, double t, int L, int cap) {
  oracle::GeneratorMatrix gen(Rates::tasep(alpha), oracle::StateSpace::capped(LatticeTruncation(L), cap));
  auto d = oracle::evolve(gen, oracle::point_mass(gen.space(), Configuration{}), t);
  return oracle::observables(gen.space(), d).count_probability;
}

}  // namespace

TEST_CASE("single particle determinant is Poisson") {
  for (double t : {0.3, 1.0, 2.5})
    for (int y = 0; y <= 2; ++y)
      for (int x = 0; x <= 8; ++x) {
        const double want = x >= y ? std::exp(-t) * std::pow(t, x - y) / factorial(x - y) : 0.0;
        CHECK(std::abs(tasep_determinant({x}, {y}, t) - want) <= 1e-12);
      }
}

TEST_CASE("determinant at t = 0") {
  CHECK(std::abs(tasep_determinant({1, 4}, {1, 4}, 0.0) - 1.0) <= 1e-12);
  CHECK(std::abs(tasep_determinant({1, 5}, {1, 4}, 0.0)) <= 1e-12);
  CHECK(std::abs(tasep_determinant({0, 2, 3}, {0, 2, 3}, 0.0) - 1.0) <= 1e-12);
}

TEST_CASE("two-particle determinant against the exact chain on a window of Z") {
  // Sites -5..15 are shifted by 5.
  const int shift = 5;
  oracle::GeneratorMatrix gen(Rates::tasep(), oracle::StateSpace::fixed_count(LatticeTruncation(21), 2));
  auto d = oracle::evolve(gen, oracle::point_mass(gen.space(), Configuration{0 + shift, 1 + shift}), 1.0);
  for (const Configuration& x : {Configuration{2, 3}, Configuration{1, 3}, Configuration{0, 1}, Configuration{1, 6}}) {
    const Configuration xs{x[0] + shift, x[1] + shift};
    CHECK(std::abs(tasep_determinant(x, {0, 1}, 1.0) - d[*gen.space().index(xs.mask())]) <= 1e-8);
  }
}

TEST_CASE("resolvent identity") {
  CHECK(resolvent_identity_check(1, 3.0, 0.0, LatticeTruncation(40)) == 0.0);
  CHECK(resolvent_identity_check(1, 3.0, 0.5, LatticeTruncation(40)) <= 1e-6);
  CHECK(resolvent_identity_check(1, 4.0, 1.0, LatticeTruncation(40)) <= 1e-6);
  CHECK(resolvent_identity_check(2, 3.0, 0.5, LatticeTruncation(36)) <= 1e-6);
  CHECK_THROWS_AS(resolvent_identity_check(1, 0.5, 0.2, LatticeTruncation(8)), TruncationError);
}

TEST_CASE("closed forms: spot values") {
  CHECK(tasep_pn_closed(0, 1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(tasep_pn_closed(1, 0.5, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
  CHECK(tasep_pn_closed(1, 1.0, 1.0) == doctest::Approx(1.5 * std::exp(-1.0)).epsilon(1e-13));
  for (int n = 0; n <= 2; ++n)
    for (double a : {0.5, 1.0, 2.0, 0.97}) CHECK(std::abs(tasep_pn_closed(n, a, 0.0) - (n == 0 ? 1.0 : 0.0)) <= 1e-13);
  CHECK_THROWS_AS(tasep_pn_closed(3, 1.0, 1.0), UnsupportedError);
}

TEST_CASE("closed forms against the exact chain") {
  for (double a : {0.5, 1.0, 2.0}) {
    for (double t : {0.25, 1.0, 2.0, 3.0}) {
      oracle::GeneratorMatrix gen(Rates::tasep(a), oracle::StateSpace::full(LatticeTruncation(16)));
      auto d = oracle::evolve(gen, oracle::point_mass(gen.space(), Configuration{}), t);
      auto counts = oracle::observables(gen.space(), d).count_probability;
      for (int n = 0; n <= 2; ++n) CHECK(std::abs(tasep_pn_closed(n, a, t) - counts[n]) <= 1e-7);
    }
    for (double t : {4.5, 6.0}) {
      auto counts = oracle_counts(a, t, 24, 3);
      for (int n = 0; n <= 2; ++n) CHECK(std::abs(tasep_pn_closed(n, a, t) - counts[n]) <= 1e-7);
    }
  }
}

TEST_CASE("limit forms are continuous at alpha = 1") {
  for (int n = 0; n <= 2; ++n)
    for (double t = 0.0; t <= 6.0; t += 0.5) {
      // One-sided differences are of order h * dP/dalpha; the symmetric mean is O(h^2).
      const double h = 1e-4;
      const double at1 = tasep_pn_closed(n, 1.0, t);
      const double up = tasep_pn_closed(n, 1.0 + h, t), down = tasep_pn_closed(n, 1.0 - h, t);
      CHECK(std::abs(0.5 * (up + down) - at1) <= 1e-6);
      CHECK(std::abs(up - at1) <= 2.0 * h);
      // Circle-averaged values agree with the direct formula where the latter is well conditioned.
      CHECK(std::abs(tasep_pn_closed(n, 0.949, t) - tasep_pn_closed(n, 0.951, t)) <= 1e-2);
    }
  // Direct limit polynomial for P_2.
  const double t = 2.0;
  const double want = (std::pow(t, 4) / 12 + t * t / 2 - t + 1) * std::exp(-t) - std::exp(-2 * t);
  CHECK(tasep_pn_closed(2, 1.0, t) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("figure data") {
  std::vector<double> grid;
  for (int k = 0; k <= 200; ++k) grid.push_back(0.05 * k);
  auto fig = figure1_data(1.0, grid, 3);
  CHECK(fig.ordering_holds);
  CHECK(fig.argmax[0] == 0.0);
  for (int n = 1; n <= 3; ++n) CHECK(fig.argmax[n] > fig.argmax[n - 1]);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::abs(fig.P[0][k] - std::exp(-grid[k])) <= 1e-12);
    double total = 0.0;
    for (int n = 0; n <= 3; ++n) total += fig.P[n][k];
    CHECK(total <= 1.0 + 1e-12);
    if (k) CHECK(fig.P[0][k] < fig.P[0][k - 1]);
  }
  CHECK(fig.window_sensitivity <= 1e-10);

  std::vector<double> short_grid;
  for (int k = 0; k <= 120; ++k) short_grid.push_back(0.05 * k);
  CHECK_THROWS_AS(figure1_data(1.0, short_grid, 3), AccuracyError);  // P_3 peaks near t = 6.3
}
