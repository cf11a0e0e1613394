#include <doctest.h>

#include <cmath>

#include "asep/errors.hpp"
#include "asep/mc.hpp"
#include "asep/oracle.hpp"
#include "asep/parallel.hpp"
#include "asep/single_particle.hpp"

using namespace asep;
using namespace asep::mc;

namespace {

SimulationSpec box(Rates r, int L, InitialCondition init, double t) {
  SimulationSpec s{r, L, std::move(init), t};
  s.policy = BoundaryPolicy::reflect;
  return s;
}

}  // namespace

TEST_CASE("substreams are reproducible") {
  SimulationSpec spec{Rates::ssep(0.4, 0.3), 30, InitialCondition::fixed(Configuration({0, 3})), 20.0};
  spec.record_events = true;
  const SeedSpec seed{42};
  const auto a = simulate(spec, seed, 7);
  const auto b = simulate(spec, seed, 7);
  const auto c = simulate(spec, seed, 8);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].time == b.events[i].time);
    CHECK(a.events[i].type == b.events[i].type);
    CHECK(a.events[i].site == b.events[i].site);
  }
  CHECK(a.occupancy == b.occupancy);
  const bool same = a.events.size() == c.events.size() &&
                    std::equal(a.events.begin(), a.events.end(), c.events.begin(),
                               [](const Event& x, const Event& y) { return x.time == y.time; });
  CHECK_FALSE(same);
}

TEST_CASE("trajectory invariants") {
  SimulationSpec spec{Rates(0.6, 0.4, 0.7, 0.2), 40, InitialCondition::fixed(Configuration({1, 2, 5})), 30.0};
  spec.record_events = true;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto tr = simulate(spec, SeedSpec{3}, i);
    long injections = 0, ejections = 0;
    for (std::size_t k = 0; k < tr.events.size(); ++k) {
      if (k) CHECK(tr.events[k].time > tr.events[k - 1].time);
      injections += tr.events[k].type == EventType::inject;
      ejections += tr.events[k].type == EventType::eject;
    }
    CHECK(tr.delta_n == injections - ejections);
    CHECK(tr.count() == 3 + tr.delta_n);
  }
}

TEST_CASE("first injection into an empty lattice is exponential") {
  const double a = 0.8;
  SimulationSpec spec{Rates::ssep(a, 0.0), 20, InitialCondition::fixed(Configuration{}), 50.0};
  const auto mean = mean_hitting_time(spec, HittingEvent::first_inject, 20000, SeedSpec{11});
  CHECK(std::abs(mean.value - 1.0 / a) <= 4.0 * mean.std_error);
  spec.t_max = 1.0;
  const auto tail = no_injection_by(spec, 20000, SeedSpec{12});
  CHECK(std::abs(tail.value - std::exp(-a)) <= 4.0 * tail.std_error);
}

TEST_CASE("totally asymmetric single particle moves by a Poisson count") {
  const double t = 3.0;
  SimulationSpec spec{Rates::tasep(), 60, InitialCondition::fixed(Configuration({2})), t};
  const std::uint64_t runs = 20000;
  std::vector<std::uint64_t> counts(40, 0);
  for (std::uint64_t i = 0; i < runs; ++i) {
    const auto tr = simulate(spec, SeedSpec{5}, i);
    int x = 0;
    while (!tr.occupancy[x]) ++x;
    ++counts[std::min<std::size_t>(x - 2, 39)];
  }
  std::vector<double> prob(40);
  double w = std::exp(-t);
  for (int k = 0; k < 40; ++k) {
    prob[k] = w;
    w *= t / (k + 1);
  }
  const auto chi = chi_squared_test(counts, prob);
  CHECK(chi.p_value > 1e-3);
}

TEST_CASE("final configurations follow the generator exponential") {
  const int L = 8;
  const Rates r = Rates::ssep(0.4, 0.3);
  const auto spec = box(r, L, InitialCondition::fixed(Configuration({0, 3})), 1.0);
  const auto counts = configuration_counts(spec, 200000, SeedSpec{2024});
  auto gen = oracle::build_generator(r, LatticeTruncation(L));
  const auto pi = oracle::evolve(gen, oracle::point_mass(gen.space(), Configuration({0, 3})), 1.0);
  std::vector<double> prob(counts.size());
  for (std::size_t m = 0; m < prob.size(); ++m) prob[m] = pi[*gen.space().index(m)];
  const auto chi = chi_squared_test(counts, prob);
  MESSAGE("chi2 = ", chi.statistic, " dof = ", chi.dof, " p = ", chi.p_value);
  CHECK(chi.p_value > 1e-3);
}

TEST_CASE("Bernoulli start and net exchange match the generator exponential") {
  const int L = 10;
  const Rates r = Rates::ssep(0.4, 0.3);
  auto spec = box(r, L, InitialCondition::bernoulli(0.2), 1.0);
  spec.observe = {0.5, 1.0};
  const auto est = deltaN_moments(spec, 100000, SeedSpec{9});
  auto gen = oracle::build_generator(r, LatticeTruncation(L));
  const auto pi0 = oracle::bernoulli(gen.space(), 0.2);
  for (const auto& e : est) {
    const auto m = oracle::delta_n_moments(gen, pi0, e.time);
    CHECK(std::abs(e.mean.value - m.mean) <= 4.0 * e.mean.std_error);
    CHECK(std::abs(e.second.value - m.second) <= 4.0 * e.second.std_error);
  }
  const auto psi = correlation(spec, Configuration({0, 1}), 100000, SeedSpec{10});
  const auto obs = oracle::observables(gen.space(), oracle::evolve(gen, pi0, 1.0));
  CHECK(std::abs(psi.value - oracle::correlation(gen.space(), oracle::evolve(gen, pi0, 1.0), Configuration({0, 1}))) <=
        4.0 * psi.std_error);
  const auto counts = count_distribution(spec, 100000, SeedSpec{13});
  for (std::size_t n = 0; n < counts.size() && n < obs.count_probability.size(); ++n) {
    const double pn = obs.count_probability[n];
    CHECK(std::abs(counts[n].value - pn) <= 4.0 * std::sqrt(pn * (1.0 - pn) / 100000.0) + 1e-12);
  }
}

TEST_CASE("event frequencies match enabled rates") {
  auto spec = box(Rates(0.7, 0.3, 0.4, 0.3), 20, InitialCondition::fixed(Configuration({0, 3})), 3000.0);
  const auto audit = audit_event_rates(spec, SeedSpec{77});
  for (int k = 0; k < 4; ++k) {
    CAPTURE(k);
    CHECK(audit.expected[k] > 100.0);
    CHECK(std::abs(audit.z[k]) <= 4.0);
  }
}

TEST_CASE("estimates do not depend on the thread count") {
  SimulationSpec spec{Rates(0.7, 0.3, 0.0, 0.5), 200, InitialCondition::fixed(Configuration({1})), 200.0};
  set_thread_cap(1);
  const auto a = never_ejected(spec, 10000, SeedSpec{1});
  set_thread_cap(4);
  const auto b = never_ejected(spec, 10000, SeedSpec{1});
  set_thread_cap(0);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("single-particle laws by simulation") {
  SUBCASE("never-ejected probability") {
    const Rates r(0.7, 0.3, 0.0, 0.5);
    SimulationSpec spec{r, 200, InitialCondition::fixed(Configuration({1})), 200.0};
    const auto e = never_ejected(spec, 100000, SeedSpec{100});
    CHECK(std::abs(e.value - single::survival_probability(1, r)) <= 4.0 * e.std_error);
  }
  SUBCASE("mean ejection time") {
    const Rates r(0.3, 0.7, 0.0, 0.5);
    SimulationSpec spec{r, 200, InitialCondition::fixed(Configuration({2})), 400.0};
    const auto e = mean_hitting_time(spec, HittingEvent::first_eject, 100000, SeedSpec{101});
    CHECK(e.censored_fraction == 0.0);
    CHECK(std::abs(e.value - 8.5) <= 4.0 * e.std_error);
  }
  SUBCASE("mean injection time") {
    const Rates r = Rates::ssep(0.5, 0.0);
    SimulationSpec spec{r, 200, InitialCondition::fixed(Configuration({0})), 400.0};
    const auto e = mean_hitting_time(spec, HittingEvent::first_inject, 100000, SeedSpec{102});
    CHECK(std::abs(e.value - single::injection_expected_time(0, r)) <= 4.0 * e.std_error);
  }
}

TEST_CASE("boundary policies") {
  SimulationSpec spec{Rates::tasep(), 8, InitialCondition::fixed(Configuration({3})), 20.0};
  spec.policy = BoundaryPolicy::grow;
  const auto grown = simulate(spec, SeedSpec{4}, 0);
  CHECK(grown.L_used > 8);
  CHECK_FALSE(grown.boundary_contact);
  SimulationSpec wide = spec;
  wide.L = grown.L_used;
  const auto direct = simulate(wide, SeedSpec{4}, 0);
  CHECK(direct.occupancy == grown.occupancy);

  spec.policy = BoundaryPolicy::flag;
  CHECK(simulate(spec, SeedSpec{4}, 0).boundary_contact);

  spec.L = 4;
  CHECK_THROWS_AS(simulate(spec, SeedSpec{4}, 0), DomainError);
}

TEST_CASE("estimator guards") {
  SimulationSpec spec{Rates(0.3, 0.7, 0.0, 0.5), 50, InitialCondition::fixed(Configuration({2})), 1.0};
  CHECK_THROWS_AS(never_ejected(spec, 10, SeedSpec{}), DomainError);
  CHECK_THROWS_AS(mean_hitting_time(spec, HittingEvent::first_eject, 2000, SeedSpec{}), CensoringError);
  try {
    (void)mean_hitting_time(spec, HittingEvent::first_eject, 2000, SeedSpec{});
  } catch (const CensoringError& e) {
    CHECK(e.censored_fraction() > 0.01);
  }
  CHECK_THROWS_AS(InitialCondition::bernoulli(1.5), DomainError);
  const std::vector<std::uint64_t> counts{10, 20};
  CHECK_THROWS_AS(chi_squared_test(counts, {0.5}), DomainError);
}
