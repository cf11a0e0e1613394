#include "asep/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/poisson.hpp>

#include "asep/bethe.hpp"
#include "asep/errors.hpp"
#include "asep/laplace_inversion.hpp"
#include "asep/mc.hpp"
#include "asep/open_solver.hpp"
#include "asep/oracle.hpp"
#include "asep/single_particle.hpp"
#include "asep/ssep.hpp"
#include "asep/tasep.hpp"

namespace asep::acceptance {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string rates_label(const Rates& r) {
  std::ostringstream os;
  os << "p=" << r.p() << " a=" << r.alpha() << " b=" << r.beta();
  return os.str();
}

// Checks whose evaluation threw are recorded as failures with the error text.
Check upper(std::string name, double observed, double bound, std::string detail = {}) {
  return {std::move(name), observed, bound, true, std::isfinite(observed) && observed <= bound, true, std::move(detail)};
}
Check lower(std::string name, double observed, double bound, std::string detail = {}) {
  return {std::move(name), observed, bound, false, std::isfinite(observed) && observed >= bound, true, std::move(detail)};
}
Check failed(std::string name, double bound, const std::exception& e) {
  return {std::move(name), std::numeric_limits<double>::quiet_NaN(), bound, true, false, true, e.what()};
}

void attempt(std::vector<Check>& checks, const std::string& name, double bound, const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    checks.push_back(failed(name, bound, e));
  }
}

// Shared state so that inversion comparisons reuse the runs of earlier criteria.
struct Context {
  Suite suite;
  std::map<std::string, double> inversion_gaps;
  std::map<int, bool> gaps_done;
};

mc::SimulationSpec sim(const Rates& r, int L, mc::InitialCondition init, double t) {
  return {.rates = r, .L = L, .initial = std::move(init), .t_max = t, .observe = {}};
}

double max_abs_diff(const Eigen::VectorXd& a, const std::vector<double>& b) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[static_cast<std::size_t>(i)]));
  return d;
}

// 1. Bethe against the exact closed-edge chain.
void bethe_vs_oracle(Context& ctx, CriterionResult& out) {
  const std::vector<double> times{0.2, 1.0};
  const int window = 6, oracle_L = 30, recheck = ctx.suite == Suite::full ? 8 : 4;
  double bethe_seconds = 0.0, window_shift = 0.0;
  for (double p : {0.5, 0.7}) {
    const Rates r(p, 1.0 - p);
    for (int n = 1; n <= 3; ++n) {
      const std::string label = "n=" + std::to_string(n) + " p=" + fmt(p);
      attempt(out.checks, label, 1e-5, [&] {
        const auto start = Clock::now();
        const auto table = bethe::transition_table(n, LatticeTruncation(window), times, r);
        bethe_seconds += seconds_since(start);
        double err = 0.0;
        oracle::GeneratorMatrix g(r, oracle::StateSpace::fixed_count(LatticeTruncation(oracle_L), n));
        oracle::GeneratorMatrix wide(r, oracle::StateSpace::fixed_count(LatticeTruncation(oracle_L + recheck), n));
        for (std::size_t j = 0; j < table.configs.size(); ++j) {
          const auto d = oracle::evolve_many(g, oracle::point_mass(g.space(), table.configs[j]), times);
          const auto dw = oracle::evolve_many(wide, oracle::point_mass(wide.space(), table.configs[j]), times);
          for (std::size_t k = 0; k < times.size(); ++k)
            for (std::size_t i = 0; i < table.configs.size(); ++i) {
              const auto m = table.configs[i].mask();
              const double o = d[k][*g.space().index(m)];
              const auto ij = std::pair{static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)};
              err = std::max(err, std::abs(table.values[k](ij.first, ij.second) - o));
              window_shift = std::max(window_shift, std::abs(o - dw[k][*wide.space().index(m)]));
            }
        }
        out.checks.push_back(upper(label, err, 1e-5, "max |bethe - oracle| over the 6-site window, t in {0.2, 1}"));
      });
    }
  }
  out.checks.push_back(upper("oracle window insensitivity", window_shift, 1e-10,
                             "largest difference when the oracle lattice grows by " + std::to_string(recheck) + " sites"));
  out.checks.push_back(upper("contour evaluation time [s]", bethe_seconds, 120.0));
}

// Smallest k with n P(Poisson(p t) >= k) <= tail: no particle moves right more often than its own clock rings.
int tail_sites(int n, double rate_t, double tail) {
  if (rate_t <= 0.0) return 1;
  boost::math::poisson_distribution<double> d(rate_t);
  int k = 1;
  while (n * boost::math::cdf(boost::math::complement(d, static_cast<double>(k - 1))) > tail) ++k;
  return k;
}

// 2. Single-particle closed forms.
void single_particle_forms(Context&, CriterionResult& out) {
  for (const Rates& r : {Rates::ssep(), Rates(0.7, 0.3)}) {
    double special = 0.0, general = 0.0;
    attempt(out.checks, "closed-form transform " + rates_label(r), 1e-8, [&] {
      for (double s : {1.0, 2.0, 4.0})
        for (int y = 0; y <= 10; ++y) {
          const cplx xp = single::xi_plus(cplx(s), r);
          const cplx want = std::exp(-static_cast<double>(y) * std::log(xp)) / (r.q() * (xp - 1.0));
          special = std::max(special, std::abs(bethe::transition_laplace({0}, {y}, s, r) - want));
          general = std::max(general, std::abs(bethe::laplace_block({Configuration{0}}, {Configuration{y}}, s, r).values(0, 0) - want));
        }
      out.checks.push_back(upper("closed-form transform, single-particle integrand " + rates_label(r), special, 1e-8,
                                 "y <= 10, s in {1, 2, 4}"));
      out.checks.push_back(upper("closed-form transform, general contour sum " + rates_label(r), general, 1e-8,
                                 "y <= 10, s in {1, 2, 4}"));
    });
    double dev = 0.0;
    attempt(out.checks, "general sum vs single-particle integrand " + rates_label(r), 1e-12, [&] {
      for (double t : {0.2, 1.0})
        for (int x = 0; x < 6; ++x)
          for (int y = 0; y < 6; ++y)
            dev = std::max(dev, std::abs(bethe::evaluate_transition({x}, {y}, t, r).value -
                                         bethe::transition_probability_n1(x, y, t, r).value));
      out.checks.push_back(upper("general sum vs single-particle integrand " + rates_label(r), dev, 1e-12,
                                 "x, y < 6, t in {0.2, 1}"));
    });
  }
}

// 3. Conservation on windows from the tail rule, re-checked ten sites further out.
void conservation(Context&, CriterionResult& out) {
  const double tail = 1e-7;
  for (double p : {0.5, 0.7}) {
    const Rates r(p, 1.0 - p);
    for (int y : {0, 1, 3})
      for (double t : {0.2, 1.0}) {
        const int L = y + 1 + tail_sites(1, p * t, tail);
        for (int W : {L, L + 10}) {
          const std::string label = "n=1 y=" + std::to_string(y) + " p=" + fmt(p) + " t=" + fmt(t) + " L=" + std::to_string(W);
          attempt(out.checks, label, 1e-6, [&] {
            double sum = 0.0;
            for (int x = 0; x < W; ++x) sum += bethe::transition_probability_n1(x, y, t, r).value;
            out.checks.push_back(upper(label, std::abs(sum - 1.0), 1e-6, W == L ? "tail-rule window" : "re-check"));
          });
        }
      }
    const Configuration y{0, 2};
    const double t = 0.2;
    const int L = y.back() + 1 + tail_sites(2, p * t, tail);
    for (int W : {L, L + 10}) {
      const std::string label = "n=2 y=(0,2) p=" + fmt(p) + " t=0.2 L=" + std::to_string(W);
      attempt(out.checks, label, 1e-6, [&] {
        double sum = 0.0;
        const ConfigurationSet X(2, W);
        // Far entries sit at the roundoff floor (about 1e-8) where node doubling cannot settle;
        // a fixed 128-node rule keeps each entry well inside the budget of the sum.
        QuadratureSpec quad;
        quad.adaptive = false;
        quad.nodes_per_contour = 128;
        for (const auto& x : X.configurations()) sum += bethe::evaluate_transition(x, y, t, r, quad).value;
        out.checks.push_back(upper(label, std::abs(sum - 1.0), 1e-6, W == L ? "tail-rule window" : "re-check"));
      });
    }
  }
}

// 4. TASEP injection into an empty lattice.
void tasep_closed_forms(Context&, CriterionResult& out) {
  double p0 = 0.0, closed = 0.0, limit = 0.0;
  for (double a : {0.5, 1.0, 2.0})
    for (double t : {0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
      p0 = std::max(p0, std::abs(tasep::tasep_pn_closed(0, a, t) - std::exp(-a * t)));
      oracle::GeneratorMatrix gen(Rates::tasep(a), oracle::StateSpace::full(LatticeTruncation(16)));
      const auto d = oracle::evolve(gen, oracle::point_mass(gen.space(), Configuration{}), t);
      const auto counts = oracle::observables(gen.space(), d).count_probability;
      for (int n = 0; n <= 2; ++n) closed = std::max(closed, std::abs(tasep::tasep_pn_closed(n, a, t) - counts[n]));
    }
  out.checks.push_back(upper("P0 = exp(-alpha t)", p0, 1e-15));
  out.checks.push_back(upper("P0, P1, P2 vs oracle (L=16)", closed, 1e-7, "alpha in {0.5, 1, 2}, t <= 3"));
  const double h = 1e-4;
  for (int n = 0; n <= 2; ++n)
    for (double t = 0.0; t <= 6.0; t += 0.25)
      limit = std::max(limit, std::abs(0.5 * (tasep::tasep_pn_closed(n, 1.0 + h, t) + tasep::tasep_pn_closed(n, 1.0 - h, t)) -
                                       tasep::tasep_pn_closed(n, 1.0, t)));
  out.checks.push_back(upper("continuity at alpha = 1", limit, 1e-6, "symmetric mean at alpha = 1 +- 1e-4"));
  attempt(out.checks, "argmax ordering at alpha = 1", 0.0, [&] {
    std::vector<double> grid;
    for (int k = 0; k <= 200; ++k) grid.push_back(0.05 * k);
    const auto fig = tasep::figure1_data(1.0, grid, 3);
    std::ostringstream os;
    os << "argmax t = " << fig.argmax[0] << ", " << fig.argmax[1] << ", " << fig.argmax[2] << ", " << fig.argmax[3];
    double gap = fig.ordering_holds ? std::numeric_limits<double>::infinity() : 0.0;
    for (int n = 1; n <= 3; ++n) gap = std::min(gap, fig.argmax[n] - fig.argmax[n - 1]);
    out.checks.push_back(lower("argmax ordering at alpha = 1 (smallest spacing)", gap, 0.05, os.str() + ", grid step 0.05"));
    out.checks.push_back(upper("P3 window sensitivity", fig.window_sensitivity, 1e-10));
  });
}

// 5. Resolvent identity and the reduced operator forms.
void resolvent_identities(Context&, CriterionResult& out) {
  for (auto [alpha, s] : {std::pair{0.5, 3.0}, std::pair{1.0, 4.0}}) {
    const std::string label = "resolvent identity alpha=" + fmt(alpha) + " s=" + fmt(s);
    attempt(out.checks, label, 1e-6, [&] {
      out.checks.push_back(upper(label, tasep::resolvent_identity_check(1, s, alpha, LatticeTruncation(40)), 1e-6, "n=1, L=40"));
    });
  }
  double ml = 0.0, mla = 0.0;
  const LatticeTruncation tr(8);
  for (const Rates& r : {Rates::ssep(), Rates(0.7, 0.3)})
    for (double c : {-0.7, 0.4})
      for (double s : {2.0, 4.0})
        for (int n = 1; n <= 3; ++n) {
          const auto L = open::build_Ln(n, s, r, tr).matrix;
          ml = std::max(ml, (open::ML_direct(L, n, tr, c) - open::ML_reduced(L, n, tr, c)).cwiseAbs().maxCoeff());
          mla = std::max(mla, (open::MLA_direct(L, n, tr, c) - open::MLA_reduced(L, n, tr, c)).cwiseAbs().maxCoeff());
        }
  out.checks.push_back(upper("reduced form of M L", ml, 1e-8, "L=8, n <= 3"));
  out.checks.push_back(upper("reduced form of M L A", mla, 1e-8, "L=8, n <= 3"));
}

const std::vector<Rates>& pipeline_rates() {
  static const std::vector<Rates> r{Rates::ssep(0.4, 0.3), Rates::ssep(1.0, 0.0), Rates::ssep(0.0, 0.5)};
  return r;
}

// 6. Open-boundary pipeline against the full generator.
void open_pipeline(Context& ctx, CriterionResult& out) {
  const int L = 8;
  const LatticeTruncation tr(L);
  const Configuration y{0, 3};
  for (const Rates& r : pipeline_rates()) {
    auto gen = oracle::build_generator(r, tr);
    open::OpenBoundaryProblem problem(r, tr, open::InitialDistribution::point_mass(y, tr), L);
    for (double t : {0.5, 1.0, 2.0}) {
      const std::string label = rates_label(r) + " t=" + fmt(t);
      attempt(out.checks, label, 2e-4, [&] {
        const auto res = open::time_domain_checked(problem, t);
        const auto obs = oracle::observables(gen.space(), oracle::evolve(gen, oracle::point_mass(gen.space(), y), t));
        double err = 0.0;
        for (int n = 0; n <= L; ++n) err = std::max(err, max_abs_diff(res.primary.P[n], obs.P[n]));
        out.checks.push_back(upper("P_n(x) " + label, err, 2e-4, "y=(0,3), L=8"));
        out.checks.push_back(upper("mass defect " + label, std::abs(res.primary.mass - 1.0), 1e-5));
        ctx.inversion_gaps["open pipeline " + label] = res.discrepancy;
      });
    }
  }
  ctx.gaps_done[6] = true;
}

void open_pipeline_gaps(Context& ctx) {
  CriterionResult scratch;
  open_pipeline(ctx, scratch);
}

// 7. Single-particle laws by formula and simulation.
void single_particle_laws(Context& ctx, CriterionResult& out) {
  const Rates transient(0.7, 0.3, 0.0, 0.5), recurrent(0.3, 0.7, 0.0, 0.5), inject = Rates::ssep(0.5, 0.0);
  const Rates critical = Rates::ssep(0.0, 1.0);
  out.checks.push_back(upper("survival formula", std::abs(single::survival_probability(1, transient) - 0.761905), 5e-7));
  out.checks.push_back(upper("mean ejection formula", std::abs(single::mean_ejection_time(2, recurrent) - 8.5), 1e-12));
  out.checks.push_back(upper("mean injection formula", std::abs(single::injection_expected_time(0, inject) - 5.236068), 5e-7));

  const std::uint64_t runs = 1000000;
  auto sigma_check = [&](const std::string& name, const mc::Estimate& e, double want) {
    const double z = std::abs(e.value - want) / e.std_error;
    out.checks.push_back(upper(name + " (sigmas)", z, 3.0,
                               "MC " + fmt(e.value) + " +- " + fmt(e.std_error) + " vs " + fmt(want) + ", 1e6 runs"));
  };
  attempt(out.checks, "survival MC", 3.0, [&] {
    auto spec = sim(transient, 200, mc::InitialCondition::fixed(Configuration({1})), 200.0);
    sigma_check("survival MC", mc::never_ejected(spec, runs, mc::SeedSpec{7001}), single::survival_probability(1, transient));
  });
  attempt(out.checks, "mean ejection MC", 3.0, [&] {
    auto spec = sim(recurrent, 200, mc::InitialCondition::fixed(Configuration({2})), 400.0);
    sigma_check("mean ejection MC", mc::mean_hitting_time(spec, mc::HittingEvent::first_eject, runs, mc::SeedSpec{7002}),
                single::mean_ejection_time(2, recurrent));
  });
  attempt(out.checks, "mean injection MC", 3.0, [&] {
    auto spec = sim(inject, 200, mc::InitialCondition::fixed(Configuration({0})), 400.0);
    sigma_check("mean injection MC", mc::mean_hitting_time(spec, mc::HittingEvent::first_inject, runs, mc::SeedSpec{7003}),
                single::injection_expected_time(0, inject));
  });
  attempt(out.checks, "survival tail", 0.05, [&] {
    const double t = 400.0;
    auto spec = sim(critical, 200, mc::InitialCondition::fixed(Configuration({1})), t);
    const auto e = mc::never_ejected(spec, runs, mc::SeedSpec{7004});
    const double want = single::survival_tail_coefficient(1, critical);
    out.checks.push_back(upper("survival tail sqrt(t) S(t) (relative)", std::abs(std::sqrt(t) * e.value / want - 1.0), 0.05,
                               "MC " + fmt(std::sqrt(t) * e.value) + " vs " + fmt(want) + " at t=400"));
  });
  (void)ctx;
}

void single_particle_gaps(Context& ctx) {
  const Rates transient(0.7, 0.3, 0.0, 0.5), recurrent(0.3, 0.7, 0.0, 0.5), inject = Rates::ssep(0.5, 0.0);
  for (double t : {1.0, 5.0}) {
    ctx.inversion_gaps["survival transform p=0.7 t=" + fmt(t)] =
        laplace::invert_checked([&](cplx s) { return single::survival_laplace(1, s, transient); }, t).discrepancy;
    ctx.inversion_gaps["survival transform p=0.3 t=" + fmt(t)] =
        laplace::invert_checked([&](cplx s) { return single::survival_laplace(2, s, recurrent); }, t).discrepancy;
    ctx.inversion_gaps["injection transform t=" + fmt(t)] =
        laplace::invert_checked([&](cplx s) { return single::injection_survival_laplace(0, s, inject); }, t).discrepancy;
  }
  ctx.gaps_done[7] = true;
}

// 8. Stationarity of the Bernoulli measure at rho = alpha / gamma.
void stationarity(Context& ctx, CriterionResult& out) {
  const LatticeTruncation tr(8);
  const int n_max = 4;
  for (const Rates& r : {Rates::ssep(0.4, 0.3), Rates::ssep(1.0, 0.5)}) {
    const double rho = r.alpha() / r.gamma();
    const std::string label = rates_label(r);
    attempt(out.checks, "transform node " + label, 1e-10, [&] {
      const cplx s(1.3, 0.2);
      const auto st = ssep::solve_theorem2(rho, s, r, tr, n_max);
      double dev = 0.0;
      for (int n = 0; n <= n_max; ++n) dev = std::max(dev, (s * st.psihat[n].array() - std::pow(rho, n)).abs().maxCoeff());
      out.checks.push_back(upper("transform node " + label, dev, 1e-10, "s = 1.3 + 0.2i, L=8, n <= 4"));
    });
    for (double t : {0.5, 1.0, 2.0}) {
      attempt(out.checks, "pipeline " + label, 2e-4, [&] {
        const auto psi = ssep::correlations(rho, t, r, tr, n_max);
        const auto alt = ssep::correlations(rho, t, r, tr, n_max, laplace::alternate(laplace::InverterSpec{}));
        double dev = 0.0, gap = 0.0;
        for (int n = 0; n <= n_max; ++n) {
          dev = std::max(dev, (psi[n].array() - std::pow(rho, n)).abs().maxCoeff());
          gap = std::max(gap, (psi[n] - alt[n]).cwiseAbs().maxCoeff());
        }
        out.checks.push_back(upper("pipeline " + label + " t=" + fmt(t), dev, 2e-4, "L=8, n <= 4"));
        ctx.inversion_gaps["correlations " + label + " t=" + fmt(t)] = gap;
      });
    }
  }
  ctx.gaps_done[8] = true;
}

void stationarity_gaps(Context& ctx) {
  CriterionResult scratch;
  stationarity(ctx, scratch);
}

struct DeltaNCase {
  double alpha, beta, rho;
};
const std::vector<DeltaNCase>& deltaN_cases() {
  static const std::vector<DeltaNCase> c{{1.0, 0.0, 0.0}, {0.5, 0.5, 0.0}, {0.5, 0.5, 0.25}};
  return c;
}

mc::SimulationSpec deltaN_spec(const DeltaNCase& c, double t) {
  const int L = static_cast<int>(std::ceil(4.0 * std::sqrt(t))) + 50;
  const auto init = c.rho > 0.0 ? mc::InitialCondition::bernoulli(c.rho) : mc::InitialCondition::fixed(Configuration{});
  auto spec = sim(Rates::ssep(c.alpha, c.beta), L, init, t);
  spec.observe = {t};
  // Bernoulli data fill the box; the closed far edge is invariant for SSEP and out of reach by t.
  spec.policy = c.rho > 0.0 ? mc::BoundaryPolicy::reflect : mc::BoundaryPolicy::grow;
  return spec;
}

// 9. Mean net exchange with the reservoir.
void deltaN_mean(Context& ctx, CriterionResult& out) {
  std::uint64_t seed = 9001;
  for (const auto& c : deltaN_cases()) {
    std::ostringstream os;
    os << "(a,b,rho)=(" << c.alpha << "," << c.beta << "," << c.rho << ")";
    const std::string label = os.str();
    attempt(out.checks, "t=50 " + label, 3.0, [&] {
      const double exact = ssep::deltaN_mean(50.0, c.rho, c.alpha, c.beta);
      const auto e = mc::deltaN_moments(deltaN_spec(c, 50.0), 100000, mc::SeedSpec{seed}).front().mean;
      out.checks.push_back(upper("t=50 " + label + " (sigmas)", std::abs(e.value - exact) / e.std_error, 3.0,
                                 "MC " + fmt(e.value) + " +- " + fmt(e.std_error) + " vs inversion " + fmt(exact)));
    });
    ++seed;
    attempt(out.checks, "t=200 " + label, 0.05, [&] {
      const double t = 200.0;
      const std::uint64_t runs = ctx.suite == Suite::full ? 80000 : 20000;
      const double want = ssep::deltaN_mean_asymptotic(t, c.rho, c.alpha, c.beta) / std::sqrt(t);
      const auto e = mc::deltaN_moments(deltaN_spec(c, t), runs, mc::SeedSpec{seed}).front().mean;
      const double got = e.value / std::sqrt(t);
      out.checks.push_back(upper("t=200 " + label + " (relative)", std::abs(got / want - 1.0), 0.05,
                                 "MC/sqrt(t) " + fmt(got) + " +- " + fmt(e.std_error / std::sqrt(t)) + " vs " + fmt(want)));
    });
    ++seed;
  }
  (void)ctx;
}

void deltaN_gaps(Context& ctx) {
  for (const auto& c : deltaN_cases())
    for (double t : {50.0, 200.0}) {
      std::ostringstream os;
      os << "mean exchange (" << c.alpha << "," << c.beta << "," << c.rho << ") t=" << t;
      ctx.inversion_gaps[os.str()] =
          laplace::invert_checked([&](cplx s) { return ssep::deltaN_mean_laplace(s, c.rho, c.alpha, c.beta); }, t)
              .discrepancy;
    }
  ctx.gaps_done[9] = true;
}

// 10. Kernel identities; the second-moment experiment is reported without gating.
void kernel_identities(Context& ctx, CriterionResult& out) {
  attempt(out.checks, "sech identity", 1e-10, [&] {
    const auto v = ssep::sech_identity();
    out.checks.push_back(upper("sech identity", v.deviation, 1e-10, "value " + fmt(v.value)));
  });
  attempt(out.checks, "J-kernel inner product", 1e-3, [&] {
    const double v = ssep::j_kernel_inner_product(0.04, 40.0);
    out.checks.push_back(upper("J-kernel inner product", std::abs(v - 2.0 / std::numbers::pi), 1e-3,
                               "step 0.04, cutoff 40, value " + fmt(v)));
  });
  attempt(out.checks, "J-kernel convergence", 0.25, [&] {
    const auto c = ssep::j_kernel_convergence(0.08, 40.0);
    std::ostringstream os;
    os << "errors";
    for (double v : c.values) os << ' ' << fmt(std::abs(v - 2.0 / std::numbers::pi));
    os << " at steps 0.08, 0.04, 0.02";
    out.checks.push_back(upper("J-kernel error ratio under halving", c.ratio, 0.25, os.str()));
  });
  try {
    const std::uint64_t runs = ctx.suite == Suite::full ? 50000 : 10000;
    const auto rows = ssep::deltaN_second_moment_experiment(1.0, 0.0, {25.0, 100.0}, runs, 10001);
    for (const auto& row : rows) {
      Check c = upper("second moment / t at t=" + fmt(row.t) + " (relative to 2/pi)",
                      std::abs(row.mean_square_over_t / row.target - 1.0), 0.05,
                      "MC " + fmt(row.mean_square_over_t) + " +- " + fmt(row.std_error) + ", scaled variance " +
                          fmt(row.scaled_variance));
      c.gating = false;
      out.checks.push_back(c);
    }
  } catch (const Error& e) {
    Check c = failed("second moment experiment", 0.05, e);
    c.gating = false;
    out.checks.push_back(c);
  }
}

// 11. Talbot against Gaver-Stehfest on every inverted transform.
void inversion_agreement(Context& ctx, CriterionResult& out) {
  if (!ctx.gaps_done[6]) open_pipeline_gaps(ctx);
  if (!ctx.gaps_done[7]) single_particle_gaps(ctx);
  if (!ctx.gaps_done[8]) stationarity_gaps(ctx);
  if (!ctx.gaps_done[9]) deltaN_gaps(ctx);
  for (const auto& [name, gap] : ctx.inversion_gaps) out.checks.push_back(upper(name, gap, 1e-6));
}

// 12. Chi-squared test of simulated configurations.
void statistical_exactness(Context&, CriterionResult& out) {
  const int L = 8;
  const Rates r = Rates::ssep(0.4, 0.3);
  const Configuration y{0, 3};
  auto spec = sim(r, L, mc::InitialCondition::fixed(y), 1.0);
  spec.policy = mc::BoundaryPolicy::reflect;
  const std::uint64_t runs = 1000000;
  const auto counts = mc::configuration_counts(spec, runs, mc::SeedSpec{12001});
  auto gen = oracle::build_generator(r, LatticeTruncation(L));
  const auto pi = oracle::evolve(gen, oracle::point_mass(gen.space(), y), 1.0);
  std::vector<double> prob(counts.size());
  double worst = 0.0;
  for (std::size_t m = 0; m < prob.size(); ++m) {
    prob[m] = pi[*gen.space().index(m)];
    const double se = std::sqrt(prob[m] * (1.0 - prob[m]) / static_cast<double>(runs));
    if (se > 0.0) worst = std::max(worst, std::abs(static_cast<double>(counts[m]) / runs - prob[m]) / se);
  }
  const auto chi = mc::chi_squared_test(counts, prob);
  std::ostringstream os;
  os << "chi2 " << fmt(chi.statistic) << " on " << chi.dof << " dof, " << chi.pooled_bins << " pooled bins";
  out.checks.push_back(lower("chi-squared p-value", chi.p_value, 1e-3, os.str()));
  out.checks.push_back(upper("largest configuration deviation (sigmas)", worst, 4.0, "256 configurations, 1e6 runs"));
}

using Runner = void (*)(Context&, CriterionResult&);
struct Entry {
  const char* name;
  Runner run;
};
const Entry kEntries[kCriteria] = {
    {"Bethe transition probabilities vs oracle", bethe_vs_oracle},
    {"single-particle closed forms", single_particle_forms},
    {"conservation of probability", conservation},
    {"TASEP injection closed forms", tasep_closed_forms},
    {"resolvent and reduced-operator identities", resolvent_identities},
    {"open-boundary pipeline vs oracle", open_pipeline},
    {"single-particle laws", single_particle_laws},
    {"SSEP stationarity", stationarity},
    {"mean net exchange", deltaN_mean},
    {"kernel identities", kernel_identities},
    {"Laplace inversion agreement", inversion_agreement},
    {"statistical exactness of simulation", statistical_exactness},
};

double badness(const Check& c) {
  if (!std::isfinite(c.observed)) return std::numeric_limits<double>::infinity();
  if (c.upper) return c.bound > 0.0 ? c.observed / c.bound : (c.observed > 0.0 ? 1e300 : 0.0);
  return c.observed > 0.0 ? c.bound / c.observed : std::numeric_limits<double>::infinity();
}

void summarize(CriterionResult& r) {
  r.passed = true;
  const Check* worst = nullptr;
  for (const auto& c : r.checks) {
    if (!c.gating) continue;
    r.passed = r.passed && c.passed;
    if (!worst || badness(c) > badness(*worst)) worst = &c;
  }
  if (!worst) {
    r.passed = false;
    r.detail = "no gating checks ran";
    return;
  }
  r.observed = worst->observed;
  r.tolerance = worst->bound;
  r.detail = worst->name + (worst->detail.empty() ? "" : ": " + worst->detail);
}

}  // namespace

Suite parse_suite(const std::string& name) {
  if (name == "fast") return Suite::fast;
  if (name == "full") return Suite::full;
  throw DomainError("unknown suite '" + name + "' (expected fast or full)");
}

const char* to_string(Suite suite) { return suite == Suite::fast ? "fast" : "full"; }

const char* criterion_name(int id) {
  if (id < 1 || id > kCriteria) throw DomainError("criterion id must be in 1.." + std::to_string(kCriteria));
  return kEntries[id - 1].name;
}

nlohmann::json Check::to_json() const {
  nlohmann::json j{{"name", name}, {"bound", bound}, {"comparison", upper ? "<=" : ">="},
                   {"passed", passed}, {"gating", gating}, {"detail", detail}};
  j["observed"] = std::isfinite(observed) ? nlohmann::json(observed) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json CriterionResult::to_json() const {
  nlohmann::json checks_json = nlohmann::json::array();
  for (const auto& c : checks) checks_json.push_back(c.to_json());
  nlohmann::json j{{"id", id}, {"name", name}, {"passed", passed}, {"tolerance", tolerance},
                   {"detail", detail}, {"seconds", seconds}, {"checks", checks_json}};
  j["observed"] = std::isfinite(observed) ? nlohmann::json(observed) : nlohmann::json(nullptr);
  return j;
}

std::string CriterionResult::summary_line() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << " [" << (id < 10 ? " " : "") << id << "] " << name << ": observed "
     << fmt(observed) << " vs " << fmt(tolerance) << " (" << detail << ") " << fmt(seconds) << " s";
  return os.str();
}

bool Report::all_passed() const {
  return !criteria.empty() && std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed; });
}

nlohmann::json Report::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : criteria) list.push_back(c.to_json());
  return {{"suite", to_string(suite)}, {"all_passed", all_passed()}, {"seconds", seconds}, {"criteria", list}};
}

Report run(Suite suite, const std::vector<int>& only, std::ostream* progress) {
  for (int id : only) (void)criterion_name(id);
  Context ctx{suite, {}, {}};
  Report report;
  report.suite = suite;
  const auto start = Clock::now();
  for (int id = 1; id <= kCriteria; ++id) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    CriterionResult r;
    r.id = id;
    r.name = kEntries[id - 1].name;
    const auto t0 = Clock::now();
    try {
      kEntries[id - 1].run(ctx, r);
    } catch (const std::exception& e) {
      r.checks.push_back(failed("criterion aborted", 0.0, e));
    }
    if (id == kCriteria) {
      Check c = upper("suite wall time [s]", seconds_since(start), 300.0);
      c.gating = only.empty() && suite == Suite::fast;
      if (!c.gating) c.detail = "reported only: the whole fast suite was not run";
      r.checks.push_back(c);
    }
    r.seconds = seconds_since(t0);
    summarize(r);
    if (progress) *progress << r.summary_line() << std::endl;
    report.criteria.push_back(std::move(r));
  }
  report.seconds = seconds_since(start);
  return report;
}

}  // namespace asep::acceptance
