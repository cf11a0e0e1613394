#include <doctest.h>

#include <cmath>

#include "asep/errors.hpp"
#include "asep/open_solver.hpp"
#include "asep/oracle.hpp"
#include "asep/single_particle.hpp"
#include "asep/tasep.hpp"

using namespace asep;
using namespace asep::open;

namespace {

SolverOptions half_line() {
  SolverOptions o;
  o.geometry = Geometry::half_line;
  return o;
}

double max_abs(const Eigen::MatrixXcd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

double block_diff(const OpenBoundaryState& a, const OpenBoundaryState& b) {
  double d = 0.0;
  for (std::size_t n = 0; n < a.phat.size(); ++n) d = std::max(d, max_abs(a.phat[n] - b.phat[n]));
  return d;
}

// Resolvent of the full open generator: transform of P(t) at sigma, split by count.
std::vector<Eigen::VectorXcd> oracle_transform(const Rates& r, int L, const Configuration& y, cplx sigma) {
  auto gen = oracle::build_generator(r, LatticeTruncation(L));
  const auto col = *gen.space().index(y.mask());
  Eigen::MatrixXcd K = oracle::laplace_kernel(gen, sigma, {col});
  std::vector<Eigen::VectorXcd> out;
  for (int n = 0; n <= L; ++n) {
    ConfigurationSet X(n, L);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(X.size()));
    for (std::size_t i = 0; i < X.size(); ++i) v[static_cast<Eigen::Index>(i)] = K(*gen.space().index(X[i].mask()), 0);
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("kernel operators") {
  const auto L0 = build_Ln(0, 2.0, Rates::ssep(), LatticeTruncation(5));
  REQUIRE(L0.matrix.rows() == 1);
  CHECK(std::abs(L0.matrix(0, 0) - 0.5) <= 1e-15);

  const auto L1 = build_Ln(1, 2.0, Rates::ssep(), LatticeTruncation(40));
  for (Eigen::Index j = 0; j < L1.matrix.cols(); ++j) CHECK(std::abs(L1.matrix.col(j).sum() - 0.5) <= 1e-8);
  const auto H1 = build_Ln(1, 2.0, Rates::ssep(), LatticeTruncation(40), half_line());
  for (Eigen::Index j = 0; j < 20; ++j) CHECK(std::abs(H1.matrix.col(j).sum() - 0.5) <= 1e-8);
  for (int y = 0; y <= 10; ++y) CHECK(std::abs(H1.matrix(0, y) - single::phi_0y(y, 2.0, Rates::ssep())) <= 1e-8);

  // Bethe kernels agree with padded oracle kernels on the half-line.
  SolverOptions bethe_opts = half_line();
  bethe_opts.source = KernelSource::bethe;
  bethe_opts.tail_tolerance = 1.0;
  const Rates r(0.7, 0.3);
  const auto Lb = build_Ln(2, cplx(4.0, 1.0), r, LatticeTruncation(5), bethe_opts);
  SolverOptions loose = half_line();
  loose.tail_tolerance = 1.0;
  const auto Lo = build_Ln(2, cplx(4.0, 1.0), r, LatticeTruncation(5), loose);
  CHECK(max_abs(Lb.matrix - Lo.matrix) <= 1e-9);

  SolverOptions box_bethe;
  box_bethe.source = KernelSource::bethe;
  CHECK_THROWS_AS(build_Ln(1, 2.0, r, LatticeTruncation(5), box_bethe), UnsupportedError);
  CHECK_THROWS_AS(build_Ln(1, 0.5, Rates::ssep(), LatticeTruncation(4), half_line()), TruncationError);
}

TEST_CASE("structural operators") {
  const LatticeTruncation tr(6);
  for (int n = 0; n < 6; ++n) {
    const Eigen::MatrixXd D = delta_matrix(n, tr);
    CHECK((D * D - D).cwiseAbs().maxCoeff() == 0.0);
    // B_n A_{n+1} removes exactly the configurations with x_1 = 0.
    const Eigen::MatrixXd BA = B_matrix(n, tr) * A_matrix(n + 1, tr);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(D.rows(), D.cols());
    CHECK((BA - (I - D)).cwiseAbs().maxCoeff() == 0.0);
  }
  const Eigen::MatrixXd B0 = B_matrix(0, tr);
  CHECK(B0.rows() == 1);
  CHECK(B0(0, 0) == 1.0);
  CHECK(B0.sum() == 1.0);
  CHECK(delta_matrix(0, tr)(0, 0) == 0.0);
  CHECK_THROWS_AS(A_matrix(0, tr), DomainError);
}

TEST_CASE("reduced forms of M_n L_n and M_n L_n A_n") {
  const LatticeTruncation tr(8);
  for (const Rates& r : {Rates::ssep(), Rates(0.7, 0.3)})
    for (double c : {-0.7, 0.4})
      for (double s : {2.0, 4.0})
        for (int n = 1; n <= 3; ++n) {
          const auto L = build_Ln(n, s, r, tr).matrix;
          CHECK(max_abs(ML_direct(L, n, tr, c) - ML_reduced(L, n, tr, c)) <= 1e-8);
          CHECK(max_abs(MLA_direct(L, n, tr, c) - MLA_reduced(L, n, tr, c)) <= 1e-8);
        }
  const Eigen::MatrixXcd L = Eigen::MatrixXcd::Constant(1, 1, 0.5);
  CHECK_THROWS_AS(ML_direct(L, 1, LatticeTruncation(1), 2.0), ConditioningError);
}

TEST_CASE("closed system and empty start") {
  const LatticeTruncation tr(6);
  const Configuration y{1, 4};
  const auto st = solve_theorem1(InitialDistribution::point_mass(y, tr), 2.0, Rates(0.6, 0.4), tr, 6);
  const auto L2 = build_Ln(2, 2.0, Rates(0.6, 0.4), tr).matrix;
  const auto col = *ConfigurationSet(2, 6).index(y);
  CHECK(max_abs(st.phat[2] - L2.col(static_cast<Eigen::Index>(col))) <= 1e-14);
  for (int n : {0, 1, 3, 4}) CHECK(max_abs(st.phat[n]) == 0.0);

  const auto e = recursion_beta0(Configuration{}, cplx(3.0, 1.0), Rates::ssep(0.7), tr, 6);
  CHECK(std::abs(e.phat[0][0] - 1.0 / cplx(3.0, 1.0)) <= 1e-14);
}

TEST_CASE("block solve equals the open-generator transform") {
  const int L = 6;
  const LatticeTruncation tr(L);
  for (const Rates& r : {Rates::ssep(0.4, 0.3), Rates(0.7, 0.3, 1.0, 0.5), Rates(0.3, 0.7, 0.0, 0.6)})
    for (cplx s : {cplx(2.0, 0.0), cplx(1.5, 2.0)}) {
      const Configuration y{0, 2};
      const auto st = solve_theorem1(InitialDistribution::point_mass(y, tr), s, r, tr, L);
      const auto want = oracle_transform(r, L, y, s - r.alpha());
      for (int n = 0; n <= L; ++n) CHECK(max_abs(st.phat[n] - want[n]) <= 1e-10);
      // (s - alpha) times the total transform is one.
      cplx total = 0.0;
      for (const auto& b : st.phat) total += b.sum();
      CHECK(std::abs((s - r.alpha()) * total - 1.0) <= 1e-10);
      CHECK(st.rcond > 0.0);
    }
}

TEST_CASE("recursions agree with the block system") {
  const int L = 6;
  const LatticeTruncation tr(L);
  const Configuration y{1, 3};
  for (cplx s : {cplx(2.0, 1.0), cplx(4.0, 0.0)}) {
    const Rates up(0.7, 0.3, 0.6, 0.0);
    const auto a = recursion_beta0(y, s, up, tr, L);
    const auto b = solve_theorem1(InitialDistribution::point_mass(y, tr), s, up, tr, L);
    CHECK(block_diff(a, b) <= 1e-9);

    const Rates down(0.4, 0.6, 0.0, 0.8);
    const auto c = recursion_alpha0(y, s, down, tr);
    const auto d = solve_theorem1(InitialDistribution::point_mass(y, tr), s, down, tr, 2);
    CHECK(block_diff(c, d) <= 1e-9);
    cplx total = 0.0;
    for (const auto& blk : c.phat) total += blk.sum();
    CHECK(std::abs(s * total - 1.0) <= 1e-8);
  }
}

TEST_CASE("single particle ejection transform on the half-line") {
  const Rates r = Rates::ssep(0.0, 0.5);
  const LatticeTruncation tr(40);
  for (cplx s : {cplx(2.0, 0.0), cplx(3.0, 1.0)}) {
    const auto a = recursion_alpha0(Configuration{2}, s, r, tr, half_line());
    CHECK(std::abs(a.phat[1].sum() - single::survival_laplace(2, s, r)) <= 1e-8);
    const auto b = solve_theorem1(InitialDistribution::point_mass(Configuration{2}, tr), s, r, tr, 1, half_line());
    CHECK(std::abs(b.phat[1].sum() - single::survival_laplace(2, s, r)) <= 1e-8);
    CHECK(std::abs(s * (a.phat[0][0] + a.phat[1].sum()) - 1.0) <= 1e-8);
  }
}

TEST_CASE("guards") {
  const LatticeTruncation tr(6);
  // Injection flux out of a truncated ladder.
  CHECK_THROWS_AS(solve_theorem1(InitialDistribution::point_mass(Configuration{}, tr), 2.0, Rates::ssep(1.0, 0.0), tr, 2),
                  TruncationError);
  OpenBoundaryProblem p(Rates::ssep(0.5, 0.5), LatticeTruncation(12), InitialDistribution::point_mass({}, LatticeTruncation(12)),
                        12, half_line());
  CHECK_THROWS_AS(p.solve(1.5), DomainError);
  CHECK_THROWS_AS(OpenBoundaryProblem(Rates::ssep(0.5, 0.5), tr, InitialDistribution::point_mass({1}, tr), 6, {},
                                      Method::recursion),
                  DomainError);
}

TEST_CASE("time domain: empty start under pure injection") {
  const LatticeTruncation tr(10);
  OpenBoundaryProblem p(Rates::tasep(1.0), tr, InitialDistribution::point_mass({}, tr), 10);
  for (double t : {0.5, 1.0, 2.0}) {
    const auto r = time_domain(p, t);
    CHECK(std::abs(r.P[0][0] - std::exp(-t)) <= 1e-6);
    CHECK(std::abs(r.mass - 1.0) <= 1e-5);
    CHECK(r.min_value >= -1e-6);
  }
  OpenBoundaryProblem half(Rates::tasep(0.5), tr, InitialDistribution::point_mass({}, tr), 10);
  const auto r = time_domain(half, 1.0);
  CHECK(std::abs(r.P[1].sum() - tasep::tasep_pn_closed(1, 0.5, 1.0)) <= 1e-4);
  CHECK(std::abs(r.P[2].sum() - tasep::tasep_pn_closed(2, 0.5, 1.0)) <= 1e-4);
}

TEST_CASE("time domain: mean ejection time from the inverted survival") {
  const Rates r(0.3, 0.7, 0.0, 0.5);
  const LatticeTruncation tr(40);
  // Long times bring the slow leak of sources near L/2 into view; the start at 2 is unaffected.
  SolverOptions opts = half_line();
  opts.tail_tolerance = 1e-8;
  OpenBoundaryProblem p(r, tr, InitialDistribution::point_mass({2}, tr), 1, opts);
  const double h = 0.25, T = 300.0;
  double integral = 0.0;
  for (int k = 0; k <= static_cast<int>(T / h); ++k) {
    const double t = k * h;
    const double v = k == 0 ? 1.0 : time_domain(p, t).P[1].sum();
    integral += (k == 0 || k == static_cast<int>(T / h) ? 1.0 : (k % 2 ? 4.0 : 2.0)) * v;
  }
  integral *= h / 3.0;
  CHECK(std::abs(integral - 8.5) <= 1e-3);
}

TEST_CASE("time domain matches the generator exponential") {
  const int L = 8;
  const LatticeTruncation tr(L);
  const Rates r = Rates::ssep(0.4, 0.3);
  const Configuration y{1, 2, 6};
  OpenBoundaryProblem p(r, tr, InitialDistribution::point_mass(y, tr), L);
  auto gen = oracle::build_generator(r, tr);
  const auto d = oracle::evolve(gen, oracle::point_mass(gen.space(), y), 1.0);
  const auto obs = oracle::observables(gen.space(), d);
  const auto res = time_domain_checked(p, 1.0);
  double err = 0.0;
  for (int n = 0; n <= L; ++n)
    for (Eigen::Index i = 0; i < res.primary.P[n].size(); ++i)
      err = std::max(err, std::abs(res.primary.P[n][i] - obs.P[n][static_cast<std::size_t>(i)]));
  CHECK(err <= 2e-4);
  CHECK(err <= 1e-8);
  CHECK(std::abs(res.primary.mass - 1.0) <= 1e-5);
  CHECK(res.discrepancy <= 1e-4);
}
