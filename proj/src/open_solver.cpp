#include "asep/open_solver.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "asep/bethe.hpp"
#include "asep/errors.hpp"
#include "asep/oracle.hpp"

namespace asep::open {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void check_count(int n, LatticeTruncation trunc) {
  if (n < 0 || n > trunc.L) throw DomainError("particle count outside [0, L]");
}

// Indices of configurations with x_1 = 0 and, for each, the index of its tail in X_{n-1}.
struct OriginMap {
  std::vector<std::size_t> at_origin;
  std::vector<std::size_t> tail;
};

OriginMap origin_map(int n, LatticeTruncation trunc) {
  OriginMap m;
  if (n == 0) return m;
  ConfigurationSet X(n, trunc.L), Xm(n - 1, trunc.L);
  for (std::size_t i = 0; i < X.size(); ++i)
    if (X[i].front() == 0) {
      m.at_origin.push_back(i);
      m.tail.push_back(*Xm.index(X[i].tail()));
    }
  return m;
}

double smallest_singular_value(const MatrixXcd& M) {
  Eigen::JacobiSVD<MatrixXcd> svd(M);
  return svd.singularValues().size() ? svd.singularValues().minCoeff() : 0.0;
}

Eigen::PartialPivLU<MatrixXcd> factor(const MatrixXcd& M, double& rcond) {
  Eigen::PartialPivLU<MatrixXcd> lu(M);
  const double rc = M.size() ? lu.rcond() : 1.0;
  if (!(rc > 1e-14)) throw ConditioningError("singular block in the Laplace-domain system", smallest_singular_value(M));
  rcond = std::min(rcond, rc);
  return lu;
}

void check_half_line_abscissa(cplx s, const Rates& r, const SolverOptions& opts) {
  if (opts.geometry == Geometry::half_line && s.real() < r.alpha() + r.beta() + 1.0)
    throw DomainError("half-line solves need Re s >= alpha + beta + 1");
}

std::vector<MatrixXcd> kernels(cplx s, const Rates& rates, LatticeTruncation trunc, int n_lo, int n_hi,
                               const SolverOptions& opts) {
  std::vector<MatrixXcd> Ls(static_cast<std::size_t>(n_hi + 1));
  for (int n = n_lo; n <= n_hi; ++n) Ls[n] = build_Ln(n, s, rates, trunc, opts).matrix;
  return Ls;
}

// alpha times the injection flux out of the top block, in units of the transform scale.
void check_top_block(const VectorXcd& top, int n, cplx s, const Rates& rates, LatticeTruncation trunc,
                     const SolverOptions& opts) {
  if (n >= trunc.L || rates.alpha() == 0.0) return;
  ConfigurationSet X(n, trunc.L);
  double flux = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i)
    if (n == 0 || X[i].front() > 0) flux += std::abs(top[idx(i)]);
  flux *= rates.alpha() * std::abs(s);
  if (flux > opts.top_block_tolerance)
    throw TruncationError("particle-count ladder truncated with non-negligible injection flux", flux);
}

}  // namespace

LaplaceOperator build_Ln(int n, cplx s, const Rates& rates, LatticeTruncation trunc, const SolverOptions& opts) {
  check_count(n, trunc);
  ConfigurationSet window(n, trunc.L);
  LaplaceOperator op{n, n, window.configurations(), window.configurations(), MatrixXcd(), s};
  if (n == 0) {
    op.matrix = MatrixXcd::Constant(1, 1, 1.0 / s);
    return op;
  }
  const Rates closed = rates.closed();
  if (opts.source == KernelSource::bethe) {
    if (opts.geometry == Geometry::box)
      throw UnsupportedError("Bethe kernels describe the half-line; use the half_line geometry");
    op.matrix = bethe::laplace_table(n, trunc, s, closed, opts.quadrature).values;
  } else {
    const int lattice = opts.geometry == Geometry::box ? trunc.L : trunc.L + opts.padding;
    oracle::GeneratorMatrix gen(closed, oracle::StateSpace::fixed_count(LatticeTruncation(lattice), n));
    std::vector<std::size_t> where(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) where[i] = *gen.space().index(window[i].mask());
    const MatrixXcd K = oracle::laplace_kernel(gen, s, where);
    op.matrix.resize(idx(window.size()), idx(window.size()));
    for (std::size_t i = 0; i < window.size(); ++i) op.matrix.row(idx(i)) = K.row(idx(where[i]));
  }
  if (!op.matrix.allFinite()) throw ConditioningError("non-finite kernel entries", 0.0);
  if (opts.geometry == Geometry::half_line && s.real() > 0.0) {
    // Sources near the window edge leak by construction; the test covers sources in [0, L/2).
    // Re s |1/s - column sum| is a lower bound on the largest mass outside the window;
    // for Re s <= 0 the kernel is a continuation and no such bound exists.
    double tail = 0.0;
    for (Index j = 0; j < op.matrix.cols(); ++j)
      if (2 * window[static_cast<std::size_t>(j)].back() < trunc.L)
        tail = std::max(tail, s.real() * std::abs(1.0 / s - op.matrix.col(j).sum()));
    if (tail > opts.tail_tolerance) throw TruncationError("kernel mass outside the window", tail);
  }
  return op;
}

Eigen::MatrixXd delta_matrix(int n, LatticeTruncation trunc) {
  check_count(n, trunc);
  ConfigurationSet X(n, trunc.L);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(idx(X.size()), idx(X.size()));
  if (n == 0) return D;
  for (std::size_t i = 0; i < X.size(); ++i)
    if (X[i].front() == 0) D(idx(i), idx(i)) = 1.0;
  return D;
}

Eigen::MatrixXd A_matrix(int n, LatticeTruncation trunc) {
  check_count(n, trunc);
  if (n == 0) throw DomainError("A_0 maps from a nonexistent block");
  ConfigurationSet X(n, trunc.L), Xm(n - 1, trunc.L);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(idx(X.size()), idx(Xm.size()));
  const auto m = origin_map(n, trunc);
  for (std::size_t k = 0; k < m.at_origin.size(); ++k) A(idx(m.at_origin[k]), idx(m.tail[k])) = 1.0;
  return A;
}

Eigen::MatrixXd B_matrix(int n, LatticeTruncation trunc) {
  check_count(n, trunc);
  if (n + 1 > trunc.L) throw DomainError("B_n needs n + 1 <= L");
  ConfigurationSet X(n, trunc.L), Xp(n + 1, trunc.L);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(idx(X.size()), idx(Xp.size()));
  for (std::size_t i = 0; i < X.size(); ++i)
    if (n == 0 || X[i].front() > 0) B(idx(i), idx(*Xp.index(X[i].with_origin()))) = 1.0;
  return B;
}

Eigen::MatrixXcd ML_direct(const MatrixXcd& Ln, int n, LatticeTruncation trunc, double c) {
  const MatrixXcd I = MatrixXcd::Identity(Ln.rows(), Ln.cols());
  double rc = 1.0;
  return factor(I - c * Ln * delta_matrix(n, trunc).cast<cplx>(), rc).solve(Ln);
}

Eigen::MatrixXcd MLA_direct(const MatrixXcd& Ln, int n, LatticeTruncation trunc, double c) {
  return ML_direct(Ln, n, trunc, c) * A_matrix(n, trunc).cast<cplx>();
}

namespace {

// Pieces of the reduced form: L^0_{n-1} (rows and columns at the origin) and
// its factorization (I - c L^0_{n-1}).
struct Reduced {
  OriginMap map;
  MatrixXcd cols;  // L^0_{n,n-1}: columns of L_n with y_1 = 0
  Eigen::PartialPivLU<MatrixXcd> lu;
};

Reduced reduce(const MatrixXcd& Ln, int n, LatticeTruncation trunc, double c, double& rcond) {
  Reduced r;
  r.map = origin_map(n, trunc);
  const auto m = idx(r.map.at_origin.size());
  r.cols.resize(Ln.rows(), m);
  MatrixXcd L0(m, m);
  for (Index j = 0; j < m; ++j) {
    r.cols.col(j) = Ln.col(idx(r.map.at_origin[j]));
    for (Index i = 0; i < m; ++i) L0(i, j) = Ln(idx(r.map.at_origin[i]), idx(r.map.at_origin[j]));
  }
  r.lu = factor(MatrixXcd::Identity(m, m) - c * L0, rcond);
  return r;
}

}  // namespace

Eigen::MatrixXcd ML_reduced(const MatrixXcd& Ln, int n, LatticeTruncation trunc, double c) {
  if (n == 0) return Ln;
  double rc = 1.0;
  const Reduced r = reduce(Ln, n, trunc, c, rc);
  MatrixXcd rows(idx(r.map.at_origin.size()), Ln.cols());  // L^0_{n-1,n}
  for (std::size_t i = 0; i < r.map.at_origin.size(); ++i) rows.row(idx(i)) = Ln.row(idx(r.map.at_origin[i]));
  return Ln + c * r.cols * r.lu.solve(rows);
}

Eigen::MatrixXcd MLA_reduced(const MatrixXcd& Ln, int n, LatticeTruncation trunc, double c) {
  if (n == 0) throw DomainError("A_0 maps from a nonexistent block");
  double rc = 1.0;
  const Reduced r = reduce(Ln, n, trunc, c, rc);
  const auto prev = idx(binomial(trunc.L, n - 1));
  MatrixXcd R = MatrixXcd::Zero(idx(r.map.at_origin.size()), prev);
  for (std::size_t k = 0; k < r.map.tail.size(); ++k) R(idx(k), idx(r.map.tail[k])) = 1.0;
  return r.cols * r.lu.solve(R);
}

InitialDistribution InitialDistribution::point_mass(const Configuration& y, LatticeTruncation trunc) {
  if (!y.empty() && y.back() >= trunc.L) throw DomainError("initial configuration outside the window");
  InitialDistribution d;
  d.L = trunc.L;
  const int k = static_cast<int>(y.size());
  for (int n = 0; n <= k; ++n) d.blocks.push_back(Eigen::VectorXd::Zero(idx(binomial(trunc.L, n))));
  d.blocks[k][idx(*ConfigurationSet(k, trunc.L).index(y))] = 1.0;
  d.point = y;
  return d;
}

InitialDistribution InitialDistribution::bernoulli(double rho, LatticeTruncation trunc) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("density must lie in [0, 1]");
  InitialDistribution d;
  d.L = trunc.L;
  for (int n = 0; n <= trunc.L; ++n) {
    const double w = std::pow(rho, n) * std::pow(1.0 - rho, trunc.L - n);
    d.blocks.push_back(Eigen::VectorXd::Constant(idx(binomial(trunc.L, n)), w));
  }
  return d;
}

int InitialDistribution::max_count() const {
  int top = 0;
  for (std::size_t n = 0; n < blocks.size(); ++n)
    if (blocks[n].size() && blocks[n].cwiseAbs().maxCoeff() > 0.0) top = static_cast<int>(n);
  return top;
}

OpenBoundaryState solve_theorem1(const InitialDistribution& P0, cplx s, const Rates& rates, LatticeTruncation trunc,
                                 int n_max, const SolverOptions& opts) {
  if (P0.L != trunc.L) throw DomainError("initial law and truncation disagree on L");
  if (n_max < P0.max_count() || n_max > trunc.L) throw DomainError("n_max must cover the initial law and be <= L");
  std::size_t rows = 0;
  for (int n = 0; n <= n_max; ++n) rows += binomial(trunc.L, n);
  if (rows > 10000) throw CapacityError("block system exceeds 10^4 rows");

  const double a = rates.alpha(), b = rates.beta(), c = a - b;
  const auto Ls = kernels(s, rates, trunc, 0, n_max, opts);
  OpenBoundaryState st{s, a, {}, 1.0};
  const std::size_t N = static_cast<std::size_t>(n_max) + 1;

  // Block rows: T_n Phi_n + Lo_n Phi_{n-1} + Up_n Phi_{n+1} = L_n P_n(0).
  std::vector<MatrixXcd> up(N);
  std::vector<VectorXcd> g(N);
  std::vector<Eigen::PartialPivLU<MatrixXcd>> lus(N);
  for (std::size_t n = 0; n < N; ++n) {
    const int ni = static_cast<int>(n);
    const MatrixXcd& L = Ls[n];
    MatrixXcd T = MatrixXcd::Identity(L.rows(), L.cols()) - c * L * delta_matrix(ni, trunc).cast<cplx>();
    g[n] = n < P0.blocks.size() ? VectorXcd(L * P0.blocks[n].cast<cplx>()) : VectorXcd::Zero(L.rows());
    if (n + 1 < N) up[n] = -b * L * B_matrix(ni, trunc).cast<cplx>();
    if (n > 0) {
      const MatrixXcd lo = -a * L * A_matrix(ni, trunc).cast<cplx>();
      T -= lo * lus[n - 1].solve(up[n - 1]);
      g[n] -= lo * lus[n - 1].solve(g[n - 1]);
    }
    lus[n] = factor(T, st.rcond);
  }
  st.phat.resize(N);
  for (std::size_t k = N; k-- > 0;) {
    VectorXcd rhs = g[k];
    if (k + 1 < N) rhs -= up[k] * st.phat[k + 1];
    st.phat[k] = lus[k].solve(rhs);
  }
  check_top_block(st.phat.back(), n_max, s, rates, trunc, opts);
  return st;
}

OpenBoundaryState recursion_beta0(const Configuration& y, cplx s, const Rates& rates, LatticeTruncation trunc,
                                  int n_max, const SolverOptions& opts) {
  if (rates.beta() != 0.0) throw DomainError("the upward recursion needs beta = 0");
  const int k = static_cast<int>(y.size());
  if (n_max < k || n_max > trunc.L) throw DomainError("n_max must lie in [k, L]");
  const auto P0 = InitialDistribution::point_mass(y, trunc);
  const double a = rates.alpha();
  const auto Ls = kernels(s, rates, trunc, k, n_max, opts);
  OpenBoundaryState st{s, a, {}, 1.0};
  for (int n = 0; n <= n_max; ++n) st.phat.push_back(VectorXcd::Zero(idx(binomial(trunc.L, n))));
  st.phat[k] = ML_reduced(Ls[k], k, trunc, a) * P0.blocks[k].cast<cplx>();
  for (int n = k + 1; n <= n_max; ++n) st.phat[n] = a * (MLA_reduced(Ls[n], n, trunc, a) * st.phat[n - 1]);
  check_top_block(st.phat.back(), n_max, s, rates, trunc, opts);
  return st;
}

OpenBoundaryState recursion_alpha0(const Configuration& y, cplx s, const Rates& rates, LatticeTruncation trunc,
                                   const SolverOptions& opts) {
  if (rates.alpha() != 0.0) throw DomainError("the downward recursion needs alpha = 0");
  const int k = static_cast<int>(y.size());
  const auto P0 = InitialDistribution::point_mass(y, trunc);
  const double b = rates.beta();
  const auto Ls = kernels(s, rates, trunc, 0, k, opts);
  OpenBoundaryState st{s, 0.0, std::vector<VectorXcd>(static_cast<std::size_t>(k) + 1), 1.0};
  st.phat[k] = ML_reduced(Ls[k], k, trunc, -b) * P0.blocks[k].cast<cplx>();
  for (int n = k - 1; n >= 0; --n)
    st.phat[n] = b * (ML_reduced(Ls[n], n, trunc, -b) * (B_matrix(n, trunc).cast<cplx>() * st.phat[n + 1]));
  return st;
}

OpenBoundaryProblem::OpenBoundaryProblem(Rates rates, LatticeTruncation trunc, InitialDistribution initial, int n_max,
                                         SolverOptions opts, Method method)
    : rates_(rates), L_(trunc.L), initial_(std::move(initial)), n_max_(n_max), opts_(opts), method_(method) {
  if (initial_.L != L_) throw DomainError("initial law and truncation disagree on L");
  if (n_max_ < initial_.max_count() || n_max_ > L_) throw DomainError("n_max must cover the initial law and be <= L");
  if (method_ == Method::recursion) {
    if (!initial_.point) throw DomainError("the recursions need a deterministic initial configuration");
    if (rates_.alpha() != 0.0 && rates_.beta() != 0.0) throw DomainError("the recursions need alpha = 0 or beta = 0");
  }
  if (method_ == Method::automatic)
    method_ = initial_.point && (rates_.alpha() == 0.0 || rates_.beta() == 0.0) ? Method::recursion : Method::theorem1;
}

OpenBoundaryState OpenBoundaryProblem::solve(cplx s) const {
  check_half_line_abscissa(s, rates_, opts_);
  return solve_at(s);
}

OpenBoundaryState OpenBoundaryProblem::solve_at(cplx s) const {
  const LatticeTruncation trunc(L_);
  if (method_ == Method::theorem1) return solve_theorem1(initial_, s, rates_, trunc, n_max_, opts_);
  OpenBoundaryState st = rates_.beta() == 0.0 ? recursion_beta0(*initial_.point, s, rates_, trunc, n_max_, opts_)
                                              : recursion_alpha0(*initial_.point, s, rates_, trunc, opts_);
  while (static_cast<int>(st.phat.size()) <= n_max_)
    st.phat.push_back(VectorXcd::Zero(idx(binomial(L_, static_cast<int>(st.phat.size())))));
  return st;
}

TimeDomainResult time_domain(const OpenBoundaryProblem& problem, double t, const laplace::InverterSpec& spec) {
  const int L = problem.lattice_size(), n_max = problem.n_max();
  std::vector<Index> offsets{0};
  for (int n = 0; n <= n_max; ++n) offsets.push_back(offsets.back() + idx(binomial(L, n)));
  laplace::InverterSpec shifted = spec;
  shifted.shift += problem.rates().alpha();
  const Eigen::VectorXd flat = laplace::invert_vector(
      [&](cplx u) {
        const auto st = problem.solve_at(u);
        VectorXcd v(offsets.back());
        for (int n = 0; n <= n_max; ++n) v.segment(offsets[n], offsets[n + 1] - offsets[n]) = st.phat[n];
        return v;
      },
      t, shifted);
  TimeDomainResult r{t, {}, flat.sum(), flat.size() ? flat.minCoeff() : 0.0};
  for (int n = 0; n <= n_max; ++n) r.P.push_back(flat.segment(offsets[n], offsets[n + 1] - offsets[n]));
  return r;
}

CheckedTimeDomain time_domain_checked(const OpenBoundaryProblem& problem, double t, const laplace::InverterSpec& spec) {
  CheckedTimeDomain c{time_domain(problem, t, spec), time_domain(problem, t, laplace::alternate(spec)), 0.0};
  for (std::size_t n = 0; n < c.primary.P.size(); ++n)
    if (c.primary.P[n].size())
      c.discrepancy = std::max(c.discrepancy, (c.primary.P[n] - c.alternate.P[n]).cwiseAbs().maxCoeff());
  return c;
}

}  // namespace asep::open
