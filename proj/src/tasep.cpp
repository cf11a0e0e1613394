#include "asep/tasep.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "asep/errors.hpp"
#include "asep/oracle.hpp"

namespace asep::tasep {

QuadratureSpec determinant_quadrature() {
  QuadratureSpec q;
  q.base_radius = 0.5;
  q.nodes_per_contour = 256;
  q.tolerance = 1e-12;
  return q;
}

namespace {

Eigen::MatrixXd determinant_matrix(const Configuration& x, const Configuration& y, double t, double r, int N) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k < N; ++k) {
    const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * k / N);
    const cplx z = r * e;
    const cplx w = std::exp(t * (1.0 / z - 1.0)) * z / static_cast<double>(N);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        F(i, j) += w * std::pow(1.0 - z, static_cast<int>(j - i)) * std::pow(z, x[i] - y[j] - 1);
  }
  if (F.imag().cwiseAbs().maxCoeff() > 1e-8) throw AccuracyError("determinant entries have imaginary residue", F.imag().cwiseAbs().maxCoeff());
  return F.real();
}

double det(const Eigen::MatrixXd& M) { return M.rows() == 0 ? 1.0 : M.partialPivLu().determinant(); }

// Closed forms evaluated at a complex rate; singular only at alpha = 1.
template <class T>
T closed_value(int n, T a, double t) {
  using std::exp;
  const T one(1.0);
  const T u = a / (one - a);
  switch (n) {
    case 0: return exp(-a * t);
    case 1: return u * (t - u) * exp(-a * t) + u * u * std::exp(-t);
    case 2: {
      const T b = one - a;
      const T ea = exp(-a * t);
      const T e1(std::exp(-t));
      return (u * u * (0.5 * t * t) - u * u / b * t + u * u) * ea +
             (u * u * (0.5 * t * t) - a * (one - 3.0 * a + a * a) / (b * b * b) * t + (one - 2.0 * a) / (b * b)) * e1 -
             exp(-(one + a) * t);
    }
    default: throw UnsupportedError("closed forms exist only for n <= 2");
  }
}

double evaluate(const std::vector<Term>& terms, double t) {
  double total = 0.0;
  for (const auto& term : terms) {
    double poly = 0.0;
    for (std::size_t k = term.poly.size(); k-- > 0;) poly = poly * t + term.poly[k];
    total += poly * std::exp(-term.rate * t);
  }
  return total;
}

}  // namespace

double tasep_determinant(const Configuration& x, const Configuration& y, double t, const QuadratureSpec& quad) {
  if (x.size() != y.size() || x.empty()) throw DomainError("determinant needs two configurations of equal size n >= 1");
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  const double r = quad.base_radius.value_or(0.5);
  if (!(r > 0.0 && r < 1.0)) throw DomainError("determinant contour radius must lie in (0, 1)");
  int N = quad.nodes_per_contour;
  double prev = det(determinant_matrix(x, y, t, r, N));
  double diff = 0.0;
  for (int d = 0; d <= quad.max_doublings; ++d) {
    N *= 2;
    const double cur = det(determinant_matrix(x, y, t, r, N));
    diff = std::abs(cur - prev);
    prev = cur;
    if (diff < quad.tolerance) return cur;
  }
  throw AccuracyError("determinant integrals did not converge", diff);
}

double resolvent_identity_check(int n, cplx s, double alpha, LatticeTruncation window) {
  if (n < 1 || n > 2) throw DomainError("resolvent identity is checked for n = 1, 2");
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  if (!((s - alpha).real() > 0.0)) throw DomainError("need Re s > alpha");
  const int L = window.L;
  oracle::GeneratorMatrix gen(Rates::tasep(), oracle::StateSpace::fixed_count(window, n + 1));
  const auto& space = gen.space();
  std::vector<std::size_t> idx;
  std::vector<Configuration> inner;
  for (const auto& c : enumerate_configurations(n, L)) {
    if (c.front() == 0) continue;
    inner.push_back(c);
    idx.push_back(*space.index(c.with_origin().mask()));
  }
  auto restricted = [&](cplx z) {
    Eigen::MatrixXcd K = oracle::laplace_kernel(gen, z, idx);
    // Tail: mass that reaches the closed edge from sources in the first quarter.
    double tail = 0.0;
    for (std::size_t j = 0; j < inner.size(); ++j) {
      if (inner[j].back() >= std::max(2, L / 4)) continue;
      double edge = 0.0;
      for (std::size_t i = 0; i < space.size(); ++i)
        if ((space.mask(i) >> (L - 1)) & 1u) edge += std::abs(K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      tail = std::max(tail, std::abs(z) * edge);
    }
    if (tail > 1e-12) throw TruncationError("kernel mass reaches the window edge", tail);
    Eigen::MatrixXcd L0(idx.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) L0.row(static_cast<Eigen::Index>(i)) = K.row(static_cast<Eigen::Index>(idx[i]));
    return L0;
  };
  const Eigen::MatrixXcd A = restricted(s);
  const Eigen::MatrixXcd B = restricted(s - alpha);
  const auto m = static_cast<Eigen::Index>(idx.size());
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(m, m);
  return ((I - alpha * A) * (I + alpha * B) - I).cwiseAbs().maxCoeff();
}

std::vector<Term> closed_form_terms(int n, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("injection rate must be positive");
  if (n < 0) throw DomainError("negative particle count");
  if (n > 2) throw UnsupportedError("closed forms exist only for n <= 2; use the open-boundary pipeline");
  const double a = alpha;
  if (a == 1.0) {
    switch (n) {
      case 0: return {{{1.0}, 1.0}};
      case 1: return {{{0.0, 1.0, 0.5}, 1.0}};
      default: return {{{1.0, -1.0, 0.5, 0.0, 1.0 / 12.0}, 1.0}, {{-1.0}, 2.0}};
    }
  }
  const double b = 1.0 - a;
  const double u = a / b;
  switch (n) {
    case 0: return {{{1.0}, a}};
    case 1: return {{{-u * u, u}, a}, {{u * u}, 1.0}};
    default:
      return {{{u * u, -u * u / b, 0.5 * u * u}, a},
              {{(1.0 - 2.0 * a) / (b * b), -a * (1.0 - 3.0 * a + a * a) / (b * b * b), 0.5 * u * u}, 1.0},
              {{-1.0}, 1.0 + a}};
  }
}

double tasep_pn_closed(int n, double alpha, double t) {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  if (!(alpha > 0.0)) throw DomainError("injection rate must be positive");
  if (n > 2) throw UnsupportedError("closed forms exist only for n <= 2; use the open-boundary pipeline");
  if (n < 0) throw DomainError("negative particle count");
  const double gap = std::abs(alpha - 1.0);
  if (gap < 1e-6) return evaluate(closed_form_terms(n, 1.0), t);
  if (gap < 0.05) {
    // The singularity at alpha = 1 is removable: take the mean over a circle in
    // the complex alpha plane, which keeps every evaluation point away from 1.
    const int M = 32;
    const double rho = 0.1;
    double total = 0.0;
    for (int k = 0; k < M; ++k) {
      const cplx a = alpha + std::polar(rho, 2.0 * std::numbers::pi * (k + 0.5) / M);
      total += closed_value<cplx>(n, a, t).real();
    }
    return total / M;
  }
  return evaluate(closed_form_terms(n, alpha), t);
}

Figure1Data figure1_data(double alpha, std::span<const double> t_grid, int n_max) {
  if (!(alpha > 0.0)) throw DomainError("injection rate must be positive");
  if (n_max < 0 || n_max > 3) throw DomainError("figure data covers n = 0..3");
  if (t_grid.size() < 3) throw DomainError("time grid needs at least three points");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw DomainError("time grid must be increasing");
  if (t_grid.front() < 0.0) throw DomainError("times must be nonnegative");

  Figure1Data out;
  out.alpha = alpha;
  out.times.assign(t_grid.begin(), t_grid.end());
  out.P.assign(n_max + 1, std::vector<double>(t_grid.size()));
  for (int n = 0; n <= std::min(n_max, 2); ++n)
    for (std::size_t k = 0; k < t_grid.size(); ++k) out.P[n][k] = tasep_pn_closed(n, alpha, t_grid[k]);

  out.lattice = 0;
  out.window_sensitivity = 0.0;
  if (n_max == 3) {
    // Fastest particle moves at unit speed; leave room for Poisson fluctuations.
    const double tmax = t_grid.back();
    const int L = std::max(12, static_cast<int>(std::ceil(tmax + 8.0 * std::sqrt(tmax + 1.0) + 8.0)));
    auto p3 = [&](int sites) {
      oracle::GeneratorMatrix gen(Rates::tasep(alpha), oracle::StateSpace::capped(LatticeTruncation(sites), 3));
      auto dists = oracle::evolve_many(gen, oracle::point_mass(gen.space(), Configuration{}), t_grid);
      std::vector<double> v;
      for (const auto& d : dists) v.push_back(oracle::observables(gen.space(), d).count_probability[3]);
      return v;
    };
    out.P[3] = p3(L);
    const auto wider = p3(L + 4);
    for (std::size_t k = 0; k < wider.size(); ++k)
      out.window_sensitivity = std::max(out.window_sensitivity, std::abs(wider[k] - out.P[3][k]));
    out.lattice = L;
  }

  out.ordering_holds = true;
  for (int n = 0; n <= n_max; ++n) {
    const auto& v = out.P[n];
    const auto k = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    if (n >= 1 && (k == 0 || k + 1 == v.size()))
      throw AccuracyError("maximum of P_" + std::to_string(n) + " falls on the grid boundary", out.times[k]);
    out.argmax.push_back(out.times[k]);
    if (n >= 1 && !(out.argmax[n] > out.argmax[n - 1])) out.ordering_holds = false;
  }
  return out;
}

}  // namespace asep::tasep
