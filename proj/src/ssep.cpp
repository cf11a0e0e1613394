#include "asep/ssep.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "asep/errors.hpp"
#include "asep/mc.hpp"
#include "asep/parallel.hpp"

namespace asep::ssep {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
namespace bq = boost::math::quadrature;

constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void require_ssep(const Rates& r) {
  if (!(r.p() == 0.5 && r.q() == 0.5)) throw UnsupportedError("correlation equations close only for p = q = 1/2");
}

void require_density(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("density must lie in [0, 1]");
}

void require_reservoir(double alpha, double beta) {
  if (!(alpha >= 0.0 && beta >= 0.0)) throw DomainError("reservoir rates must be nonnegative");
  if (!(alpha + beta > 0.0)) throw DomainError("alpha + beta must be positive");
}

// Closed forms are continued off the cut (-inf, 0].
void require_off_cut(cplx s) {
  if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) throw DomainError("s must be finite");
  if (s.imag() == 0.0 && s.real() <= 0.0) throw DomainError("s lies on the branch cut (-inf, 0]");
}

void check_count(int n_max, LatticeTruncation trunc) {
  if (n_max < 0 || n_max > trunc.L) throw DomainError("n_max must lie in [0, L]");
}

CorrelationState recursion(double rho, cplx s, const Rates& rates, LatticeTruncation trunc, int n_max,
                           const open::SolverOptions& opts) {
  const double g = rates.gamma();
  const double a = rates.alpha();
  CorrelationState st{s, rho, g, {}};
  st.psihat.push_back(VectorXcd::Constant(1, 1.0 / s));
  for (int n = 1; n <= n_max; ++n) {
    const MatrixXcd Ln = open::build_Ln(n, s, rates, trunc, opts).matrix;
    VectorXcd next = VectorXcd::Zero(Ln.rows());
    if (a != 0.0) next += a * (open::MLA_reduced(Ln, n, trunc, -g) * st.psihat.back());
    if (rho != 0.0) {
      const VectorXcd ones = VectorXcd::Ones(Ln.cols());
      next += std::pow(rho, n) * (open::ML_reduced(Ln, n, trunc, -g) * ones);
    }
    st.psihat.push_back(std::move(next));
  }
  return st;
}

cplx xi(cplx s) { return s + 1.0 + std::sqrt(s) * std::sqrt(s + 2.0); }

}  // namespace

CorrelationState solve_theorem2(double rho, cplx s, const Rates& rates, LatticeTruncation trunc, int n_max,
                                const open::SolverOptions& opts) {
  require_ssep(rates);
  require_density(rho);
  check_count(n_max, trunc);
  if (!(s.real() > 0.0)) throw DomainError("Re s must be positive");
  return recursion(rho, s, rates, trunc, n_max, opts);
}

CorrelationState solve_theorem2_block(double rho, cplx s, const Rates& rates, LatticeTruncation trunc, int n_max,
                                      const open::SolverOptions& opts) {
  require_ssep(rates);
  require_density(rho);
  check_count(n_max, trunc);
  if (!(s.real() > 0.0)) throw DomainError("Re s must be positive");
  std::vector<Index> offset{0};
  for (int n = 0; n <= n_max; ++n) offset.push_back(offset.back() + idx(binomial(trunc.L, n)));
  const Index dim = offset.back();
  if (dim > 10000) throw CapacityError("block system too large for a dense solve");
  MatrixXcd T = MatrixXcd::Identity(dim, dim);
  VectorXcd rhs(dim);
  for (int n = 0; n <= n_max; ++n) {
    const MatrixXcd Ln = open::build_Ln(n, s, rates, trunc, opts).matrix;
    const Index o = offset[n], m = Ln.rows();
    rhs.segment(o, m) = std::pow(rho, n) * (Ln * VectorXcd::Ones(Ln.cols()));
    if (n == 0) continue;
    T.block(o, o, m, m) += rates.gamma() * (Ln * open::delta_matrix(n, trunc).cast<cplx>());
    const MatrixXcd LA = Ln * open::A_matrix(n, trunc).cast<cplx>();
    T.block(o, offset[n - 1], m, LA.cols()) -= rates.alpha() * LA;
  }
  const VectorXcd sol = T.partialPivLu().solve(rhs);
  CorrelationState st{s, rho, rates.gamma(), {}};
  for (int n = 0; n <= n_max; ++n) st.psihat.push_back(sol.segment(offset[n], offset[n + 1] - offset[n]));
  return st;
}

std::vector<VectorXd> correlations(double rho, double t, const Rates& rates, LatticeTruncation trunc, int n_max,
                                   const laplace::InverterSpec& spec, const open::SolverOptions& opts) {
  require_ssep(rates);
  require_density(rho);
  check_count(n_max, trunc);
  std::vector<Index> offset{0};
  for (int n = 0; n <= n_max; ++n) offset.push_back(offset.back() + idx(binomial(trunc.L, n)));
  const laplace::VectorTransform F = [&](cplx s) {
    const auto st = recursion(rho, s, rates, trunc, n_max, opts);
    VectorXcd v(offset.back());
    for (int n = 0; n <= n_max; ++n) v.segment(offset[n], st.psihat[n].size()) = st.psihat[n];
    return v;
  };
  const VectorXd flat = laplace::invert_vector(F, t, spec);
  std::vector<VectorXd> out;
  for (int n = 0; n <= n_max; ++n) out.push_back(flat.segment(offset[n], offset[n + 1] - offset[n]));
  return out;
}

cplx phi00(cplx s) {
  require_off_cut(s);
  return 2.0 / (s + std::sqrt(s) * std::sqrt(s + 2.0));
}

cplx occupancy_laplace(int x, cplx s, double rho, double alpha, double beta) {
  if (x < 0) throw DomainError("site must be nonnegative");
  require_density(rho);
  require_reservoir(alpha, beta);
  const double g = alpha + beta;
  const cplx p00 = phi00(s);
  const cplx z = xi(s);
  const cplx px0 = 2.0 * std::exp(-static_cast<double>(x) * std::log(z)) / (z - 1.0);
  return (rho + (alpha - g * rho) * px0 / (1.0 + g * p00)) / s;
}

cplx occupancy_excess_laplace(cplx s, double rho, double alpha, double beta) {
  require_density(rho);
  require_reservoir(alpha, beta);
  const double g = alpha + beta;
  const cplx p00 = phi00(s);
  const cplx z = xi(s);
  const cplx column_sum = 2.0 * z / ((z - 1.0) * (z - 1.0));
  return (alpha - g * rho) / (1.0 + g * p00) * column_sum / s;
}

cplx deltaN_mean_laplace(cplx s, double rho, double alpha, double beta) {
  require_density(rho);
  require_reservoir(alpha, beta);
  const double g = alpha + beta;
  return (alpha - g * rho) / (s * s * (1.0 + g * phi00(s)));
}

double deltaN_small_s_coefficient(double rho, double alpha, double beta) {
  require_density(rho);
  require_reservoir(alpha, beta);
  const double g = alpha + beta;
  return (alpha - g * rho) / (std::numbers::sqrt2 * g);
}

double deltaN_mean_asymptotic(double t, double rho, double alpha, double beta) {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  require_density(rho);
  require_reservoir(alpha, beta);
  const double g = alpha + beta;
  return std::sqrt(kTwoOverPi) * (alpha - g * rho) / g * std::sqrt(t);
}

double deltaN_mean(double t, double rho, double alpha, double beta, const laplace::InverterSpec& spec) {
  require_density(rho);
  require_reservoir(alpha, beta);
  return laplace::invert([&](cplx s) { return deltaN_mean_laplace(s, rho, alpha, beta); }, t, spec);
}

double sech_integrand(double xi) {
  const double h = 1.0 / std::cosh(std::numbers::pi * xi / 2.0);
  return h / (1.0 + h);
}

QuadratureValue sech_identity() {
  bq::exp_sinh<double> integrator;
  double err = 0.0, l1 = 0.0;
  const double half = integrator.integrate(sech_integrand, 0.0, std::numeric_limits<double>::infinity(), 1e-14,
                                           &err, &l1);
  // (1/2) of the integral over R is the integral over [0, inf) by evenness.
  if (!(err <= 1e-12)) throw AccuracyError("sech quadrature did not converge", err);
  return {half, std::abs(half - kTwoOverPi), err};
}

double j1_kernel(double x, double y) {
  if (!(x >= 0.0 && y >= 0.0)) throw DomainError("J kernels live on the half-line");
  if (x == y) throw DomainError("J1 is singular on the diagonal");
  using boost::math::cyl_bessel_k;
  const double mirror = x + y > 0.0 ? cyl_bessel_k(0, x + y) : 0.0;
  return (cyl_bessel_k(0, std::abs(x - y)) + mirror) / std::numbers::pi;
}

double j1_kernel_fourier(double x, double y) {
  if (!(x >= 0.0 && y >= 0.0)) throw DomainError("J kernels live on the half-line");
  if (x == y || x + y == 0.0) throw DomainError("J1 Fourier integral diverges on the diagonal");
  bq::ooura_fourier_cos<double> cosine(1e-12);
  const auto f = [](double v) { return 1.0 / std::hypot(1.0, v); };
  // int_R e^{ivz} / sqrt(1 + v^2) dv = 2 int_0^inf cos(vz) / sqrt(1 + v^2) dv.
  const double a = cosine.integrate(f, std::abs(x - y)).first;
  const double b = cosine.integrate(f, x + y).first;
  return (a + b) / std::numbers::pi;
}

double j2_kernel(double x, double y) {
  if (!(x >= 0.0 && y >= 0.0)) throw DomainError("J kernels live on the half-line");
  if (x == 0.0 && y == 0.0) throw DomainError("J2 is singular at the corner");
  return kTwoOverPi * boost::math::cyl_bessel_k(0, std::hypot(x, y));
}

namespace {

double k0(double z) { return boost::math::cyl_bessel_k(0, z); }

// int of (h - |z - c|) K_0(|z|) over [c - h, c + h].
double hat_k0(double c, double h) {
  bq::tanh_sinh<double> ts;
  const auto piece = [&](double lo, double hi) {
    const auto f = [&](double z) { return (h - std::abs(z - c)) * k0(std::abs(z)); };
    if (lo < 0.0 && hi > 0.0) return ts.integrate(f, lo, 0.0) + ts.integrate(f, 0.0, hi);
    if (lo <= 0.0 && hi >= 0.0) return ts.integrate(f, lo, hi);
    return bq::gauss<double, 20>::integrate(f, lo, hi);
  };
  return piece(c - h, c) + piece(c, c + h);
}

// int over [a0, a0+h] x [b0, b0+h] of K_0(sqrt(x^2 + y^2)), adaptive near the corner.
double cell_k0_adaptive(double a0, double b0, double h) {
  bq::tanh_sinh<double> ts;
  const auto inner = [&](double x) {
    return ts.integrate([&](double y) { return k0(std::hypot(x, y)); }, b0, b0 + h);
  };
  return ts.integrate(inner, a0, a0 + h);
}

constexpr int kGauss = 5;

}  // namespace

JKernelSolution j_kernel_solve(double step, double cutoff) {
  if (!(step > 0.0 && cutoff > 0.0 && step < cutoff)) throw DomainError("need 0 < step < cutoff");
  const double cells_real = std::ceil(cutoff / step - 1e-9);
  if (cells_real > 6000) throw CapacityError("J-kernel grid exceeds 6000 cells");
  const int N = static_cast<int>(cells_real);
  const double h = step;

  std::vector<double> toeplitz(static_cast<std::size_t>(N)), hankel(static_cast<std::size_t>(2 * N));
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t m) { toeplitz[m] = hat_k0(static_cast<double>(m) * h, h); });
  parallel_for(static_cast<std::size_t>(2 * N),
               [&](std::size_t k) { hankel[k] = hat_k0(static_cast<double>(k + 1) * h, h); });

  std::array<double, kGauss> gx{}, gw{};
  {
    const auto& a = bq::gauss<double, kGauss>::abscissa();
    const auto& w = bq::gauss<double, kGauss>::weights();
    // Boost stores the nonnegative half of a symmetric rule.
    int k = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      gx[k] = a[i], gw[k] = w[i], ++k;
      if (a[i] != 0.0) gx[k] = -a[i], gw[k] = w[i], ++k;
    }
  }
  std::vector<double> X(static_cast<std::size_t>(N * kGauss)), W(X.size());
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < kGauss; ++a) {
      X[i * kGauss + a] = (i + 0.5 * (1.0 + gx[a])) * h;
      W[i * kGauss + a] = 0.5 * h * gw[a];
    }

  MatrixXd G(N, N);
  constexpr int kNear = 3;
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t iu) {
    const int i = static_cast<int>(iu);
    for (int j = 0; j <= i; ++j) {
      double j2 = 0.0;
      if (i < kNear && j < kNear) {
        j2 = cell_k0_adaptive(i * h, j * h, h);
      } else {
        for (int a = 0; a < kGauss; ++a) {
          const double xa = X[i * kGauss + a], wa = W[i * kGauss + a];
          double row = 0.0;
          for (int b = 0; b < kGauss; ++b) row += W[j * kGauss + b] * k0(std::hypot(xa, X[j * kGauss + b]));
          j2 += wa * row;
        }
      }
      const double v = (toeplitz[i - j] + hankel[i + j]) / std::numbers::pi + kTwoOverPi * j2;
      G(i, j) = v;
      G(j, i) = v;
    }
  });

  VectorXd rhs(N);
  for (int i = 0; i < N; ++i) rhs[i] = std::exp(-i * h) * -std::expm1(-h);
  const Eigen::PartialPivLU<MatrixXd> lu(G);
  const double rc = lu.rcond();
  if (!(rc > 1e-13)) {
    Eigen::JacobiSVD<MatrixXd> svd(G);
    throw ConditioningError("J-kernel system is numerically singular", svd.singularValues().minCoeff());
  }
  const VectorXd c = lu.solve(rhs);
  const double value = c.sum() * h;
  return {value, std::abs(value - kTwoOverPi), rc, N};
}

double j_kernel_inner_product(double step, double cutoff) {
  if (!(step > 0.0 && step <= 0.05)) throw DomainError("grid step must lie in (0, 0.05]");
  if (!(cutoff >= 30.0)) throw DomainError("domain cutoff must be at least 30");
  return j_kernel_solve(step, cutoff).value;
}

JKernelConvergence j_kernel_convergence(double step, double cutoff) {
  JKernelConvergence r;
  for (double h : {step, step / 2.0, step / 4.0}) {
    r.steps.push_back(h);
    r.values.push_back(j_kernel_solve(h, cutoff).value);
  }
  const double e0 = std::abs(r.values[0] - kTwoOverPi);
  const double e1 = std::abs(r.values[1] - kTwoOverPi);
  const double e2 = std::abs(r.values[2] - kTwoOverPi);
  r.ratio = std::max(e1 / e0, e2 / e1);
  r.passed = r.ratio < 0.25;
  return r;
}

std::vector<SecondMomentRow> deltaN_second_moment_experiment(double alpha, double beta, std::vector<double> t_list,
                                                             std::uint64_t n_runs, std::uint64_t seed) {
  require_reservoir(alpha, beta);
  if (t_list.empty()) throw DomainError("need at least one time");
  std::sort(t_list.begin(), t_list.end());
  if (!(t_list.front() > 0.0)) throw DomainError("times must be positive");
  const double t_max = t_list.back();
  const mc::SimulationSpec spec{.rates = Rates::ssep(alpha, beta),
                                .L = static_cast<int>(std::ceil(4.0 * std::sqrt(t_max) + 50.0)),
                                .initial = mc::InitialCondition::fixed(Configuration{}),
                                .t_max = t_max,
                                .observe = t_list};
  const auto est = mc::deltaN_moments(spec, n_runs, mc::SeedSpec{seed});
  const double g = alpha + beta;
  std::vector<SecondMomentRow> rows;
  for (const auto& e : est) {
    const double var = e.second.value - e.mean.value * e.mean.value;
    rows.push_back({e.time, e.second.value / e.time, e.second.std_error / e.time, kTwoOverPi * alpha * alpha / (g * g),
                    var / e.time});
  }
  return rows;
}

}  // namespace asep::ssep
