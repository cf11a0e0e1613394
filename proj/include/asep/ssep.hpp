#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "asep/laplace_inversion.hpp"
#include "asep/model.hpp"
#include "asep/open_solver.hpp"

namespace asep::ssep {

/// psihat[n] holds \hat Psi_n(s) over ConfigurationSet(n, L).
struct CorrelationState {
  cplx s;
  double rho;
  double gamma;
  std::vector<Eigen::VectorXcd> psihat;
};

/// Correlation transforms for Bernoulli(rho) initial data by the lower-triangular recursion.
CorrelationState solve_theorem2(double rho, cplx s, const Rates& rates, LatticeTruncation trunc, int n_max,
                                const open::SolverOptions& opts = {});
/// Same system solved as one block-triangular matrix; used as a cross-check.
CorrelationState solve_theorem2_block(double rho, cplx s, const Rates& rates, LatticeTruncation trunc, int n_max,
                                      const open::SolverOptions& opts = {});

/// Psi_n(t) for n <= n_max, inverted blockwise.
std::vector<Eigen::VectorXd> correlations(double rho, double t, const Rates& rates, LatticeTruncation trunc,
                                          int n_max, const laplace::InverterSpec& spec = {},
                                          const open::SolverOptions& opts = {});

/// phi(0, 0; s) on the half-line with p = q.
cplx phi00(cplx s);
/// Transform of the mean occupation at site x on the half-line.
cplx occupancy_laplace(int x, cplx s, double rho, double alpha, double beta);
/// sum_{x >= 0} (occupancy_laplace(x) - rho / s), summed in closed form.
cplx occupancy_excess_laplace(cplx s, double rho, double alpha, double beta);
/// Transform of the mean net number of particles exchanged with the reservoir.
cplx deltaN_mean_laplace(cplx s, double rho, double alpha, double beta);
/// Small-s coefficient c in deltaN_mean_laplace ~ c s^{-3/2}.
double deltaN_small_s_coefficient(double rho, double alpha, double beta);
/// Large-t law sqrt(2/pi) (alpha - gamma rho) / gamma sqrt(t).
double deltaN_mean_asymptotic(double t, double rho, double alpha, double beta);
double deltaN_mean(double t, double rho, double alpha, double beta, const laplace::InverterSpec& spec = {});

struct QuadratureValue {
  double value;
  double deviation;  // |value - 2/pi|
  double error_estimate;
};

/// sech(pi xi / 2) / (1 + sech(pi xi / 2)).
double sech_integrand(double xi);
/// (1/2) int_R sech_integrand, by adaptive double-exponential quadrature.
QuadratureValue sech_identity();

/// (1/pi)(K_0(|x - y|) + K_0(x + y)).
double j1_kernel(double x, double y);
/// (1/2pi) int_R (e^{iv(x-y)} + e^{iv(x+y)}) / sqrt(1 + v^2) dv by oscillatory quadrature; x != y.
double j1_kernel_fourier(double x, double y);
/// (2/pi) K_0(sqrt(x^2 + y^2)).
double j2_kernel(double x, double y);

struct JKernelSolution {
  double value;  // (f, 1)
  double deviation;
  double rcond;
  int cells;
};

/// Solves (J1 + J2) f = e^{-x} on [0, cutoff] with piecewise-constant f on cells of width step.
JKernelSolution j_kernel_solve(double step, double cutoff);
double j_kernel_inner_product(double step, double cutoff);

struct JKernelConvergence {
  std::vector<double> steps;
  std::vector<double> values;
  /// Largest ratio e(h/2) / e(h) of successive errors against 2/pi.
  double ratio;
  bool passed;  // ratio < 0.25
};

/// Runs the solve at step, step/2, step/4.
JKernelConvergence j_kernel_convergence(double step, double cutoff);

struct SecondMomentRow {
  double t;
  double mean_square_over_t;  // <Delta N(t)^2> / t
  double std_error;
  double target;  // (2/pi) alpha^2 / gamma^2
  double scaled_variance;  // Var(Delta N(t) / sqrt(t))
};

/// Simulated second moment of Delta N from an empty start, L >= 4 sqrt(t) + 50.
std::vector<SecondMomentRow> deltaN_second_moment_experiment(double alpha, double beta, std::vector<double> t_list,
                                                             std::uint64_t n_runs, std::uint64_t seed);

}  // namespace asep::ssep
