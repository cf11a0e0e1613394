#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "asep/laplace_inversion.hpp"
#include "asep/model.hpp"

namespace asep::open {

enum class KernelSource { oracle, bethe };

/// box: the lattice [0, L) with a closed right edge, solved exactly.
/// half_line: kernels of the half-line restricted to the window [0, L).
enum class Geometry { box, half_line };

struct SolverOptions {
  KernelSource source = KernelSource::oracle;
  Geometry geometry = Geometry::box;
  int padding = 24;  // sites behind the window for half-line oracle kernels
  double tail_tolerance = 1e-10;
  double top_block_tolerance = 1e-8;
  QuadratureSpec quadrature{};
};

/// Kernel phi(x, y; s) between n-particle configurations of the window,
/// rows x and columns y in lexicographic order.
struct LaplaceOperator {
  int n_from;
  int n_to;
  std::vector<Configuration> rows;
  std::vector<Configuration> cols;
  Eigen::MatrixXcd matrix;
  cplx s;
};

LaplaceOperator build_Ln(int n, cplx s, const Rates& rates, LatticeTruncation trunc,
                         const SolverOptions& opts = {});

/// Multiplication by delta(x_1) on E_n (zero for n = 0).
Eigen::MatrixXd delta_matrix(int n, LatticeTruncation trunc);
/// (A_n F)(x) = delta(x_1) F(x_2, ..., x_n): E_{n-1} -> E_n.
Eigen::MatrixXd A_matrix(int n, LatticeTruncation trunc);
/// (B_n F)(x) = (1 - delta(x_1)) F(0, x): E_{n+1} -> E_n.
Eigen::MatrixXd B_matrix(int n, LatticeTruncation trunc);

/// (I - c L_n delta)^{-1} L_n by a direct solve on E_n.
Eigen::MatrixXcd ML_direct(const Eigen::MatrixXcd& Ln, int n, LatticeTruncation trunc, double c);
/// Same operator through the inverse on E_{n-1}^+ only.
Eigen::MatrixXcd ML_reduced(const Eigen::MatrixXcd& Ln, int n, LatticeTruncation trunc, double c);
/// (I - c L_n delta)^{-1} L_n A_n by a direct solve on E_n.
Eigen::MatrixXcd MLA_direct(const Eigen::MatrixXcd& Ln, int n, LatticeTruncation trunc, double c);
/// Same operator as L^0_{n,n-1} (I - c L^0_{n-1})^{-1} R_{n-1}.
Eigen::MatrixXcd MLA_reduced(const Eigen::MatrixXcd& Ln, int n, LatticeTruncation trunc, double c);

/// Initial law split by particle count; blocks[n] is indexed like ConfigurationSet(n, L).
struct InitialDistribution {
  int L = 0;
  std::vector<Eigen::VectorXd> blocks;
  std::optional<Configuration> point;  // set for point masses

  static InitialDistribution point_mass(const Configuration& y, LatticeTruncation trunc);
  static InitialDistribution bernoulli(double rho, LatticeTruncation trunc);
  int max_count() const;
};

/// phat[n] holds \hat P_n(s - shift) with shift = alpha.
struct OpenBoundaryState {
  cplx s;
  double shift;
  std::vector<Eigen::VectorXcd> phat;
  double rcond;  // smallest reciprocal condition estimate among the eliminated blocks
};

OpenBoundaryState solve_theorem1(const InitialDistribution& P0, cplx s, const Rates& rates, LatticeTruncation trunc,
                                 int n_max, const SolverOptions& opts = {});
OpenBoundaryState recursion_beta0(const Configuration& y, cplx s, const Rates& rates, LatticeTruncation trunc,
                                  int n_max, const SolverOptions& opts = {});
OpenBoundaryState recursion_alpha0(const Configuration& y, cplx s, const Rates& rates, LatticeTruncation trunc,
                                   const SolverOptions& opts = {});

enum class Method { automatic, theorem1, recursion };

class OpenBoundaryProblem {
 public:
  OpenBoundaryProblem(Rates rates, LatticeTruncation trunc, InitialDistribution initial, int n_max,
                      SolverOptions opts = {}, Method method = Method::automatic);

  const Rates& rates() const { return rates_; }
  int lattice_size() const { return L_; }
  int n_max() const { return n_max_; }
  const SolverOptions& options() const { return opts_; }

  /// Checked entry point: enforces the half-line abscissa Re s >= alpha + beta + 1.
  OpenBoundaryState solve(cplx s) const;
  /// Unchecked solve used at inversion nodes.
  OpenBoundaryState solve_at(cplx s) const;

 private:
  Rates rates_;
  int L_;
  InitialDistribution initial_;
  int n_max_;
  SolverOptions opts_;
  Method method_;
};

struct TimeDomainResult {
  double t;
  std::vector<Eigen::VectorXd> P;  // P[n] over ConfigurationSet(n, L)
  double mass;
  double min_value;
};

/// Inverts sigma -> \hat P(sigma) = state(sigma + alpha) with the inverter's shift.
TimeDomainResult time_domain(const OpenBoundaryProblem& problem, double t, const laplace::InverterSpec& spec = {});
/// Both inversion methods; the discrepancy is the max-abs difference over all entries.
struct CheckedTimeDomain {
  TimeDomainResult primary;
  TimeDomainResult alternate;
  double discrepancy;
};
CheckedTimeDomain time_domain_checked(const OpenBoundaryProblem& problem, double t,
                                      const laplace::InverterSpec& spec = {});

}  // namespace asep::open
