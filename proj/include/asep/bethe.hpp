#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "asep/model.hpp"

namespace asep::bethe {

cplx epsilon(cplx xi, const Rates& rates);
cplx scattering_S(cplx xi, cplx xi2, const Rates& rates);
cplx boundary_r(cplx xi, const Rates& rates);
/// Product of r(xi_sigma(i)) over negative images and S over inversions,
/// with xi_{-a} = tau / xi_a.
cplx amplitude_A(const SignedPermutation& sigma, std::span<const cplx> xi, const Rates& rates);

/// Concrete circles: variable a (1-based) sits on radius radii[a-1].
struct Contours {
  cplx center;
  std::vector<double> radii;
  int nodes;
};

double default_base_radius(const Rates& rates);
Contours contours(int n, const Rates& rates, const QuadratureSpec& quad);

/// Sum over variables of the maximum of Re eps on each circle; Laplace
/// evaluation needs Re s strictly above it.
double laplace_abscissa(int n, const Rates& rates, const QuadratureSpec& quad);

struct Evaluation {
  double value;
  double error_estimate;
  int nodes;
};

struct LaplaceEvaluation {
  cplx value;
  double error_estimate;
  int nodes;
};

constexpr int kMaxParticles = 4;

Evaluation evaluate_transition(const Configuration& x, const Configuration& y, double t,
                               const Rates& rates, const QuadratureSpec& quad = {});
double transition_probability(const Configuration& x, const Configuration& y, double t,
                              const Rates& rates, const QuadratureSpec& quad = {});

LaplaceEvaluation evaluate_laplace(const Configuration& x, const Configuration& y, cplx s,
                                   const Rates& rates, const QuadratureSpec& quad = {});
cplx transition_laplace(const Configuration& x, const Configuration& y, cplx s, const Rates& rates,
                        const QuadratureSpec& quad = {});

/// Single-particle integrand on a circle |xi| = R around the origin.
Evaluation transition_probability_n1(int x, int y, double t, const Rates& rates, int nodes = 128,
                                     double tolerance = 1e-12);
LaplaceEvaluation transition_laplace_n1(int x, int y, cplx s, const Rates& rates, int nodes = 128,
                                        double tolerance = 1e-12);

/// p(x, y; t) for all n-particle configurations of a window, several times at once.
struct TransitionTable {
  int n;
  int L;
  std::vector<Configuration> configs;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> values;  // values[k](i, j) = p(configs[i], configs[j]; times[k])
  double error_estimate;
  int nodes;
};

TransitionTable transition_table(int n, LatticeTruncation window, std::span<const double> times,
                                 const Rates& rates, const QuadratureSpec& quad = {});

struct LaplaceTable {
  int n;
  std::vector<Configuration> rows;
  std::vector<Configuration> cols;
  cplx s;
  Eigen::MatrixXcd values;  // values(i, j) = phi(rows[i], cols[j]; s)
  double error_estimate;
  int nodes;
};

LaplaceTable laplace_table(int n, LatticeTruncation window, cplx s, const Rates& rates,
                           const QuadratureSpec& quad = {});

/// Kernel phi(rows[i], cols[j]; s) for arbitrary row/column configuration lists.
LaplaceTable laplace_block(const std::vector<Configuration>& rows, const std::vector<Configuration>& cols,
                           cplx s, const Rates& rates, const QuadratureSpec& quad = {});

}  // namespace asep::bethe
