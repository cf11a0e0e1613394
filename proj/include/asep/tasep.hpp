#pragma once

#include <span>
#include <vector>

#include "asep/model.hpp"

namespace asep::tasep {

/// Circle |xi| = 1/2 with 256 nodes.
QuadratureSpec determinant_quadrature();

/// TASEP transition probability from the determinant of single-contour integrals.
/// Sites may be read as positions on Z; only differences matter.
double tasep_determinant(const Configuration& x, const Configuration& y, double t,
                         const QuadratureSpec& quad = determinant_quadrature());

/// max |(I - alpha L0(s)) (I + alpha L0(s - alpha)) - I| over the window, where
/// L0 is the TASEP kernel between configurations (0, x) with x in [1, L).
/// Throws TruncationError if sources in the first quarter of the window put
/// more than 1e-12 of Laplace mass on the last site.
double resolvent_identity_check(int n, cplx s, double alpha, LatticeTruncation window);

/// c(t) e^{-rate t} with c a polynomial (coefficients in increasing degree).
struct Term {
  std::vector<double> poly;
  double rate;
};

/// Closed forms for the number of particles when injecting into empty TASEP.
/// For alpha == 1 the limiting coefficients are returned.
std::vector<Term> closed_form_terms(int n, double alpha);

/// P_n(t) for n in {0, 1, 2}; stable for alpha near 1.
double tasep_pn_closed(int n, double alpha, double t);

struct Figure1Data {
  double alpha;
  std::vector<double> times;
  std::vector<std::vector<double>> P;  // P[n][k] at times[k]
  std::vector<double> argmax;          // argmax_t P_n
  int lattice;                         // window used for n = 3
  double window_sensitivity;           // change of P_3 when the window grows by 4 sites
  bool ordering_holds;
};

/// P_0..P_{n_max} on a time grid; n = 3 comes from the exact capped chain.
/// Throws AccuracyError if a maximum for n >= 1 falls on the grid boundary.
Figure1Data figure1_data(double alpha, std::span<const double> t_grid, int n_max = 3);

}  // namespace asep::tasep
