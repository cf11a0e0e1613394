#pragma once

#include "asep/laplace_inversion.hpp"
#include "asep/model.hpp"

namespace asep::single {

/// Larger root of epsilon(xi) = s. Needs q > 0 and s >= 0.
double xi_plus(double s, const Rates& rates);
/// Analytic continuation to Re s > 0, cut where (s+1)^2 <= 4pq on the real axis.
cplx xi_plus(cplx s, const Rates& rates);

/// Laplace transform of p(0, y; t) for one particle on the half-line.
cplx phi_0y(int y, cplx s, const Rates& rates);

enum class Regime {
  transient,  // p > q: survival probability
  critical,   // p = q: coefficient of the t^{-1/2} survival tail
  recurrent,  // p < q: mean ejection time
};

const char* to_string(Regime regime);

struct EjectionStats {
  Regime regime;
  double value;
};

/// Ejection of a single particle started at y; rates must have alpha = 0, beta > 0.
EjectionStats ejection_stats(int y, const Rates& rates);
double survival_probability(int y, const Rates& rates);
double survival_tail_coefficient(int y, const Rates& rates);
double mean_ejection_time(int y, const Rates& rates);

/// Expected time until a second particle is injected, one particle initially at y;
/// rates must have beta = 0, alpha > 0.
double injection_expected_time(int y, const Rates& rates);

/// Transform of the probability that the particle is still present (alpha = 0).
cplx survival_laplace(int y, cplx s, const Rates& rates);
/// Transform of the probability that exactly one particle is present (beta = 0),
/// evaluated at s, i.e. the closed form taken at s + alpha.
cplx injection_survival_laplace(int y, cplx s, const Rates& rates);

double survival(int y, double t, const Rates& rates, const laplace::InverterSpec& spec = {});
double injection_survival(int y, double t, const Rates& rates, const laplace::InverterSpec& spec = {});

}  // namespace asep::single
