#include "asep/single_particle.hpp"

#include <cmath>

#include "asep/errors.hpp"

namespace asep::single {

namespace {

void require_q(const Rates& r) {
  if (r.q() == 0.0) throw UnsupportedError("single-particle closed forms need q > 0");
}

void require_ejection(int y, const Rates& r) {
  require_q(r);
  if (y < 0) throw DomainError("site must be nonnegative");
  if (r.alpha() != 0.0) throw DomainError("ejection laws need alpha = 0");
  if (!(r.beta() > 0.0)) throw DomainError("ejection laws need beta > 0");
}

void require_injection(int y, const Rates& r) {
  require_q(r);
  if (y < 0) throw DomainError("site must be nonnegative");
  if (r.beta() != 0.0) throw DomainError("injection laws need beta = 0");
  if (!(r.alpha() > 0.0)) throw DomainError("injection laws need alpha > 0");
}

// xi^{-y} without the overflow of 1 / xi^y.
cplx inverse_power(cplx xi, int y) { return std::exp(-static_cast<double>(y) * std::log(xi)); }

Regime regime_of(const Rates& r) {
  if (std::abs(r.p() - r.q()) <= 1e-12) return Regime::critical;
  return r.p() > r.q() ? Regime::transient : Regime::recurrent;
}

}  // namespace

double xi_plus(double s, const Rates& rates) {
  require_q(rates);
  if (!(s >= 0.0)) throw DomainError("xi_plus needs s >= 0");
  const double d = (s + 1.0) * (s + 1.0) - 4.0 * rates.p() * rates.q();
  return (s + 1.0 + std::sqrt(std::max(d, 0.0))) / (2.0 * rates.q());
}

cplx xi_plus(cplx s, const Rates& rates) {
  require_q(rates);
  const double b = 2.0 * std::sqrt(rates.p() * rates.q());
  return (s + 1.0 + std::sqrt(s + 1.0 - b) * std::sqrt(s + 1.0 + b)) / (2.0 * rates.q());
}

cplx phi_0y(int y, cplx s, const Rates& rates) {
  if (y < 0) throw DomainError("site must be nonnegative");
  const cplx xi = xi_plus(s, rates);
  return inverse_power(xi, y) / (rates.q() * (xi - 1.0));
}

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::transient: return "survival_probability";
    case Regime::critical: return "tail_coefficient";
    case Regime::recurrent: return "mean_ejection_time";
  }
  return "?";
}

EjectionStats ejection_stats(int y, const Rates& rates) {
  require_ejection(y, rates);
  const double p = rates.p(), q = rates.q(), b = rates.beta();
  switch (regime_of(rates)) {
    case Regime::transient:
      return {Regime::transient, 1.0 - b * std::pow(1.0 / q - 1.0, -y) / (p - q + b)};
    case Regime::critical:
      return {Regime::critical, (2.0 * y + 1.0 / b) / std::sqrt(2.0 * M_PI)};
    case Regime::recurrent:
      return {Regime::recurrent, (y + q / b) / (q - p)};
  }
  return {};
}

namespace {
double stat_in(int y, const Rates& rates, Regime want) {
  const auto st = ejection_stats(y, rates);
  if (st.regime != want)
    throw RegimeError(std::string(to_string(want)) + " is not defined in the " + to_string(st.regime) + " regime");
  return st.value;
}
}  // namespace

double survival_probability(int y, const Rates& rates) { return stat_in(y, rates, Regime::transient); }
double survival_tail_coefficient(int y, const Rates& rates) { return stat_in(y, rates, Regime::critical); }
double mean_ejection_time(int y, const Rates& rates) { return stat_in(y, rates, Regime::recurrent); }

double injection_expected_time(int y, const Rates& rates) {
  require_injection(y, rates);
  const double a = rates.alpha();
  const double xi = xi_plus(a, rates);
  const double den = rates.q() * (xi - 1.0) - a;
  if (!(den > 0.0)) throw DomainError("q(xi_plus(alpha) - 1) - alpha must be positive");
  return 1.0 / a + std::pow(xi, -y) / den;
}

cplx survival_laplace(int y, cplx s, const Rates& rates) {
  require_ejection(y, rates);
  const cplx xi = xi_plus(s, rates);
  return (1.0 - rates.beta() * inverse_power(xi, y) / (rates.q() * (xi - 1.0) + rates.beta())) / s;
}

cplx injection_survival_laplace(int y, cplx s, const Rates& rates) {
  require_injection(y, rates);
  const double a = rates.alpha();
  const cplx u = s + a;
  const cplx xi = xi_plus(u, rates);
  return (1.0 + a * inverse_power(xi, y) / (rates.q() * (xi - 1.0) - a)) / u;
}

double survival(int y, double t, const Rates& rates, const laplace::InverterSpec& spec) {
  require_ejection(y, rates);
  return laplace::invert([&](cplx s) { return survival_laplace(y, s, rates); }, t, spec);
}

double injection_survival(int y, double t, const Rates& rates, const laplace::InverterSpec& spec) {
  require_injection(y, rates);
  // The closed form is known at s + alpha; the inverter's shift carries that offset.
  laplace::InverterSpec shifted = spec;
  shifted.shift += rates.alpha();
  return laplace::invert(
      [&](cplx u) {
        const double a = rates.alpha();
        const cplx xi = xi_plus(u, rates);
        return (1.0 + a * inverse_power(xi, y) / (rates.q() * (xi - 1.0) - a)) / u;
      },
      t, shifted);
}

}  // namespace asep::single
