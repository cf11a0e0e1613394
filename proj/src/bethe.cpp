#include "asep/bethe.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <tuple>

#include "asep/errors.hpp"

namespace asep::bethe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool near_zero(cplx den, double scale) { return std::abs(den) <= 1e-13 * std::max(scale, 1e-300); }

void require_q(const Rates& rates) {
  if (rates.q() == 0.0)
    throw UnsupportedError("contour formula needs q != 0; use the TASEP determinant for p = 1");
}

int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

struct Mode {
  std::vector<double> times;  // time domain: one output per time
  bool laplace = false;
  cplx s{};
};

// Sum over mu in S_n and sigma in B_n of the trapezoidal contour products,
// for every (row, column) configuration pair and every requested time
// (or the single Laplace argument). Returns one complex matrix per output.
//
// With `symmetric`, the last variable only runs over the upper half circle;
// the result is then only meaningful through its real part.
std::vector<Eigen::MatrixXcd> contour_sum(const std::vector<Configuration>& rows,
                                          const std::vector<Configuration>& cols, const Mode& mode,
                                          const Rates& rates, const Contours& geo, bool symmetric) {
  const int n = static_cast<int>(geo.radii.size());
  const int N = geo.nodes;
  const double tau = rates.tau();
  const std::size_t outputs = mode.laplace ? 1 : mode.times.size();
  const auto R = static_cast<Eigen::Index>(rows.size());
  const auto C = static_cast<Eigen::Index>(cols.size());
  std::vector<Eigen::MatrixXcd> out(outputs, Eigen::MatrixXcd::Zero(R, C));
  if (n == 0) {
    for (std::size_t m = 0; m < outputs; ++m)
      out[m].setConstant(mode.laplace ? 1.0 / mode.s : cplx(1.0));
    return out;
  }

  std::vector<int> Nv(n, N);
  if (symmetric) Nv[n - 1] = N / 2 + 1;

  std::vector<int> xlo(n), xhi(n), ylo(n), yhi(n);
  for (int i = 0; i < n; ++i) {
    xlo[i] = ylo[i] = 1 << 30;
    xhi[i] = yhi[i] = -1;
    for (const auto& x : rows) xlo[i] = std::min(xlo[i], x[i]), xhi[i] = std::max(xhi[i], x[i]);
    for (const auto& y : cols) ylo[i] = std::min(ylo[i], y[i]), yhi[i] = std::max(yhi[i], y[i]);
  }

  const auto sigmas = enumerate_signed_permutations(n);
  std::vector<int> mu(n);
  std::iota(mu.begin(), mu.end(), 0);
  const double norm = 1.0 / factorial(n);

  std::size_t grid_size = 1;
  for (int a = 0; a < n; ++a) grid_size *= static_cast<std::size_t>(Nv[a]);
  std::vector<cplx> A(grid_size), D;

  do {
    // Nodes for this radius assignment.
    std::vector<std::vector<cplx>> xi(n), w(n), eps(n), rneg(n);
    for (int a = 0; a < n; ++a) {
      const double rad = geo.radii[mu[a]];
      for (int k = 0; k < Nv[a]; ++k) {
        const cplx e = std::polar(1.0, kTwoPi * k / N);
        const cplx z = geo.center + rad * e;
        double mult = 1.0;
        if (symmetric && a == n - 1 && k != 0 && 2 * k != N) mult = 2.0;
        xi[a].push_back(z);
        w[a].push_back(mult * rad * e / static_cast<double>(N));
        eps[a].push_back(rates.p() / z + rates.q() * z - 1.0);
        const cplx zneg = tau / z;
        rneg[a].push_back((zneg - 1.0) / (1.0 - tau / zneg));
      }
    }
    // S tables for every ordered signed pair, laid out [k_lo][k_hi] where lo < hi are variable indices.
    auto pair_key = [n](int u, int v) {
      auto code = [n](int s) { return s > 0 ? s - 1 : n + (-s) - 1; };
      return code(u) * 2 * n + code(v);
    };
    std::vector<std::vector<cplx>> Stab(4 * n * n);
    for (int u = -n; u <= n; ++u)
      for (int v = -n; v <= n; ++v) {
        if (u == 0 || v == 0 || std::abs(u) == std::abs(v)) continue;
        const int au = std::abs(u) - 1, av = std::abs(v) - 1;
        const int lo = std::min(au, av), hi = std::max(au, av);
        auto& tab = Stab[pair_key(u, v)];
        tab.resize(static_cast<std::size_t>(Nv[lo]) * Nv[hi]);
        for (int kl = 0; kl < Nv[lo]; ++kl)
          for (int kh = 0; kh < Nv[hi]; ++kh) {
            const int ku = au == lo ? kl : kh;
            const int kv = av == lo ? kl : kh;
            const cplx zu = u > 0 ? xi[au][ku] : tau / xi[au][ku];
            const cplx zv = v > 0 ? xi[av][kv] : tau / xi[av][kv];
            const cplx pq = rates.p() + rates.q() * zu * zv;
            tab[static_cast<std::size_t>(kl) * Nv[hi] + kh] = -(pq - zu) / (pq - zv);
          }
      }
    if (mode.laplace) {
      D.assign(grid_size, mode.s);
      std::size_t stride = 1;
      for (int a = n - 1; a >= 0; --a) {
        for (std::size_t g = 0; g < grid_size; ++g) D[g] -= eps[a][(g / stride) % Nv[a]];
        stride *= Nv[a];
      }
      for (auto& d : D) d = 1.0 / d;
    }

    for (const auto& sigma : sigmas) {
      // Factors grouped by the deepest variable they involve.
      struct Factor {
        const cplx* table;
        int other;  // -1 for single-variable factors
      };
      std::vector<std::vector<Factor>> factors(n);
      std::vector<int> pos(n), sign(n);
      for (int i = 0; i < n; ++i) {
        const int a = std::abs(sigma[i]) - 1;
        pos[a] = i;
        sign[a] = sigma[i] > 0 ? 1 : -1;
        if (sigma[i] < 0) factors[a].push_back({rneg[a].data(), -1});
      }
      for (auto [u, v] : inversions(sigma)) {
        const int au = std::abs(u) - 1, av = std::abs(v) - 1;
        factors[std::max(au, av)].push_back({Stab[pair_key(u, v)].data(), std::min(au, av)});
      }

      std::vector<int> k(n, 0);
      std::function<void(int, std::size_t, cplx)> fill = [&](int d, std::size_t offset, cplx partial) {
        const auto& fs = factors[d];
        if (d == n - 1) {
          cplx* dst = A.data() + offset * Nv[d];
          for (int kk = 0; kk < Nv[d]; ++kk) {
            cplx v = partial;
            for (const auto& f : fs)
              v *= f.other < 0 ? f.table[kk] : f.table[static_cast<std::size_t>(k[f.other]) * Nv[d] + kk];
            dst[kk] = v;
          }
          return;
        }
        for (int kk = 0; kk < Nv[d]; ++kk) {
          k[d] = kk;
          cplx v = partial;
          for (const auto& f : fs)
            v *= f.other < 0 ? f.table[kk] : f.table[static_cast<std::size_t>(k[f.other]) * Nv[d] + kk];
          fill(d + 1, offset * Nv[d] + kk, v);
        }
      };
      // Grid is row-major with variable 0 slowest.
      if (n == 1) {
        fill(0, 0, 1.0);
      } else {
        for (int k0 = 0; k0 < Nv[0]; ++k0) {
          k[0] = k0;
          cplx v = 1.0;
          for (const auto& f : factors[0]) v *= f.table[k0];
          fill(1, static_cast<std::size_t>(k0), v);
        }
      }
      if (mode.laplace)
        for (std::size_t g = 0; g < grid_size; ++g) A[g] *= D[g];

      // Exponent ranges: variable a carries xi_a^{-y_a - 1 + sign * x_pos}.
      std::vector<int> elo(n), E(n);
      for (int a = 0; a < n; ++a) {
        const int i = pos[a];
        const int c1 = -yhi[a] - 1 + (sign[a] > 0 ? xlo[i] : -xhi[i]);
        const int c2 = -ylo[a] - 1 + (sign[a] > 0 ? xhi[i] : -xlo[i]);
        elo[a] = c1;
        E[a] = c2 - c1 + 1;
      }
      std::vector<std::size_t> estride(n);
      {
        std::size_t st = 1;
        for (int a = n - 1; a >= 0; --a) estride[a] = st, st *= E[a];
      }

      for (std::size_t m = 0; m < outputs; ++m) {
        std::vector<Eigen::MatrixXcd> P(n);
        for (int a = 0; a < n; ++a) {
          P[a].resize(Nv[a], E[a]);
          for (int kk = 0; kk < Nv[a]; ++kk) {
            cplx base = w[a][kk];
            if (!mode.laplace) base *= std::exp(eps[a][kk] * mode.times[m]);
            cplx zp = std::pow(xi[a][kk], elo[a]);
            for (int e = 0; e < E[a]; ++e) {
              P[a](kk, e) = base * zp;
              zp *= xi[a][kk];
            }
          }
        }
        // Contract variables n-1, ..., 0.
        std::size_t suffix = grid_size / Nv[n - 1];
        Eigen::Map<const Eigen::MatrixXcd> G(A.data(), Nv[n - 1], static_cast<Eigen::Index>(suffix));
        Eigen::MatrixXcd cur = P[n - 1].transpose() * G;  // (E_{n-1}) x suffix
        std::size_t prefix = E[n - 1];
        for (int d = n - 2; d >= 0; --d) {
          suffix /= Nv[d];
          Eigen::MatrixXcd next(static_cast<Eigen::Index>(prefix * E[d]), static_cast<Eigen::Index>(suffix));
          for (std::size_t s = 0; s < suffix; ++s) {
            Eigen::Map<const Eigen::MatrixXcd> in(cur.data() + s * prefix * Nv[d], static_cast<Eigen::Index>(prefix), Nv[d]);
            Eigen::Map<Eigen::MatrixXcd> o(next.data() + s * prefix * E[d], static_cast<Eigen::Index>(prefix), E[d]);
            o.noalias() = in * P[d];
          }
          cur.swap(next);
          prefix *= E[d];
        }
        // cur holds C[e_{n-1} + E_{n-1} (e_{n-2} + ...)]: variable n-1 fastest.
        const cplx* Cdata = cur.data();
        for (Eigen::Index r = 0; r < R; ++r) {
          const Configuration& x = rows[r];
          double coef = 1.0;
          for (int a = 0; a < n; ++a)
            if (sign[a] < 0) coef *= std::pow(tau, x[pos[a]]);
          coef *= norm;
          for (Eigen::Index c = 0; c < C; ++c) {
            const Configuration& y = cols[c];
            std::size_t idx = 0;
            for (int a = 0; a < n; ++a) idx += estride[a] * static_cast<std::size_t>(-y[a] - 1 + sign[a] * x[pos[a]] - elo[a]);
            out[m](r, c) += coef * Cdata[idx];
          }
        }
      }
    }
  } while (std::next_permutation(mu.begin(), mu.end()));
  return out;
}

void check_pair(const Configuration& x, const Configuration& y) {
  if (x.size() != y.size()) throw DomainError("configurations must have equal particle counts");
  if (static_cast<int>(x.size()) > kMaxParticles)
    throw CapacityError("contour evaluation is limited to n <= 4 particles");
}

bool real_center(const Contours& geo) { return geo.center.imag() == 0.0 && geo.nodes % 2 == 0; }

// Runs `eval(nodes)` with node doubling until successive results agree.
template <class Eval>
auto adaptive(const QuadratureSpec& quad, Eval eval) {
  int nodes = quad.nodes_per_contour;
  auto prev = eval(nodes);
  if (!quad.adaptive) return std::make_tuple(prev, std::numeric_limits<double>::quiet_NaN(), nodes);
  double diff = 0.0;
  for (int d = 0; d < quad.max_doublings; ++d) {
    nodes *= 2;
    auto cur = eval(nodes);
    diff = 0.0;
    for (std::size_t m = 0; m < cur.size(); ++m) diff = std::max(diff, (cur[m] - prev[m]).cwiseAbs().maxCoeff());
    prev = std::move(cur);
    if (diff < quad.tolerance) return std::make_tuple(prev, diff, nodes);
  }
  throw AccuracyError("contour quadrature did not converge under node doubling", diff);
}

double max_imag(const std::vector<Eigen::MatrixXcd>& v) {
  double m = 0.0;
  for (const auto& mat : v) m = std::max(m, mat.imag().cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

cplx epsilon(cplx xi, const Rates& rates) {
  if (xi == cplx(0.0)) throw DomainError("epsilon is undefined at xi = 0");
  return rates.p() / xi + rates.q() * xi - 1.0;
}

cplx scattering_S(cplx xi, cplx xi2, const Rates& rates) {
  const cplx pq = rates.p() + rates.q() * xi * xi2;
  const cplx den = pq - xi2;
  if (near_zero(den, rates.p() + std::abs(rates.q() * xi * xi2) + std::abs(xi2)))
    throw PoleError("S pole: p + q xi xi' - xi' vanishes");
  return -(pq - xi) / den;
}

cplx boundary_r(cplx xi, const Rates& rates) {
  require_q(rates);
  const double tau = rates.tau();
  if (xi == cplx(0.0)) throw PoleError("r is singular at xi = 0");
  const cplx den = 1.0 - tau / xi;
  if (near_zero(den, 1.0 + tau / std::abs(xi))) throw PoleError("r pole at xi = tau");
  return (xi - 1.0) / den;
}

cplx amplitude_A(const SignedPermutation& sigma, std::span<const cplx> xi, const Rates& rates) {
  const std::size_t n = sigma.order();
  if (xi.size() != n) throw DomainError("amplitude needs one xi per particle");
  const double tau = n ? rates.tau() : 1.0;
  auto value = [&](int signed_index) {
    const cplx z = xi[std::abs(signed_index) - 1];
    return signed_index > 0 ? z : tau / z;
  };
  cplx A = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    if (sigma[i] < 0) A *= boundary_r(value(sigma[i]), rates);
  for (auto [a, b] : inversions(sigma)) {
    try {
      A *= scattering_S(value(a), value(b), rates);
    } catch (const PoleError&) {
      throw PoleError("S pole for inversion pair (" + std::to_string(a) + "," + std::to_string(b) + ")");
    }
  }
  return A;
}

double default_base_radius(const Rates& rates) {
  require_q(rates);
  const double c = 0.5 / rates.q();
  return c + 1.5 * std::max(1.0, std::sqrt(rates.tau()));
}

Contours contours(int n, const Rates& rates, const QuadratureSpec& quad) {
  require_q(rates);
  quad.validate();
  Contours geo;
  geo.center = quad.center.value_or(cplx(0.5 / rates.q(), 0.0));
  const double base = quad.base_radius.value_or(default_base_radius(rates));
  for (int a = 1; a <= n; ++a) geo.radii.push_back(base * (1.0 + a * quad.radius_spread));
  geo.nodes = quad.nodes_per_contour;
  return geo;
}

double laplace_abscissa(int n, const Rates& rates, const QuadratureSpec& quad) {
  const Contours geo = contours(n, rates, quad);
  double total = 0.0;
  for (double rad : geo.radii) {
    double best = -1e300;
    const int probe = 720;
    for (int k = 0; k < probe; ++k) {
      const cplx z = geo.center + std::polar(rad, kTwoPi * k / probe);
      best = std::max(best, epsilon(z, rates).real());
    }
    total += best;
  }
  return total;
}

Evaluation evaluate_transition(const Configuration& x, const Configuration& y, double t, const Rates& rates,
                               const QuadratureSpec& quad) {
  check_pair(x, y);
  require_q(rates);
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  const int n = static_cast<int>(x.size());
  Mode mode;
  mode.times = {t};
  const std::vector<Configuration> rows{x}, cols{y};
  double imag = 0.0;
  auto [res, err, nodes] = adaptive(quad, [&](int N) {
    QuadratureSpec q = quad;
    q.nodes_per_contour = N;
    const Contours geo = contours(n, rates, q);
    // Three or more particles: half grid by conjugate symmetry, real part only.
    const bool sym = n >= 3 && real_center(geo);
    auto r = contour_sum(rows, cols, mode, rates, geo, sym);
    if (sym)
      for (auto& m : r) m = m.real().cast<cplx>();
    imag = max_imag(r);
    return r;
  });
  const double value = res[0](0, 0).real();
  if (imag > 1e-8 * std::max(1.0, std::abs(value)))
    throw AccuracyError("imaginary residue of a real transition probability is too large", imag);
  return {value, std::isnan(err) ? 0.0 : err, nodes};
}

double transition_probability(const Configuration& x, const Configuration& y, double t, const Rates& rates,
                              const QuadratureSpec& quad) {
  return evaluate_transition(x, y, t, rates, quad).value;
}

LaplaceEvaluation evaluate_laplace(const Configuration& x, const Configuration& y, cplx s, const Rates& rates,
                                   const QuadratureSpec& quad) {
  check_pair(x, y);
  require_q(rates);
  if (x.size() == 1) return transition_laplace_n1(x[0], y[0], s, rates);
  auto table = laplace_block({x}, {y}, s, rates, quad);
  return {table.values(0, 0), table.error_estimate, table.nodes};
}

cplx transition_laplace(const Configuration& x, const Configuration& y, cplx s, const Rates& rates,
                        const QuadratureSpec& quad) {
  return evaluate_laplace(x, y, s, rates, quad).value;
}

namespace {

double n1_radius(const Rates& rates) { return 1.5 * std::max(1.0, rates.tau()); }

// Larger root of eps(xi) = s for real s > 0.
double xi_plus_real(double s, const Rates& rates) {
  const double b = s + 1.0;
  return (b + std::sqrt(b * b - 4.0 * rates.p() * rates.q())) / (2.0 * rates.q());
}

template <class Weight>
cplx n1_sum(int x, int y, double R, int N, const Rates& rates, Weight weight) {
  const double tau = rates.tau();
  const double taux = std::pow(tau, x);
  cplx total = 0.0;
  for (int k = 0; k < N; ++k) {
    const cplx e = std::polar(1.0, kTwoPi * k / N);
    const cplx z = R * e;
    const cplx f = std::pow(z, x - y - 1) + (tau - z) / (1.0 - z) * taux * std::pow(z, -x - y - 2);
    total += f * weight(z) * z / static_cast<double>(N);
  }
  return total;
}

// Time-domain split: the free term has its only pole at 0 and is integrated on the saddle-point
// circle, which keeps roundoff relative to the result when x is far from y.
cplx n1_time_sum(int x, int y, double t, double R, int N, const Rates& rates) {
  const double tau = rates.tau();
  const double taux = std::pow(tau, x);
  const double d = x - y - 1;
  const double qt = rates.q() * t;
  const double R0 = qt > 0.0 ? (-d + std::sqrt(d * d + 4.0 * rates.p() * rates.q() * t * t)) / (2.0 * qt) : 1.0;
  auto weight = [&](cplx z) { return std::exp(t * (rates.p() / z + rates.q() * z - 1.0)); };
  cplx total = 0.0;
  for (int k = 0; k < N; ++k) {
    const cplx e = std::polar(1.0, kTwoPi * k / N);
    const cplx z0 = R0 * e;
    const cplx z = R * e;
    total += (std::exp(d * std::log(z0)) * weight(z0) * z0 +
              (tau - z) / (1.0 - z) * taux * std::exp(static_cast<double>(-x - y - 2) * std::log(z)) * weight(z) * z) /
             static_cast<double>(N);
  }
  return total;
}

}  // namespace

Evaluation transition_probability_n1(int x, int y, double t, const Rates& rates, int nodes, double tolerance) {
  require_q(rates);
  if (x < 0 || y < 0) throw DomainError("sites must be nonnegative");
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  const double R = n1_radius(rates);
  auto eval = [&](int N) { return n1_time_sum(x, y, t, R, N, rates); };
  cplx prev = eval(nodes);
  for (int d = 0; d < 6; ++d) {
    nodes *= 2;
    cplx cur = eval(nodes);
    const double diff = std::abs(cur - prev);
    prev = cur;
    if (diff < tolerance) return {cur.real(), diff, nodes};
  }
  throw AccuracyError("single-particle contour integral did not converge", std::abs(prev));
}

LaplaceEvaluation transition_laplace_n1(int x, int y, cplx s, const Rates& rates, int nodes, double tolerance) {
  require_q(rates);
  if (x < 0 || y < 0) throw DomainError("sites must be nonnegative");
  if (!(s.real() > 0.0)) throw DomainError("Laplace argument needs Re s > 0");
  const double R = std::sqrt(xi_plus_real(s.real(), rates));
  auto eval = [&](int N) {
    return n1_sum(x, y, R, N, rates, [&](cplx z) { return 1.0 / (s - (rates.p() / z + rates.q() * z - 1.0)); });
  };
  cplx prev = eval(nodes);
  for (int d = 0; d < 8; ++d) {
    nodes *= 2;
    cplx cur = eval(nodes);
    const double diff = std::abs(cur - prev);
    prev = cur;
    if (diff < tolerance * std::max(1.0, std::abs(cur))) return {cur, diff, nodes};
  }
  throw AccuracyError("single-particle Laplace integral did not converge", std::abs(prev));
}

TransitionTable transition_table(int n, LatticeTruncation window, std::span<const double> times, const Rates& rates,
                                 const QuadratureSpec& quad) {
  require_q(rates);
  if (n < 0 || n > kMaxParticles) throw CapacityError("contour evaluation is limited to n <= 4 particles");
  for (double t : times)
    if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  TransitionTable table;
  table.n = n;
  table.L = window.L;
  table.configs = enumerate_configurations(n, window.L);
  table.times.assign(times.begin(), times.end());
  Mode mode;
  mode.times = table.times;
  auto [res, err, nodes] = adaptive(quad, [&](int N) {
    QuadratureSpec q = quad;
    q.nodes_per_contour = N;
    const Contours geo = contours(n, rates, q);
    auto r = contour_sum(table.configs, table.configs, mode, rates, geo, real_center(geo));
    for (auto& m : r) m = m.real().cast<cplx>();
    return r;
  });
  for (const auto& m : res) table.values.push_back(m.real());
  table.error_estimate = std::isnan(err) ? 0.0 : err;
  table.nodes = nodes;
  return table;
}

LaplaceTable laplace_block(const std::vector<Configuration>& rows, const std::vector<Configuration>& cols, cplx s,
                           const Rates& rates, const QuadratureSpec& quad) {
  require_q(rates);
  if (rows.empty() || cols.empty()) throw DomainError("empty configuration list");
  const int n = static_cast<int>(rows.front().size());
  for (const auto& c : rows)
    if (static_cast<int>(c.size()) != n) throw DomainError("mixed particle counts");
  for (const auto& c : cols)
    if (static_cast<int>(c.size()) != n) throw DomainError("mixed particle counts");
  if (n > kMaxParticles) throw CapacityError("contour evaluation is limited to n <= 4 particles");
  const double bound = laplace_abscissa(n, rates, quad);
  if (n > 0 && !(s.real() > bound))
    throw DomainError("Laplace argument needs Re s > " + std::to_string(bound) + " for the chosen contours");
  Mode mode;
  mode.laplace = true;
  mode.s = s;
  const bool sym_ok = s.imag() == 0.0;
  auto [res, err, nodes] = adaptive(quad, [&](int N) {
    QuadratureSpec q = quad;
    q.nodes_per_contour = N;
    const Contours geo = contours(n, rates, q);
    const bool sym = sym_ok && real_center(geo);
    auto r = contour_sum(rows, cols, mode, rates, geo, sym);
    if (sym)
      for (auto& m : r) m = m.real().cast<cplx>();
    return r;
  });
  LaplaceTable table;
  table.n = n;
  table.rows = rows;
  table.cols = cols;
  table.s = s;
  table.values = res[0];
  table.error_estimate = std::isnan(err) ? 0.0 : err;
  table.nodes = nodes;
  return table;
}

LaplaceTable laplace_table(int n, LatticeTruncation window, cplx s, const Rates& rates, const QuadratureSpec& quad) {
  const auto configs = enumerate_configurations(n, window.L);
  return laplace_block(configs, configs, s, rates, quad);
}

}  // namespace asep::bethe
