#include "asep/oracle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <bit>
#include <cmath>

#include "asep/errors.hpp"

namespace asep::oracle {

namespace {
constexpr std::size_t kMaxStates = std::size_t{1} << 22;

int popcount(Mask m) { return std::popcount(m); }
}  // namespace

StateSpace StateSpace::full(LatticeTruncation trunc) {
  if (trunc.L > 16) throw CapacityError("full state space is limited to L <= 16");
  StateSpace s;
  s.L_ = trunc.L;
  s.max_n_ = trunc.L;
  s.full_ = true;
  s.masks_.resize(std::size_t{1} << trunc.L);
  for (std::size_t m = 0; m < s.masks_.size(); ++m) s.masks_[m] = m;
  return s;
}

StateSpace StateSpace::fixed_count(LatticeTruncation trunc, int n) {
  if (n < 0 || n > trunc.L) throw DomainError("particle count must lie in [0, L]");
  if (trunc.L > 64) throw CapacityError("lattice limited to 64 sites");
  if (binomial(trunc.L, n) > kMaxStates) throw CapacityError("state space too large");
  StateSpace s;
  s.L_ = trunc.L;
  s.max_n_ = n;
  s.fixed_ = true;
  for (const auto& c : enumerate_configurations(n, trunc.L)) s.masks_.push_back(c.mask());
  s.build_lookup();
  return s;
}

StateSpace StateSpace::capped(LatticeTruncation trunc, int max_particles) {
  if (max_particles < 0 || max_particles > trunc.L) throw DomainError("cap must lie in [0, L]");
  if (trunc.L > 64) throw CapacityError("lattice limited to 64 sites");
  std::uint64_t total = 0;
  for (int n = 0; n <= max_particles; ++n) total += binomial(trunc.L, n);
  if (total > kMaxStates) throw CapacityError("state space too large");
  StateSpace s;
  s.L_ = trunc.L;
  s.max_n_ = max_particles;
  s.has_overflow_ = max_particles < trunc.L;
  for (int n = 0; n <= max_particles; ++n)
    for (const auto& c : enumerate_configurations(n, trunc.L)) s.masks_.push_back(c.mask());
  s.build_lookup();
  return s;
}

void StateSpace::build_lookup() {
  sorted_.resize(masks_.size());
  for (std::size_t i = 0; i < masks_.size(); ++i) sorted_[i] = {masks_[i], static_cast<std::uint32_t>(i)};
  std::sort(sorted_.begin(), sorted_.end());
}

std::optional<std::size_t> StateSpace::overflow() const {
  if (!has_overflow_) return std::nullopt;
  return masks_.size();
}

std::optional<std::size_t> StateSpace::index(Mask m) const {
  if (full_) {
    if (m < masks_.size()) return static_cast<std::size_t>(m);
    return std::nullopt;
  }
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), std::pair<Mask, std::uint32_t>{m, 0});
  if (it == sorted_.end() || it->first != m) return std::nullopt;
  return it->second;
}

GeneratorMatrix::GeneratorMatrix(const Rates& rates, StateSpace space)
    : rates_(rates), space_(std::move(space)) {
  if (space_.conserves_count() && (rates.alpha() > 0.0 || rates.beta() > 0.0))
    throw DomainError("a fixed-count state space requires alpha = beta = 0");
  const int L = space_.lattice_size();
  const std::size_t dim = space_.size();
  offsets_.assign(dim + 1, 0);
  exit_.assign(dim, 0.0);
  std::vector<Transition> row;
  for (std::size_t i = 0; i < dim; ++i) {
    offsets_[i] = transitions_.size();
    if (space_.is_overflow(i)) continue;
    const Mask m = space_.mask(i);
    row.clear();
    auto add = [&](Mask target, double rate) {
      if (rate <= 0.0) return;
      auto j = space_.index(target);
      if (!j) {
        auto ov = space_.overflow();
        if (!ov) throw DomainError("transition leaves the state space");
        j = ov;
      }
      row.push_back({static_cast<std::uint32_t>(*j), rate});
    };
    if (!(m & 1u)) {
      add(m | 1u, rates_.alpha());
    } else {
      add(m & ~Mask{1}, rates_.beta());
    }
    for (int k = 0; k + 1 < L; ++k) {
      const bool here = (m >> k) & 1u;
      const bool next = (m >> (k + 1)) & 1u;
      if (here && !next) add(m ^ (Mask{3} << k), rates_.p());
      if (!here && next) add(m ^ (Mask{3} << k), rates_.q());
    }
    double total = 0.0;
    for (const auto& tr : row) total += tr.rate;
    exit_[i] = total;
    max_exit_ = std::max(max_exit_, total);
    transitions_.insert(transitions_.end(), row.begin(), row.end());
  }
  offsets_[dim] = transitions_.size();
}

Eigen::MatrixXd GeneratorMatrix::dense() const {
  const auto dim = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (const auto& tr : row(i)) Q(i, tr.target) += tr.rate;
    Q(i, i) -= exit_[i];
  }
  return Q;
}

GeneratorMatrix build_generator(const Rates& rates, LatticeTruncation trunc) {
  return GeneratorMatrix(rates, StateSpace::full(trunc));
}

Distribution point_mass(const StateSpace& space, const Configuration& c) {
  if (!c.empty() && c.back() >= space.lattice_size())
    throw DomainError("configuration outside the lattice window");
  auto i = space.index(c.mask());
  if (!i) throw DomainError("configuration not in the state space");
  Distribution d(space.size(), 0.0);
  d[*i] = 1.0;
  return d;
}

Distribution bernoulli(const StateSpace& space, double rho) {
  if (!space.is_full()) throw CapacityError("Bernoulli initial law needs the full state space");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("density must lie in [0,1]");
  const int L = space.lattice_size();
  Distribution d(space.size());
  for (std::size_t m = 0; m < d.size(); ++m) {
    int k = popcount(m);
    d[m] = std::pow(rho, k) * std::pow(1.0 - rho, L - k);
  }
  return d;
}

Distribution evolve(const GeneratorMatrix& gen, const Distribution& initial, double t, double tolerance) {
  if (initial.size() != gen.dimension()) throw DomainError("distribution has wrong dimension");
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  const double lambda = gen.max_exit_rate();
  if (t == 0.0 || lambda == 0.0) return initial;
  const double mu = lambda * t;
  const auto cap = static_cast<std::size_t>(std::ceil(mu + 20.0 * std::sqrt(mu) + 200.0));
  const std::size_t dim = gen.dimension();

  Distribution v(initial), next(dim), out(dim, 0.0);
  double cumulative = 0.0;
  for (std::size_t k = 0;; ++k) {
    const double w = std::exp(-mu + static_cast<double>(k) * std::log(mu) - std::lgamma(static_cast<double>(k) + 1.0));
    if (w > 0.0)
      for (std::size_t i = 0; i < dim; ++i) out[i] += w * v[i];
    cumulative += w;
    if (1.0 - cumulative <= tolerance && static_cast<double>(k) > mu) break;
    if (k >= cap) throw AccuracyError("uniformization series exceeded its length cap", 1.0 - cumulative);
    for (std::size_t i = 0; i < dim; ++i) next[i] = v[i] * (1.0 - gen.exit_rate(i) / lambda);
    for (std::size_t i = 0; i < dim; ++i) {
      const double vi = v[i];
      if (vi == 0.0) continue;
      for (const auto& tr : gen.row(i)) next[tr.target] += vi * tr.rate / lambda;
    }
    v.swap(next);
  }
  return out;
}

std::vector<Distribution> evolve_many(const GeneratorMatrix& gen, const Distribution& initial,
                                      std::span<const double> times, double tolerance) {
  std::vector<Distribution> out;
  out.reserve(times.size());
  Distribution current = initial;
  double now = 0.0;
  for (double t : times) {
    if (t < now) throw DomainError("times must be nondecreasing");
    current = evolve(gen, current, t - now, tolerance);
    now = t;
    out.push_back(current);
  }
  return out;
}

Observables observables(const StateSpace& space, const Distribution& dist) {
  if (dist.size() != space.size()) throw DomainError("distribution has wrong dimension");
  const int L = space.lattice_size();
  const int nmax = space.max_particles();
  Observables obs;
  obs.count_probability.assign(nmax + 1, 0.0);
  std::vector<ConfigurationSet> sets;
  for (int n = 0; n <= nmax; ++n) {
    sets.emplace_back(n, L);
    obs.P.emplace_back(sets.back().size(), 0.0);
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.is_overflow(i)) {
      obs.overflow_mass += dist[i];
      continue;
    }
    const Mask m = space.mask(i);
    const int n = popcount(m);
    obs.P[n][*sets[n].index(m)] += dist[i];
    obs.count_probability[n] += dist[i];
    obs.mean_count += n * dist[i];
  }
  if (space.is_full()) {
    // Superset sums: zeta[m] = sum over masks containing m.
    std::vector<double> zeta(dist);
    for (int k = 0; k < L; ++k) {
      const Mask bit = Mask{1} << k;
      for (std::size_t m = 0; m < zeta.size(); ++m)
        if (!(m & bit)) zeta[m] += zeta[m | bit];
    }
    for (int n = 0; n <= nmax; ++n) {
      obs.Psi.emplace_back(sets[n].size());
      for (std::size_t k = 0; k < sets[n].size(); ++k) obs.Psi[n][k] = zeta[sets[n][k].mask()];
    }
  }
  return obs;
}

double correlation(const StateSpace& space, const Distribution& dist, const Configuration& c) {
  const Mask want = c.mask();
  double total = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.is_overflow(i)) continue;
    if ((space.mask(i) & want) == want) total += dist[i];
  }
  return total;
}

DeltaNMoments delta_n_moments(const GeneratorMatrix& gen, const Distribution& initial, double t) {
  const StateSpace& space = gen.space();
  if (space.overflow()) throw UnsupportedError("particle moments need a space without overflow");
  const std::size_t dim = space.size();
  std::vector<double> count(dim);
  for (std::size_t i = 0; i < dim; ++i) count[i] = popcount(space.mask(i));

  Distribution weighted(dim);
  double n0 = 0.0, n0sq = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    weighted[i] = initial[i] * count[i];
    n0 += weighted[i];
    n0sq += weighted[i] * count[i];
  }
  const Distribution pt = evolve(gen, initial, t);
  const Distribution wt = evolve(gen, weighted, t);
  double nt = 0.0, ntsq = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    nt += pt[i] * count[i];
    ntsq += pt[i] * count[i] * count[i];
    cross += wt[i] * count[i];
  }
  return {nt - n0, ntsq - 2.0 * cross + n0sq};
}

Eigen::MatrixXcd laplace_kernel(const GeneratorMatrix& gen, cplx s, const std::vector<std::size_t>& columns) {
  // Off the spectrum of Q the resolvent continues the transform to Re s <= 0.
  if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) throw DomainError("Laplace argument must be finite");
  using Sparse = Eigen::SparseMatrix<cplx>;
  const auto dim = static_cast<Eigen::Index>(gen.dimension());
  // phi(x, y) = [(s - Q)^{-1}]_{y,x}, so solve (s - Q^T) K = E.
  std::vector<Eigen::Triplet<cplx>> trips;
  for (Eigen::Index i = 0; i < dim; ++i) {
    trips.emplace_back(i, i, s + gen.exit_rate(i));
    for (const auto& tr : gen.row(i)) trips.emplace_back(tr.target, i, -tr.rate);
  }
  Sparse A(dim, dim);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  Eigen::SparseLU<Sparse> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw ConditioningError("sparse LU of s - Q failed", 0.0);

  std::vector<std::size_t> cols = columns;
  if (cols.empty()) {
    cols.resize(gen.dimension());
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = i;
  }
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(dim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) rhs(static_cast<Eigen::Index>(cols[c]), static_cast<Eigen::Index>(c)) = 1.0;
  Eigen::MatrixXcd K = lu.solve(rhs);
  return K;
}

}  // namespace asep::oracle
