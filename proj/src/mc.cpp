#include "asep/mc.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>

#include "asep/errors.hpp"
#include "asep/parallel.hpp"

namespace asep::mc {

namespace {

constexpr std::uint64_t kChunk = 4096;

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool fixed_start(const SimulationSpec& spec) { return spec.initial.config.has_value(); }

// One attempt on a lattice of L sites. Returns false when the grow policy needs a restart.
bool run(const SimulationSpec& spec, int L, std::mt19937_64& rng, Trajectory& tr) {
  const double p = spec.rates.p(), q = spec.rates.q();
  const double a = spec.rates.alpha(), b = spec.rates.beta();
  const double hop = p + q;
  const double right_share = hop > 0.0 ? p / hop : 0.0;
  const bool monitor = fixed_start(spec) && spec.policy != BoundaryPolicy::reflect;

  tr = Trajectory{};
  tr.L_used = L;
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(L), 0);
  std::vector<int> pos;
  std::vector<int> where(static_cast<std::size_t>(L), -1);
  const auto add = [&](int x) {
    occ[x] = 1;
    where[x] = static_cast<int>(pos.size());
    pos.push_back(x);
  };
  const auto remove = [&](int x) {
    const int k = where[x];
    const int last = pos.back();
    pos[k] = last;
    where[last] = k;
    pos.pop_back();
    where[x] = -1;
    occ[x] = 0;
  };
  const auto move = [&](int from, int to) {
    const int k = where[from];
    pos[k] = to;
    where[to] = k;
    where[from] = -1;
    occ[from] = 0;
    occ[to] = 1;
  };

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (spec.initial.config) {
    for (int x : spec.initial.config->sites()) add(x);
  } else {
    for (int x = 0; x < L; ++x)
      if (unit(rng) < spec.initial.rho) add(x);
  }

  const auto enabled = [&](std::array<double, 4>& r) {
    r = {occ[0] ? 0.0 : a, occ[0] ? b : 0.0, 0.0, 0.0};
    for (int x : pos) {
      if (x + 1 < L && !occ[x + 1]) r[2] += p;
      if (x > 0 && !occ[x - 1]) r[3] += q;
    }
  };

  std::size_t next_obs = 0;
  const auto observe_until = [&](double t) {
    while (next_obs < spec.observe.size() && spec.observe[next_obs] < t) {
      tr.snapshots.push_back({spec.observe[next_obs], tr.delta_n, static_cast<int>(pos.size())});
      ++next_obs;
    }
  };
  const auto log = [&](double t, EventType type, int site) {
    ++tr.event_counts[static_cast<int>(type)];
    if (spec.record_events) tr.events.push_back({t, type, site});
  };

  double t = 0.0;
  bool stopped = false;
  while (true) {
    const double R = a + b + hop * static_cast<double>(pos.size());
    double t_next = std::numeric_limits<double>::infinity();
    if (R > 0.0) t_next = t + std::exponential_distribution<double>(R)(rng);
    const double horizon = std::min(t_next, spec.t_max);
    if (spec.audit_rates) {
      std::array<double, 4> r;
      enabled(r);
      for (int k = 0; k < 4; ++k) tr.integrated_rates[k] += r[k] * (horizon - t);
    }
    if (t_next > spec.t_max) break;
    observe_until(t_next);
    t = t_next;
    const double u = unit(rng) * R;
    if (u < a) {
      if (occ[0]) continue;
      add(0);
      ++tr.delta_n;
      log(t, EventType::inject, 0);
      if (tr.first_inject < 0.0) tr.first_inject = t;
      if (spec.stop == StopRule::first_inject) {
        stopped = true;
        break;
      }
    } else if (u < a + b) {
      if (!occ[0]) continue;
      remove(0);
      --tr.delta_n;
      log(t, EventType::eject, 0);
      if (tr.first_eject < 0.0) tr.first_eject = t;
      if (spec.stop == StopRule::first_eject) {
        stopped = true;
        break;
      }
    } else {
      const double w = std::min((u - a - b) / hop, static_cast<double>(pos.size()) - 1e-12);
      const auto k = static_cast<std::size_t>(w);
      const int x = pos[k];
      if (w - static_cast<double>(k) < right_share) {
        if (x + 1 >= L || occ[x + 1]) continue;
        move(x, x + 1);
        log(t, EventType::hop_right, x);
        if (monitor && x + 1 >= L - 2) {
          if (spec.policy == BoundaryPolicy::grow) return false;
          tr.boundary_contact = true;
        }
      } else {
        if (x == 0 || occ[x - 1]) continue;
        move(x, x - 1);
        log(t, EventType::hop_left, x);
      }
    }
  }
  tr.end_time = stopped ? t : spec.t_max;
  if (!stopped) observe_until(std::numeric_limits<double>::infinity());
  tr.occupancy = std::move(occ);
  return true;
}

struct Sums {
  double s1 = 0.0, s2 = 0.0;
  std::uint64_t n = 0, censored = 0, flagged = 0;
  void add(double v) {
    s1 += v;
    s2 += v * v;
    ++n;
  }
  void merge(const Sums& o) {
    s1 += o.s1;
    s2 += o.s2;
    n += o.n;
    censored += o.censored;
    flagged += o.flagged;
  }
};

Estimate finish(const Sums& s, bool binary) {
  Estimate e;
  e.runs = s.n;
  e.flagged = s.flagged;
  if (s.n == 0) return e;
  const double n = static_cast<double>(s.n);
  e.value = s.s1 / n;
  const double var = binary ? e.value * (1.0 - e.value) : std::max(0.0, (s.s2 - n * e.value * e.value) / (n - 1.0));
  e.std_error = s.n > 1 ? std::sqrt(var / n) : 0.0;
  e.censored_fraction = static_cast<double>(s.censored) / static_cast<double>(s.n + s.flagged);
  return e;
}

// Runs trajectories in fixed chunks and merges chunk results in order, so estimates
// do not depend on the thread count.
template <class Acc, class Visit>
Acc accumulate(const SimulationSpec& spec, std::uint64_t runs, const SeedSpec& seed, Acc init, Visit visit) {
  spec.validate();
  if (runs == 0) throw DomainError("need at least one run");
  const std::uint64_t chunks = (runs + kChunk - 1) / kChunk;
  std::vector<Acc> partial(chunks, init);
  parallel_for(chunks, [&](std::size_t c) {
    Acc& acc = partial[c];
    const std::uint64_t end = std::min(runs, (c + 1) * kChunk);
    for (std::uint64_t i = c * kChunk; i < end; ++i) visit(acc, simulate(spec, seed, i));
  });
  Acc total = init;
  for (const Acc& a : partial) total.merge(a);
  return total;
}

void require_runs(std::uint64_t runs) {
  if (runs < 1000) throw DomainError("estimators need at least 1000 runs");
}

}  // namespace

const char* to_string(EventType type) {
  switch (type) {
    case EventType::inject: return "inject";
    case EventType::eject: return "eject";
    case EventType::hop_right: return "hop_right";
    case EventType::hop_left: return "hop_left";
  }
  return "unknown";
}

std::mt19937_64 SeedSpec::stream(std::uint64_t index) const {
  return std::mt19937_64(mix(mix(master) ^ index));
}

InitialCondition InitialCondition::fixed(Configuration c) { return {std::move(c), 0.0}; }

InitialCondition InitialCondition::bernoulli(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("density must lie in [0, 1]");
  return {std::nullopt, rho};
}

void SimulationSpec::validate() const {
  if (L < 1 || L > max_L) throw DomainError("lattice size must lie in [1, max_L]");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw DomainError("t_max must be finite and nonnegative");
  if (!std::is_sorted(observe.begin(), observe.end())) throw DomainError("observation times must be increasing");
  if (!observe.empty() && (observe.front() < 0.0 || observe.back() > t_max))
    throw DomainError("observation times must lie in [0, t_max]");
  if (!observe.empty() && stop != StopRule::none) throw DomainError("snapshots need a run to t_max");
  if (initial.config && !initial.config->empty()) {
    const int back = initial.config->back();
    if (back >= L) throw DomainError("initial configuration outside the lattice");
    if (policy != BoundaryPolicy::reflect && back >= L - 2)
      throw DomainError("initial configuration already touches the monitored edge");
  }
}

int Trajectory::count() const {
  return static_cast<int>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

std::uint64_t Trajectory::mask() const {
  if (L_used > 64) throw CapacityError("masks hold at most 64 sites");
  std::uint64_t m = 0;
  for (int x = 0; x < L_used; ++x)
    if (occupancy[x]) m |= std::uint64_t{1} << x;
  return m;
}

Trajectory simulate(const SimulationSpec& spec, const SeedSpec& seed, std::uint64_t index) {
  spec.validate();
  Trajectory tr;
  for (int L = spec.L;; L *= 2) {
    if (L > spec.max_L) throw CapacityError("boundary contact persists up to max_L");
    auto rng = seed.stream(index);
    if (run(spec, L, rng, tr)) return tr;
  }
}

Estimate never_ejected(SimulationSpec spec, std::uint64_t runs, const SeedSpec& seed) {
  require_runs(runs);
  spec.stop = StopRule::first_eject;
  const Sums s = accumulate(spec, runs, seed, Sums{}, [&](Sums& acc, const Trajectory& tr) {
    if (spec.policy == BoundaryPolicy::flag && tr.boundary_contact) return void(++acc.flagged);
    acc.add(tr.first_eject < 0.0 ? 1.0 : 0.0);
  });
  return finish(s, true);
}

Estimate no_injection_by(SimulationSpec spec, std::uint64_t runs, const SeedSpec& seed) {
  require_runs(runs);
  spec.stop = StopRule::first_inject;
  const Sums s = accumulate(spec, runs, seed, Sums{}, [&](Sums& acc, const Trajectory& tr) {
    if (spec.policy == BoundaryPolicy::flag && tr.boundary_contact) return void(++acc.flagged);
    acc.add(tr.first_inject < 0.0 ? 1.0 : 0.0);
  });
  return finish(s, true);
}

Estimate mean_hitting_time(SimulationSpec spec, HittingEvent event, std::uint64_t runs, const SeedSpec& seed,
                           double max_censored) {
  require_runs(runs);
  spec.stop = event == HittingEvent::first_inject ? StopRule::first_inject : StopRule::first_eject;
  const Sums s = accumulate(spec, runs, seed, Sums{}, [&](Sums& acc, const Trajectory& tr) {
    if (spec.policy == BoundaryPolicy::flag && tr.boundary_contact) return void(++acc.flagged);
    const double hit = event == HittingEvent::first_inject ? tr.first_inject : tr.first_eject;
    if (hit < 0.0) ++acc.censored;
    acc.add(hit < 0.0 ? spec.t_max : hit);
  });
  Estimate e = finish(s, false);
  if (e.censored_fraction > max_censored)
    throw CensoringError("too many runs censored at t_max; raise t_max", e.censored_fraction);
  return e;
}

std::vector<DeltaNEstimate> deltaN_moments(const SimulationSpec& spec, std::uint64_t runs, const SeedSpec& seed) {
  require_runs(runs);
  if (spec.observe.empty()) throw DomainError("deltaN moments need observation times");
  struct Acc {
    std::vector<Sums> first, second;
    std::uint64_t flagged = 0;
    void merge(const Acc& o) {
      for (std::size_t k = 0; k < first.size(); ++k) {
        first[k].merge(o.first[k]);
        second[k].merge(o.second[k]);
      }
      flagged += o.flagged;
    }
  };
  const std::size_t m = spec.observe.size();
  const Acc total = accumulate(spec, runs, seed, Acc{std::vector<Sums>(m), std::vector<Sums>(m)},
                               [&](Acc& acc, const Trajectory& tr) {
                                 if (spec.policy == BoundaryPolicy::flag && tr.boundary_contact) {
                                   ++acc.flagged;
                                   return;
                                 }
                                 for (std::size_t k = 0; k < m; ++k) {
                                   const auto d = static_cast<double>(tr.snapshots[k].delta_n);
                                   acc.first[k].add(d);
                                   acc.second[k].add(d * d);
                                 }
                               });
  std::vector<DeltaNEstimate> out;
  for (std::size_t k = 0; k < m; ++k) {
    DeltaNEstimate e{spec.observe[k], finish(total.first[k], false), finish(total.second[k], false)};
    e.mean.flagged = e.second.flagged = total.flagged;
    out.push_back(e);
  }
  return out;
}

std::vector<std::uint64_t> configuration_counts(const SimulationSpec& spec, std::uint64_t runs,
                                                const SeedSpec& seed) {
  if (spec.L > 20) throw CapacityError("configuration histograms need L <= 20");
  if (spec.policy == BoundaryPolicy::grow) throw DomainError("histograms need a fixed lattice");
  struct Acc {
    std::vector<std::uint64_t> counts;
    void merge(const Acc& o) {
      for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += o.counts[k];
    }
  };
  const Acc total = accumulate(spec, runs, seed, Acc{std::vector<std::uint64_t>(std::size_t{1} << spec.L)},
                               [](Acc& acc, const Trajectory& tr) { ++acc.counts[tr.mask()]; });
  return total.counts;
}

std::vector<Estimate> count_distribution(const SimulationSpec& spec, std::uint64_t runs, const SeedSpec& seed) {
  require_runs(runs);
  struct Acc {
    std::vector<std::uint64_t> counts;
    std::uint64_t n = 0;
    void merge(const Acc& o) {
      if (counts.size() < o.counts.size()) counts.resize(o.counts.size());
      for (std::size_t k = 0; k < o.counts.size(); ++k) counts[k] += o.counts[k];
      n += o.n;
    }
  };
  const Acc total = accumulate(spec, runs, seed, Acc{std::vector<std::uint64_t>(spec.L + 1)},
                               [](Acc& acc, const Trajectory& tr) {
                                 const auto c = static_cast<std::size_t>(tr.count());
                                 if (acc.counts.size() <= c) acc.counts.resize(c + 1);
                                 ++acc.counts[c];
                                 ++acc.n;
                               });
  std::vector<Estimate> out;
  const double n = static_cast<double>(total.n);
  for (std::uint64_t c : total.counts) {
    const double v = static_cast<double>(c) / n;
    out.push_back({v, std::sqrt(v * (1.0 - v) / n), total.n, 0.0, 0});
  }
  return out;
}

Estimate correlation(const SimulationSpec& spec, const Configuration& c, std::uint64_t runs, const SeedSpec& seed) {
  require_runs(runs);
  const Sums s = accumulate(spec, runs, seed, Sums{}, [&](Sums& acc, const Trajectory& tr) {
    if (spec.policy == BoundaryPolicy::flag && tr.boundary_contact) return void(++acc.flagged);
    bool all = true;
    for (int x : c.sites()) all = all && x < tr.L_used && tr.occupancy[x];
    acc.add(all ? 1.0 : 0.0);
  });
  return finish(s, true);
}

ChiSquared chi_squared_test(const std::vector<std::uint64_t>& counts, const std::vector<double>& probabilities) {
  if (counts.size() != probabilities.size()) throw DomainError("counts and probabilities differ in length");
  double n = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  if (!(n > 0.0)) throw DomainError("no observations");
  struct Bin {
    double observed = 0.0, expected = 0.0;
  };
  std::vector<Bin> bins;
  Bin pooled;
  int pooled_cells = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double e = n * probabilities[k], o = static_cast<double>(counts[k]);
    if (e >= 5.0) {
      bins.push_back({o, e});
    } else {
      pooled.observed += o;
      pooled.expected += e;
      ++pooled_cells;
    }
  }
  if (pooled_cells > 0) {
    if (pooled.expected < 5.0 && !bins.empty()) {
      auto smallest = std::min_element(bins.begin(), bins.end(),
                                       [](const Bin& x, const Bin& y) { return x.expected < y.expected; });
      smallest->observed += pooled.observed;
      smallest->expected += pooled.expected;
    } else {
      bins.push_back(pooled);
    }
  }
  if (bins.size() < 2) throw DomainError("chi-squared test needs at least two bins");
  double stat = 0.0;
  for (const Bin& b : bins) {
    if (b.expected == 0.0) {
      if (b.observed > 0.0) stat = std::numeric_limits<double>::infinity();
      continue;
    }
    stat += (b.observed - b.expected) * (b.observed - b.expected) / b.expected;
  }
  const int dof = static_cast<int>(bins.size()) - 1;
  const double pv = std::isfinite(stat) ? boost::math::cdf(boost::math::complement(
                                              boost::math::chi_squared_distribution<double>(dof), stat))
                                        : 0.0;
  return {stat, dof, pv, pooled_cells};
}

RateAudit audit_event_rates(SimulationSpec spec, const SeedSpec& seed, std::uint64_t index) {
  spec.audit_rates = true;
  spec.stop = StopRule::none;
  const Trajectory tr = simulate(spec, seed, index);
  RateAudit r{};
  for (int k = 0; k < 4; ++k) {
    r.counts[k] = tr.event_counts[k];
    r.expected[k] = tr.integrated_rates[k];
    r.z[k] = r.expected[k] > 0.0 ? (static_cast<double>(r.counts[k]) - r.expected[k]) / std::sqrt(r.expected[k])
                                 : (r.counts[k] == 0 ? 0.0 : std::numeric_limits<double>::infinity());
  }
  return r;
}

}  // namespace asep::mc
