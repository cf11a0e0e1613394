#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "asep/model.hpp"

namespace asep::mc {

enum class EventType : std::uint8_t { inject, eject, hop_right, hop_left };
const char* to_string(EventType type);

struct Event {
  double time;
  EventType type;
  int site;  // source site of a hop, 0 for reservoir events
};

/// Trajectory i draws from a substream seeded by (master, i) only.
struct SeedSpec {
  std::uint64_t master = 0;
  std::mt19937_64 stream(std::uint64_t index) const;
};

/// Either a fixed configuration or product Bernoulli(rho) sampled per trajectory.
struct InitialCondition {
  std::optional<Configuration> config;
  double rho = 0.0;

  static InitialCondition fixed(Configuration c);
  static InitialCondition bernoulli(double rho);
};

/// Contact means a particle reaching site L - 2 from a fixed start.
/// reflect: the closed box is the model, no monitoring; flag: estimators drop flagged runs;
/// grow: rerun on a doubled lattice from the same substream.
enum class BoundaryPolicy { reflect, flag, grow };

enum class StopRule { none, first_inject, first_eject };

struct SimulationSpec {
  Rates rates;
  int L;
  InitialCondition initial;
  double t_max;
  std::vector<double> observe;  // increasing times in [0, t_max] for snapshots
  BoundaryPolicy policy = BoundaryPolicy::grow;
  StopRule stop = StopRule::none;
  bool record_events = false;
  bool audit_rates = false;
  int max_L = 1 << 16;

  void validate() const;
};

struct Snapshot {
  double time;
  long delta_n;
  int count;
};

struct Trajectory {
  std::vector<Event> events;  // filled when record_events
  std::vector<std::uint8_t> occupancy;  // final state on [0, L_used)
  long delta_n = 0;  // injections minus ejections up to the end time
  double end_time = 0.0;
  std::vector<Snapshot> snapshots;
  double first_inject = -1.0;  // negative when no such event
  double first_eject = -1.0;
  bool boundary_contact = false;
  int L_used = 0;
  /// Event counts and time-integrated enabled rates, indexed by EventType.
  std::array<std::uint64_t, 4> event_counts{};
  std::array<double, 4> integrated_rates{};

  int count() const;
  std::uint64_t mask() const;  // L_used <= 64
};

/// Exact event-driven sample path. Uses thinning with the bound alpha + beta + n(p + q).
Trajectory simulate(const SimulationSpec& spec, const SeedSpec& seed, std::uint64_t index);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t runs = 0;
  double censored_fraction = 0.0;
  std::uint64_t flagged = 0;  // runs dropped for boundary contact under the flag policy
};

/// Fraction of runs without an ejection by t_max.
Estimate never_ejected(SimulationSpec spec, std::uint64_t runs, const SeedSpec& seed);
/// Fraction of runs without an injection by t_max.
Estimate no_injection_by(SimulationSpec spec, std::uint64_t runs, const SeedSpec& seed);

enum class HittingEvent { first_inject, first_eject };
/// Mean hitting time censored at t_max; censoring above max_censored throws CensoringError.
Estimate mean_hitting_time(SimulationSpec spec, HittingEvent event, std::uint64_t runs, const SeedSpec& seed,
                           double max_censored = 0.01);

struct DeltaNEstimate {
  double time;
  Estimate mean;
  Estimate second;  // <Delta N^2>
};
/// Moments of Delta N at every observe time.
std::vector<DeltaNEstimate> deltaN_moments(const SimulationSpec& spec, std::uint64_t runs, const SeedSpec& seed);

/// Frequencies of final configurations, indexed by occupation mask; L <= 20.
std::vector<std::uint64_t> configuration_counts(const SimulationSpec& spec, std::uint64_t runs,
                                                const SeedSpec& seed);
/// P_n(t_max) for n = 0..L with binomial standard errors.
std::vector<Estimate> count_distribution(const SimulationSpec& spec, std::uint64_t runs, const SeedSpec& seed);
/// Psi(c; t_max): probability that all sites of c are occupied.
Estimate correlation(const SimulationSpec& spec, const Configuration& c, std::uint64_t runs, const SeedSpec& seed);

struct ChiSquared {
  double statistic;
  int dof;
  double p_value;
  int pooled_bins;
};
/// Pearson test of observed counts against probabilities; cells with expectation < 5 are pooled.
ChiSquared chi_squared_test(const std::vector<std::uint64_t>& counts, const std::vector<double>& probabilities);

struct RateAudit {
  std::array<std::uint64_t, 4> counts;
  std::array<double, 4> expected;
  std::array<double, 4> z;  // (count - expected) / sqrt(expected)
};
/// Event counts of one long run against integrated enabled rates.
RateAudit audit_event_rates(SimulationSpec spec, const SeedSpec& seed, std::uint64_t index = 0);

}  // namespace asep::mc
