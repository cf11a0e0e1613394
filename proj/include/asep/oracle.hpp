#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "asep/model.hpp"

namespace asep::oracle {

using Mask = std::uint64_t;

/// Finite set of occupation bitmasks on [0, L), site 0 = least significant bit.
/// The full space indexes states by their mask; the fixed-count space lists
/// n-particle states in lexicographic order of their site tuples; the capped
/// space lists counts 0..cap in that order followed by one absorbing overflow
/// state that collects injections beyond the cap.
class StateSpace {
 public:
  static StateSpace full(LatticeTruncation trunc);
  static StateSpace fixed_count(LatticeTruncation trunc, int n);
  static StateSpace capped(LatticeTruncation trunc, int max_particles);

  int lattice_size() const { return L_; }
  std::size_t size() const { return masks_.size() + (has_overflow_ ? 1 : 0); }
  bool is_full() const { return full_; }
  bool conserves_count() const { return fixed_; }
  int max_particles() const { return max_n_; }
  std::optional<std::size_t> overflow() const;
  bool is_overflow(std::size_t i) const { return has_overflow_ && i == masks_.size(); }

  Mask mask(std::size_t i) const { return masks_[i]; }
  std::optional<std::size_t> index(Mask m) const;

 private:
  StateSpace() = default;
  void build_lookup();

  int L_ = 0;
  int max_n_ = 0;
  bool full_ = false;
  bool fixed_ = false;
  bool has_overflow_ = false;
  std::vector<Mask> masks_;
  std::vector<std::uint32_t> by_mask_;  // dense lookup when L <= 24
  std::vector<std::pair<Mask, std::uint32_t>> sorted_;
};

struct Transition {
  std::uint32_t target;
  double rate;
};

/// Open-boundary exclusion generator on a state space; rows are source states.
class GeneratorMatrix {
 public:
  GeneratorMatrix(const Rates& rates, StateSpace space);

  const Rates& rates() const { return rates_; }
  const StateSpace& space() const { return space_; }
  std::size_t dimension() const { return space_.size(); }

  std::span<const Transition> row(std::size_t i) const {
    return {transitions_.data() + offsets_[i], transitions_.data() + offsets_[i + 1]};
  }
  double exit_rate(std::size_t i) const { return exit_[i]; }
  double max_exit_rate() const { return max_exit_; }

  /// Dense Q (row = source); intended for small spaces in tests.
  Eigen::MatrixXd dense() const;

 private:
  Rates rates_;
  StateSpace space_;
  std::vector<std::size_t> offsets_;
  std::vector<Transition> transitions_;
  std::vector<double> exit_;
  double max_exit_ = 0.0;
};

/// Full 2^L generator; L <= 16.
GeneratorMatrix build_generator(const Rates& rates, LatticeTruncation trunc);

using Distribution = std::vector<double>;

Distribution point_mass(const StateSpace& space, const Configuration& c);
/// Product Bernoulli(rho) law; full space only.
Distribution bernoulli(const StateSpace& space, double rho);

/// Row vector pi(t) = pi(0) exp(tQ) by uniformization; Poisson tail <= tolerance.
Distribution evolve(const GeneratorMatrix& gen, const Distribution& initial, double t,
                    double tolerance = 1e-12);
/// Sequential evolution through increasing times.
std::vector<Distribution> evolve_many(const GeneratorMatrix& gen, const Distribution& initial,
                                      std::span<const double> times, double tolerance = 1e-12);

struct Observables {
  /// P[n][k]: probability of the k-th n-particle configuration (lexicographic).
  std::vector<std::vector<double>> P;
  std::vector<double> count_probability;
  /// Psi[n][k]: probability that all sites of the k-th configuration are occupied.
  /// Filled for the full space only.
  std::vector<std::vector<double>> Psi;
  double overflow_mass = 0.0;
  double mean_count = 0.0;
};

Observables observables(const StateSpace& space, const Distribution& dist);

/// Probability that every site of c is occupied.
double correlation(const StateSpace& space, const Distribution& dist, const Configuration& c);

struct DeltaNMoments {
  double mean;
  double second;
};

/// Exact moments of N(t) - N(0) for the given initial law.
DeltaNMoments delta_n_moments(const GeneratorMatrix& gen, const Distribution& initial, double t);

/// Laplace kernel phi(x, y; s) = int_0^inf P(y -> x, t) e^{-st} dt on the given state space,
/// as a matrix with rows x and columns y; `columns` restricts the source states.
/// For Re s <= 0 this is the resolvent (s - Q^T)^{-1}, defined off the spectrum.
Eigen::MatrixXcd laplace_kernel(const GeneratorMatrix& gen, cplx s,
                                const std::vector<std::size_t>& columns = {});

}  // namespace asep::oracle
