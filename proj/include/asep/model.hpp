#pragma once

#include <compare>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace asep {

using cplx = std::complex<double>;

/// Hop probabilities (p right, q left) and reservoir rates at site 0.
class Rates {
 public:
  Rates(double p, double q, double alpha = 0.0, double beta = 0.0);

  static Rates ssep(double alpha = 0.0, double beta = 0.0) { return {0.5, 0.5, alpha, beta}; }
  static Rates tasep(double alpha = 0.0, double beta = 0.0) { return {1.0, 0.0, alpha, beta}; }

  double p() const { return p_; }
  double q() const { return q_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double gamma() const { return alpha_ + beta_; }
  double tau() const;
  bool symmetric() const { return p_ == q_; }

  Rates with_reservoir(double alpha, double beta) const { return {p_, q_, alpha, beta}; }
  Rates closed() const { return {p_, q_, 0.0, 0.0}; }

 private:
  double p_, q_, alpha_, beta_;
};

/// Strictly increasing list of occupied sites, all >= 0.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<int> sites);
  Configuration(std::initializer_list<int> sites) : Configuration(std::vector<int>(sites)) {}

  static Configuration parse(std::string_view text);
  static Configuration from_mask(std::uint64_t mask);

  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  int operator[](std::size_t i) const { return sites_[i]; }
  const std::vector<int>& sites() const { return sites_; }
  int front() const { return sites_.front(); }
  int back() const { return sites_.back(); }
  bool contains(int site) const;

  std::uint64_t mask() const;
  std::string to_string() const;

  /// Configuration with site 0 prepended; requires front() > 0.
  Configuration with_origin() const;
  /// Configuration without its first site.
  Configuration tail() const;

  auto operator<=>(const Configuration&) const = default;

 private:
  std::vector<int> sites_;
};

/// Element of B_n in one-line notation: images[i] = sigma(i+1).
class SignedPermutation {
 public:
  explicit SignedPermutation(std::vector<int> images);
  std::size_t order() const { return images_.size(); }
  int operator[](std::size_t i) const { return images_[i]; }
  const std::vector<int>& images() const { return images_; }
  bool is_identity() const;

  auto operator<=>(const SignedPermutation&) const = default;

 private:
  std::vector<int> images_;
};

/// Circles around `center` with radii base_radius * (1 + a * radius_spread).
/// Unset fields take rate-dependent defaults (see resolve()).
struct QuadratureSpec {
  std::optional<double> base_radius;
  double radius_spread = 0.05;
  int nodes_per_contour = 64;
  std::optional<cplx> center;
  double tolerance = 1e-9;
  int max_doublings = 4;
  bool adaptive = true;

  void validate() const;
};

struct LatticeTruncation {
  int L;
  explicit LatticeTruncation(int sites);
};

std::vector<SignedPermutation> enumerate_signed_permutations(int n);

/// Inversion pairs (a, b) as signed indices: for i<j and each sign, (+-sigma(i), sigma(j))
/// whenever +-sigma(i) > sigma(j).
std::vector<std::pair<int, int>> inversions(const SignedPermutation& sigma);

/// All n-subsets of [0, L) in lexicographic order.
std::vector<Configuration> enumerate_configurations(int n, int L);

std::uint64_t binomial(int n, int k);

/// Lexicographic list of configurations with reverse lookup by bitmask.
class ConfigurationSet {
 public:
  ConfigurationSet(int n, int L);
  int particles() const { return n_; }
  int lattice_size() const { return L_; }
  std::size_t size() const { return configs_.size(); }
  const Configuration& operator[](std::size_t i) const { return configs_[i]; }
  const std::vector<Configuration>& configurations() const { return configs_; }
  std::optional<std::size_t> index(const Configuration& c) const;
  std::optional<std::size_t> index(std::uint64_t mask) const;

 private:
  int n_, L_;
  std::vector<Configuration> configs_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

}  // namespace asep
