#include "asep/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "asep/errors.hpp"

namespace asep {

Rates::Rates(double p, double q, double alpha, double beta) : p_(p), q_(q), alpha_(alpha), beta_(beta) {
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0))
    throw DomainError("hop probabilities must lie in [0,1]");
  if (std::abs(p + q - 1.0) > 1e-12) throw DomainError("p + q must equal 1");
  if (p + q != 1.0) {
    double total = p + q;
    p_ = p / total;
    q_ = 1.0 - p_;
  }
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw DomainError("reservoir rates must be finite and nonnegative");
}

double Rates::tau() const {
  if (q_ == 0.0) throw UnsupportedError("tau = p/q is undefined for q = 0");
  return p_ / q_;
}

Configuration::Configuration(std::vector<int> sites) : sites_(std::move(sites)) {
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i] < 0) throw DomainError("configuration sites must be nonnegative");
    if (i > 0 && sites_[i] <= sites_[i - 1])
      throw DomainError("configuration sites must be strictly increasing");
  }
}

Configuration Configuration::parse(std::string_view text) {
  std::vector<int> sites;
  std::string token;
  std::string s(text);
  if (s.empty() || s == "-" || s == "empty") return {};
  std::stringstream in(s);
  while (std::getline(in, token, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(token, &used);
    } catch (const std::exception&) {
      throw DomainError("cannot parse site '" + token + "'");
    }
    if (used != token.size()) throw DomainError("cannot parse site '" + token + "'");
    sites.push_back(v);
  }
  return Configuration(std::move(sites));
}

Configuration Configuration::from_mask(std::uint64_t mask) {
  std::vector<int> sites;
  for (int k = 0; mask != 0; ++k, mask >>= 1)
    if (mask & 1u) sites.push_back(k);
  return Configuration(std::move(sites));
}

bool Configuration::contains(int site) const {
  return std::binary_search(sites_.begin(), sites_.end(), site);
}

std::uint64_t Configuration::mask() const {
  std::uint64_t m = 0;
  for (int x : sites_) {
    if (x >= 64) throw CapacityError("configuration does not fit a 64-bit mask");
    m |= std::uint64_t{1} << x;
  }
  return m;
}

std::string Configuration::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(sites_[i]);
  }
  return out;
}

Configuration Configuration::with_origin() const {
  std::vector<int> s;
  s.reserve(sites_.size() + 1);
  s.push_back(0);
  s.insert(s.end(), sites_.begin(), sites_.end());
  return Configuration(std::move(s));
}

Configuration Configuration::tail() const {
  if (sites_.empty()) throw DomainError("empty configuration has no tail");
  return Configuration(std::vector<int>(sites_.begin() + 1, sites_.end()));
}

SignedPermutation::SignedPermutation(std::vector<int> images) : images_(std::move(images)) {
  const int n = static_cast<int>(images_.size());
  std::vector<bool> seen(n + 1, false);
  for (int v : images_) {
    int a = std::abs(v);
    if (v == 0 || a > n || seen[a]) throw DomainError("not a signed permutation");
    seen[a] = true;
  }
}

bool SignedPermutation::is_identity() const {
  for (std::size_t i = 0; i < images_.size(); ++i)
    if (images_[i] != static_cast<int>(i) + 1) return false;
  return true;
}

void QuadratureSpec::validate() const {
  if (base_radius && !(*base_radius > 0.0)) throw DomainError("base radius must be positive");
  if (!(radius_spread > 0.0)) throw DomainError("radius spread must be positive");
  if (nodes_per_contour < 16) throw DomainError("at least 16 nodes per contour are required");
  if (!(tolerance > 0.0)) throw DomainError("quadrature tolerance must be positive");
  if (max_doublings < 0) throw DomainError("max_doublings must be nonnegative");
}

LatticeTruncation::LatticeTruncation(int sites) : L(sites) {
  if (sites < 1) throw DomainError("lattice truncation needs L >= 1");
}

std::vector<SignedPermutation> enumerate_signed_permutations(int n) {
  if (n < 0) throw DomainError("negative order");
  if (n > 6) throw CapacityError("signed permutations are enumerated only for n <= 6");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  std::vector<SignedPermutation> out;
  do {
    for (unsigned signs = 0; signs < (1u << n); ++signs) {
      std::vector<int> img(perm);
      for (int i = 0; i < n; ++i)
        if (signs & (1u << i)) img[i] = -img[i];
      out.emplace_back(std::move(img));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<std::pair<int, int>> inversions(const SignedPermutation& sigma) {
  std::vector<std::pair<int, int>> out;
  const std::size_t n = sigma.order();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (int sign : {1, -1}) {
        int a = sign * sigma[i];
        if (a > sigma[j]) out.emplace_back(a, sigma[j]);
      }
  return out;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

std::vector<Configuration> enumerate_configurations(int n, int L) {
  std::vector<Configuration> out;
  if (n < 0 || n > L) return out;
  out.reserve(binomial(L, n));
  std::vector<int> c(n);
  std::iota(c.begin(), c.end(), 0);
  while (true) {
    out.emplace_back(c);
    int i = n - 1;
    while (i >= 0 && c[i] == L - n + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < n; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

ConfigurationSet::ConfigurationSet(int n, int L) : n_(n), L_(L), configs_(enumerate_configurations(n, L)) {
  if (L > 64) throw CapacityError("configuration sets are limited to 64 sites");
  lookup_.reserve(configs_.size());
  for (std::size_t i = 0; i < configs_.size(); ++i) lookup_.emplace(configs_[i].mask(), i);
}

std::optional<std::size_t> ConfigurationSet::index(std::uint64_t mask) const {
  auto it = lookup_.find(mask);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ConfigurationSet::index(const Configuration& c) const {
  if (static_cast<int>(c.size()) != n_ || (!c.empty() && c.back() >= L_)) return std::nullopt;
  return index(c.mask());
}

}  // namespace asep
