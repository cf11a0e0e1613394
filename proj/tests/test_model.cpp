#include <doctest.h>

#include <set>

#include "asep/errors.hpp"
#include "asep/model.hpp"

using namespace asep;

TEST_CASE("rates validation") {
  Rates r(0.7, 0.3, 0.5, 0.2);
  CHECK(r.p() == 0.7);
  CHECK(r.tau() == doctest::Approx(7.0 / 3.0));
  CHECK(r.gamma() == doctest::Approx(0.7));
  CHECK_THROWS_AS(Rates(0.6, 0.6), DomainError);
  CHECK_THROWS_AS(Rates(0.5, 0.5, -1.0), DomainError);
  CHECK_THROWS_AS(Rates::tasep().tau(), UnsupportedError);

  Rates nearly(0.6 + 5e-13, 0.4);
  CHECK(nearly.p() + nearly.q() == 1.0);
}

TEST_CASE("configuration construction and parsing") {
  Configuration c{0, 3, 7};
  CHECK(c.size() == 3);
  CHECK(c.mask() == 0b10001001u);
  CHECK(c.to_string() == "0,3,7");
  CHECK(Configuration::parse("0,3,7") == c);
  CHECK(Configuration::parse("").empty());
  CHECK(Configuration::from_mask(0b1010) == Configuration{1, 3});
  CHECK(Configuration{2, 5}.with_origin() == Configuration{0, 2, 5});
  CHECK(c.tail() == Configuration{3, 7});
  CHECK_THROWS_AS(Configuration({3, 1}), DomainError);
  CHECK_THROWS_AS(Configuration({1, 1}), DomainError);
  CHECK_THROWS_AS(Configuration({-1, 2}), DomainError);
  CHECK_THROWS_AS(Configuration::parse("3,1"), DomainError);
  CHECK_THROWS_AS(Configuration::parse("1,x"), DomainError);
}

TEST_CASE("signed permutation enumeration sizes") {
  const std::size_t expected[] = {1, 2, 8, 48, 384, 3840};
  for (int n = 0; n <= 5; ++n) {
    auto all = enumerate_signed_permutations(n);
    CHECK(all.size() == expected[n]);
    std::set<std::vector<int>> distinct;
    for (const auto& s : all) distinct.insert(s.images());
    CHECK(distinct.size() == all.size());
  }
  CHECK_THROWS_AS(enumerate_signed_permutations(7), CapacityError);
  auto one = enumerate_signed_permutations(1);
  CHECK(one[0].images() == std::vector<int>{1});
  CHECK(one[1].images() == std::vector<int>{-1});
}

TEST_CASE("signed permutation validation") {
  CHECK_THROWS_AS(SignedPermutation({1, 1}), DomainError);
  CHECK_THROWS_AS(SignedPermutation({0, 1}), DomainError);
  CHECK_THROWS_AS(SignedPermutation({3, 1}), DomainError);
  CHECK(SignedPermutation({1, 2, 3}).is_identity());
}

TEST_CASE("inversions") {
  for (int n = 1; n <= 4; ++n) {
    std::vector<int> id(n);
    for (int i = 0; i < n; ++i) id[i] = i + 1;
    CHECK(inversions(SignedPermutation(id)).empty());
  }
  using P = std::vector<std::pair<int, int>>;
  CHECK(inversions(SignedPermutation({2, 1})) == P{{2, 1}});
  CHECK(inversions(SignedPermutation({-2, 1})) == P{{2, 1}});
  CHECK(inversions(SignedPermutation({1, -2})) == P{{1, -2}, {-1, -2}});
}

TEST_CASE("inversion lists are deterministic and bounded") {
  for (const auto& s : enumerate_signed_permutations(4)) {
    auto a = inversions(s);
    auto b = inversions(s);
    CHECK(a == b);
    CHECK(a.size() <= 4u * 3u);
    for (auto [u, v] : a) CHECK(std::abs(u) != std::abs(v));
  }
}

TEST_CASE("negating all images complements the inversion set") {
  // For each pair i<j and sign s, s*sigma(i) > sigma(j) fails exactly when the negated
  // permutation satisfies it, so the two lists together have n(n-1) entries.
  for (int n = 1; n <= 4; ++n)
    for (const auto& s : enumerate_signed_permutations(n)) {
      std::vector<int> neg(s.images());
      for (int& v : neg) v = -v;
      const auto a = inversions(s);
      const auto b = inversions(SignedPermutation(neg));
      CHECK(a.size() + b.size() == static_cast<std::size_t>(n * (n - 1)));
    }
}

TEST_CASE("lexicographic configuration enumeration") {
  auto cs = enumerate_configurations(2, 4);
  REQUIRE(cs.size() == 6);
  CHECK(cs[0] == Configuration{0, 1});
  CHECK(cs[1] == Configuration{0, 2});
  CHECK(cs[5] == Configuration{2, 3});
  CHECK(enumerate_configurations(0, 3).size() == 1);
  CHECK(enumerate_configurations(4, 3).empty());
  ConfigurationSet set(3, 10);
  CHECK(set.size() == 120);
  for (std::size_t i = 0; i < set.size(); ++i) CHECK(*set.index(set[i]) == i);
  CHECK(!set.index(Configuration{0, 1, 10}));
}

TEST_CASE("quadrature spec validation") {
  QuadratureSpec q;
  CHECK_NOTHROW(q.validate());
  q.nodes_per_contour = 8;
  CHECK_THROWS_AS(q.validate(), DomainError);
  CHECK_THROWS_AS(LatticeTruncation(0), DomainError);
}
