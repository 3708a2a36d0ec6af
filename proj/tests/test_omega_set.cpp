#include <doctest.h>

#include <thread>

#include "densind/counting.hpp"
#include "densind/errors.hpp"
#include "densind/omega_set.hpp"
#include "test_support.hpp"

using namespace densind;
using densind::testing::brute_count;
using densind::testing::sample_sets;

TEST_CASE("member on multiples and complements") {
  const OmegaSet evens = multiples(2);
  CHECK(member(evens, 4));
  CHECK_FALSE(member(evens, 5));
  CHECK(member(complement(evens), 5));
  CHECK(member(SetExpr::complement_of(evens), 5));
}

TEST_CASE("prefix_count examples") {
  CHECK(prefix_count(multiples(2), 10) == 5);
  CHECK(prefix_count(multiples(3), 10) == 4);
  for (std::uint64_t n : {0ull, 1ull, 17ull, 123456ull}) CHECK(prefix_count(omega(), n) == n);
  CHECK(prefix_count(empty_set(), 1000) == 0);
}

TEST_CASE("complement") {
  CHECK(prefix_count(complement(multiples(2)), 10) == 5);
  CHECK(prefix_count(complement(omega()), 0) == 0);
  for (std::uint64_t n : {1ull, 64ull, 999ull, 1ull << 20}) CHECK(prefix_count(complement(omega()), n) == 0);
  for (const auto& s : sample_sets()) {
    const OmegaSet twice = complement(complement(s));
    for (std::uint64_t k = 0; k < 10'000; ++k) REQUIRE(twice.contains(k) == s.contains(k));
  }
}

TEST_CASE("scale") {
  CHECK_THROWS_AS(scale(omega(), 0), PreconditionError);
  CHECK(prefix_count(scale(omega(), 2), 10) == 5);
  const OmegaSet six = scale(scale(omega(), 2), 3);
  CHECK(prefix_count(six, 12) == 2);
  CHECK(six.has_count_hint());
  for (std::uint64_t k = 0; k < 1000; ++k) REQUIRE(six.contains(k) == (k % 6 == 0));

  densind::testing::ParamGen gen(3);
  for (const auto& s : sample_sets()) {
    for (int trial = 0; trial < 5; ++trial) {
      const std::uint64_t m = 1 + gen.below(7);
      const std::uint64_t n = gen.below(5000);
      CHECK(prefix_count(scale(s, m), m * n) == prefix_count(s, n));
    }
  }
}

TEST_CASE("thin examples") {
  const OmegaSet t = thin(omega());
  const OmegaSet t2 = thin(multiples(2));
  for (std::uint64_t k = 0; k < 10'000; ++k) {
    REQUIRE(t.contains(k) == (k % 2 == 0));
    REQUIRE(t2.contains(k) == (k % 4 == 0));
  }
  // finite sets are accepted
  const OmegaSet finite = from_predicate("finite", [](std::uint64_t n) { return n == 3 || n == 8 || n == 20; });
  CHECK(thin(finite).contains(3));
  CHECK_FALSE(thin(finite).contains(8));
  CHECK(thin(finite).contains(20));
  CHECK(prefix_count(thin(finite), 1000) == 2);
}

TEST_CASE("thin halving identity for every n up to 1e5") {
  for (const auto& s : sample_sets()) {
    const OmegaSet t = thin(s);
    std::uint64_t base = 0;
    std::uint64_t thinned = 0;
    for (std::uint64_t n = 0; n <= 100'000; ++n) {
      REQUIRE(prefix_count(t, n) == (base + 1) / 2);
      REQUIRE(thinned == (base + 1) / 2);
      if (s.contains(n)) {
        // the element x_base is kept iff its index is even
        REQUIRE(t.contains(n) == (base % 2 == 0));
        thinned += t.contains(n);
        ++base;
      } else {
        REQUIRE_FALSE(t.contains(n));
      }
    }
  }
}

TEST_CASE("boolean combinations") {
  const OmegaSet two = multiples(2);
  const OmegaSet three = multiples(3);
  CHECK(prefix_count(intersect(two, three), 12) == 2);
  CHECK(prefix_count(unite(two, three), 12) == 8);
  for (const auto& s : sample_sets()) {
    for (std::uint64_t n : {0ull, 1ull, 1000ull, 65537ull}) CHECK(prefix_count(sym_diff(s, s), n) == 0);
  }
}

TEST_CASE("structural evaluation agrees with the compiled set") {
  const auto sets = sample_sets();
  const SetExpr e = unite(sym_diff(sets[0], sets[3]), SetExpr::scaled(SetExpr::complement_of(sets[4]), 2));
  const OmegaSet compiled = e.to_set();
  std::vector<Word> words(64);
  compiled.fill(640, words);
  for (std::uint64_t k = 0; k < 64 * 64; ++k) {
    REQUIRE(member(e, 640 + k) == compiled.contains(640 + k));
    REQUIRE(member(e, 640 + k) == static_cast<bool>((words[k / 64] >> (k % 64)) & 1));
  }
}

TEST_CASE("prefix count invariants over the sample zoo") {
  const auto sets = sample_sets();
  densind::testing::ParamGen gen(11);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    std::uint64_t previous = 0;
    for (std::uint64_t n = 0; n < 200'000; n += 1 + gen.below(20'000)) {
      const std::uint64_t c = prefix_count(sets[i], n);
      CHECK(c <= n);
      CHECK(c >= previous);
      CHECK(c + prefix_count(complement(sets[i]), n) == n);
      previous = c;
    }
    for (std::size_t j = 0; j < sets.size(); ++j) {
      const std::uint64_t n = gen.below(100'000);
      CHECK(prefix_count(unite(sets[i], sets[j]), n) ==
            prefix_count(sets[i], n) + prefix_count(sets[j], n) - prefix_count(intersect(sets[i], sets[j]), n));
    }
  }
}

TEST_CASE("count hints agree with exhaustive counts") {
  std::vector<OmegaSet> hinted = {multiples(7), complement(multiples(4)), scale(multiples(3), 5),
                                  thin(multiples(3)), thin(densind::testing::random_set(5, 400))};
  densind::testing::ParamGen gen(5);
  for (const auto& s : hinted) {
    REQUIRE(s.has_count_hint());
    for (int t = 0; t < 20; ++t) {
      const std::uint64_t n = gen.below(300'000);
      CHECK(*s.count_hint(n) == brute_count(s, n));
    }
  }
}

TEST_CASE("counting is independent of evaluation order and partition") {
  const auto sets = sample_sets();
  const std::vector<std::uint64_t> checkpoints = {1, 63, 64, 65, 1000, 65535, 65536, 65537, 200'001, 300'000};
  const auto one = sweep_counts(sets, checkpoints, 1);
  for (unsigned w : {2u, 3u, 8u}) CHECK(sweep_counts(sets, checkpoints, w) == one);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = 0; j < checkpoints.size(); ++j) CHECK(one[i][j] == brute_count(sets[i], checkpoints[j]));
  }
  // reverse-order point queries
  const OmegaSet fresh = thin(densind::testing::random_set(23, 500));
  const OmegaSet reference = thin(densind::testing::random_set(23, 500));
  for (std::uint64_t k = 100'000; k-- > 0;) REQUIRE(fresh.contains(k) == reference.contains(k));
}

TEST_CASE("thin memoization is safe under concurrent queries") {
  const OmegaSet base = densind::testing::random_set(29, 450);
  const OmegaSet shared = thin(base);
  std::vector<std::uint64_t> counts(6);
  {
    std::vector<std::jthread> threads;
    for (unsigned t = 0; t < counts.size(); ++t) {
      threads.emplace_back([&, t] {
        // each thread walks a different stride through the same range
        for (std::uint64_t k = t; k < 400'000; k += counts.size()) counts[t] += shared.contains(k);
      });
    }
  }
  const OmegaSet solo = thin(base);
  for (unsigned t = 0; t < counts.size(); ++t) {
    std::uint64_t expected = 0;
    for (std::uint64_t k = t; k < 400'000; k += counts.size()) expected += solo.contains(k);
    CHECK(counts[t] == expected);
  }
}

TEST_CASE("popcount_range") {
  const std::vector<Word> words = {~Word{0}, 0x5555555555555555ull, 0};
  CHECK(popcount_range(words, 0, 64) == 64);
  CHECK(popcount_range(words, 3, 5) == 2);
  CHECK(popcount_range(words, 64, 128) == 32);
  CHECK(popcount_range(words, 60, 70) == 4 + 3);
  CHECK(popcount_range(words, 10, 10) == 0);
  CHECK(popcount_range(words, 0, 192) == 96);
}
