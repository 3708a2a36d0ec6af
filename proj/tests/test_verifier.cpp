#include <doctest.h>

#include <map>

#include "densind/constructors.hpp"
#include "densind/counting.hpp"
#include "densind/errors.hpp"
#include "densind/verifier.hpp"
#include "test_support.hpp"

using namespace densind;

namespace {

Family kw_pair() {
  const KWSeed seeds[] = {{2, Rational(3, 10)}, {3, Rational(1, 2)}};
  return kw_family(seeds);
}

Family small_family(std::vector<Rational> densities) {
  Family f;
  for (std::size_t j = 0; j < densities.size(); ++j) {
    f.add("m" + std::to_string(j), densind::testing::random_set(100 + j, 500), densities[j]);
  }
  return f;
}

const WindowSchedule kMillion = WindowSchedule::ending_at(1'000'000, 2.0, 10);

}  // namespace

TEST_CASE("atoms over one member") {
  Family f;
  f.add("A", multiples(3), Rational(1, 3));
  const std::vector<std::string> dom = {"A"};
  const SetExpr one = atom(f, {dom, 1});
  const SetExpr zero = atom(f, {dom, 0});
  for (std::uint64_t k = 0; k < 1000; ++k) {
    REQUIRE(member(one, k) == (k % 3 == 0));
    REQUIRE(member(zero, k) == (k % 3 != 0));
  }
  CHECK(expected_density(f, {dom, 0}) == Rational(2, 3));
  CHECK_THROWS_AS(atom(f, {{"B"}, 1}), PreconditionError);
  CHECK(SignPattern{{"A", "B", "C"}, 0b101}.to_string() == "101");
}

TEST_CASE("atoms partition omega and expectations are normalized") {
  const auto sets = densind::testing::sample_sets();
  const std::vector<std::uint64_t> cps = {0, 1, 100, 4096, 77'777, 200'000};
  for (std::size_t k = 1; k <= 4; ++k) {
    const std::vector<OmegaSet> members(sets.begin(), sets.begin() + static_cast<std::ptrdiff_t>(k));
    const auto counts = atom_sweep_counts(members, cps);
    for (std::size_t j = 0; j < cps.size(); ++j) {
      std::uint64_t total = 0;
      for (const auto& row : counts) total += row[j];
      CHECK(total == cps[j]);
    }
  }
  densind::testing::ParamGen gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Rational> d;
    for (std::size_t j = 0; j < 1 + gen.below(5); ++j) d.push_back(make_rational(1 + gen.below(98), 99));
    const Family f = small_family(d);
    const auto names = f.names();
    Rational sum(0);
    for (std::uint32_t s = 0; s < (1u << d.size()); ++s) sum += expected_density(f, {names, s});
    CHECK(sum == 1);
  }
}

TEST_CASE("kw pair independence at one million") {
  const Family f = kw_pair();
  const auto names = f.names();
  const auto report = verify_independence(f, names, kMillion, 5e-3);
  REQUIRE(report.atoms.size() == 4);
  const auto& both = report.atoms[3];
  CHECK(both.pattern.to_string() == "11");
  CHECK(both.expected == Rational(3, 20));
  CHECK(both.empirical.windows.back().count == 149999);  // exact-integer oracle
  CHECK(both.deviation <= exact_rational(5e-3));
  CHECK(report.pass);
}

TEST_CASE("block transform atoms settle at 1/8") {
  const OmegaSet classical[] = {from_predicate("b0", [](std::uint64_t i) { return i == 0 || i == 5; }),
                                from_predicate("b1", [](std::uint64_t i) { return i == 1; }),
                                from_predicate("b2", [](std::uint64_t i) { return i == 1 || i == 2; })};
  const Family f = block_transform(classical);
  const auto names = f.names();
  const auto report = verify_independence(f, names, WindowSchedule::defaults(), 1e-3);
  for (const auto& a : report.atoms) {
    CHECK(a.expected == Rational(1, 8));
    CHECK(a.deviation < exact_rational(1e-3));
  }
  CHECK(report.pass);
}

TEST_CASE("verify_independence preconditions") {
  const Family f = small_family({Rational(1, 2), Rational(1, 3), Rational(1, 4), Rational(1, 5), Rational(1, 6),
                                 Rational(1, 7)});
  const std::vector<std::string> dup = {"m0", "m0"};
  CHECK_THROWS_AS(verify_independence(f, dup, WindowSchedule(1000, 2.0, 3), 0.01), PreconditionError);
  const auto all = f.names();
  CHECK_THROWS_AS(verify_independence(f, all, WindowSchedule(1000, 2.0, 3), 0.01), PreconditionError);
  CHECK_THROWS_AS(verify_independence(f, {}, WindowSchedule(1000, 2.0, 3), 0.01), PreconditionError);
  Family g;
  g.add("A", multiples(2), Rational(1, 2));
  CHECK_THROWS_AS(g.add("A", multiples(3), Rational(1, 3)), PreconditionError);
}

TEST_CASE("non-independent pairs fail") {
  Family f;
  f.add("A", multiples(2), Rational(1, 2));
  f.add("B", multiples(4), Rational(1, 4));
  const auto names = f.names();
  const auto report = verify_independence(f, names, WindowSchedule::defaults(), 5e-3);
  CHECK_FALSE(report.pass);
  // A⁰ ∩ B is empty but expected 1/8
  CHECK(report.atoms[0b10].empirical.value == 0);
  CHECK(report.atoms[0b10].expected == Rational(1, 8));
}

TEST_CASE("field elements of one and two members") {
  const Family one = small_family({Rational(2, 7)});
  const auto e1 = field_elements(one, one.names());
  REQUIRE(e1.size() == 4);
  CHECK(e1[0].expected == 0);
  CHECK(e1[1].expected == Rational(5, 7));  // atom σ = 0, the complement
  CHECK(e1[2].expected == Rational(2, 7));
  CHECK(e1[3].expected == 1);

  const Rational p(1, 3);
  const Rational q(3, 5);
  const Family two = small_family({p, q});
  const auto e2 = field_elements(two, two.names());
  REQUIRE(e2.size() == 16);
  // atoms (1,0) and (0,1) are σ = 0b01 and 0b10
  const std::uint32_t sym = (1u << 0b01) | (1u << 0b10);
  CHECK(e2[sym].expected == p * (1 - q) + (1 - p) * q);
  CHECK(e2[15].expected == 1);
  CHECK_THROWS_AS(field_elements(small_family({p, p, p, p, p}), small_family({p, p, p, p, p}).names()),
                  PreconditionError);
}

TEST_CASE("field of three members is closed and matches inclusion-exclusion") {
  const std::vector<Rational> d = {Rational(1, 3), Rational(2, 5), Rational(5, 7)};
  const Family f = small_family(d);
  const auto names = f.names();
  const auto elements = field_elements(f, names);
  REQUIRE(elements.size() == 256);

  // d(∩G) for G ⊆ {0,1,2}, from the declared densities
  auto cap = [&](unsigned g) {
    Rational r(1);
    for (unsigned j = 0; j < 3; ++j) {
      if ((g >> j) & 1) r *= d[j];
    }
    return r;
  };
  // atom σ by Möbius inversion over the members it excludes
  auto atom_by_inclusion_exclusion = [&](unsigned sigma) {
    const unsigned zeros = ~sigma & 7u;
    Rational total(0);
    for (unsigned t = zeros;; t = (t - 1) & zeros) {
      const int sign = (__builtin_popcount(t) % 2) ? -1 : 1;
      total += sign * cap(sigma | t);
      if (t == 0) break;
    }
    return total;
  };
  std::map<Rational, std::size_t> oracle;
  for (unsigned e = 0; e < 256; ++e) {
    Rational v(0);
    for (unsigned sigma = 0; sigma < 8; ++sigma) {
      if ((e >> sigma) & 1) v += atom_by_inclusion_exclusion(sigma);
    }
    CHECK(elements[e].atoms == e);
    CHECK(elements[e].expected == v);
    ++oracle[v];
  }
  for (unsigned e = 0; e < 256; ++e) {
    CHECK(elements[e].expected + elements[~e & 0xffu].expected == 1);
    for (unsigned g = 0; g < 256; g += 37) {
      CHECK(elements[e | g].expected ==
            elements[e].expected + elements[g].expected - elements[e & g].expected);
    }
  }
  const auto image = field_image(f, names);
  REQUIRE(image.size() == oracle.size());
  std::size_t i = 0;
  for (const auto& [value, count] : oracle) {
    CHECK(image[i].value == value);
    CHECK(image[i].multiplicity == count);
    ++i;
  }
}

TEST_CASE("field image complement symmetry and endpoints") {
  densind::testing::ParamGen gen(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Rational> d;
    for (std::size_t j = 0; j < 1 + gen.below(4); ++j) d.push_back(make_rational(1 + gen.below(19), 20));
    const Family f = small_family(d);
    const auto image = field_image(f, f.names());
    CHECK(image.front().value == 0);
    CHECK(image.back().value == 1);
    for (std::size_t i = 0; i < image.size(); ++i) {
      const auto& mirror = image[image.size() - 1 - i];
      CHECK(image[i].value + mirror.value == 1);
      CHECK(image[i].multiplicity == mirror.multiplicity);
    }
  }
}

TEST_CASE("field element sets have the expected empirical density") {
  const Family f = kw_pair();
  const auto names = f.names();
  for (const auto& e : field_elements(f, names)) {
    if (e.atoms % 3 != 0) continue;  // a spread of elements keeps the run short
    const OmegaSet x = field_element_set(f, names, e.atoms).to_set();
    CHECK(abs(prefix_density(x, 1'000'000) - e.expected) <= exact_rational(5e-3));
  }
  CHECK_THROWS_AS(field_element_set(f, names, 1u << 4), PreconditionError);
}

TEST_CASE("gap family image avoids the gap") {
  const Rational p = parse_rational("0.9");
  const Family g = gap_family(p, 4);
  Rational top(1);
  for (const auto& m : g.members()) top *= m.density;
  const Rational bottom = 1 - top;
  CHECK(top >= p);
  for (const auto& v : field_image(g, g.names())) CHECK((v.value <= bottom || v.value >= top));

  const Rational delta(1, 50);
  const auto scan = image_density_scan(g, delta);
  CHECK_FALSE(scan.guaranteed);
  std::size_t inside = 0;
  for (std::size_t c = 0; c < scan.hit.size(); ++c) {
    if (scan.cell_low(c) > bottom && scan.cell_high(c) < top) {
      CHECK_FALSE(scan.hit[c]);
      ++inside;
    }
  }
  CHECK(inside > 30);
  CHECK(scan.hit.front());
  CHECK(scan.hit.back());
  CHECK_THROWS_AS(image_density_scan(g, delta, true), PreconditionError);
}

TEST_CASE("density scan examples") {
  const Family halves = small_family(std::vector<Rational>(7, Rational(1, 2)));
  const auto full = image_density_scan(halves, Rational(1, 100), true);
  CHECK(full.required_depth == 7);
  CHECK(full.guaranteed);
  CHECK(full.hit.size() == 100);
  CHECK(full.unhit_count() == 0);

  const Rational p(1, 5);
  const Family one = small_family({p});
  const auto scan = image_density_scan(one, Rational(1, 20));
  // image {0, 1/5, 4/5, 1}: cells strictly between 4/5 and 1 stay empty
  for (std::size_t c = 0; c < scan.hit.size(); ++c) {
    const bool expected = c == 0 || c == 4 || c == 16 || c == 19;
    CHECK(scan.hit[c] == expected);
  }
  CHECK_THROWS_AS(image_density_scan(Family{}, Rational(1, 10)), PreconditionError);
  CHECK_THROWS_AS(image_density_scan(one, Rational(0)), PreconditionError);
}

TEST_CASE("scan hits every cell via the exact path too") {
  // max atom 1/4 is not below δ = 1/10, so the reachable-sum enumeration runs
  const Family two = small_family({Rational(1, 2), Rational(1, 2)});
  const auto scan = image_density_scan(two, Rational(1, 10));
  CHECK(scan.unhit_count() == 10 - 5);  // {0, 1/4, 1/2, 3/4, 1}
  CHECK(scan.hit[0]);
  CHECK(scan.hit[2]);
  CHECK(scan.hit[5]);
  CHECK(scan.hit[7]);
  CHECK(scan.hit[9]);
}
