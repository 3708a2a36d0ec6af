#include "densind/verifier.hpp"

#include <algorithm>
#include <bit>

#include "densind/counting.hpp"
#include "densind/errors.hpp"

namespace densind {

namespace {

constexpr std::size_t kMaxScanDepth = 16;
constexpr std::size_t kMaxReachable = std::size_t{1} << 22;

Family checked_subfamily(const Family& family, std::span<const std::string> names, std::size_t limit,
                         const char* what) {
  if (names.empty()) throw PreconditionError(std::string(what) + " needs a nonempty subfamily");
  if (names.size() > limit) {
    throw PreconditionError(std::string(what) + " supports at most " + std::to_string(limit) + " members, got " +
                            std::to_string(names.size()));
  }
  return family.subfamily(names);
}

std::vector<Rational> atom_expectations(std::span<const Rational> densities) {
  std::vector<Rational> out;
  const std::uint32_t atoms = std::uint32_t{1} << densities.size();
  for (std::uint32_t sigma = 0; sigma < atoms; ++sigma) {
    Rational product(1);
    for (std::size_t j = 0; j < densities.size(); ++j) {
      product *= ((sigma >> j) & 1) ? densities[j] : Rational(1 - densities[j]);
    }
    out.push_back(std::move(product));
  }
  return out;
}

// Expresses the values over their least common denominator.
Integer common_denominator(std::span<const Rational> values, std::vector<Integer>& numerators) {
  Integer lcm(1);
  for (const auto& v : values) {
    lcm = boost::multiprecision::lcm(lcm, boost::multiprecision::denominator(v));
  }
  numerators.clear();
  for (const auto& v : values) {
    numerators.push_back(boost::multiprecision::numerator(v) * (lcm / boost::multiprecision::denominator(v)));
  }
  return lcm;
}

// Sum of the atom numerators selected by each mask E, by adding one atom to E
// without its lowest set bit.
std::vector<Integer> element_numerators(const std::vector<Integer>& atom_numerators) {
  const std::size_t elements = std::size_t{1} << atom_numerators.size();
  std::vector<Integer> sums(elements);
  for (std::size_t e = 1; e < elements; ++e) {
    sums[e] = sums[e & (e - 1)] + atom_numerators[std::countr_zero(e)];
  }
  return sums;
}

}  // namespace

std::string SignPattern::to_string() const {
  std::string out;
  for (std::size_t j = 0; j < domain.size(); ++j) out.push_back((*this)[j] ? '1' : '0');
  return out;
}

SetExpr atom(const Family& family, const SignPattern& pattern) {
  if (pattern.domain.empty()) throw PreconditionError("sign pattern needs a nonempty domain");
  std::vector<SetExpr> parts;
  for (std::size_t j = 0; j < pattern.domain.size(); ++j) {
    const OmegaSet& s = family.at(pattern.domain[j]).set;
    parts.push_back(pattern[j] ? SetExpr(s) : SetExpr::complement_of(s));
  }
  return intersect_all(std::move(parts));
}

Rational expected_density(const Family& family, const SignPattern& pattern) {
  Rational product(1);
  for (std::size_t j = 0; j < pattern.domain.size(); ++j) {
    const Rational& p = family.at(pattern.domain[j]).density;
    product *= pattern[j] ? p : Rational(1 - p);
  }
  return product;
}

IndependenceReport verify_independence(const Family& family, std::span<const std::string> names,
                                       const WindowSchedule& schedule, double tolerance, unsigned workers) {
  const Family sub = checked_subfamily(family, names, kMaxPatternMembers, "independence check");
  const auto sets = sub.sets();
  const auto counts = atom_sweep_counts(sets, schedule.windows(), workers);
  const auto expected = atom_expectations(sub.densities());
  const Rational tol = exact_rational(tolerance);

  IndependenceReport report;
  report.subfamily = sub.names();
  report.tolerance = tolerance;
  report.pass = true;
  for (std::uint32_t sigma = 0; sigma < counts.size(); ++sigma) {
    AtomReport a;
    a.pattern = {report.subfamily, sigma};
    a.expected = expected[sigma];
    a.empirical = estimate_from_counts(schedule, counts[sigma], tolerance);
    a.deviation = abs(a.expected - a.empirical.value);
    a.pass = a.deviation <= tol && a.empirical.status == ConvergenceStatus::converged;
    report.pass = report.pass && a.pass;
    report.atoms.push_back(std::move(a));
  }
  return report;
}

std::vector<FieldElement> field_elements(const Family& family, std::span<const std::string> names) {
  const Family sub = checked_subfamily(family, names, kMaxFieldMembers, "field enumeration");
  std::vector<Integer> atom_nums;
  const Integer denominator = common_denominator(atom_expectations(sub.densities()), atom_nums);
  const auto sums = element_numerators(atom_nums);
  std::vector<FieldElement> out;
  out.reserve(sums.size());
  for (std::size_t e = 0; e < sums.size(); ++e) {
    out.push_back({static_cast<std::uint32_t>(e), Rational(sums[e], denominator)});
  }
  return out;
}

SetExpr field_element_set(const Family& family, std::span<const std::string> names, std::uint32_t atoms) {
  const Family sub = checked_subfamily(family, names, kMaxFieldMembers, "field enumeration");
  const std::uint32_t atom_count = std::uint32_t{1} << sub.size();
  if (atom_count < 32 && (atoms >> atom_count) != 0) throw PreconditionError("field element selects unknown atoms");
  const std::vector<std::string> order = sub.names();
  std::vector<SetExpr> parts;
  for (std::uint32_t sigma = 0; sigma < atom_count; ++sigma) {
    if ((atoms >> sigma) & 1) parts.push_back(atom(sub, {order, sigma}));
  }
  if (parts.empty()) return SetExpr(empty_set());
  return unite_all(std::move(parts));
}

std::vector<ImageValue> field_image(const Family& family, std::span<const std::string> names) {
  const Family sub = checked_subfamily(family, names, kMaxFieldMembers, "field image");
  std::vector<Integer> atom_nums;
  const Integer denominator = common_denominator(atom_expectations(sub.densities()), atom_nums);
  auto sums = element_numerators(atom_nums);
  std::sort(sums.begin(), sums.end());
  std::vector<ImageValue> image;
  for (std::size_t i = 0; i < sums.size();) {
    std::size_t j = i;
    while (j < sums.size() && sums[j] == sums[i]) ++j;
    image.push_back({Rational(sums[i], denominator), j - i});
    i = j;
  }
  return image;
}

std::size_t DensityScan::unhit_count() const { return static_cast<std::size_t>(std::count(hit.begin(), hit.end(), false)); }

Rational DensityScan::cell_high(std::size_t c) const {
  Rational high = delta * (c + 1);
  return high > 1 ? Rational(1) : high;
}

DensityScan image_density_scan(const Family& family, const Rational& delta, bool require_guarantee) {
  if (family.empty()) throw PreconditionError("density scan needs a nonempty family");
  if (!(delta > 0 && delta <= 1)) throw PreconditionError("grid step must lie in (0, 1]");

  Integer m(2);
  for (const auto& member : family.members()) {
    const Rational q = std::min(member.density, Rational(1 - member.density));
    const Rational inv = 1 / q;
    Integer ceil_inv = boost::multiprecision::numerator(inv) / boost::multiprecision::denominator(inv);
    if (Rational(ceil_inv) < inv) ++ceil_inv;
    m = std::max(m, ceil_inv);
  }

  DensityScan scan;
  scan.delta = delta;
  const Rational shrink = 1 - Rational(1) / Rational(m);
  Rational power(1);
  while (power >= delta) {
    power *= shrink;
    ++scan.required_depth;
  }
  if (require_guarantee && family.size() < scan.required_depth) {
    throw PreconditionError("insufficient members: " + std::to_string(scan.required_depth) + " members with density in [1/" +
                            m.str() + ", 1 - 1/" + m.str() + "] are needed, family has " +
                            std::to_string(family.size()));
  }
  scan.depth = std::min({family.size(), scan.required_depth, kMaxScanDepth});
  scan.guaranteed = scan.depth >= scan.required_depth;

  const Rational cells_exact = 1 / delta;
  Integer cells = boost::multiprecision::numerator(cells_exact) / boost::multiprecision::denominator(cells_exact);
  if (Rational(cells) < cells_exact) ++cells;
  if (cells > 10'000'000) throw PreconditionError("grid step too small");
  scan.hit.assign(cells.convert_to<std::size_t>(), false);

  std::vector<Rational> densities;
  for (std::size_t j = 0; j < scan.depth; ++j) densities.push_back(family[j].density);
  const auto atoms = atom_expectations(densities);

  // Partial sums of the atoms climb from 0 to 1 in steps smaller than δ, so
  // every cell is hit once every atom is below δ.
  if (*std::max_element(atoms.begin(), atoms.end()) < delta) {
    std::fill(scan.hit.begin(), scan.hit.end(), true);
    return scan;
  }

  std::vector<Integer> atom_nums;
  const Integer denominator = common_denominator(atoms, atom_nums);
  std::vector<Integer> reach{Integer(0)};
  for (const auto& a : atom_nums) {
    std::vector<Integer> shifted;
    shifted.reserve(reach.size());
    for (const auto& r : reach) shifted.push_back(r + a);
    std::vector<Integer> merged;
    merged.reserve(reach.size() * 2);
    std::merge(reach.begin(), reach.end(), shifted.begin(), shifted.end(), std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    if (merged.size() > kMaxReachable) throw PreconditionError("field image too large to scan exactly");
    reach = std::move(merged);
  }
  // cell(v) = floor(v / δ) with v = r / D and δ = a / b.
  const Integer& a = boost::multiprecision::numerator(delta);
  const Integer& b = boost::multiprecision::denominator(delta);
  const std::size_t last = scan.hit.size() - 1;
  for (const auto& r : reach) {
    const Integer cell = (r * b) / (denominator * a);
    scan.hit[cell > last ? last : cell.convert_to<std::size_t>()] = true;
  }
  return scan;
}

}  // namespace densind
