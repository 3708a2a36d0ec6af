#include "densind/constructors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <set>

#include "densind/errors.hpp"
#include "densind/philox.hpp"

namespace densind {

namespace {

__extension__ using u128 = unsigned __int128;

u128 to_u128(const Integer& v) {
  const Integer mask64 = (Integer(1) << 64) - 1;
  const auto lo = static_cast<std::uint64_t>(Integer(v & mask64));
  const auto hi = static_cast<std::uint64_t>(Integer((v >> 64) & mask64));
  return (u128{hi} << 64) | lo;
}

// -- Kronecker–Weyl ------------------------------------------------------------

constexpr u128 kGuard = u128{1} << (kFractionBits - kGuardBits);
constexpr u128 kMaxFraction = ~u128{0};

class KroneckerNode final : public detail::SetNode {
 public:
  explicit KroneckerNode(KWSeed seed) : seed_(std::move(seed)) {
    // floor(√r · 2^128); its low 128 bits are the fractional part of √r.
    const Integer root = boost::multiprecision::sqrt(Integer(seed_.radicand) << (2 * kFractionBits));
    step_ = to_u128(root);
    threshold_ = to_u128(scaled_floor(seed_.threshold, kFractionBits));
    upper_ = threshold_ > kMaxFraction - kGuard ? kMaxFraction : threshold_ + kGuard;
    lower_ = threshold_ < kGuard ? 0 : threshold_ - kGuard;
  }

  bool contains(std::uint64_t n) const override { return decide(step_ * n); }

  void fill(std::uint64_t begin, std::span<Word> words) const override {
    u128 x = step_ * begin;
    for (Word& word : words) {
      Word bits = 0;
      for (unsigned b = 0; b < kWordBits; ++b) {
        bits |= static_cast<Word>(decide(x)) << b;
        x += step_;
      }
      word = bits;
    }
  }

  std::uint64_t guard_hits(std::uint64_t n) const {
    std::uint64_t hits = 0;
    u128 x = 0;
    for (std::uint64_t k = 0; k < n; ++k, x += step_) {
      hits += in_band(x);
    }
    return hits;
  }

  Descriptor describe() const override {
    return {"kw",
            {{"radicand", std::to_string(seed_.radicand)}, {"threshold", to_fraction_string(seed_.threshold)}},
            std::nullopt,
            {}};
  }

 private:
  // The computed value never exceeds the true fractional part (times 2^128)
  // and trails it by less than n units, so values just under 1 may really
  // be just over 0.
  bool decide(u128 x) const { return x < upper_ || x > kMaxFraction - kGuard; }
  bool in_band(u128 x) const { return (x > lower_ && x < upper_) || x > kMaxFraction - kGuard; }

  KWSeed seed_;
  u128 step_ = 0;
  u128 threshold_ = 0;
  u128 upper_ = 0;
  u128 lower_ = 0;
};

void check_seed(const KWSeed& seed) {
  if (seed.radicand < 2 || !is_square_free(seed.radicand)) {
    throw PreconditionError("radicand " + std::to_string(seed.radicand) + " is not a square-free integer >= 2");
  }
  if (!in_open_unit_interval(seed.threshold)) {
    throw PreconditionError("threshold must lie in (0, 1), got " + to_fraction_string(seed.threshold));
  }
}

// -- coded sets ----------------------------------------------------------------

class CodedNode final : public detail::SetNode {
 public:
  CodedNode(std::vector<bool> prefix, unsigned depth) : prefix_(std::move(prefix)), depth_(depth) {
    for (unsigned n = 0; n <= depth_; ++n) {
      std::uint64_t index = 0;
      for (unsigned i = 0; i < n; ++i) index = (index << 1) | static_cast<std::uint64_t>(prefix_[i]);
      string_index_[n] = index;
    }
    end_ = coded_block_start(depth_ + 1);
  }

  bool contains(std::uint64_t k) const override {
    if (k >= end_) return false;
    unsigned n = 0;
    while (coded_block_start(n + 1) <= k) ++n;
    const std::uint64_t offset = k - coded_block_start(n);
    return (offset >> string_index_[n]) & 1;
  }

  Descriptor describe() const override {
    std::string bits;
    for (bool b : prefix_) bits.push_back(b ? '1' : '0');
    return {"coded", {{"sigma_prefix", bits}, {"depth", std::to_string(depth_)}}, std::nullopt, {}};
  }

 private:
  std::vector<bool> prefix_;
  unsigned depth_;
  std::array<std::uint64_t, kMaxCodedDepth + 1> string_index_{};
  std::uint64_t end_ = 0;
};

// -- block transform ---------------------------------------------------------------

constexpr unsigned kBlockTableSize = kLastFullBlock + 2;  // starts of I_0 .. I_{16}

std::array<std::uint64_t, kBlockTableSize> make_block_starts() {
  std::array<std::uint64_t, kBlockTableSize> starts{};
  u128 start = 0;
  u128 factorial = 1;  // (m+1)!
  for (unsigned m = 0; m < kBlockTableSize; ++m) {
    starts[m] = static_cast<std::uint64_t>(start);
    factorial *= (m + 1);
    start += (u128{1} << m) * factorial;
  }
  return starts;
}

const std::array<std::uint64_t, kBlockTableSize>& block_starts() {
  static const auto starts = make_block_starts();
  return starts;
}

class BlockNode final : public detail::SetNode {
 public:
  explicit BlockNode(OmegaSet classical) : classical_(std::move(classical)) {
    for (unsigned i = 0; i < kBlockTableSize; ++i) {
      if (classical_.contains(i)) mask_ |= std::uint64_t{1} << i;
    }
  }

  bool contains(std::uint64_t n) const override {
    const auto& starts = block_starts();
    const unsigned m = static_cast<unsigned>(std::upper_bound(starts.begin(), starts.end(), n) - starts.begin()) - 1;
    const std::uint64_t sigma = (n - starts[m]) & ((std::uint64_t{1} << m) - 1);
    return std::popcount(sigma & mask_) & 1;
  }

  void fill(std::uint64_t begin, std::span<Word> words) const override {
    const auto& starts = block_starts();
    unsigned m = static_cast<unsigned>(std::upper_bound(starts.begin(), starts.end(), begin) - starts.begin()) - 1;
    std::uint64_t next = m + 1 < kBlockTableSize ? starts[m + 1] : ~std::uint64_t{0};
    std::uint64_t n = begin;
    for (Word& word : words) {
      Word bits = 0;
      for (unsigned b = 0; b < kWordBits; ++b, ++n) {
        while (n >= next) {
          ++m;
          next = m + 1 < kBlockTableSize ? starts[m + 1] : ~std::uint64_t{0};
        }
        const std::uint64_t sigma = (n - starts[m]) & ((std::uint64_t{1} << m) - 1);
        bits |= static_cast<Word>(std::popcount(sigma & mask_) & 1) << b;
      }
      word = bits;
    }
  }

  Descriptor describe() const override { return {"block", {}, std::nullopt, {classical_.descriptor()}}; }

 private:
  OmegaSet classical_;
  std::uint64_t mask_ = 0;  // bit i = [i ∈ B], i <= 16
};

// -- biased coins ----------------------------------------------------------------

class CoinNode final : public detail::SetNode {
 public:
  CoinNode(OmegaSet distinguished, const ExtensionParams& params, std::uint64_t seed)
      : distinguished_(std::move(distinguished)),
        inside_(scaled_floor(params.t1, 64).convert_to<std::uint64_t>()),
        outside_(scaled_floor(params.t0, 64).convert_to<std::uint64_t>()),
        seed_(seed),
        params_(params) {}

  bool contains(std::uint64_t n) const override {
    return philox_bits(seed_, n) < (distinguished_.contains(n) ? inside_ : outside_);
  }

  void fill(std::uint64_t begin, std::span<Word> words) const override {
    distinguished_.fill(begin, words);
    std::uint64_t n = begin;
    for (Word& word : words) {
      Word bits = 0;
      for (unsigned b = 0; b < kWordBits; ++b, ++n) {
        const bool in_a = (word >> b) & 1;
        bits |= static_cast<Word>(philox_bits(seed_, n) < (in_a ? inside_ : outside_)) << b;
      }
      word = bits;
    }
  }

  Descriptor describe() const override {
    return {"random-ext",
            {{"algorithm", std::string(kPhiloxAlgorithm)},
             {"t0", to_fraction_string(params_.t0)},
             {"t1", to_fraction_string(params_.t1)}},
            seed_,
            {distinguished_.descriptor()}};
  }

 private:
  OmegaSet distinguished_;
  std::uint64_t inside_;
  std::uint64_t outside_;
  std::uint64_t seed_;
  ExtensionParams params_;
};

}  // namespace

// -- Kronecker–Weyl --------------------------------------------------------------

bool is_square_free(std::uint64_t n) {
  if (n == 0) return false;
  for (std::uint64_t d = 2; d <= n / d; ++d) {
    if (n % (d * d) == 0) return false;
  }
  return true;
}

OmegaSet kw_set(const KWSeed& seed) {
  check_seed(seed);
  return OmegaSet(std::make_shared<KroneckerNode>(seed));
}

Family kw_family(std::span<const KWSeed> seeds) {
  if (seeds.empty()) throw PreconditionError("a d-independent family must be nonempty");
  std::set<std::uint64_t> radicands;
  Family family;
  for (const auto& seed : seeds) {
    if (!radicands.insert(seed.radicand).second) {
      throw PreconditionError("duplicate radicand " + std::to_string(seed.radicand));
    }
    family.add("kw_" + std::to_string(seed.radicand), kw_set(seed), seed.threshold);
  }
  return family;
}

std::uint64_t kw_guard_band_count(const KWSeed& seed, std::uint64_t n) {
  check_seed(seed);
  return KroneckerNode(seed).guard_hits(n);
}

// -- coded sets ----------------------------------------------------------------

std::uint64_t coded_block_start(unsigned n) {
  if (n > kMaxCodedDepth + 1) throw PreconditionError("coded block index out of range");
  std::uint64_t start = 0;
  for (unsigned j = 0; j < n; ++j) start += std::uint64_t{1} << (std::uint64_t{1} << j);
  return start;
}

OmegaSet coded_independent_set(const BitOracle& sigma, unsigned depth_limit) {
  if (depth_limit > kMaxCodedDepth) {
    throw PreconditionError("coded depth " + std::to_string(depth_limit) + " exceeds the 64-bit offset width (max " +
                            std::to_string(kMaxCodedDepth) + ")");
  }
  std::vector<bool> prefix;
  for (unsigned i = 0; i < depth_limit; ++i) prefix.push_back(sigma(i));
  return OmegaSet(std::make_shared<CodedNode>(std::move(prefix), depth_limit));
}

// -- block transform ---------------------------------------------------------------

std::uint64_t transform_block_start(unsigned m) {
  if (m > kLastFullBlock + 1) throw PreconditionError("block index beyond 64-bit range");
  return block_starts()[m];
}

std::uint64_t transform_block_size(unsigned m) {
  if (m > kLastFullBlock) throw PreconditionError("block size beyond 64-bit range");
  return block_starts()[m + 1] - block_starts()[m];
}

OmegaSet block_set(const OmegaSet& classical) { return OmegaSet(std::make_shared<BlockNode>(classical)); }

Family block_transform(std::span<const OmegaSet> classical) {
  if (classical.empty()) throw PreconditionError("a d-independent family must be nonempty");
  Family family;
  for (std::size_t j = 0; j < classical.size(); ++j) {
    family.add("block_" + std::to_string(j), block_set(classical[j]), Rational(1, 2));
  }
  return family;
}

unsigned f2_rank(std::vector<std::uint64_t> rows) {
  unsigned rank = 0;
  for (unsigned bit = 0; bit < 64 && rank < rows.size(); ++bit) {
    const std::uint64_t pivot_mask = std::uint64_t{1} << bit;
    auto pivot = std::find_if(rows.begin() + rank, rows.end(), [&](std::uint64_t r) { return r & pivot_mask; });
    if (pivot == rows.end()) continue;
    std::iter_swap(rows.begin() + rank, pivot);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i != rank && (rows[i] & pivot_mask)) rows[i] ^= rows[rank];
    }
    ++rank;
  }
  return rank;
}

std::optional<unsigned> block_rank_threshold(std::span<const OmegaSet> classical, unsigned max_block) {
  if (max_block > kLastFullBlock + 1) throw PreconditionError("rank scan beyond the representable blocks");
  std::vector<std::uint64_t> full(classical.size(), 0);
  for (std::size_t j = 0; j < classical.size(); ++j) {
    for (unsigned i = 0; i < max_block; ++i) {
      if (classical[j].contains(i)) full[j] |= std::uint64_t{1} << i;
    }
  }
  for (unsigned m = 0; m <= max_block; ++m) {
    std::vector<std::uint64_t> rows;
    for (std::uint64_t r : full) rows.push_back(r & ((std::uint64_t{1} << m) - 1));
    if (f2_rank(rows) == classical.size()) return m;
  }
  return std::nullopt;
}

// -- biased-coin extension ---------------------------------------------------------

ExtensionParams extension_params(const Rational& a, const Rational& s) {
  if (!in_open_unit_interval(a)) throw PreconditionError("density a must lie in (0, 1)");
  if (!in_open_unit_interval(s)) throw PreconditionError("target density s must lie in (0, 1)");
  ExtensionParams p;
  p.a = a;
  p.s = s;
  p.epsilon = std::min(a * (1 - s), s * (1 - a)) / 2;
  p.x1 = s * a + p.epsilon;
  p.x0 = s * (1 - a) - p.epsilon;
  p.t1 = p.x1 / a;
  p.t0 = p.x0 / (1 - a);
  return p;
}

RandomExtension random_extension(const Family& family, std::string_view distinguished, const Rational& s,
                                 std::uint64_t seed) {
  const FamilyMember& a = family.at(distinguished);
  ExtensionParams params = extension_params(a.density, s);
  OmegaSet b(std::make_shared<CoinNode>(a.set, params, seed));
  return {std::move(b), std::move(params), seed, kPhiloxAlgorithm};
}

// -- gap family ------------------------------------------------------------------

std::vector<std::uint64_t> square_free_radicands(std::size_t count) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t r = 2; out.size() < count; ++r) {
    if (is_square_free(r)) out.push_back(r);
  }
  return out;
}

std::vector<Rational> gap_thresholds(const Rational& p, unsigned count) {
  if (!(p > Rational(1, 2) && p < 1)) throw PreconditionError("gap target p must lie in (1/2, 1)");
  if (count == 0) throw PreconditionError("gap family needs at least one member");
  const double base = to_double(p);
  std::vector<Rational> thresholds;
  Rational product(1);
  for (unsigned n = 0; n < count; ++n) {
    const double root = std::nextafter(std::pow(base, std::ldexp(1.0, -static_cast<int>(n) - 1)), 2.0);
    if (!(root < 1.0)) throw PreconditionError("gap thresholds reach 1 at this count; p is infeasible");
    thresholds.push_back(exact_rational(root));
    product *= thresholds.back();
  }
  if (product < p) throw PreconditionError("rounded gap thresholds fall below p; p is infeasible at this count");
  return thresholds;
}

Family gap_family(const Rational& p, unsigned count) {
  const auto thresholds = gap_thresholds(p, count);
  const auto radicands = square_free_radicands(count);
  Family family;
  for (unsigned n = 0; n < count; ++n) {
    family.add("gap_" + std::to_string(n), kw_set({radicands[n], thresholds[n]}), thresholds[n]);
  }
  return family;
}

// -- greedy atom packing -------------------------------------------------------------

Rational expected_atom_density(std::span<const Rational> densities, PatternBits pattern) {
  Rational product(1);
  for (std::size_t j = 0; j < densities.size(); ++j) {
    product *= ((pattern >> j) & 1) ? densities[j] : Rational(1 - densities[j]);
  }
  return product;
}

bool lexicographic_less(PatternBits a, PatternBits b, unsigned length) {
  for (unsigned j = 0; j < length; ++j) {
    const bool x = (a >> j) & 1;
    const bool y = (b >> j) & 1;
    if (x != y) return !x;
  }
  return false;
}

std::string pattern_string(PatternBits pattern, unsigned length) {
  std::string out;
  for (unsigned j = 0; j < length; ++j) out.push_back(((pattern >> j) & 1) ? '1' : '0');
  return out;
}

PackingResult greedy_atom_pack(std::span<const Rational> densities, unsigned side, const Rational& target,
                               std::span<const PatternBits> previous, unsigned previous_length) {
  const auto m = static_cast<unsigned>(densities.size());
  if (m == 0 || m > 20) throw PreconditionError("packing needs between 1 and 20 family members");
  if (side > 1) throw PreconditionError("side must be 0 or 1");
  if (!in_open_unit_interval(target)) throw PreconditionError("packing target must lie in (0, 1)");
  if (previous_length > m) throw PreconditionError("previous level is longer than the current one");
  for (PatternBits p : previous) {
    if (previous_length == 0 || (p >> previous_length) != 0 || (p & 1) != side) {
      throw PreconditionError("previous pattern " + pattern_string(p, previous_length) + " is not eligible");
    }
  }

  const std::set<PatternBits> previous_set(previous.begin(), previous.end());
  const PatternBits prefix_mask = previous_length == 0 ? 0 : ((PatternBits{1} << previous_length) - 1);

  PackingResult result;
  result.length = m;
  result.side = side;
  result.target = target;
  result.total = 0;

  std::vector<std::pair<Rational, PatternBits>> free;
  for (PatternBits tau = 0; tau < (PatternBits{1} << m); ++tau) {
    if ((tau & 1) != side) continue;
    const Rational d = expected_atom_density(densities, tau);
    if (previous_length > 0 && previous_set.count(tau & prefix_mask)) {
      result.forced.push_back(tau);
      result.total += d;
    } else {
      free.emplace_back(d, tau);
    }
  }
  if (result.total >= target) {
    throw PreconditionError("refinements of the previous level already reach the target");
  }

  std::sort(free.begin(), free.end(), [m](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return lexicographic_less(x.second, y.second, m);
  });
  result.chosen = result.forced;
  for (const auto& [d, tau] : free) {
    if (result.total + d >= target) break;  // later atoms are no smaller
    result.total += d;
    result.chosen.push_back(tau);
  }
  const auto lex = [m](PatternBits x, PatternBits y) { return lexicographic_less(x, y, m); };
  std::sort(result.forced.begin(), result.forced.end(), lex);
  std::sort(result.chosen.begin(), result.chosen.end(), lex);
  return result;
}

PackingCertificate certify_packing(std::span<const Rational> densities, const PackingResult& result) {
  PackingCertificate cert;
  const std::set<PatternBits> chosen(result.chosen.begin(), result.chosen.end());
  Rational total(0);
  for (PatternBits p : result.chosen) total += expected_atom_density(densities, p);
  bool valid = total == result.total && total < result.target;
  for (PatternBits f : result.forced) valid = valid && chosen.count(f);
  for (PatternBits tau = 0; tau < (PatternBits{1} << result.length); ++tau) {
    if ((tau & 1) != result.side || chosen.count(tau)) continue;
    Rational reach = total + expected_atom_density(densities, tau);
    valid = valid && reach >= result.target;
    cert.excluded.emplace_back(tau, std::move(reach));
  }
  cert.valid = valid;
  return cert;
}

}  // namespace densind
