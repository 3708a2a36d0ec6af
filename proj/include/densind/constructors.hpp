#pragma once

// Explicit density-independent families and the building blocks around them.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "densind/family.hpp"
#include "densind/omega_set.hpp"
#include "densind/rational.hpp"

namespace densind {

// -- Kronecker–Weyl sets -----------------------------------------------------

/// Seed irrational √radicand (radicand square-free, >= 2) and threshold p.
struct KWSeed {
  std::uint64_t radicand = 2;
  Rational threshold;
};

/// Fractional parts are held in 128-bit fixed point; indices whose value
/// lies within 2^-40 of the threshold (or of 0) fall in the guard band and
/// are resolved as members.
inline constexpr unsigned kFractionBits = 128;
inline constexpr unsigned kGuardBits = 40;

bool is_square_free(std::uint64_t n);

/// {n : frac(n·√radicand) < p}.
OmegaSet kw_set(const KWSeed& seed);

/// Members are named "kw_<radicand>". Rejects an empty list and repeated
/// radicands.
Family kw_family(std::span<const KWSeed> seeds);

/// How many k < n land in the guard band for this seed.
std::uint64_t kw_guard_band_count(const KWSeed& seed, std::uint64_t n);

// -- coded classical independent sets ----------------------------------------

using BitOracle = std::function<bool(std::uint64_t)>;
inline constexpr unsigned kMaxCodedDepth = 5;

/// First index of block Y_n = {n} × P(2^n); |Y_n| = 2^(2^n).
std::uint64_t coded_block_start(unsigned n);

/// X_σ restricted to blocks Y_0..Y_depth_limit. Inside Y_n the offset o
/// encodes the subset A ⊆ 2^n whose t-th string (lexicographic order) is in
/// A iff bit t of o is set; k is a member iff σ↾n ∈ A.
OmegaSet coded_independent_set(const BitOracle& sigma, unsigned depth_limit);

// -- block transform ---------------------------------------------------------

/// Blocks I_m of size 2^m (m+1)! laid out consecutively from 0. Blocks up to
/// kLastFullBlock fit in 64-bit indices; the next one is truncated.
inline constexpr unsigned kLastFullBlock = 15;
std::uint64_t transform_block_start(unsigned m);
std::uint64_t transform_block_size(unsigned m);

/// Member A_α for one classical set B_α: inside I_m the residue r of the
/// offset mod 2^m names σ (bit i = σ(i)), and n ∈ A_α iff the number of
/// i ∈ B_α ∩ m with σ(i) = 1 is odd.
OmegaSet block_set(const OmegaSet& classical);

/// One density-½ member "block_<j>" per classical set.
Family block_transform(std::span<const OmegaSet> classical);

/// Rank over F_2 of bit rows (each row a mask of at most 64 columns).
unsigned f2_rank(std::vector<std::uint64_t> rows);

/// First m <= max_block at which the indicators of B_j ∩ m are linearly
/// independent over F_2; nullopt if the rank never reaches k by max_block.
std::optional<unsigned> block_rank_threshold(std::span<const OmegaSet> classical, unsigned max_block);

// -- biased-coin extension ---------------------------------------------------

struct ExtensionParams {
  Rational a;
  Rational s;
  Rational epsilon;
  Rational x0;
  Rational x1;
  Rational t0;
  Rational t1;
};

/// ε = ½ min{a(1−s), s(1−a)}, x1 = sa + ε, x0 = s(1−a) − ε, t1 = x1/a,
/// t0 = x0/(1−a). Throws PreconditionError unless a, s ∈ (0, 1).
ExtensionParams extension_params(const Rational& a, const Rational& s);

struct RandomExtension {
  OmegaSet set;
  ExtensionParams params;
  std::uint64_t seed = 0;
  std::string_view rng_algorithm;
};

/// B with n ∈ B decided by an independent coin of bias t1 (n ∈ A) or t0
/// (n ∉ A), drawn from the counter-based generator at (seed, n).
RandomExtension random_extension(const Family& family, std::string_view distinguished, const Rational& s,
                                 std::uint64_t seed);

// -- gap family --------------------------------------------------------------

/// Thresholds p_n = p^(2^-(n+1)), n < count, rounded up so that their exact
/// product is >= p.
std::vector<Rational> gap_thresholds(const Rational& p, unsigned count);

/// kw_family over the first `count` square-free radicands with gap
/// thresholds. Members are named "gap_<n>".
Family gap_family(const Rational& p, unsigned count);

std::vector<std::uint64_t> square_free_radicands(std::size_t count);

// -- greedy atom packing -----------------------------------------------------

/// Bit j of a pattern is σ(j).
using PatternBits = std::uint32_t;

/// ∏_j (σ(j) d_j + (1 − σ(j))(1 − d_j)).
Rational expected_atom_density(std::span<const Rational> densities, PatternBits pattern);

/// Lexicographic order of σ(0)σ(1)...σ(length-1).
bool lexicographic_less(PatternBits a, PatternBits b, unsigned length);

struct PackingResult {
  unsigned length = 0;
  unsigned side = 0;
  Rational target;
  std::vector<PatternBits> forced;  // refinements of the previous level
  std::vector<PatternBits> chosen;  // all of Σ, lexicographic order
  Rational total;
};

/// Largest Σ ⊆ {σ ∈ 2^m : σ(0) = side} that contains every refinement of the
/// `previous` patterns (length previous_length) and has expected density
/// < target. Free atoms are taken in increasing density, ties broken
/// lexicographically.
PackingResult greedy_atom_pack(std::span<const Rational> densities, unsigned side, const Rational& target,
                               std::span<const PatternBits> previous = {}, unsigned previous_length = 0);

struct PackingCertificate {
  bool valid = false;
  /// Eligible patterns left out, each with total + its density (must be >= target).
  std::vector<std::pair<PatternBits, Rational>> excluded;
};

PackingCertificate certify_packing(std::span<const Rational> densities, const PackingResult& result);

std::string pattern_string(PatternBits pattern, unsigned length);

}  // namespace densind
