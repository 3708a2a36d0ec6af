#pragma once

// Subsets of the natural numbers as lazily evaluated membership oracles.
//
// An OmegaSet is a cheap, shareable handle onto an immutable node. Nodes
// answer three questions: is n a member, what are the membership bits of a
// 64-aligned range, and (optionally) how many members lie below n in closed
// form. Everything else in the library is built from these three.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace densind {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

/// Provenance of a set: constructor kind, its parameters, an RNG seed when
/// one was used, and the descriptors of the sets it was built from.
struct Descriptor {
  std::string kind;
  std::map<std::string, std::string> params;
  std::optional<std::uint64_t> seed;
  std::vector<Descriptor> children;
};

namespace detail {

class SetNode {
 public:
  virtual ~SetNode() = default;

  virtual bool contains(std::uint64_t n) const = 0;

  /// Bit i of words[i / 64] becomes contains(begin + i). begin % 64 == 0.
  virtual void fill(std::uint64_t begin, std::span<Word> words) const;

  virtual bool has_count_hint() const { return false; }
  /// Number of members below n; only called when has_count_hint().
  virtual std::uint64_t count_hint(std::uint64_t n) const;

  virtual Descriptor describe() const = 0;
};

}  // namespace detail

class OmegaSet {
 public:
  explicit OmegaSet(std::shared_ptr<const detail::SetNode> node);

  bool contains(std::uint64_t n) const { return node_->contains(n); }
  void fill(std::uint64_t begin, std::span<Word> words) const;
  bool has_count_hint() const { return node_->has_count_hint(); }
  std::optional<std::uint64_t> count_hint(std::uint64_t n) const;
  Descriptor descriptor() const { return node_->describe(); }

  const detail::SetNode& node() const { return *node_; }
  bool same_node(const OmegaSet& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<const detail::SetNode> node_;
};

/// A finite boolean/scaling expression over OmegaSets. Evaluation is
/// structural: member(expr, n) only looks at the children at n (or n / m
/// under scale).
class SetExpr {
 public:
  enum class Kind { base, complement, intersect, unite, sym_diff, scale };

  SetExpr(OmegaSet base);  // NOLINT: implicit leaf conversion is intended

  static SetExpr complement_of(SetExpr child);
  static SetExpr combine(Kind kind, std::vector<SetExpr> children);
  static SetExpr scaled(SetExpr child, std::uint64_t factor);

  Kind kind() const { return kind_; }
  const std::vector<SetExpr>& children() const { return children_; }
  const std::optional<OmegaSet>& base() const { return base_; }
  std::uint64_t factor() const { return factor_; }

  /// Compiles the expression into an OmegaSet with a word-level fill path.
  OmegaSet to_set() const;

 private:
  SetExpr(Kind kind, std::vector<SetExpr> children, std::uint64_t factor);

  Kind kind_ = Kind::base;
  std::vector<SetExpr> children_;
  std::optional<OmegaSet> base_;
  std::uint64_t factor_ = 1;
};

// -- constructors -----------------------------------------------------------

OmegaSet omega();
OmegaSet empty_set();
/// m·ω, with an exact count hint.
OmegaSet multiples(std::uint64_t m);
/// Wraps an arbitrary pure predicate. No count hint.
OmegaSet from_predicate(std::string kind, std::function<bool(std::uint64_t)> predicate,
                        std::map<std::string, std::string> params = {});

// -- operations -------------------------------------------------------------

bool member(const OmegaSet& s, std::uint64_t n);
bool member(const SetExpr& e, std::uint64_t n);

/// |S ∩ [0, n)|: the hint when present, otherwise exhaustive evaluation.
std::uint64_t prefix_count(const OmegaSet& s, std::uint64_t n);
std::uint64_t prefix_count(const SetExpr& e, std::uint64_t n);

OmegaSet complement(const OmegaSet& s);
/// {m·a : a ∈ S}; throws PreconditionError for m == 0.
OmegaSet scale(const OmegaSet& s, std::uint64_t m);
/// Every other element of S in increasing order: {x_0, x_2, x_4, ...}.
/// Backed by a memoized, synchronized enumeration of S. Finite S is
/// accepted and yields its even-indexed elements.
OmegaSet thin(const OmegaSet& s);

SetExpr intersect(const SetExpr& a, const SetExpr& b);
SetExpr unite(const SetExpr& a, const SetExpr& b);
SetExpr sym_diff(const SetExpr& a, const SetExpr& b);
SetExpr intersect_all(std::vector<SetExpr> parts);
SetExpr unite_all(std::vector<SetExpr> parts);

// -- bit helpers shared by the counting code ---------------------------------

/// Number of set bits at positions [lo, hi) of a packed bit array.
std::uint64_t popcount_range(std::span<const Word> words, std::uint64_t lo, std::uint64_t hi);

}  // namespace densind
