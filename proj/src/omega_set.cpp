#include "densind/omega_set.hpp"

#include <algorithm>
#include <bit>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <utility>

#include "densind/errors.hpp"

namespace densind {

namespace detail {

void SetNode::fill(std::uint64_t begin, std::span<Word> words) const {
  for (std::size_t w = 0; w < words.size(); ++w) {
    Word bits = 0;
    const std::uint64_t base = begin + w * kWordBits;
    for (std::size_t b = 0; b < kWordBits; ++b) {
      if (contains(base + b)) bits |= Word{1} << b;
    }
    words[w] = bits;
  }
}

std::uint64_t SetNode::count_hint(std::uint64_t) const {
  throw std::logic_error("count_hint called on a set without a closed-form counter");
}

}  // namespace detail

namespace {

constexpr std::size_t kScratchWords = 1024;

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return a / b + (a % b != 0); }

class FullNode final : public detail::SetNode {
 public:
  bool contains(std::uint64_t) const override { return true; }
  void fill(std::uint64_t, std::span<Word> words) const override {
    std::fill(words.begin(), words.end(), ~Word{0});
  }
  bool has_count_hint() const override { return true; }
  std::uint64_t count_hint(std::uint64_t n) const override { return n; }
  Descriptor describe() const override { return {"omega", {}, std::nullopt, {}}; }
};

class EmptyNode final : public detail::SetNode {
 public:
  bool contains(std::uint64_t) const override { return false; }
  void fill(std::uint64_t, std::span<Word> words) const override {
    std::fill(words.begin(), words.end(), Word{0});
  }
  bool has_count_hint() const override { return true; }
  std::uint64_t count_hint(std::uint64_t) const override { return 0; }
  Descriptor describe() const override { return {"empty", {}, std::nullopt, {}}; }
};

class PredicateNode final : public detail::SetNode {
 public:
  PredicateNode(std::string kind, std::function<bool(std::uint64_t)> predicate,
                std::map<std::string, std::string> params)
      : kind_(std::move(kind)), predicate_(std::move(predicate)), params_(std::move(params)) {}

  bool contains(std::uint64_t n) const override { return predicate_(n); }
  Descriptor describe() const override { return {kind_, params_, std::nullopt, {}}; }

 private:
  std::string kind_;
  std::function<bool(std::uint64_t)> predicate_;
  std::map<std::string, std::string> params_;
};

class ComplementNode final : public detail::SetNode {
 public:
  explicit ComplementNode(OmegaSet base) : base_(std::move(base)) {}

  bool contains(std::uint64_t n) const override { return !base_.contains(n); }
  void fill(std::uint64_t begin, std::span<Word> words) const override {
    base_.fill(begin, words);
    for (Word& w : words) w = ~w;
  }
  bool has_count_hint() const override { return base_.has_count_hint(); }
  std::uint64_t count_hint(std::uint64_t n) const override { return n - *base_.count_hint(n); }
  Descriptor describe() const override {
    return {"complement", {}, std::nullopt, {base_.descriptor()}};
  }

 private:
  OmegaSet base_;
};

class ScaleNode final : public detail::SetNode {
 public:
  ScaleNode(OmegaSet base, std::uint64_t factor) : base_(std::move(base)), factor_(factor) {}

  bool contains(std::uint64_t n) const override {
    return n % factor_ == 0 && base_.contains(n / factor_);
  }
  void fill(std::uint64_t begin, std::span<Word> words) const override {
    if (factor_ == 1) {
      base_.fill(begin, words);
      return;
    }
    std::fill(words.begin(), words.end(), Word{0});
    const std::uint64_t end = begin + words.size() * kWordBits;
    for (std::uint64_t k = ceil_div(begin, factor_) * factor_; k < end; k += factor_) {
      if (base_.contains(k / factor_)) {
        const std::uint64_t off = k - begin;
        words[off / kWordBits] |= Word{1} << (off % kWordBits);
      }
    }
  }
  bool has_count_hint() const override { return base_.has_count_hint(); }
  // k < n with m | k and k/m ∈ S  <=>  k/m < ceil(n/m).
  std::uint64_t count_hint(std::uint64_t n) const override {
    return *base_.count_hint(ceil_div(n, factor_));
  }
  Descriptor describe() const override {
    return {"scale", {{"factor", std::to_string(factor_)}}, std::nullopt, {base_.descriptor()}};
  }

 private:
  OmegaSet base_;
  std::uint64_t factor_;
};

class BooleanNode final : public detail::SetNode {
 public:
  BooleanNode(SetExpr::Kind kind, std::vector<OmegaSet> operands)
      : kind_(kind), operands_(std::move(operands)) {}

  bool contains(std::uint64_t n) const override {
    switch (kind_) {
      case SetExpr::Kind::intersect:
        return std::all_of(operands_.begin(), operands_.end(),
                           [n](const OmegaSet& s) { return s.contains(n); });
      case SetExpr::Kind::unite:
        return std::any_of(operands_.begin(), operands_.end(),
                           [n](const OmegaSet& s) { return s.contains(n); });
      default: {
        bool parity = false;
        for (const auto& s : operands_) parity ^= s.contains(n);
        return parity;
      }
    }
  }

  void fill(std::uint64_t begin, std::span<Word> words) const override {
    operands_.front().fill(begin, words);
    std::vector<Word> scratch(words.size());
    for (std::size_t i = 1; i < operands_.size(); ++i) {
      operands_[i].fill(begin, scratch);
      for (std::size_t w = 0; w < words.size(); ++w) {
        switch (kind_) {
          case SetExpr::Kind::intersect: words[w] &= scratch[w]; break;
          case SetExpr::Kind::unite: words[w] |= scratch[w]; break;
          default: words[w] ^= scratch[w]; break;
        }
      }
    }
  }

  Descriptor describe() const override {
    Descriptor d;
    d.kind = kind_ == SetExpr::Kind::intersect ? "intersect"
             : kind_ == SetExpr::Kind::unite   ? "union"
                                               : "sym_diff";
    for (const auto& s : operands_) d.children.push_back(s.descriptor());
    return d;
  }

 private:
  SetExpr::Kind kind_;
  std::vector<OmegaSet> operands_;
};

// Memoizes the membership bits of the base set together with the running
// count before each word, so that the rank of any element is O(1) once the
// enumeration has been extended past it. The cache is append-only and
// guarded by a shared mutex; its contents are a pure function of the base.
class ThinNode final : public detail::SetNode {
 public:
  explicit ThinNode(OmegaSet base) : base_(std::move(base)) {}

  bool contains(std::uint64_t n) const override {
    ensure_words(n / kWordBits + 1);
    std::shared_lock lock(mutex_);
    const std::size_t w = n / kWordBits;
    const unsigned b = n % kWordBits;
    const Word word = words_[w];
    if (((word >> b) & 1) == 0) return false;
    const std::uint64_t rank = before_[w] + std::popcount(word & low_mask(b));
    return rank % 2 == 0;
  }

  void fill(std::uint64_t begin, std::span<Word> out) const override {
    const std::size_t first = begin / kWordBits;
    ensure_words(first + out.size());
    std::shared_lock lock(mutex_);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Word x = words_[first + i];
      // Inclusive prefix parity of x, then exclusive: bit j is the parity of
      // the set bits of x strictly below j.
      Word p = x;
      p ^= p << 1;
      p ^= p << 2;
      p ^= p << 4;
      p ^= p << 8;
      p ^= p << 16;
      p ^= p << 32;
      const Word exclusive = p ^ x;
      // rank = before + exclusive_j is even  <=>  exclusive_j == before mod 2.
      out[i] = x & ((before_[first + i] & 1) ? exclusive : ~exclusive);
    }
  }

  bool has_count_hint() const override { return true; }
  std::uint64_t count_hint(std::uint64_t n) const override {
    const std::uint64_t base_count = base_count_below(n);
    return base_count / 2 + base_count % 2;
  }

  Descriptor describe() const override { return {"thin", {}, std::nullopt, {base_.descriptor()}}; }

 private:
  static Word low_mask(unsigned bits) { return bits == 0 ? 0 : (~Word{0} >> (kWordBits - bits)); }

  std::uint64_t base_count_below(std::uint64_t n) const {
    ensure_words(n / kWordBits + 1);
    std::shared_lock lock(mutex_);
    const std::size_t w = n / kWordBits;
    return before_[w] + std::popcount(words_[w] & low_mask(n % kWordBits));
  }

  void ensure_words(std::size_t needed) const {
    {
      std::shared_lock lock(mutex_);
      if (words_.size() >= needed) return;
    }
    std::unique_lock lock(mutex_);
    while (words_.size() < needed) {
      const std::size_t start = words_.size();
      words_.resize(start + kScratchWords);
      base_.fill(static_cast<std::uint64_t>(start) * kWordBits,
                 std::span<Word>(words_).subspan(start, kScratchWords));
      if (before_.empty()) before_.push_back(0);
      for (std::size_t w = start; w < words_.size(); ++w) {
        before_.push_back(before_[w] + std::popcount(words_[w]));
      }
    }
  }

  OmegaSet base_;
  mutable std::shared_mutex mutex_;
  mutable std::vector<Word> words_;
  mutable std::vector<std::uint64_t> before_;  // size words_.size() + 1
};

std::uint64_t exhaustive_count(const OmegaSet& s, std::uint64_t n) {
  std::vector<Word> buffer(kScratchWords);
  constexpr std::uint64_t chunk = kScratchWords * kWordBits;
  std::uint64_t total = 0;
  for (std::uint64_t begin = 0; begin < n; begin += chunk) {
    const std::uint64_t len = std::min(chunk, n - begin);
    const std::size_t words = ceil_div(len, kWordBits);
    s.fill(begin, std::span<Word>(buffer).first(words));
    total += popcount_range(std::span<const Word>(buffer).first(words), 0, len);
  }
  return total;
}

const char* kind_name(SetExpr::Kind kind) {
  switch (kind) {
    case SetExpr::Kind::base: return "base";
    case SetExpr::Kind::complement: return "complement";
    case SetExpr::Kind::intersect: return "intersect";
    case SetExpr::Kind::unite: return "union";
    case SetExpr::Kind::sym_diff: return "sym_diff";
    case SetExpr::Kind::scale: return "scale";
  }
  return "?";
}

}  // namespace

// -- OmegaSet ----------------------------------------------------------------

OmegaSet::OmegaSet(std::shared_ptr<const detail::SetNode> node) : node_(std::move(node)) {
  if (!node_) throw std::invalid_argument("OmegaSet requires a node");
}

void OmegaSet::fill(std::uint64_t begin, std::span<Word> words) const {
  if (begin % kWordBits != 0) throw std::invalid_argument("fill start must be word aligned");
  node_->fill(begin, words);
}

std::optional<std::uint64_t> OmegaSet::count_hint(std::uint64_t n) const {
  if (!node_->has_count_hint()) return std::nullopt;
  return node_->count_hint(n);
}

// -- SetExpr -----------------------------------------------------------------

SetExpr::SetExpr(OmegaSet base) : kind_(Kind::base), base_(std::move(base)) {}

SetExpr::SetExpr(Kind kind, std::vector<SetExpr> children, std::uint64_t factor)
    : kind_(kind), children_(std::move(children)), factor_(factor) {}

SetExpr SetExpr::complement_of(SetExpr child) {
  return SetExpr(Kind::complement, {std::move(child)}, 1);
}

SetExpr SetExpr::combine(Kind kind, std::vector<SetExpr> children) {
  if (kind != Kind::intersect && kind != Kind::unite && kind != Kind::sym_diff) {
    throw std::invalid_argument(std::string("combine does not build '") + kind_name(kind) + "' nodes");
  }
  if (children.empty()) throw std::invalid_argument("boolean combination needs at least one operand");
  return SetExpr(kind, std::move(children), 1);
}

SetExpr SetExpr::scaled(SetExpr child, std::uint64_t factor) {
  if (factor == 0) throw PreconditionError("scale factor must be positive");
  return SetExpr(Kind::scale, {std::move(child)}, factor);
}

OmegaSet SetExpr::to_set() const {
  switch (kind_) {
    case Kind::base: return *base_;
    case Kind::complement: return complement(children_.front().to_set());
    case Kind::scale: return scale(children_.front().to_set(), factor_);
    default: {
      if (children_.size() == 1) return children_.front().to_set();
      std::vector<OmegaSet> operands;
      operands.reserve(children_.size());
      for (const auto& c : children_) operands.push_back(c.to_set());
      return OmegaSet(std::make_shared<BooleanNode>(kind_, std::move(operands)));
    }
  }
}

// -- constructors ------------------------------------------------------------

OmegaSet omega() {
  static const auto node = std::make_shared<FullNode>();
  return OmegaSet(node);
}

OmegaSet empty_set() {
  static const auto node = std::make_shared<EmptyNode>();
  return OmegaSet(node);
}

OmegaSet multiples(std::uint64_t m) { return scale(omega(), m); }

OmegaSet from_predicate(std::string kind, std::function<bool(std::uint64_t)> predicate,
                        std::map<std::string, std::string> params) {
  return OmegaSet(std::make_shared<PredicateNode>(std::move(kind), std::move(predicate), std::move(params)));
}

// -- operations --------------------------------------------------------------

bool member(const OmegaSet& s, std::uint64_t n) { return s.contains(n); }

bool member(const SetExpr& e, std::uint64_t n) {
  switch (e.kind()) {
    case SetExpr::Kind::base: return e.base()->contains(n);
    case SetExpr::Kind::complement: return !member(e.children().front(), n);
    case SetExpr::Kind::scale: return n % e.factor() == 0 && member(e.children().front(), n / e.factor());
    case SetExpr::Kind::intersect:
      return std::all_of(e.children().begin(), e.children().end(),
                         [n](const SetExpr& c) { return member(c, n); });
    case SetExpr::Kind::unite:
      return std::any_of(e.children().begin(), e.children().end(),
                         [n](const SetExpr& c) { return member(c, n); });
    case SetExpr::Kind::sym_diff: {
      bool parity = false;
      for (const auto& c : e.children()) parity ^= member(c, n);
      return parity;
    }
  }
  return false;
}

std::uint64_t prefix_count(const OmegaSet& s, std::uint64_t n) {
  if (auto hint = s.count_hint(n)) return *hint;
  return exhaustive_count(s, n);
}

std::uint64_t prefix_count(const SetExpr& e, std::uint64_t n) { return prefix_count(e.to_set(), n); }

OmegaSet complement(const OmegaSet& s) { return OmegaSet(std::make_shared<ComplementNode>(s)); }

OmegaSet scale(const OmegaSet& s, std::uint64_t m) {
  if (m == 0) throw PreconditionError("scale factor must be positive");
  return OmegaSet(std::make_shared<ScaleNode>(s, m));
}

OmegaSet thin(const OmegaSet& s) { return OmegaSet(std::make_shared<ThinNode>(s)); }

SetExpr intersect(const SetExpr& a, const SetExpr& b) {
  return SetExpr::combine(SetExpr::Kind::intersect, {a, b});
}

SetExpr unite(const SetExpr& a, const SetExpr& b) { return SetExpr::combine(SetExpr::Kind::unite, {a, b}); }

SetExpr sym_diff(const SetExpr& a, const SetExpr& b) {
  return SetExpr::combine(SetExpr::Kind::sym_diff, {a, b});
}

SetExpr intersect_all(std::vector<SetExpr> parts) {
  return SetExpr::combine(SetExpr::Kind::intersect, std::move(parts));
}

SetExpr unite_all(std::vector<SetExpr> parts) {
  return SetExpr::combine(SetExpr::Kind::unite, std::move(parts));
}

std::uint64_t popcount_range(std::span<const Word> words, std::uint64_t lo, std::uint64_t hi) {
  if (lo >= hi) return 0;
  std::size_t first = lo / kWordBits;
  const std::size_t last = (hi - 1) / kWordBits;
  const Word lo_mask = ~Word{0} << (lo % kWordBits);
  const unsigned hi_bits = static_cast<unsigned>(hi - last * kWordBits);
  const Word hi_mask = hi_bits == kWordBits ? ~Word{0} : (~Word{0} >> (kWordBits - hi_bits));
  if (first == last) return std::popcount(words[first] & lo_mask & hi_mask);
  std::uint64_t total = std::popcount(words[first] & lo_mask);
  for (++first; first < last; ++first) total += std::popcount(words[first]);
  return total + std::popcount(words[last] & hi_mask);
}

}  // namespace densind
