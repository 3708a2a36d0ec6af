#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "densind/omega_set.hpp"
#include "densind/rational.hpp"

namespace densind {

struct FamilyMember {
  std::string name;
  OmegaSet set;
  Rational density;  // declared target, in (0, 1)
};

/// An ordered, uniquely named list of sets with declared densities.
class Family {
 public:
  Family() = default;

  /// Throws PreconditionError on a duplicate name or a density outside (0, 1).
  void add(std::string name, OmegaSet set, Rational density);

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::span<const FamilyMember> members() const { return members_; }
  const FamilyMember& operator[](std::size_t i) const { return members_[i]; }

  bool contains(std::string_view name) const;
  const FamilyMember& at(std::string_view name) const;

  /// Members in the requested order; rejects unknown and repeated names.
  Family subfamily(std::span<const std::string> names) const;

  std::vector<std::string> names() const;
  std::vector<OmegaSet> sets() const;
  std::vector<Rational> densities() const;

 private:
  std::vector<FamilyMember> members_;
};

}  // namespace densind
