#include "densind/family.hpp"

#include <algorithm>

#include "densind/errors.hpp"

namespace densind {

void Family::add(std::string name, OmegaSet set, Rational density) {
  if (contains(name)) throw PreconditionError("duplicate family member '" + name + "'");
  if (!in_open_unit_interval(density)) {
    throw PreconditionError("declared density of '" + name + "' must lie in (0, 1), got " +
                            to_fraction_string(density));
  }
  members_.push_back({std::move(name), std::move(set), std::move(density)});
}

bool Family::contains(std::string_view name) const {
  return std::any_of(members_.begin(), members_.end(), [&](const FamilyMember& m) { return m.name == name; });
}

const FamilyMember& Family::at(std::string_view name) const {
  for (const auto& m : members_) {
    if (m.name == name) return m;
  }
  throw PreconditionError("unknown family member '" + std::string(name) + "'");
}

Family Family::subfamily(std::span<const std::string> names) const {
  Family sub;
  for (const auto& name : names) {
    if (sub.contains(name)) throw PreconditionError("member '" + name + "' requested twice; names must be unique");
    const auto& m = at(name);
    sub.members_.push_back(m);
  }
  return sub;
}

std::vector<std::string> Family::names() const {
  std::vector<std::string> out;
  for (const auto& m : members_) out.push_back(m.name);
  return out;
}

std::vector<OmegaSet> Family::sets() const {
  std::vector<OmegaSet> out;
  for (const auto& m : members_) out.push_back(m.set);
  return out;
}

std::vector<Rational> Family::densities() const {
  std::vector<Rational> out;
  for (const auto& m : members_) out.push_back(m.density);
  return out;
}

}  // namespace densind
