#pragma once

// Empirical certification of the product rule over every sign pattern of a
// finite subfamily, and exact enumeration of the generated field's density
// image.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "densind/density.hpp"
#include "densind/family.hpp"
#include "densind/omega_set.hpp"
#include "densind/rational.hpp"

namespace densind {

inline constexpr std::size_t kMaxPatternMembers = 5;
inline constexpr std::size_t kMaxFieldMembers = 4;

/// σ : F → {0, 1}; bit j of `bits` is σ(domain[j]).
struct SignPattern {
  std::vector<std::string> domain;
  std::uint32_t bits = 0;

  bool operator[](std::size_t j) const { return (bits >> j) & 1; }
  std::string to_string() const;  // σ(F_0) σ(F_1) ... as '0'/'1'
};

/// ⋂_{α∈F} A_α^{σ(α)}.
SetExpr atom(const Family& family, const SignPattern& pattern);

/// ∏_{α∈F} (σ(α) p_α + (1 − σ(α))(1 − p_α)).
Rational expected_density(const Family& family, const SignPattern& pattern);

struct AtomReport {
  SignPattern pattern;
  Rational expected;
  DensityEstimate empirical;  // value = exact rational at the largest window
  Rational deviation;         // |expected − empirical.value|
  bool pass = false;
};

struct IndependenceReport {
  std::vector<std::string> subfamily;
  std::vector<AtomReport> atoms;  // σ = 0 .. 2^|F| − 1
  double tolerance = 0;
  bool pass = false;
};

/// One report per σ ∈ 2^F. An atom passes when its deviation and its own
/// tail oscillation are both <= tol.
IndependenceReport verify_independence(const Family& family, std::span<const std::string> names,
                                       const WindowSchedule& schedule, double tolerance, unsigned workers = 1);

/// E ⊆ 2^F as a bit mask over atoms: bit σ set iff the atom σ is in E.
struct FieldElement {
  std::uint32_t atoms = 0;
  Rational expected;
};

/// All 2^(2^|F|) elements of the field generated by F, E in increasing mask order.
std::vector<FieldElement> field_elements(const Family& family, std::span<const std::string> names);

/// ⋃_{σ∈E} atom_σ.
SetExpr field_element_set(const Family& family, std::span<const std::string> names, std::uint32_t atoms);

struct ImageValue {
  Rational value;
  std::size_t multiplicity = 0;
};

/// Distinct expected densities of field elements, ascending, with multiplicity.
std::vector<ImageValue> field_image(const Family& family, std::span<const std::string> names);

struct DensityScan {
  Rational delta;
  std::vector<bool> hit;  // cell c = [cδ, (c+1)δ) ∩ [0, 1], last cell closed
  std::size_t depth = 0;           // members used
  std::size_t required_depth = 0;  // smallest n with (1 − 1/m)^n < δ
  bool guaranteed = false;         // depth >= required_depth

  std::size_t unhit_count() const;
  Rational cell_low(std::size_t c) const { return delta * c; }
  Rational cell_high(std::size_t c) const;
};

/// Marks the grid cells of width δ that contain the expected density of some
/// element of the field generated by the first `depth` members. m is the
/// least integer with every member density in [1/m, 1 − 1/m]. With
/// require_guarantee, a family shorter than the required depth is rejected;
/// otherwise all members are used and `guaranteed` records the shortfall.
DensityScan image_density_scan(const Family& family, const Rational& delta, bool require_guarantee = false);

}  // namespace densind
