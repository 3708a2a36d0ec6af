#pragma once

// Bisection (½-reaping) checks, thin extension of finite families and
// witnesses of failed independence.

#include <cstdint>
#include <span>
#include <vector>

#include "densind/density.hpp"
#include "densind/family.hpp"
#include "densind/omega_set.hpp"
#include "densind/rational.hpp"

namespace densind {

struct RelativeWindow {
  std::uint64_t n = 0;
  std::uint64_t joint = 0;      // |S ∩ B ∩ n|
  std::uint64_t reference = 0;  // |B ∩ n|
  Rational relative;
};

struct BisectionReport {
  std::vector<RelativeWindow> windows;
  Rational value;  // at the largest window
  Rational oscillation;
  bool pass = false;
};

/// For each B in `reapers`: |S ∩ B ∩ N_j| / |B ∩ N_j| over the schedule,
/// passing when |value − ½| <= tol and the tail oscillation <= tol. Throws
/// PreconditionError if some B has no member below the first window.
std::vector<BisectionReport> bisect_check(const OmegaSet& s, std::span<const OmegaSet> reapers,
                                          const WindowSchedule& schedule, double tolerance, unsigned workers = 1);

inline constexpr std::size_t kMaxExtensionMembers = 5;

/// ⋃_{σ ∈ 2^k} thin(atom_σ); declared density ½.
OmegaSet thin_extension(const Family& family);

/// ⋂ G for every nonempty G ⊆ family, G = bit mask 1 .. 2^k − 1.
std::vector<OmegaSet> nonempty_intersections(const Family& family);

struct WitnessReport {
  std::uint64_t n = 0;
  std::uint64_t joint_count = 0;
  Rational joint;    // empirical d(B ∩ A) at the largest window
  Rational product;  // declared d(B) · d(A)
  Rational gap;      // |joint − product|
  Rational margin;
  bool flagged = false;  // gap >= margin
};

WitnessReport nonindependence_witness(const OmegaSet& b, const OmegaSet& a, const Rational& density_b,
                                      const Rational& density_a, const WindowSchedule& schedule,
                                      const Rational& margin, unsigned workers = 1);

}  // namespace densind
