#pragma once

// Finite-window surrogates for asymptotic density, upper density and the
// ρ pseudometric. Every recorded density is an exact rational count/N.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "densind/omega_set.hpp"
#include "densind/rational.hpp"

namespace densind {

/// Geometric windows N_j = ceil(N_0 · r^j), j < J, strictly increasing, J >= 3.
class WindowSchedule {
 public:
  WindowSchedule(std::uint64_t start, double ratio, std::size_t count);

  /// Same ratio and count, scaled so that the last window is exactly `largest`.
  static WindowSchedule ending_at(std::uint64_t largest, double ratio, std::size_t count);
  /// N_0 = 10^4, r = 2, J = 10 (largest window 5 120 000).
  static WindowSchedule defaults();

  std::uint64_t start() const { return windows_.front(); }
  double ratio() const { return ratio_; }
  std::size_t count() const { return windows_.size(); }
  std::uint64_t largest() const { return windows_.back(); }
  std::span<const std::uint64_t> windows() const { return windows_; }

 private:
  WindowSchedule(double ratio, std::vector<std::uint64_t> windows);
  static void validate(double ratio, const std::vector<std::uint64_t>& windows);

  double ratio_;
  std::vector<std::uint64_t> windows_;
};

/// Number of trailing windows used for the oscillation statistic and the
/// upper-density surrogate.
inline constexpr std::size_t kTailWindows = 3;

inline constexpr double kEquidistributionTolerance = 5e-3;
/// max(5e-3, 4 / sqrt(N_max)).
double randomized_tolerance(std::uint64_t largest_window);

enum class ConvergenceStatus { converged, oscillating };
std::string_view to_string(ConvergenceStatus status);

struct WindowDensity {
  std::uint64_t n = 0;
  std::uint64_t count = 0;
  Rational density;
};

struct DensityEstimate {
  std::vector<WindowDensity> windows;
  Rational value;        // density at the largest window
  Rational oscillation;  // max - min over the tail windows
  ConvergenceStatus status = ConvergenceStatus::oscillating;
  double tolerance = 0;
};

/// prefix_count(S, n) / n; throws PreconditionError for n == 0.
Rational prefix_density(const OmegaSet& s, std::uint64_t n);

/// Window counts come from the count hint when the set has one, otherwise
/// from a (possibly parallel) sweep.
std::vector<std::uint64_t> window_counts(const OmegaSet& s, const WindowSchedule& schedule, unsigned workers = 1);

DensityEstimate estimate_from_counts(const WindowSchedule& schedule, std::span<const std::uint64_t> counts,
                                     double tolerance);
DensityEstimate estimate_density(const OmegaSet& s, const WindowSchedule& schedule, double tolerance,
                                 unsigned workers = 1);

Rational tail_oscillation(std::span<const Rational> densities);

/// Largest density among the tail windows: a finite stand-in for d*.
Rational upper_density_estimate(const OmegaSet& s, const WindowSchedule& schedule, unsigned workers = 1);

/// upper_density_estimate(X △ Y).
Rational rho_estimate(const OmegaSet& x, const OmegaSet& y, const WindowSchedule& schedule, unsigned workers = 1);

/// |S ∩ B ∩ n| / |B ∩ n|; throws PreconditionError when B has no member below n.
Rational relative_density(const OmegaSet& s, const OmegaSet& b, std::uint64_t n);

}  // namespace densind
