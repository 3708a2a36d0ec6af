#include "densind/density.hpp"

#include <algorithm>
#include <cmath>

#include "densind/counting.hpp"
#include "densind/errors.hpp"

namespace densind {

WindowSchedule::WindowSchedule(std::uint64_t start, double ratio, std::size_t count) : ratio_(ratio) {
  if (start == 0) throw PreconditionError("window schedule start must be positive");
  if (!(ratio > 1.0) || !std::isfinite(ratio)) throw PreconditionError("window ratio must be a real > 1");
  if (count < 3) throw PreconditionError("window schedule needs at least 3 windows");
  windows_.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const long double n = std::ceil(static_cast<long double>(start) * std::pow(static_cast<long double>(ratio), j));
    if (n >= 1.8e19L) throw PreconditionError("window schedule overflows 64-bit indices");
    windows_.push_back(static_cast<std::uint64_t>(n));
  }
  validate(ratio_, windows_);
}

WindowSchedule::WindowSchedule(double ratio, std::vector<std::uint64_t> windows)
    : ratio_(ratio), windows_(std::move(windows)) {
  validate(ratio_, windows_);
}

void WindowSchedule::validate(double ratio, const std::vector<std::uint64_t>& windows) {
  if (!(ratio > 1.0)) throw PreconditionError("window ratio must be a real > 1");
  if (windows.size() < 3) throw PreconditionError("window schedule needs at least 3 windows");
  if (windows.front() == 0) throw PreconditionError("windows must be positive");
  for (std::size_t j = 1; j < windows.size(); ++j) {
    if (windows[j] <= windows[j - 1]) throw PreconditionError("windows must be strictly increasing");
  }
}

WindowSchedule WindowSchedule::ending_at(std::uint64_t largest, double ratio, std::size_t count) {
  if (!(ratio > 1.0) || !std::isfinite(ratio)) throw PreconditionError("window ratio must be a real > 1");
  if (count < 3) throw PreconditionError("window schedule needs at least 3 windows");
  std::vector<std::uint64_t> windows(count);
  for (std::size_t j = 0; j < count; ++j) {
    const auto back = static_cast<long double>(count - 1 - j);
    windows[j] = static_cast<std::uint64_t>(
        std::ceil(static_cast<long double>(largest) / std::pow(static_cast<long double>(ratio), back)));
  }
  windows.back() = largest;
  return WindowSchedule(ratio, std::move(windows));
}

WindowSchedule WindowSchedule::defaults() { return WindowSchedule(10'000, 2.0, 10); }

double randomized_tolerance(std::uint64_t largest_window) {
  return std::max(5e-3, 4.0 / std::sqrt(static_cast<double>(largest_window)));
}

std::string_view to_string(ConvergenceStatus status) {
  return status == ConvergenceStatus::converged ? "converged" : "oscillating";
}

Rational prefix_density(const OmegaSet& s, std::uint64_t n) {
  if (n == 0) throw PreconditionError("prefix density needs n >= 1");
  return make_rational(prefix_count(s, n), n);
}

std::vector<std::uint64_t> window_counts(const OmegaSet& s, const WindowSchedule& schedule, unsigned workers) {
  if (s.has_count_hint()) {
    std::vector<std::uint64_t> counts;
    for (std::uint64_t n : schedule.windows()) counts.push_back(*s.count_hint(n));
    return counts;
  }
  return sweep_counts(s, schedule.windows(), workers);
}

Rational tail_oscillation(std::span<const Rational> densities) {
  if (densities.empty()) return Rational(0);
  const auto tail = densities.last(std::min(kTailWindows, densities.size()));
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
  return *hi - *lo;
}

DensityEstimate estimate_from_counts(const WindowSchedule& schedule, std::span<const std::uint64_t> counts,
                                     double tolerance) {
  DensityEstimate est;
  est.tolerance = tolerance;
  std::vector<Rational> densities;
  for (std::size_t j = 0; j < schedule.count(); ++j) {
    const std::uint64_t n = schedule.windows()[j];
    densities.push_back(make_rational(counts[j], n));
    est.windows.push_back({n, counts[j], densities.back()});
  }
  est.value = densities.back();
  est.oscillation = tail_oscillation(densities);
  est.status = est.oscillation <= exact_rational(tolerance) ? ConvergenceStatus::converged
                                                            : ConvergenceStatus::oscillating;
  return est;
}

DensityEstimate estimate_density(const OmegaSet& s, const WindowSchedule& schedule, double tolerance,
                                 unsigned workers) {
  const auto counts = window_counts(s, schedule, workers);
  return estimate_from_counts(schedule, counts, tolerance);
}

Rational upper_density_estimate(const OmegaSet& s, const WindowSchedule& schedule, unsigned workers) {
  const auto counts = window_counts(s, schedule, workers);
  Rational best(0);
  const std::size_t first = schedule.count() - std::min(kTailWindows, schedule.count());
  for (std::size_t j = first; j < schedule.count(); ++j) {
    best = std::max(best, make_rational(counts[j], schedule.windows()[j]));
  }
  return best;
}

Rational rho_estimate(const OmegaSet& x, const OmegaSet& y, const WindowSchedule& schedule, unsigned workers) {
  return upper_density_estimate(sym_diff(x, y).to_set(), schedule, workers);
}

Rational relative_density(const OmegaSet& s, const OmegaSet& b, std::uint64_t n) {
  const std::uint64_t base = prefix_count(b, n);
  if (base == 0) throw PreconditionError("relative density undefined: reference set has no member below n");
  return make_rational(prefix_count(intersect(s, b), n), base);
}

}  // namespace densind
