#include "densind/reaping.hpp"

#include "densind/counting.hpp"
#include "densind/errors.hpp"
#include "densind/verifier.hpp"

namespace densind {

std::vector<BisectionReport> bisect_check(const OmegaSet& s, std::span<const OmegaSet> reapers,
                                          const WindowSchedule& schedule, double tolerance, unsigned workers) {
  std::vector<OmegaSet> sets;
  for (const auto& b : reapers) {
    sets.push_back(b);
    sets.push_back(intersect(s, b).to_set());
  }
  const auto counts = sweep_counts(sets, schedule.windows(), workers);
  const Rational tol = exact_rational(tolerance);
  const Rational half(1, 2);

  std::vector<BisectionReport> reports;
  for (std::size_t i = 0; i < reapers.size(); ++i) {
    const auto& reference = counts[2 * i];
    const auto& joint = counts[2 * i + 1];
    if (reference.front() == 0) {
      throw PreconditionError("reaping member " + std::to_string(i) + " has no element below the first window " +
                              std::to_string(schedule.start()));
    }
    BisectionReport r;
    std::vector<Rational> relatives;
    for (std::size_t j = 0; j < schedule.count(); ++j) {
      relatives.push_back(Rational(Integer(joint[j]), Integer(reference[j])));
      r.windows.push_back({schedule.windows()[j], joint[j], reference[j], relatives.back()});
    }
    r.value = relatives.back();
    r.oscillation = tail_oscillation(relatives);
    r.pass = abs(r.value - half) <= tol && r.oscillation <= tol;
    reports.push_back(std::move(r));
  }
  return reports;
}

OmegaSet thin_extension(const Family& family) {
  if (family.empty()) throw PreconditionError("thin extension needs a nonempty family");
  if (family.size() > kMaxExtensionMembers) {
    throw PreconditionError("thin extension supports at most " + std::to_string(kMaxExtensionMembers) + " members");
  }
  const auto names = family.names();
  std::vector<SetExpr> halves;
  for (std::uint32_t sigma = 0; sigma < (std::uint32_t{1} << family.size()); ++sigma) {
    halves.push_back(thin(atom(family, {names, sigma}).to_set()));
  }
  return unite_all(std::move(halves)).to_set();
}

std::vector<OmegaSet> nonempty_intersections(const Family& family) {
  std::vector<OmegaSet> out;
  for (std::uint32_t g = 1; g < (std::uint32_t{1} << family.size()); ++g) {
    std::vector<SetExpr> parts;
    for (std::size_t j = 0; j < family.size(); ++j) {
      if ((g >> j) & 1) parts.push_back(family[j].set);
    }
    out.push_back(intersect_all(std::move(parts)).to_set());
  }
  return out;
}

WitnessReport nonindependence_witness(const OmegaSet& b, const OmegaSet& a, const Rational& density_b,
                                      const Rational& density_a, const WindowSchedule& schedule,
                                      const Rational& margin, unsigned workers) {
  WitnessReport w;
  w.n = schedule.largest();
  const std::uint64_t checkpoint[] = {w.n};
  w.joint_count = sweep_counts(intersect(b, a).to_set(), checkpoint, workers).front();
  w.joint = make_rational(w.joint_count, w.n);
  w.product = density_b * density_a;
  w.gap = abs(w.joint - w.product);
  w.margin = margin;
  w.flagged = w.gap >= margin;
  return w;
}

}  // namespace densind
