#include "densind/cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <CLI11.hpp>

#include "densind/cli/report.hpp"
#include "densind/constructors.hpp"
#include "densind/counting.hpp"
#include "densind/errors.hpp"
#include "densind/reaping.hpp"
#include "densind/verifier.hpp"

namespace densind::cli {

using nlohmann::json;

namespace {

constexpr unsigned kRankScanBlocks = kLastFullBlock + 1;

double tolerance_for(const SpecFile& spec, const Universe& u, const std::vector<std::string>& names,
                     const WindowSchedule& schedule) {
  if (spec.tolerance) return *spec.tolerance;
  double tol = kEquidistributionTolerance;
  for (const auto& name : names) {
    if (u.contains(name) && u.at(name).randomized) tol = std::max(tol, randomized_tolerance(schedule.largest()));
  }
  return tol;
}

// Members of the declared family, in the requested order.
std::vector<std::string> family_names(const Universe& u, const std::vector<std::string>& names) {
  if (names.empty()) {
    if (u.family.empty()) throw PreconditionError("the spec declares no set with a density");
    return u.family.names();
  }
  for (const auto& name : names) {
    if (u.contains(name) && !u.at(name).density) {
      throw PreconditionError("set '" + name + "' has no declared density");
    }
    if (!u.contains(name)) throw PreconditionError("unknown set '" + name + "'");
  }
  return names;
}

json guard_band_json(const Universe& u, const WindowSchedule& schedule) {
  json out = json::array();
  const std::uint64_t n = schedule.largest();
  for (const auto& s : u.sets) {
    if (!s.kw) continue;
    const double bound = 2.0 * static_cast<double>(n) * std::ldexp(1.0, -static_cast<int>(kGuardBits)) + 1.0;
    const std::uint64_t hits = kw_guard_band_count(*s.kw, n);
    out.push_back({{"name", s.name},
                   {"radicand", s.kw->radicand},
                   {"threshold", to_fraction_string(s.kw->threshold)},
                   {"n", n},
                   {"count", hits},
                   {"bound", bound},
                   {"flagged", hits > 0}});
  }
  return out;
}

json families_json(const Universe& u) {
  json blocks = json::array();
  for (const auto& b : u.blocks) {
    blocks.push_back({{"name", b.name},
                      {"classical", b.classical},
                      {"members", b.members},
                      {"rank_block", b.rank_block ? json(*b.rank_block) : json(nullptr)}});
    if (!b.rank_block) {
      blocks.back()["note"] = "rank never reached k by block " + std::to_string(kRankScanBlocks);
    }
  }
  json randoms = json::array();
  for (const auto& r : u.randoms) {
    const auto& p = r.params;
    randoms.push_back({{"name", r.name},
                       {"base", r.base},
                       {"seed", r.seed},
                       {"params",
                        {{"a", to_fraction_string(p.a)},
                         {"s", to_fraction_string(p.s)},
                         {"epsilon", to_fraction_string(p.epsilon)},
                         {"x0", to_fraction_string(p.x0)},
                         {"x1", to_fraction_string(p.x1)},
                         {"t0", to_fraction_string(p.t0)},
                         {"t1", to_fraction_string(p.t1)}}}});
  }
  return {{"blocks", blocks}, {"random_extensions", randoms}};
}

// Per-block atom counts for a subfamily drawn from one block descriptor.
json block_check(const Universe& u, const BlockInfo& b, const std::vector<std::string>& names,
                 const WindowSchedule& schedule, unsigned workers, bool& pass) {
  std::vector<OmegaSet> classical;
  std::vector<OmegaSet> members;
  for (const auto& name : names) {
    const auto j = static_cast<std::size_t>(std::find(b.members.begin(), b.members.end(), name) - b.members.begin());
    classical.push_back(u.at(b.classical[j]).set);
    members.push_back(u.at(name).set);
  }
  const auto m0 = block_rank_threshold(classical, kRankScanBlocks);
  json out = {{"block_family", b.name}, {"rank_block", m0 ? json(*m0) : json(nullptr)}, {"checks", json::array()}};
  if (!m0) {
    out["note"] = "rank never reached k by block " + std::to_string(kRankScanBlocks);
    return out;
  }
  std::vector<unsigned> blocks;
  std::vector<std::uint64_t> checkpoints;
  for (unsigned m = *m0; m <= kLastFullBlock; ++m) {
    const std::uint64_t end = transform_block_start(m) + transform_block_size(m);
    if (end > schedule.largest()) break;
    if (checkpoints.empty()) checkpoints.push_back(transform_block_start(m));
    checkpoints.push_back(end);
    blocks.push_back(m);
  }
  if (blocks.empty()) {
    out["note"] = "no block from m0 on ends inside the largest window";
    return out;
  }
  const auto counts = atom_sweep_counts(members, checkpoints, workers);
  const std::uint64_t k = names.size();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::uint64_t expected = transform_block_size(blocks[i]) >> k;
    json atoms = json::array();
    bool exact = true;
    for (std::uint32_t sigma = 0; sigma < counts.size(); ++sigma) {
      const std::uint64_t c = counts[sigma][i + 1] - counts[sigma][i];
      exact = exact && c == expected;
      atoms.push_back({{"pattern", SignPattern{names, sigma}.to_string()}, {"count", c}});
    }
    pass = pass && exact;
    out["checks"].push_back({{"m", blocks[i]},
                             {"start", transform_block_start(blocks[i])},
                             {"size", transform_block_size(blocks[i])},
                             {"expected", expected},
                             {"atoms", atoms},
                             {"exact", exact}});
  }
  return out;
}

json summary(bool pass, const std::vector<std::string>& failed) { return {{"pass", pass}, {"failed", failed}}; }

SpecFile with_descriptor(const SpecFile& spec, json descriptor) {
  json doc = to_json(spec);
  doc["sets"].push_back(std::move(descriptor));
  SpecFile out = parse_spec(doc.dump(2));
  out.schedule = spec.schedule;
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    out.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

Rational option_rational(const std::string& text, const std::string& flag) {
  try {
    return parse_rational(text);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), flag);
  }
}

}  // namespace

void apply_options(SpecFile& spec, const RunOptions& options) {
  if (options.schedule) {
    const auto parts = split_list(*options.schedule);
    if (parts.size() != 3) throw ParseError("expected N0,r,J", "--schedule");
    try {
      std::size_t used = 0;
      const std::uint64_t start = std::stoull(parts[0], &used);
      if (used != parts[0].size()) throw std::invalid_argument("start");
      const double ratio = std::stod(parts[1], &used);
      if (used != parts[1].size()) throw std::invalid_argument("ratio");
      const std::uint64_t count = std::stoull(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("count");
      spec.schedule = {start, std::nullopt, ratio, static_cast<std::size_t>(count)};
    } catch (const std::logic_error&) {
      throw ParseError("expected N0,r,J with integer N0, J and real r", "--schedule");
    }
  }
  if (options.prefix) {
    spec.schedule.largest = *options.prefix;
    spec.schedule.start.reset();
  }
  if (options.tolerance) {
    if (!(*options.tolerance >= 0)) throw ParseError("tolerance must be nonnegative", "--tol");
    spec.tolerance = *options.tolerance;
  }
  if (options.seed) spec.seed = *options.seed;
  pin_seeds(spec);
}

CommandResult cmd_construct(SpecFile spec, const RunOptions& options) {
  apply_options(spec, options);
  const WindowSchedule schedule = spec.schedule.build();
  const Universe u = build_universe(spec);
  json report = report_header("construct", spec, u);
  report["schedule"] = schedule_json(schedule);

  bool pass = true;
  std::vector<std::string> failed;
  json estimates = json::array();
  for (const auto& s : u.sets) {
    const double tol = tolerance_for(spec, u, {s.name}, schedule);
    const DensityEstimate est = estimate_density(s.set, schedule, tol, options.workers);
    json e = {{"name", s.name},
              {"kind", s.kind},
              {"declared", s.density ? rational_json(*s.density) : json(nullptr)},
              {"estimate", estimate_json(est)}};
    if (s.density) {
      const bool ok = est.status == ConvergenceStatus::converged && abs(est.value - *s.density) <= exact_rational(tol);
      e["within_tolerance"] = ok;
      if (!ok) failed.push_back(s.name);
      pass = pass && ok;
    }
    estimates.push_back(std::move(e));
  }
  report["estimates"] = std::move(estimates);
  report["guard_band"] = guard_band_json(u, schedule);
  report["families"] = families_json(u);
  report["summary"] = summary(pass, failed);
  return {std::move(report), pass};
}

CommandResult cmd_verify(SpecFile spec, const std::vector<std::string>& requested, const RunOptions& options) {
  apply_options(spec, options);
  const WindowSchedule schedule = spec.schedule.build();
  const Universe u = build_universe(spec);
  const auto names = family_names(u, requested);
  const double tol = tolerance_for(spec, u, names, schedule);
  const IndependenceReport ind = verify_independence(u.family, names, schedule, tol, options.workers);

  json report = report_header("verify", spec, u);
  report["schedule"] = schedule_json(schedule);
  report["independence"] = independence_json(ind);
  bool pass = ind.pass;
  std::vector<std::string> failed;
  for (const auto& a : ind.atoms) {
    if (!a.pass) failed.push_back(a.pattern.to_string());
  }
  for (const auto& b : u.blocks) {
    const bool inside = std::all_of(names.begin(), names.end(), [&](const std::string& n) {
      return std::find(b.members.begin(), b.members.end(), n) != b.members.end();
    });
    if (!inside) continue;
    bool exact = true;
    report["blocks"] = block_check(u, b, names, schedule, options.workers, exact);
    if (!exact) failed.push_back("blocks");
    pass = pass && exact;
    break;
  }
  report["guard_band"] = guard_band_json(u, schedule);
  report["summary"] = summary(pass, failed);
  return {std::move(report), pass};
}

CommandResult cmd_image(SpecFile spec, const std::vector<std::string>& requested, const Rational& grid,
                        const RunOptions& options) {
  apply_options(spec, options);
  const Universe u = build_universe(spec);
  const auto names = family_names(u, requested);
  const Family sub = u.family.subfamily(names);

  json report = report_header("image", spec, u);
  bool pass = true;
  if (names.size() <= kMaxFieldMembers) {
    const auto image = field_image(sub, names);
    json values = json::array();
    bool symmetric = true;
    for (std::size_t i = 0; i < image.size(); ++i) {
      const auto& mirror = image[image.size() - 1 - i];
      symmetric = symmetric && image[i].value + mirror.value == 1 && image[i].multiplicity == mirror.multiplicity;
      values.push_back({{"value", rational_json(image[i].value)}, {"multiplicity", image[i].multiplicity}});
    }
    report["image"] = {{"subfamily", names},
                       {"elements", std::size_t{1} << (std::size_t{1} << names.size())},
                       {"values", values},
                       {"complement_symmetric", symmetric}};
    pass = symmetric;
  } else {
    report["image"] = {{"subfamily", names},
                       {"skipped", "the field image enumerates at most " + std::to_string(kMaxFieldMembers) +
                                       " members"},
                       {"values", json::array()}};
  }

  const DensityScan scan = image_density_scan(sub, grid);
  json unhit = json::array();
  for (std::size_t c = 0; c < scan.hit.size(); ++c) {
    if (!scan.hit[c]) {
      unhit.push_back({{"cell", c}, {"low", rational_json(scan.cell_low(c))}, {"high", rational_json(scan.cell_high(c))}});
    }
  }
  report["scan"] = {{"delta", rational_json(grid)},
                    {"cells", scan.hit.size()},
                    {"depth", scan.depth},
                    {"required_depth", scan.required_depth},
                    {"guaranteed", scan.guaranteed},
                    {"hit", scan.hit},
                    {"unhit_count", scan.unhit_count()},
                    {"unhit", unhit}};
  report["summary"] = summary(pass, pass ? std::vector<std::string>{} : std::vector<std::string>{"image"});
  return {std::move(report), pass};
}

CommandResult cmd_reap(SpecFile spec, const std::string& subject, const std::vector<std::string>& reapers,
                       bool intersections, const RunOptions& options) {
  apply_options(spec, options);
  const WindowSchedule schedule = spec.schedule.build();
  const Universe u = build_universe(spec);
  if (reapers.empty()) throw PreconditionError("reap needs at least one reaping set");
  const OmegaSet s = u.at(subject).set;

  std::vector<std::string> labels;
  std::vector<OmegaSet> sets;
  if (intersections) {
    if (reapers.size() > kMaxExtensionMembers) {
      throw PreconditionError("intersections of at most " + std::to_string(kMaxExtensionMembers) + " sets");
    }
    for (std::uint32_t g = 1; g < (std::uint32_t{1} << reapers.size()); ++g) {
      std::vector<SetExpr> parts;
      std::string label;
      for (std::size_t j = 0; j < reapers.size(); ++j) {
        if (!((g >> j) & 1)) continue;
        parts.emplace_back(u.at(reapers[j]).set);
        label += (label.empty() ? "" : "&") + reapers[j];
      }
      labels.push_back(label);
      sets.push_back(intersect_all(std::move(parts)).to_set());
    }
  } else {
    for (const auto& r : reapers) {
      labels.push_back(r);
      sets.push_back(u.at(r).set);
    }
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (prefix_count(sets[i], schedule.start()) == 0) {
      throw PreconditionError("reaping set '" + labels[i] + "' has no element below the first window " +
                              std::to_string(schedule.start()));
    }
  }

  std::vector<std::string> involved = reapers;
  involved.push_back(subject);
  const double tol = tolerance_for(spec, u, involved, schedule);
  const auto reports = bisect_check(s, sets, schedule, tol, options.workers);

  json report = report_header("reap", spec, u);
  report["schedule"] = schedule_json(schedule);
  report["subject"] = subject;
  report["tolerance"] = tol;
  json rows = json::array();
  bool pass = true;
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    json windows = json::array();
    for (const auto& w : reports[i].windows) {
      windows.push_back({{"n", w.n}, {"joint", w.joint}, {"reference", w.reference}, {"relative", rational_json(w.relative)}});
    }
    rows.push_back({{"reaper", labels[i]},
                    {"windows", windows},
                    {"value", rational_json(reports[i].value)},
                    {"oscillation", rational_json(reports[i].oscillation)},
                    {"pass", reports[i].pass}});
    if (!reports[i].pass) failed.push_back(labels[i]);
    pass = pass && reports[i].pass;
  }
  report["bisection"] = std::move(rows);
  report["summary"] = summary(pass, failed);
  return {std::move(report), pass};
}

CommandResult cmd_extend(SpecFile spec, const ExtendRequest& request, const RunOptions& options) {
  apply_options(spec, options);
  const WindowSchedule schedule = spec.schedule.build();
  const Universe before = build_universe(spec);

  json descriptor;
  std::vector<std::string> members;
  if (request.mode == "thin") {
    members = family_names(before, request.members);
    if (members.size() > kMaxExtensionMembers) {
      throw PreconditionError("thin extension supports at most " + std::to_string(kMaxExtensionMembers) + " members");
    }
    descriptor = {{"name", request.name}, {"kind", "thin-ext"}, {"members", members}};
  } else if (request.mode == "random") {
    if (request.base.empty()) throw ParseError("random extension needs --base", "--base");
    if (!request.target) throw ParseError("random extension needs --s", "--s");
    family_names(before, {request.base});
    descriptor = {{"name", request.name},
                  {"kind", "random-ext"},
                  {"base", request.base},
                  {"s", to_fraction_string(*request.target)},
                  {"seed", spec.seed}};
  } else {
    throw ParseError("mode must be 'thin' or 'random'", "--mode");
  }

  SpecFile extended = with_descriptor(spec, descriptor);
  const Universe u = build_universe(extended);
  const BuiltSet& b = u.at(request.name);
  json report = report_header("extend", extended, u);
  report["schedule"] = schedule_json(schedule);
  report["descriptor"] = descriptor;

  const double tol = tolerance_for(extended, u, {request.name}, schedule);
  const DensityEstimate est = estimate_density(b.set, schedule, tol, options.workers);
  const bool density_ok = est.status == ConvergenceStatus::converged && abs(est.value - *b.density) <= exact_rational(tol);
  report["estimates"] = json::array({{{"name", b.name},
                                      {"kind", b.kind},
                                      {"declared", rational_json(*b.density)},
                                      {"estimate", estimate_json(est)},
                                      {"within_tolerance", density_ok}}});
  bool pass = density_ok;
  std::vector<std::string> failed;
  if (!density_ok) failed.push_back(b.name);

  if (request.mode == "thin") {
    members.push_back(request.name);
    if (members.size() <= kMaxPatternMembers) {
      const auto ind = verify_independence(u.family, members, schedule, tolerance_for(extended, u, members, schedule),
                                           options.workers);
      report["independence"] = independence_json(ind);
      for (const auto& a : ind.atoms) {
        if (!a.pass) failed.push_back(a.pattern.to_string());
      }
      pass = pass && ind.pass;
    } else {
      report["independence"] = {{"skipped", "the enlarged family exceeds " + std::to_string(kMaxPatternMembers) +
                                                " members"}};
    }
  } else {
    const RandomInfo& info = u.randoms.back();
    const BuiltSet& a = u.at(request.base);
    const Rational margin = request.margin.value_or(info.params.epsilon / 2);
    const WitnessReport w = nonindependence_witness(b.set, a.set, *b.density, *a.density, schedule, margin,
                                                    options.workers);
    report["families"] = families_json(u);
    report["witness"] = {{"n", w.n},
                         {"joint_count", w.joint_count},
                         {"joint", rational_json(w.joint)},
                         {"product", rational_json(w.product)},
                         {"gap", rational_json(w.gap)},
                         {"margin", rational_json(w.margin)},
                         {"flagged", w.flagged}};
    if (!w.flagged) failed.push_back("witness");
    pass = pass && w.flagged;
  }
  report["summary"] = summary(pass, failed);
  return {std::move(report), pass};
}

CommandResult cmd_pack(SpecFile spec, const std::vector<std::string>& requested, unsigned side, const Rational& target,
                       const RunOptions& options) {
  apply_options(spec, options);
  const Universe u = build_universe(spec);
  const auto names = family_names(u, requested);
  const auto densities = u.family.subfamily(names).densities();

  json levels = json::array();
  bool pass = true;
  std::vector<PatternBits> previous;
  for (unsigned m = 1; m <= densities.size(); ++m) {
    const std::span<const Rational> d(densities.data(), m);
    const PackingResult r = greedy_atom_pack(d, side, target, previous, m - 1);
    const PackingCertificate cert = certify_packing(d, r);
    json chosen = json::array();
    for (PatternBits p : r.chosen) {
      const bool forced = std::find(r.forced.begin(), r.forced.end(), p) != r.forced.end();
      chosen.push_back({{"pattern", pattern_string(p, m)},
                        {"density", rational_json(expected_atom_density(d, p))},
                        {"forced", forced}});
    }
    json excluded = json::array();
    for (const auto& [p, reach] : cert.excluded) {
      excluded.push_back({{"pattern", pattern_string(p, m)},
                          {"density", rational_json(expected_atom_density(d, p))},
                          {"reach", rational_json(reach)}});
    }
    levels.push_back({{"length", m},
                      {"chosen", chosen},
                      {"cardinality", r.chosen.size()},
                      {"total", rational_json(r.total)},
                      {"certificate", {{"valid", cert.valid}, {"excluded", excluded}}}});
    pass = pass && cert.valid;
    previous = r.chosen;
  }
  json report = report_header("pack", spec, u);
  report["packing"] = {{"subfamily", names}, {"side", side}, {"target", rational_json(target)}, {"levels", levels}};
  report["summary"] = summary(pass, pass ? std::vector<std::string>{} : std::vector<std::string>{"certificate"});
  return {std::move(report), pass};
}

namespace {

struct CommonFlags {
  std::string spec;
  RunOptions run;
  std::optional<std::uint64_t> prefix;
  std::optional<double> tol;
  std::optional<std::string> schedule;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "report";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("spec", f.spec, "family spec file (or a previous report)")->required();
  cmd->add_option("--prefix", f.prefix, "largest window N");
  cmd->add_option("--tol", f.tol, "tolerance");
  cmd->add_option("--schedule", f.schedule, "window schedule N0,r,J");
  cmd->add_option("--seed", f.seed, "default RNG seed");
  cmd->add_option("--out", f.out, "output path");
  cmd->add_option("--format", f.format, "report or table")->check(CLI::IsMember({"report", "table"}));
  cmd->add_option("--workers", f.run.workers, "counting threads")->check(CLI::Range(1u, 256u));
}

void write_output(const std::string& command, const CommandResult& result, const CommonFlags& f, std::ostream& out) {
  const bool table = f.format == "table";
  const std::string text = table ? render_table(result.report) : result.report.dump(2) + "\n";
  std::filesystem::path path = f.out;
  if (path.empty()) {
    const char* dir = std::getenv(kOutDirVariable);
    if (dir == nullptr || *dir == '\0') {
      out << text;
      return;
    }
    std::filesystem::create_directories(dir);
    path = std::filesystem::path(dir) / (command + (table ? ".tsv" : ".json"));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + path.string() + "'");
  file << text;
  if (!file.flush()) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "wrote " << path.string() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Build and check density-independent families of sets of naturals"};
  app.name("densind");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  CommonFlags f;
  f.run.workers = std::max(1u, std::thread::hardware_concurrency());

  auto* construct = app.add_subcommand("construct", "build every set and estimate its density");
  add_common(construct, f);

  std::vector<std::string> family;
  auto* verify = app.add_subcommand("verify", "check the product rule on every atom of a subfamily");
  add_common(verify, f);
  verify->add_option("--family", family, "members to check (default: all)")->delimiter(',');

  std::string grid = "1/100";
  auto* image = app.add_subcommand("image", "expected densities of the generated field and grid coverage");
  add_common(image, f);
  image->add_option("--family", family, "members (default: all)")->delimiter(',');
  image->add_option("--grid", grid, "grid step");

  std::string subject;
  std::vector<std::string> reapers;
  bool intersections = false;
  auto* reap = app.add_subcommand("reap", "check that a set bisects each reaping set");
  add_common(reap, f);
  reap->add_option("--set", subject, "the bisecting set S")->required();
  reap->add_option("--reapers", reapers, "reaping sets")->delimiter(',')->required();
  reap->add_flag("--intersections", intersections, "use every nonempty intersection of the reaping sets");

  ExtendRequest request;
  std::string target_text;
  std::string margin_text;
  auto* extend = app.add_subcommand("extend", "add a thin or random extension and check it");
  add_common(extend, f);
  extend->add_option("--mode", request.mode, "thin or random")->required()->check(CLI::IsMember({"thin", "random"}));
  extend->add_option("--name", request.name, "name of the new set");
  extend->add_option("--members", request.members, "thin: members to extend (default: all)")->delimiter(',');
  extend->add_option("--base", request.base, "random: distinguished member A");
  extend->add_option("--s", target_text, "random: target density s");
  extend->add_option("--margin", margin_text, "random: witness margin (default epsilon/2)");

  unsigned side = 0;
  std::string pack_target;
  auto* pack = app.add_subcommand("pack", "greedy atom packing below a target density");
  add_common(pack, f);
  pack->add_option("--family", family, "members in order (default: all)")->delimiter(',');
  pack->add_option("--side", side, "value of the first coordinate")->required();
  pack->add_option("--target", pack_target, "target density x")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "densind: " << e.what() << '\n';
    return kExitParseError;
  }

  f.run.prefix = f.prefix;
  f.run.tolerance = f.tol;
  f.run.schedule = f.schedule;
  f.run.seed = f.seed;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const SpecFile spec = load_spec(f.spec);
    CommandResult result;
    if (command == "construct") {
      result = cmd_construct(spec, f.run);
    } else if (command == "verify") {
      result = cmd_verify(spec, family, f.run);
    } else if (command == "image") {
      result = cmd_image(spec, family, option_rational(grid, "--grid"), f.run);
    } else if (command == "reap") {
      result = cmd_reap(spec, subject, reapers, intersections, f.run);
    } else if (command == "extend") {
      if (!target_text.empty()) request.target = option_rational(target_text, "--s");
      if (!margin_text.empty()) request.margin = option_rational(margin_text, "--margin");
      result = cmd_extend(spec, request, f.run);
    } else {
      result = cmd_pack(spec, family, side, option_rational(pack_target, "--target"), f.run);
    }
    write_output(command, result, f, out);
    err << "densind " << command << ": " << (result.pass ? "pass" : "FAIL") << '\n';
    return result.pass ? kExitOk : kExitVerificationFailed;
  } catch (const ParseError& e) {
    err << "densind: parse error: " << e.what() << '\n';
    return kExitParseError;
  } catch (const PreconditionError& e) {
    err << "densind: precondition failed: " << e.what() << '\n';
    return kExitPreconditionError;
  } catch (const std::exception& e) {
    err << "densind: " << e.what() << '\n';
    return kExitInternalError;
  }
}

}  // namespace densind::cli
