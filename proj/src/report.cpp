#include "densind/cli/report.hpp"

#include <cstdio>
#include <sstream>

#include "densind/philox.hpp"

namespace densind::cli {

using nlohmann::json;

std::string spec_digest(const json& spec) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : spec.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

json rational_json(const Rational& q) { return {{"exact", to_fraction_string(q)}, {"decimal", to_double(q)}}; }

json schedule_json(const WindowSchedule& schedule) {
  return {{"start", schedule.start()},
          {"ratio", schedule.ratio()},
          {"largest", schedule.largest()},
          {"windows", std::vector<std::uint64_t>(schedule.windows().begin(), schedule.windows().end())}};
}

json estimate_json(const DensityEstimate& e) {
  json windows = json::array();
  for (const auto& w : e.windows) {
    windows.push_back({{"n", w.n}, {"count", w.count}, {"density", rational_json(w.density)}});
  }
  Rational upper(0);
  for (std::size_t j = e.windows.size() > kTailWindows ? e.windows.size() - kTailWindows : 0; j < e.windows.size(); ++j) {
    upper = std::max(upper, e.windows[j].density);
  }
  return {{"windows", windows},
          {"value", rational_json(e.value)},
          {"oscillation", rational_json(e.oscillation)},
          {"upper_density_estimate", rational_json(upper)},
          {"status", std::string(to_string(e.status))},
          {"tolerance", e.tolerance}};
}

json independence_json(const IndependenceReport& report) {
  json atoms = json::array();
  for (const auto& a : report.atoms) {
    atoms.push_back({{"pattern", a.pattern.to_string()},
                     {"expected", rational_json(a.expected)},
                     {"empirical", estimate_json(a.empirical)},
                     {"deviation", rational_json(a.deviation)},
                     {"pass", a.pass}});
  }
  return {{"subfamily", report.subfamily}, {"tolerance", report.tolerance}, {"atoms", atoms}, {"pass", report.pass}};
}

json report_header(std::string_view command, const SpecFile& effective, const Universe& universe) {
  json spec = to_json(effective);
  json seeds = json::object();
  for (const auto& s : universe.sets) {
    if (s.seed) seeds[s.name] = *s.seed;
  }
  return {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
          {"command", command},
          {"spec_digest", spec_digest(spec)},
          {"spec", spec},
          {"rng", {{"algorithm", kPhiloxAlgorithm}, {"seeds", seeds}}}};
}

namespace {

std::string decimal(const json& r) {
  std::ostringstream out;
  out.precision(10);
  out << r["decimal"].get<double>();
  return out.str();
}

void estimate_rows(std::ostringstream& out, const std::string& label, const json& estimate) {
  for (const auto& w : estimate["windows"]) {
    out << label << '\t' << w["n"].get<std::uint64_t>() << '\t' << w["count"].get<std::uint64_t>() << '\t'
        << w["density"]["exact"].get<std::string>() << '\t' << decimal(w["density"]) << '\n';
  }
}

}  // namespace

std::string render_table(const json& report) {
  std::ostringstream out;
  if (report.contains("estimates")) {
    out << "# estimates\nset\tn\tcount\tdensity\tdecimal\n";
    for (const auto& e : report["estimates"]) estimate_rows(out, e["name"].get<std::string>(), e["estimate"]);
  }
  if (report.contains("independence")) {
    out << "# atoms\npattern\tn\tcount\tdensity\tdecimal\n";
    for (const auto& a : report["independence"]["atoms"]) estimate_rows(out, a["pattern"].get<std::string>(), a["empirical"]);
    out << "# expected\npattern\texpected\tdeviation\tpass\n";
    for (const auto& a : report["independence"]["atoms"]) {
      out << a["pattern"].get<std::string>() << '\t' << a["expected"]["exact"].get<std::string>() << '\t'
          << decimal(a["deviation"]) << '\t' << (a["pass"].get<bool>() ? "pass" : "fail") << '\n';
    }
  }
  if (report.contains("blocks")) {
    out << "# blocks\nblock\tpattern\tcount\texpected\n";
    for (const auto& b : report["blocks"]["checks"]) {
      for (const auto& a : b["atoms"]) {
        out << b["m"].get<unsigned>() << '\t' << a["pattern"].get<std::string>() << '\t'
            << a["count"].get<std::uint64_t>() << '\t' << b["expected"].get<std::uint64_t>() << '\n';
      }
    }
  }
  if (report.contains("image")) {
    out << "# image\nvalue\tdecimal\tmultiplicity\n";
    for (const auto& v : report["image"]["values"]) {
      out << v["value"]["exact"].get<std::string>() << '\t' << decimal(v["value"]) << '\t'
          << v["multiplicity"].get<std::size_t>() << '\n';
    }
  }
  if (report.contains("scan")) {
    out << "# scan\ncell\tlow\thigh\thit\n";
    const auto& hit = report["scan"]["hit"];
    const Rational delta = parse_rational(report["scan"]["delta"]["exact"].get<std::string>());
    for (std::size_t c = 0; c < hit.size(); ++c) {
      Rational high = delta * (c + 1);
      if (high > 1) high = 1;
      out << c << '\t' << to_double(delta * c) << '\t' << to_double(high) << '\t' << (hit[c].get<bool>() ? 1 : 0)
          << '\n';
    }
  }
  if (report.contains("bisection")) {
    out << "# bisection\nreaper\tn\tjoint\treference\trelative\n";
    for (const auto& r : report["bisection"]) {
      for (const auto& w : r["windows"]) {
        out << r["reaper"].get<std::string>() << '\t' << w["n"].get<std::uint64_t>() << '\t'
            << w["joint"].get<std::uint64_t>() << '\t' << w["reference"].get<std::uint64_t>() << '\t'
            << decimal(w["relative"]) << '\n';
      }
    }
  }
  if (report.contains("witness")) {
    const auto& w = report["witness"];
    out << "# witness\nn\tjoint\tproduct\tgap\tmargin\tflagged\n"
        << w["n"].get<std::uint64_t>() << '\t' << decimal(w["joint"]) << '\t' << decimal(w["product"]) << '\t'
        << decimal(w["gap"]) << '\t' << decimal(w["margin"]) << '\t' << (w["flagged"].get<bool>() ? 1 : 0) << '\n';
  }
  if (report.contains("packing")) {
    out << "# packing\nlength\tpattern\tdensity\tstatus\n";
    for (const auto& level : report["packing"]["levels"]) {
      const auto length = level["length"].get<unsigned>();
      for (const auto& p : level["chosen"]) {
        out << length << '\t' << p["pattern"].get<std::string>() << '\t' << p["density"]["exact"].get<std::string>()
            << '\t' << (p["forced"].get<bool>() ? "forced" : "chosen") << '\n';
      }
      for (const auto& p : level["certificate"]["excluded"]) {
        out << length << '\t' << p["pattern"].get<std::string>() << '\t' << p["density"]["exact"].get<std::string>()
            << "\texcluded\n";
      }
    }
  }
  if (report.contains("summary")) {
    out << "# summary\npass\t" << (report["summary"]["pass"].get<bool>() ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace densind::cli
