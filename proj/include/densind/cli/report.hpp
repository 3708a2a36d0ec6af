#pragma once

// Run reports: JSON documents carrying exact counts, exact rational
// densities with a decimal rendering, the effective spec and the RNG seeds.

#include <string>
#include <string_view>

#include <json.hpp>

#include "densind/cli/spec_file.hpp"
#include "densind/density.hpp"
#include "densind/rational.hpp"
#include "densind/verifier.hpp"

namespace densind::cli {

inline constexpr std::string_view kToolName = "densind";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// 64-bit FNV-1a of the canonical serialization, as "fnv1a64:<16 hex digits>".
std::string spec_digest(const nlohmann::json& spec);

/// {"exact": "p/q", "decimal": p/q as double}
nlohmann::json rational_json(const Rational& q);

nlohmann::json estimate_json(const DensityEstimate& estimate);
nlohmann::json independence_json(const IndependenceReport& report);
nlohmann::json schedule_json(const WindowSchedule& schedule);

/// Common header: tool, command, digest, effective spec, RNG seeds.
nlohmann::json report_header(std::string_view command, const SpecFile& effective, const Universe& universe);

/// Tab-separated rows for each section present in the report, each section
/// introduced by a "# <name>" line.
std::string render_table(const nlohmann::json& report);

}  // namespace densind::cli
