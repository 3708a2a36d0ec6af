#pragma once

// Family specification files: a JSON document naming the sets to build.
//
//   {
//     "version": 1,
//     "defaults": {"schedule": {"start": 10000, "ratio": 2, "windows": 10},
//                  "tolerance": 0.005, "seed": 1},
//     "sets": [
//       {"name": "a", "kind": "kw", "radicand": 2, "threshold": "3/10"},
//       {"name": "x", "kind": "coded", "sigma": "01", "depth": 4},
//       {"name": "blk", "kind": "block", "classical": ["x", "y", "z"]},
//       {"name": "b", "kind": "random-ext", "base": "a", "s": "1/2", "seed": 7},
//       {"name": "g", "kind": "gap", "p": 0.9, "count": 4},
//       {"name": "e", "kind": "expr", "expr": {"op": "thin", "of": "a"}},
//       {"name": "t", "kind": "thin-ext", "members": ["a", "b"]}
//     ]
//   }
//
// "block" and "gap" descriptors define members <name>_0, <name>_1, ...
// The schedule may give "largest" instead of "start" to pin the last window.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "densind/constructors.hpp"
#include "densind/density.hpp"
#include "densind/family.hpp"
#include "densind/omega_set.hpp"
#include "densind/rational.hpp"

namespace densind::cli {

inline constexpr int kSpecVersion = 1;

/// Malformed or schema-violating spec. `field` is a path such as
/// "sets[2].radicand"; `line` is 1-based, or 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::string field = {}, std::size_t line = 0);

  const std::string& field() const { return field_; }
  std::size_t line() const { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

struct ScheduleSpec {
  std::optional<std::uint64_t> start;
  std::optional<std::uint64_t> largest;  // exactly one of start / largest
  double ratio = 2.0;
  std::size_t count = 10;

  WindowSchedule build() const;
};

struct SetDescriptor {
  std::string name;
  std::string kind;
  nlohmann::json params;  // the descriptor object as written
  std::size_t line = 0;
  std::vector<std::string> defines;  // set names this descriptor introduces
};

struct SpecFile {
  int version = kSpecVersion;
  ScheduleSpec schedule;
  std::optional<double> tolerance;  // absent: per-construction default
  std::uint64_t seed = 1;
  std::vector<SetDescriptor> sets;
};

SpecFile parse_spec(std::string_view text);

/// Reads a spec file. A run report is accepted too; its embedded spec is used.
SpecFile load_spec(const std::filesystem::path& path);

nlohmann::json to_json(const SpecFile& spec);

struct BuiltSet {
  std::string name;
  std::string kind;
  OmegaSet set;
  std::optional<Rational> density;  // declared; absent for coded and undeclared expr sets
  std::optional<KWSeed> kw;         // for kw and gap members
  std::optional<std::uint64_t> seed;
  bool randomized = false;
};

struct BlockInfo {
  std::string name;
  std::vector<std::string> classical;
  std::vector<std::string> members;
  std::optional<unsigned> rank_block;  // m0
};

struct RandomInfo {
  std::string name;
  std::string base;
  ExtensionParams params;
  std::uint64_t seed = 0;
};

struct Universe {
  std::vector<BuiltSet> sets;
  Family family;  // every set with a declared density, in spec order
  std::vector<BlockInfo> blocks;
  std::vector<RandomInfo> randoms;

  const BuiltSet& at(std::string_view name) const;
  bool contains(std::string_view name) const;
};

/// Builds every descriptor in order. Precondition failures are rethrown as
/// PreconditionError naming the descriptor.
Universe build_universe(const SpecFile& spec);

/// Fills in the default seed on random-ext descriptors that lack one, so the
/// spec replays without relying on defaults.
void pin_seeds(SpecFile& spec);

/// The declared density of a rational-valued field: a JSON string such as
/// "3/10" or "0.3", or a JSON number read by its shortest decimal form.
Rational rational_field(const nlohmann::json& value, const std::string& field, std::size_t line = 0);

}  // namespace densind::cli
