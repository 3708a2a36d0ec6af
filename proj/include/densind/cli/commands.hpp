#pragma once

// The densind subcommands. Each takes a parsed spec plus run options and
// returns a JSON report with a pass flag; run_cli wires them to argv.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "densind/cli/spec_file.hpp"

namespace densind::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailed = 1,
  kExitParseError = 2,
  kExitPreconditionError = 3,
  kExitInternalError = 4,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirVariable = "DENSIND_OUT_DIR";

struct RunOptions {
  std::optional<std::uint64_t> prefix;    // largest window
  std::optional<double> tolerance;
  std::optional<std::string> schedule;    // "N0,r,J"
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
};

struct CommandResult {
  nlohmann::json report;
  bool pass = false;
};

/// Folds the overrides into the spec and pins random seeds; the result is
/// what reports embed.
void apply_options(SpecFile& spec, const RunOptions& options);

CommandResult cmd_construct(SpecFile spec, const RunOptions& options);

/// `names` empty: every member with a declared density.
CommandResult cmd_verify(SpecFile spec, const std::vector<std::string>& names, const RunOptions& options);

CommandResult cmd_image(SpecFile spec, const std::vector<std::string>& names, const Rational& grid,
                        const RunOptions& options);

/// With `intersections`, R is every nonempty intersection of the named sets.
CommandResult cmd_reap(SpecFile spec, const std::string& subject, const std::vector<std::string>& reapers,
                       bool intersections, const RunOptions& options);

struct ExtendRequest {
  std::string mode;                   // "thin" or "random"
  std::string name = "ext";           // name of the new set
  std::vector<std::string> members;   // thin: members to extend (default all)
  std::string base;                   // random: the distinguished member A
  std::optional<Rational> target;     // random: s
  std::optional<Rational> margin;     // random: witness margin, default ε/2
};

CommandResult cmd_extend(SpecFile spec, const ExtendRequest& request, const RunOptions& options);

CommandResult cmd_pack(SpecFile spec, const std::vector<std::string>& names, unsigned side, const Rational& target,
                       const RunOptions& options);

/// Parses argv, runs one subcommand, writes the report, returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace densind::cli
