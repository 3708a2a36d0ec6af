#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "densind/cli/commands.hpp"
#include "densind/cli/report.hpp"
#include "densind/cli/spec_file.hpp"
#include "densind/errors.hpp"

using namespace densind;
using namespace densind::cli;
using nlohmann::json;

namespace {

const std::filesystem::path kSpecs = DENSIND_SPEC_DIR;

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / ("densind_test_cli_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_file(const std::string& name, const std::string& text) {
  const auto path = scratch_dir() / name;
  std::ofstream(path) << text;
  return path;
}

RunOptions one_worker() {
  RunOptions o;
  o.workers = 1;
  return o;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "densind");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

// A parse error carrying its location, or a default when nothing was thrown.
ParseError parse_failure(const std::string& text) {
  try {
    parse_spec(text);
  } catch (const ParseError& e) {
    return e;
  }
  return ParseError("no error");
}

}  // namespace

TEST_CASE("spec parsing") {
  const SpecFile spec = load_spec(kSpecs / "thin_extension.json");
  CHECK(spec.version == 1);
  CHECK(spec.schedule.largest == 1'000'000u);
  CHECK_FALSE(spec.schedule.start.has_value());
  CHECK(spec.tolerance == doctest::Approx(0.005));
  REQUIRE(spec.sets.size() == 4);
  CHECK(spec.sets[2].kind == "thin-ext");
  CHECK(spec.sets[0].line == 5);

  const SpecFile gap = load_spec(kSpecs / "gap.json");
  CHECK(gap.sets[0].defines == std::vector<std::string>{"gap_0", "gap_1", "gap_2", "gap_3"});
  const SpecFile block = load_spec(kSpecs / "block_triple.json");
  CHECK(block.sets[3].defines == std::vector<std::string>{"blk_0", "blk_1", "blk_2"});

  // JSON numbers are read by their decimal form
  CHECK(rational_field(json::parse("0.3"), "x") == Rational(3, 10));
  CHECK(rational_field(json("7/20"), "x") == Rational(7, 20));
  CHECK_THROWS_AS(rational_field(json(true), "x"), ParseError);
}

TEST_CASE("spec errors carry line and field") {
  const auto syntax = parse_failure("{\"version\": 1,\n\"sets\": [\n  {\"name\": \"a\" \"kind\": \"kw\"}\n]}");
  CHECK(syntax.line() == 3);

  const std::string dup =
      "{\"version\": 1, \"sets\": [\n"
      "  {\"name\": \"a\", \"kind\": \"kw\", \"radicand\": 2, \"threshold\": 0.5},\n"
      "  {\"name\": \"a\", \"kind\": \"kw\", \"radicand\": 3, \"threshold\": 0.5}\n"
      "]}";
  const auto d = parse_failure(dup);
  CHECK(d.line() == 3);
  CHECK(d.field() == "sets[1].name");
  CHECK(std::string(d.what()).find("duplicate set name 'a'") != std::string::npos);

  // expanded names collide too
  const auto expanded = parse_failure(
      "{\"version\": 1, \"sets\": [{\"name\": \"g_1\", \"kind\": \"kw\", \"radicand\": 2, \"threshold\": 0.5},"
      "{\"name\": \"g\", \"kind\": \"gap\", \"p\": 0.9, \"count\": 3}]}");
  CHECK(std::string(expanded.what()).find("'g_1'") != std::string::npos);

  CHECK(parse_failure("{\"version\": 2, \"sets\": []}").field() == "version");
  CHECK(parse_failure("{\"sets\": []}").what() != std::string("no error"));
  CHECK(parse_failure("{\"version\": 1, \"sets\": [{\"name\": \"a\", \"kind\": \"cantor\"}]}").field() == "sets[0].kind");
  CHECK(parse_failure("{\"version\": 1, \"sets\": [{\"name\": \"a\", \"kind\": \"kw\", \"radicand\": 2}]}").field() ==
        "sets[0]");
  CHECK(parse_failure("{\"version\": 1, \"sets\": [{\"name\": \"a\", \"kind\": \"kw\", \"radicand\": 2, "
                      "\"threshold\": \"x/2\"}]}")
            .field() == "sets[0].threshold");
  CHECK(parse_failure("{\"version\": 1, \"sets\": [{\"name\": \"t\", \"kind\": \"thin-ext\", \"members\": [\"b\"]}]}")
            .field() == "sets[0].members[0]");
  CHECK(parse_failure("{\"version\": 1, \"sets\": [{\"name\": \"e\", \"kind\": \"expr\", "
                      "\"expr\": {\"op\": \"thin\", \"of\": {\"op\": \"power\"}}}]}")
            .field() == "sets[0].expr.of.op");
  CHECK(parse_failure("{\"version\": 1, \"sets\": [{\"name\": \"a\", \"kind\": \"kw\", \"radicand\": 2, "
                      "\"threshold\": 0.5, \"colour\": 1}]}")
            .what() != std::string("no error"));
}

TEST_CASE("construct: one kw set") {
  const auto result = cmd_construct(load_spec(kSpecs / "kw_single.json"), one_worker());
  CHECK(result.pass);
  const auto& e = result.report["estimates"][0];
  CHECK(e["name"] == "a");
  CHECK(e["estimate"]["status"] == "converged");
  CHECK(std::abs(e["estimate"]["value"]["decimal"].get<double>() - 0.5) <= 5e-3);
  CHECK(e["declared"]["exact"] == "1/2");
  // counts are integers, densities exact fractions
  const auto& w = e["estimate"]["windows"].back();
  CHECK(w["count"].is_number_unsigned());
  CHECK(parse_rational(w["density"]["exact"].get<std::string>()) == make_rational(w["count"].get<std::uint64_t>(), w["n"].get<std::uint64_t>()));
  CHECK(result.report["guard_band"][0]["count"].get<std::uint64_t>() <= 1);
  CHECK(result.report["tool"]["version"] == std::string(kToolVersion));
  CHECK(result.report["spec_digest"].get<std::string>().rfind("fnv1a64:", 0) == 0);
}

TEST_CASE("construct: duplicate and empty specs") {
  const auto dup = write_file("dup.json",
                              "{\"version\": 1, \"sets\": [{\"name\": \"a\", \"kind\": \"kw\", \"radicand\": 2, "
                              "\"threshold\": 0.5}, {\"name\": \"a\", \"kind\": \"kw\", \"radicand\": 3, "
                              "\"threshold\": 0.5}]}");
  CHECK_THROWS_WITH_AS(load_spec(dup), doctest::Contains("duplicate set name 'a'"), ParseError);
  const auto empty = write_file("empty.json", "{\"version\": 1, \"sets\": []}");
  CHECK_THROWS_WITH_AS(cmd_construct(load_spec(empty), one_worker()), doctest::Contains("must be nonempty"),
                       PreconditionError);
  const auto bad = write_file("bad.json",
                              "{\"version\": 1, \"sets\": [{\"name\": \"q\", \"kind\": \"kw\", \"radicand\": 9, "
                              "\"threshold\": 0.5}]}");
  CHECK_THROWS_WITH_AS(cmd_construct(load_spec(bad), one_worker()), doctest::Contains("set 'q'"), PreconditionError);
}

TEST_CASE("verify: kw triple passes at one million") {
  const auto result = cmd_verify(load_spec(kSpecs / "kw_triple.json"), {}, one_worker());
  CHECK(result.pass);
  const auto& atoms = result.report["independence"]["atoms"];
  REQUIRE(atoms.size() == 8);
  CHECK(atoms[7]["pattern"] == "111");
  CHECK(atoms[7]["expected"]["exact"] == "21/200");
  CHECK(atoms[7]["empirical"]["windows"].back()["count"] == 104995);
  CHECK(result.report["summary"]["failed"].empty());
}

TEST_CASE("verify: preconditions") {
  const SpecFile spec = load_spec(kSpecs / "kw_triple.json");
  CHECK_THROWS_AS(cmd_verify(spec, {"kw_2", "missing"}, one_worker()), PreconditionError);
  CHECK_THROWS_AS(cmd_verify(spec, {"kw_2", "kw_2"}, one_worker()), PreconditionError);
  const SpecFile block = load_spec(kSpecs / "block_triple.json");
  CHECK_THROWS_WITH_AS(cmd_verify(block, {"x00"}, one_worker()), doctest::Contains("no declared density"),
                       PreconditionError);
  RunOptions bad_schedule = one_worker();
  bad_schedule.schedule = "100,2";
  CHECK_THROWS_AS(cmd_verify(spec, {}, bad_schedule), ParseError);
}

TEST_CASE("verify: zero tolerance on a randomized family fails with deviations listed") {
  RunOptions o = one_worker();
  o.tolerance = 0.0;
  o.prefix = 100'000;
  const auto result = cmd_verify(load_spec(kSpecs / "random_extension.json"), {}, o);
  CHECK_FALSE(result.pass);
  CHECK(result.report["summary"]["failed"].size() == 4);
  for (const auto& a : result.report["independence"]["atoms"]) CHECK(a["deviation"]["decimal"].get<double>() > 0);
}

TEST_CASE("verify: block family is exact on block I_8") {
  RunOptions o = one_worker();
  o.prefix = 98'405'981;  // end of I_8
  const auto result = cmd_verify(load_spec(kSpecs / "block_triple.json"), {}, o);
  const auto& blocks = result.report["blocks"];
  CHECK(blocks["rank_block"] == 8);
  REQUIRE(blocks["checks"].size() == 1);
  const auto& check = blocks["checks"][0];
  CHECK(check["m"] == 8);
  CHECK(check["exact"] == true);
  for (const auto& a : check["atoms"]) CHECK(a["count"] == 92'897'280 / 8);
}

TEST_CASE("image: two members and the gap family") {
  RunOptions o = one_worker();
  const auto two = cmd_image(load_spec(kSpecs / "kw_triple.json"), {"kw_2", "kw_3"}, Rational(1, 100), o);
  std::size_t total = 0;
  for (const auto& v : two.report["image"]["values"]) total += v["multiplicity"].get<std::size_t>();
  CHECK(total == 16);
  CHECK(two.report["image"]["complement_symmetric"] == true);
  CHECK(two.pass);

  const SpecFile gap_spec = load_spec(kSpecs / "gap.json");
  const Universe u = build_universe(gap_spec);
  Rational top(1);
  for (const auto& m : u.family.members()) top *= m.density;
  const Rational delta(1, 50);
  const auto gap = cmd_image(gap_spec, {}, delta, o);
  const auto& hit = gap.report["scan"]["hit"];
  for (std::size_t c = 0; c < hit.size(); ++c) {
    const Rational low = delta * c;
    const Rational high = std::min(Rational(1), Rational(delta * (c + 1)));
    const bool inside = low > 1 - top && high < top;
    CHECK(hit[c].get<bool>() == !inside);
  }

  // a grid finer than the atoms: unhit cells are reported, not an error
  const auto fine = cmd_image(gap_spec, {}, Rational(1, 100'000), o);
  CHECK(fine.report["scan"]["unhit_count"].get<std::size_t>() > 0);
}

TEST_CASE("extend: thin then verify the enlarged family") {
  RunOptions o = one_worker();
  ExtendRequest r;
  r.mode = "thin";
  r.name = "B";
  r.members = {"kw_2", "kw_3"};
  const auto ext = cmd_extend(load_spec(kSpecs / "kw_triple.json"), r, o);
  CHECK(ext.pass);
  CHECK(ext.report["descriptor"]["kind"] == "thin-ext");
  CHECK(ext.report["independence"]["subfamily"] == json({"kw_2", "kw_3", "B"}));

  // the report's embedded spec carries B
  const SpecFile enlarged = parse_spec(ext.report.dump());
  const auto again = cmd_verify(enlarged, {"kw_2", "kw_3", "kw_5", "B"}, o);
  CHECK(again.pass);

  r.name = "kw_2";
  CHECK_THROWS_AS(cmd_extend(load_spec(kSpecs / "kw_triple.json"), r, o), ParseError);
}

TEST_CASE("extend: random with a pinned seed, then witness") {
  RunOptions o = one_worker();
  o.prefix = 1'000'000;
  o.seed = 20261018;
  ExtendRequest r;
  r.mode = "random";
  r.name = "B";
  r.base = "a";
  r.target = Rational(1, 2);
  const auto ext = cmd_extend(load_spec(kSpecs / "kw_single.json"), r, o);
  CHECK(ext.pass);
  const auto& params = ext.report["families"]["random_extensions"][0]["params"];
  CHECK(params["epsilon"] == "1/8");
  CHECK(params["x1"] == "3/8");
  CHECK(ext.report["witness"]["flagged"] == true);
  CHECK(ext.report["witness"]["margin"]["exact"] == "1/16");
  CHECK(ext.report["rng"]["algorithm"] == "philox4x32-10");
  CHECK(ext.report["rng"]["seeds"]["B"] == 20261018);
  CHECK(ext.report["descriptor"]["seed"] == 20261018);

  r.base = "";
  CHECK_THROWS_AS(cmd_extend(load_spec(kSpecs / "kw_single.json"), r, o), ParseError);
}

TEST_CASE("reap") {
  RunOptions o = one_worker();
  const SpecFile spec = load_spec(kSpecs / "thin_extension.json");
  const auto ok = cmd_reap(spec, "B", {"kw_2", "kw_3"}, true, o);
  CHECK(ok.pass);
  REQUIRE(ok.report["bisection"].size() == 3);
  CHECK(ok.report["bisection"][2]["reaper"] == "kw_2&kw_3");

  const auto bad = cmd_reap(spec, "odd_thirds", {"kw_2"}, false, o);
  CHECK_FALSE(bad.pass);

  const auto empty = write_file("reap_empty.json",
                                "{\"version\": 1, \"sets\": ["
                                "{\"name\": \"a\", \"kind\": \"kw\", \"radicand\": 2, \"threshold\": 0.5},"
                                "{\"name\": \"late\", \"kind\": \"expr\", \"expr\": {\"op\": \"empty\"}}]}");
  CHECK_THROWS_WITH_AS(cmd_reap(load_spec(empty), "a", {"late"}, false, o), doctest::Contains("'late'"),
                       PreconditionError);
}

TEST_CASE("pack: the greedy examples") {
  RunOptions o = one_worker();
  const auto third = write_file("third.json",
                                "{\"version\": 1, \"sets\": [{\"name\": \"a\", \"kind\": \"kw\", \"radicand\": 2, "
                                "\"threshold\": \"1/3\"}]}");
  const auto keep = cmd_pack(load_spec(third), {}, 1, Rational(1, 2), o);
  CHECK(keep.report["packing"]["levels"][0]["chosen"].size() == 1);
  const auto drop = cmd_pack(load_spec(third), {}, 1, Rational(1, 4), o);
  CHECK(drop.report["packing"]["levels"][0]["chosen"].empty());
  CHECK(drop.pass);

  const auto halves = cmd_pack(load_spec(kSpecs / "halves.json"), {}, 0, parse_rational("0.3"), o);
  const auto& last = halves.report["packing"]["levels"][2];
  CHECK(last["cardinality"] == 2);
  CHECK(last["total"]["exact"] == "1/4");
  CHECK(last["certificate"]["valid"] == true);
  CHECK(halves.pass);
}

TEST_CASE("a report replays to byte-identical counts") {
  RunOptions o = one_worker();
  o.prefix = 200'000;
  o.seed = 99;
  const auto first = cmd_construct(load_spec(kSpecs / "random_extension.json"), o);
  const SpecFile embedded = parse_spec(first.report.dump());
  const auto second = cmd_construct(embedded, one_worker());
  CHECK(second.report.dump() == first.report.dump());
}

TEST_CASE("reports do not depend on the worker count") {
  const SpecFile spec = load_spec(kSpecs / "random_extension.json");
  RunOptions o;
  o.prefix = 300'000;
  std::string reference;
  for (unsigned w : {1u, 2u, 8u}) {
    o.workers = w;
    const auto dump = cmd_verify(spec, {}, o).report.dump();
    if (reference.empty()) reference = dump;
    CHECK(dump == reference);
  }
}

TEST_CASE("table format") {
  const auto result = cmd_verify(load_spec(kSpecs / "halves.json"), {}, one_worker());
  const std::string table = render_table(result.report);
  CHECK(table.find("# atoms\npattern\tn\tcount\tdensity\tdecimal\n") != std::string::npos);
  CHECK(table.find("# summary\npass\t1\n") != std::string::npos);
}

TEST_CASE("run_cli exit codes and output routing") {
  const std::string spec = (kSpecs / "kw_single.json").string();
  std::string out;
  std::string err;
  CHECK(run({"construct", spec, "--workers", "1"}, &out) == kExitOk);
  CHECK(json::parse(out)["command"] == "construct");
  CHECK(run({"construct", spec, "--format", "xml"}) == kExitParseError);
  CHECK(run({"frobnicate"}) == kExitParseError);
  CHECK(run({"construct", (scratch_dir() / "missing.json").string()}, nullptr, &err) == kExitParseError);
  CHECK(run({"construct", spec, "--schedule", "10,1,5"}) == kExitPreconditionError);
  CHECK(run({"verify", spec, "--tol", "0", "--prefix", "1000"}) == kExitVerificationFailed);
  CHECK(run({"image", spec, "--grid", "abc"}, nullptr, &err) == kExitParseError);
  CHECK(err.find("--grid") != std::string::npos);

  const auto path = scratch_dir() / "report.tsv";
  CHECK(run({"construct", spec, "--format", "table", "--out", path.string()}, &out) == kExitOk);
  CHECK(std::filesystem::exists(path));

  const auto dir = scratch_dir() / "outdir";
  ::setenv(kOutDirVariable, dir.string().c_str(), 1);
  CHECK(run({"construct", spec}) == kExitOk);
  ::unsetenv(kOutDirVariable);
  CHECK(std::filesystem::exists(dir / "construct.json"));
}

TEST_CASE("the installed binary reports the same exit codes") {
  const std::string tool = DENSIND_TOOL_PATH;
  const std::string spec = (kSpecs / "kw_single.json").string();
  auto status = [&](const std::string& args) {
    const int raw = std::system((tool + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("construct " + spec) == kExitOk);
  CHECK(status("verify " + spec + " --tol 0 --prefix 1000") == kExitVerificationFailed);
  CHECK(status("construct " + spec + " --bogus") == kExitParseError);
  CHECK(status("construct " + spec + " --schedule 10,1,5") == kExitPreconditionError);
}
