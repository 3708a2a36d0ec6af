#include "densind/cli/spec_file.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <memory>
#include <set>
#include <sstream>

#include "densind/errors.hpp"
#include "densind/reaping.hpp"

namespace densind::cli {

using nlohmann::json;

ParseError::ParseError(const std::string& message, std::string field, std::size_t line)
    : std::runtime_error([&] {
        std::string where;
        if (line > 0) where += "line " + std::to_string(line);
        if (!field.empty()) where += (where.empty() ? "" : ", ") + field;
        return where.empty() ? message : where + ": " + message;
      }()),
      field_(std::move(field)),
      line_(line) {}

WindowSchedule ScheduleSpec::build() const {
  if (largest) return WindowSchedule::ending_at(*largest, ratio, count);
  return WindowSchedule(start.value_or(10'000), ratio, count);
}

namespace {

constexpr std::string_view kKinds[] = {"kw", "coded", "block", "random-ext", "gap", "expr", "thin-ext"};
constexpr unsigned kMaxGapCount = 64;
constexpr unsigned kRankScanBlocks = kLastFullBlock + 1;

std::size_t line_at(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Character iterator that publishes how far the parser has read.
class TrackingIterator {
 public:
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  TrackingIterator() = default;
  TrackingIterator(const char* p, const char* base, std::shared_ptr<std::size_t> offset)
      : p_(p), base_(base), offset_(std::move(offset)) {}

  reference operator*() const { return *p_; }
  TrackingIterator& operator++() {
    ++p_;
    if (offset_) *offset_ = static_cast<std::size_t>(p_ - base_);
    return *this;
  }
  TrackingIterator operator++(int) {
    TrackingIterator old = *this;
    ++*this;
    return old;
  }
  bool operator==(const TrackingIterator& other) const { return p_ == other.p_; }

 private:
  const char* p_ = nullptr;
  const char* base_ = nullptr;
  std::shared_ptr<std::size_t> offset_;
};

// Records where each element of the top-level "sets" array starts.
class SetLineRecorder {
 public:
  explicit SetLineRecorder(std::shared_ptr<std::size_t> offset) : offset_(std::move(offset)) {}

  std::vector<std::size_t> offsets;

  bool null() { return value(); }
  bool boolean(bool) { return value(); }
  bool number_integer(json::number_integer_t) { return value(); }
  bool number_unsigned(json::number_unsigned_t) { return value(); }
  bool number_float(json::number_float_t, const std::string&) { return value(); }
  bool string(std::string&) { return value(); }
  bool binary(json::binary_t&) { return value(); }
  bool start_object(std::size_t) {
    if (in_sets()) offsets.push_back(*offset_ == 0 ? 0 : *offset_ - 1);
    stack_.push_back({false, false});
    return true;
  }
  bool end_object() {
    stack_.pop_back();
    return true;
  }
  bool start_array(std::size_t) {
    const bool sets = stack_.size() == 1 && !stack_.back().array && key_ == "sets";
    stack_.push_back({true, sets});
    return true;
  }
  bool end_array() {
    stack_.pop_back();
    return true;
  }
  bool key(std::string& k) {
    key_ = k;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) { return false; }

 private:
  struct Frame {
    bool array;
    bool sets;
  };
  bool value() { return true; }
  bool in_sets() const { return !stack_.empty() && stack_.back().sets; }

  std::shared_ptr<std::size_t> offset_;
  std::vector<Frame> stack_;
  std::string key_;
};

std::vector<std::size_t> set_lines(std::string_view text) {
  auto offset = std::make_shared<std::size_t>(0);
  SetLineRecorder recorder(offset);
  json::sax_parse(TrackingIterator(text.data(), text.data(), offset),
                  TrackingIterator(text.data() + text.size(), text.data(), nullptr), &recorder);
  std::vector<std::size_t> lines;
  for (std::size_t o : recorder.offsets) lines.push_back(line_at(text, o));
  return lines;
}

struct Context {
  std::string path;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& message, const std::string& key = {}) const {
    throw ParseError(message, key.empty() ? path : path + "." + key, line);
  }
};

const json& require(const json& obj, const char* key, const Context& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end()) ctx.fail(std::string("missing required field '") + key + "'");
  return *it;
}

std::uint64_t unsigned_field(const json& v, const Context& ctx, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    ctx.fail("expected a nonnegative integer", key);
  }
  return v.get<std::uint64_t>();
}

std::string string_field(const json& v, const Context& ctx, const std::string& key) {
  if (!v.is_string()) ctx.fail("expected a string", key);
  return v.get<std::string>();
}

void allow_keys(const json& obj, std::initializer_list<std::string_view> allowed, const Context& ctx) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) ctx.fail("unknown field '" + key + "'");
  }
}

bool valid_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::vector<std::string> name_list(const json& v, const Context& ctx, const std::string& key,
                                   const std::set<std::string>& defined) {
  if (!v.is_array() || v.empty()) ctx.fail("expected a nonempty array of set names", key);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item = key + "[" + std::to_string(i) + "]";
    const std::string name = string_field(v[i], ctx, item);
    if (!defined.contains(name)) ctx.fail("unknown set '" + name + "' (sets must be defined before use)", item);
    names.push_back(name);
  }
  return names;
}

void check_reference(const json& v, const Context& ctx, const std::string& key, const std::set<std::string>& defined) {
  const std::string name = string_field(v, ctx, key);
  if (!defined.contains(name)) ctx.fail("unknown set '" + name + "' (sets must be defined before use)", key);
}

void check_expr(const json& e, const Context& ctx, const std::string& key, const std::set<std::string>& defined) {
  if (e.is_string()) return check_reference(e, ctx, key, defined);
  if (!e.is_object()) ctx.fail("expected a set name or an expression object", key);
  const std::string op = string_field(require(e, "op", {ctx.path + "." + key, ctx.line}), ctx, key + ".op");
  const Context inner{ctx.path + "." + key, ctx.line};
  if (op == "omega" || op == "empty") {
    allow_keys(e, {"op"}, inner);
  } else if (op == "multiples") {
    allow_keys(e, {"op", "m"}, inner);
    unsigned_field(require(e, "m", inner), ctx, key + ".m");
  } else if (op == "complement" || op == "thin") {
    allow_keys(e, {"op", "of"}, inner);
    check_expr(require(e, "of", inner), ctx, key + ".of", defined);
  } else if (op == "scale") {
    allow_keys(e, {"op", "m", "of"}, inner);
    unsigned_field(require(e, "m", inner), ctx, key + ".m");
    check_expr(require(e, "of", inner), ctx, key + ".of", defined);
  } else if (op == "intersect" || op == "union" || op == "sym_diff") {
    allow_keys(e, {"op", "args"}, inner);
    const json& args = require(e, "args", inner);
    if (!args.is_array() || args.empty()) ctx.fail("expected a nonempty array", key + ".args");
    for (std::size_t i = 0; i < args.size(); ++i) {
      check_expr(args[i], ctx, key + ".args[" + std::to_string(i) + "]", defined);
    }
  } else {
    ctx.fail("unknown expression op '" + op + "'", key + ".op");
  }
}

std::vector<std::string> expanded_names(const std::string& name, std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < count; ++j) out.push_back(name + "_" + std::to_string(j));
  return out;
}

SetDescriptor parse_descriptor(const json& d, const Context& ctx, const std::set<std::string>& defined) {
  if (!d.is_object()) ctx.fail("expected a set descriptor object");
  SetDescriptor out;
  out.params = d;
  out.line = ctx.line;
  out.name = string_field(require(d, "name", ctx), ctx, "name");
  if (!valid_name(out.name)) ctx.fail("set names use letters, digits, '_', '-' and '.'", "name");
  out.kind = string_field(require(d, "kind", ctx), ctx, "kind");
  if (std::find(std::begin(kKinds), std::end(kKinds), out.kind) == std::end(kKinds)) {
    ctx.fail("unknown kind '" + out.kind + "'", "kind");
  }

  if (out.kind == "kw") {
    allow_keys(d, {"name", "kind", "radicand", "threshold"}, ctx);
    unsigned_field(require(d, "radicand", ctx), ctx, "radicand");
    rational_field(require(d, "threshold", ctx), ctx.path + ".threshold", ctx.line);
    out.defines = {out.name};
  } else if (out.kind == "coded") {
    allow_keys(d, {"name", "kind", "sigma", "depth"}, ctx);
    const std::string sigma = string_field(require(d, "sigma", ctx), ctx, "sigma");
    if (sigma.find_first_not_of("01") != std::string::npos) ctx.fail("sigma must be a string of 0 and 1", "sigma");
    if (d.contains("depth")) unsigned_field(d["depth"], ctx, "depth");
    out.defines = {out.name};
  } else if (out.kind == "block") {
    allow_keys(d, {"name", "kind", "classical"}, ctx);
    const auto classical = name_list(require(d, "classical", ctx), ctx, "classical", defined);
    out.defines = expanded_names(out.name, classical.size());
  } else if (out.kind == "random-ext") {
    allow_keys(d, {"name", "kind", "base", "s", "seed"}, ctx);
    check_reference(require(d, "base", ctx), ctx, "base", defined);
    rational_field(require(d, "s", ctx), ctx.path + ".s", ctx.line);
    if (d.contains("seed")) unsigned_field(d["seed"], ctx, "seed");
    out.defines = {out.name};
  } else if (out.kind == "gap") {
    allow_keys(d, {"name", "kind", "p", "count"}, ctx);
    rational_field(require(d, "p", ctx), ctx.path + ".p", ctx.line);
    const std::uint64_t count = unsigned_field(require(d, "count", ctx), ctx, "count");
    if (count == 0 || count > kMaxGapCount) {
      ctx.fail("count must be between 1 and " + std::to_string(kMaxGapCount), "count");
    }
    out.defines = expanded_names(out.name, count);
  } else if (out.kind == "expr") {
    allow_keys(d, {"name", "kind", "expr", "density"}, ctx);
    check_expr(require(d, "expr", ctx), ctx, "expr", defined);
    if (d.contains("density")) rational_field(d["density"], ctx.path + ".density", ctx.line);
    out.defines = {out.name};
  } else {  // thin-ext
    allow_keys(d, {"name", "kind", "members"}, ctx);
    name_list(require(d, "members", ctx), ctx, "members", defined);
    out.defines = {out.name};
  }
  return out;
}

ScheduleSpec parse_schedule(const json& s, const Context& ctx) {
  if (!s.is_object()) ctx.fail("expected an object");
  allow_keys(s, {"start", "largest", "ratio", "windows"}, ctx);
  ScheduleSpec out;
  if (s.contains("start")) out.start = unsigned_field(s["start"], ctx, "start");
  if (s.contains("largest")) out.largest = unsigned_field(s["largest"], ctx, "largest");
  if (out.start && out.largest) ctx.fail("give either 'start' or 'largest', not both");
  if (s.contains("ratio")) {
    if (!s["ratio"].is_number()) ctx.fail("expected a number", "ratio");
    out.ratio = s["ratio"].get<double>();
  }
  if (s.contains("windows")) out.count = unsigned_field(s["windows"], ctx, "windows");
  return out;
}

SpecFile parse_document(const json& root, std::string_view text) {
  if (!root.is_object()) throw ParseError("spec must be a JSON object", "", 1);
  if (root.contains("spec") && root["spec"].is_object() && root.contains("tool")) {
    const std::string embedded = root["spec"].dump(2);
    return parse_spec(embedded);
  }
  const Context top{"", 0};
  allow_keys(root, {"version", "defaults", "sets"}, top);

  SpecFile spec;
  const json& version = require(root, "version", top);
  if (!version.is_number_integer()) throw ParseError("expected an integer", "version");
  spec.version = version.get<int>();
  if (spec.version != kSpecVersion) {
    throw ParseError("unsupported spec version " + std::to_string(spec.version) + " (expected " +
                         std::to_string(kSpecVersion) + ")",
                     "version");
  }

  if (root.contains("defaults")) {
    const json& d = root["defaults"];
    const Context ctx{"defaults", 0};
    if (!d.is_object()) ctx.fail("expected an object");
    allow_keys(d, {"schedule", "tolerance", "seed"}, ctx);
    if (d.contains("schedule")) spec.schedule = parse_schedule(d["schedule"], {"defaults.schedule", 0});
    if (d.contains("tolerance")) {
      if (!d["tolerance"].is_number() || d["tolerance"].get<double>() < 0) {
        ctx.fail("expected a nonnegative number", "tolerance");
      }
      spec.tolerance = d["tolerance"].get<double>();
    }
    if (d.contains("seed")) spec.seed = unsigned_field(d["seed"], ctx, "seed");
  }

  const json& sets = require(root, "sets", top);
  if (!sets.is_array()) throw ParseError("expected an array", "sets");
  const auto lines = set_lines(text);
  std::set<std::string> defined;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const Context ctx{"sets[" + std::to_string(i) + "]", i < lines.size() ? lines[i] : 0};
    SetDescriptor d = parse_descriptor(sets[i], ctx, defined);
    for (const auto& name : d.defines) {
      if (!defined.insert(name).second) ctx.fail("duplicate set name '" + name + "'", "name");
    }
    spec.sets.push_back(std::move(d));
  }
  return spec;
}

OmegaSet build_expr(const json& e, const Universe& u) {
  if (e.is_string()) return u.at(e.get<std::string>()).set;
  const std::string op = e["op"].get<std::string>();
  if (op == "omega") return omega();
  if (op == "empty") return empty_set();
  if (op == "multiples") return multiples(e["m"].get<std::uint64_t>());
  if (op == "complement") return complement(build_expr(e["of"], u));
  if (op == "thin") return thin(build_expr(e["of"], u));
  if (op == "scale") return scale(build_expr(e["of"], u), e["m"].get<std::uint64_t>());
  std::vector<SetExpr> args;
  for (const auto& a : e["args"]) args.emplace_back(build_expr(a, u));
  if (op == "intersect") return intersect_all(std::move(args)).to_set();
  if (op == "union") return unite_all(std::move(args)).to_set();
  SetExpr acc = args.front();
  for (std::size_t i = 1; i < args.size(); ++i) acc = sym_diff(acc, args[i]);
  return acc.to_set();
}

Family named_members(const Universe& u, const std::vector<std::string>& names, const std::string& owner) {
  Family f;
  for (const auto& name : names) {
    const BuiltSet& s = u.at(name);
    if (!s.density) throw PreconditionError("member '" + name + "' of '" + owner + "' has no declared density");
    f.add(name, s.set, *s.density);
  }
  return f;
}

void build_descriptor(const SetDescriptor& d, std::uint64_t default_seed, Universe& u) {
  const json& p = d.params;
  if (d.kind == "kw") {
    const KWSeed seed{p["radicand"].get<std::uint64_t>(), rational_field(p["threshold"], "threshold")};
    u.sets.push_back({d.name, d.kind, kw_set(seed), seed.threshold, seed, std::nullopt, false});
  } else if (d.kind == "coded") {
    const std::string sigma = p["sigma"].get<std::string>();
    const auto depth = static_cast<unsigned>(std::min<std::uint64_t>(p.value("depth", std::uint64_t{4}), 1000));
    BitOracle oracle = [sigma](std::uint64_t i) { return i < sigma.size() && sigma[i] == '1'; };
    u.sets.push_back({d.name, d.kind, coded_independent_set(oracle, depth), std::nullopt, std::nullopt, std::nullopt,
                      false});
  } else if (d.kind == "block") {
    BlockInfo info{d.name, p["classical"].get<std::vector<std::string>>(), d.defines, std::nullopt};
    std::vector<OmegaSet> classical;
    for (const auto& name : info.classical) classical.push_back(u.at(name).set);
    const Family f = block_transform(classical);
    info.rank_block = block_rank_threshold(classical, kRankScanBlocks);
    for (std::size_t j = 0; j < f.size(); ++j) {
      u.sets.push_back({d.defines[j], d.kind, f[j].set, f[j].density, std::nullopt, std::nullopt, false});
    }
    u.blocks.push_back(std::move(info));
  } else if (d.kind == "random-ext") {
    const std::string base = p["base"].get<std::string>();
    const Family f = named_members(u, {base}, d.name);
    const std::uint64_t seed = p.contains("seed") ? p["seed"].get<std::uint64_t>() : default_seed;
    auto ext = random_extension(f, base, rational_field(p["s"], "s"), seed);
    u.sets.push_back({d.name, d.kind, ext.set, ext.params.s, std::nullopt, seed, true});
    u.randoms.push_back({d.name, base, ext.params, seed});
  } else if (d.kind == "gap") {
    const auto count = static_cast<unsigned>(p["count"].get<std::uint64_t>());
    const auto thresholds = gap_thresholds(rational_field(p["p"], "p"), count);
    const auto radicands = square_free_radicands(count);
    for (unsigned n = 0; n < count; ++n) {
      const KWSeed seed{radicands[n], thresholds[n]};
      u.sets.push_back({d.defines[n], d.kind, kw_set(seed), seed.threshold, seed, std::nullopt, false});
    }
  } else if (d.kind == "expr") {
    std::optional<Rational> density;
    if (p.contains("density")) density = rational_field(p["density"], "density");
    u.sets.push_back({d.name, d.kind, build_expr(p["expr"], u), density, std::nullopt, std::nullopt, false});
  } else {
    const Family f = named_members(u, p["members"].get<std::vector<std::string>>(), d.name);
    u.sets.push_back({d.name, d.kind, thin_extension(f), Rational(1, 2), std::nullopt, std::nullopt, false});
  }
}

}  // namespace

Rational rational_field(const json& value, const std::string& field, std::size_t line) {
  std::string text;
  if (value.is_string()) {
    text = value.get<std::string>();
  } else if (value.is_number()) {
    text = value.dump();  // shortest round-trip form, so 0.3 reads as 3/10
  } else {
    throw ParseError("expected a number or a fraction string", field, line);
  }
  try {
    return parse_rational(text);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), field, line);
  }
}

SpecFile parse_spec(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    throw ParseError(colon == std::string::npos ? what : what.substr(colon + 2), "", line_at(text, e.byte - 1));
  }
  return parse_document(root, text);
}

SpecFile load_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read spec file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_spec(buffer.str());
}

json to_json(const SpecFile& spec) {
  json schedule = json::object();
  if (spec.schedule.largest) {
    schedule["largest"] = *spec.schedule.largest;
  } else {
    schedule["start"] = spec.schedule.start.value_or(10'000);
  }
  schedule["ratio"] = spec.schedule.ratio;
  schedule["windows"] = spec.schedule.count;
  json defaults = {{"schedule", schedule}, {"seed", spec.seed}};
  if (spec.tolerance) defaults["tolerance"] = *spec.tolerance;
  json sets = json::array();
  for (const auto& d : spec.sets) sets.push_back(d.params);
  return {{"version", spec.version}, {"defaults", defaults}, {"sets", sets}};
}

void pin_seeds(SpecFile& spec) {
  for (auto& d : spec.sets) {
    if (d.kind == "random-ext" && !d.params.contains("seed")) d.params["seed"] = spec.seed;
  }
}

const BuiltSet& Universe::at(std::string_view name) const {
  for (const auto& s : sets) {
    if (s.name == name) return s;
  }
  throw PreconditionError("unknown set '" + std::string(name) + "'");
}

bool Universe::contains(std::string_view name) const {
  return std::any_of(sets.begin(), sets.end(), [&](const BuiltSet& s) { return s.name == name; });
}

Universe build_universe(const SpecFile& spec) {
  if (spec.sets.empty()) throw PreconditionError("the spec defines no sets; a density-independent family must be nonempty");
  Universe u;
  for (const auto& d : spec.sets) {
    try {
      build_descriptor(d, spec.seed, u);
    } catch (const PreconditionError& e) {
      throw PreconditionError("set '" + d.name + "'" + (d.line ? " (line " + std::to_string(d.line) + ")" : "") +
                              ": " + e.what());
    }
  }
  for (const auto& s : u.sets) {
    if (!s.density) continue;
    try {
      u.family.add(s.name, s.set, *s.density);
    } catch (const PreconditionError& e) {
      throw PreconditionError("set '" + s.name + "': " + e.what());
    }
  }
  return u;
}

}  // namespace densind::cli
