#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tilerot/form.hpp"
#include "tilerot/map.hpp"
#include "tilerot/return_map.hpp"
#include "tilerot/system.hpp"
#include "tilerot/window.hpp"

namespace tilerot::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Serialization

/// Locale-independent, 17 significant digits.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void dump(const json& j, std::string& out, int indent, int level) {
  auto newline = [&](int l) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * l), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(level + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump(it.value(), out, indent, level + 1);
      }
      newline(level);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        newline(level + 1);
        dump(j[i], out, indent, level + 1);
      }
      newline(level);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      double x = j.get<double>();
      // JSON has no inf/nan
      out += std::isfinite(x) ? format_double(x) : json(format_double(x)).dump();
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// JSON text with every float written at 17 significant digits.
inline std::string dump(const json& j, int indent = 2) {
  std::string out;
  detail::dump(j, out, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Hash of the compact canonical dump.
inline std::string config_hash(const json& config) { return hex64(fnv1a64(dump(config, -1))); }

/// Write to a temporary file next to `path`, then rename over it.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(what + ": " + e.what());
  }
}

inline json load_json(const std::filesystem::path& path) {
  if (path.extension() != ".json") throw std::invalid_argument(path.string() + ": only JSON input files are supported");
  return parse_json(read_file(path), path.string());
}

/// CSV with '.' decimals and 17 significant digits.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
    text_ += '\n';
  }
  void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }
  void row(const std::vector<double>& values) {
    if (values.size() != cols_) throw std::invalid_argument("csv row width mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) text_ += (i ? "," : "") + format_double(values[i]);
    text_ += '\n';
  }
  const std::string& str() const { return text_; }
  void save(const std::filesystem::path& path) const { write_atomic(path, text_); }

 private:
  std::size_t cols_;
  std::string text_;
};

// ---------------------------------------------------------------------------
// Input helpers

/// Rejects keys outside `allowed`.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw std::invalid_argument(where + ": unknown key '" + it.key() + "'");
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw std::invalid_argument(where + ": missing '" + key + "'");
  return j.at(key);
}

/// A number given as a JSON number or a quadratic expression string.
inline double number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    auto text = j.get<std::string>();
    try {
      return QuadraticNumber::parse(text).to_double();
    } catch (const std::exception&) {
    }
    double v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return v;
  }
  throw std::invalid_argument(where + ": expected a number or a quadratic expression");
}

template <Scalar S>
S scalar(const json& j, const std::string& where) {
  if constexpr (ScalarTraits<S>::exact) {
    if (j.is_number_integer()) return QuadraticNumber(j.get<std::int64_t>());
    if (!j.is_string()) throw std::invalid_argument(where + ": exact values must be strings like \"1+sqrt5\"");
    return QuadraticNumber::parse(j.get<std::string>());
  } else {
    return number(j, where);
  }
}

// ---------------------------------------------------------------------------
// Tiling systems

inline TilingSystem system_from_json(const json& j) {
  const std::string where = "system";
  check_keys(j, {"name", "alphabet", "lengths", "rule", "seed", "mode", "tolerance", "uniquely_ergodic", "ergodic_branch"},
             where);
  TilingSystem s;
  s.name = j.value("name", std::string("system"));
  s.alphabet = require(j, "alphabet", where).get<std::vector<std::string>>();
  const auto& lengths = require(j, "lengths", where);
  if (!lengths.is_array() || lengths.size() != s.alphabet.size())
    throw std::invalid_argument(where + ": one length per label required");
  std::string mode = j.value("mode", std::string("auto"));
  if (mode != "auto" && mode != "exact" && mode != "float")
    throw std::invalid_argument(where + ": mode must be exact, float or auto");
  bool exact = mode != "float";
  for (const auto& l : lengths) {
    std::optional<QuadraticNumber> q;
    if (exact && l.is_string()) {
      try {
        q = QuadraticNumber::parse(l.get<std::string>());
      } catch (const std::exception&) {
      }
    } else if (exact && l.is_number_integer()) {
      q = QuadraticNumber(l.get<std::int64_t>());
    }
    s.exact_lengths.push_back(q);
    s.lengths.push_back(q ? q->to_double() : number(l, where + ".lengths"));
  }
  if (mode == "exact" && !s.all_lengths_exact())
    throw std::invalid_argument(where + ": exact mode needs every length in one quadratic field");
  if (exact && s.all_lengths_exact()) {
    // one field only
    try {
      QuadraticNumber sum(0);
      for (const auto& q : s.exact_lengths) sum = sum + *q;
      s.mode = ScalarMode::exact;
    } catch (const std::domain_error&) {
      if (mode == "exact") throw std::invalid_argument(where + ": lengths mix quadratic fields");
      s.mode = ScalarMode::floating;
    }
  } else {
    s.mode = ScalarMode::floating;
  }
  if (s.mode == ScalarMode::floating) s.exact_lengths.assign(s.alphabet.size(), std::nullopt);
  s.tolerance = j.value("tolerance", kDefaultTolerance);
  s.uniquely_ergodic = j.value("uniquely_ergodic", true);
  s.ergodic_branch = j.value("ergodic_branch", std::string());

  const auto& rule = require(j, "rule", where);
  check_keys(rule, {"substitution", "fusion"}, where + ".rule");
  if (rule.size() != 1) throw std::invalid_argument(where + ".rule: give exactly one of substitution, fusion");
  if (rule.contains("substitution")) {
    const auto& images = rule.at("substitution");
    SubstitutionRule r;
    for (const auto& label : s.alphabet) {
      if (!images.contains(label)) throw std::invalid_argument(where + ".rule: no image for '" + label + "'");
      r.images.push_back(s.parse_word(images.at(label).get<std::string>()));
    }
    if (images.size() != s.alphabet.size()) throw std::invalid_argument(where + ".rule: image for an unknown label");
    s.rule = r;
  } else {
    const auto& f = rule.at("fusion");
    const std::string fw = where + ".rule.fusion";
    check_keys(f, {"kinds", "base_level", "base", "compose", "schedule", "adjacency_levels"}, fw);
    FusionRule r;
    r.kind_names = require(f, "kinds", fw).get<std::vector<std::string>>();
    r.base_level = f.value("base_level", 1);
    r.adjacency_levels = f.value("adjacency_levels", 6);
    r.schedule = f.value("schedule", std::vector<std::uint64_t>{});
    s.rule = r;  // so kinds resolve below
    auto kind_index = [&](const std::string& name) {
      for (std::size_t i = 0; i < r.kind_names.size(); ++i)
        if (r.kind_names[i] == name) return static_cast<int>(i);
      throw std::invalid_argument(fw + ": unknown kind '" + name + "'");
    };
    const auto& base = require(f, "base", fw);
    const auto& compose = require(f, "compose", fw);
    for (const auto& k : r.kind_names) {
      r.base.push_back(s.parse_word(require(base, k.c_str(), fw + ".base").get<std::string>()));
      std::vector<FusionBlock> blocks;
      for (const auto& b : require(compose, k.c_str(), fw + ".compose")) {
        check_keys(b, {"kinds", "repeat"}, fw + ".compose." + k);
        FusionBlock blk;
        for (const auto& name : require(b, "kinds", fw + ".compose." + k)) blk.kinds.push_back(kind_index(name.get<std::string>()));
        const auto& rep = b.contains("repeat") ? b.at("repeat") : json(1);
        if (rep.is_string()) {
          if (rep.get<std::string>() != "n") throw std::invalid_argument(fw + ": repeat must be an integer or \"n\"");
          blk.scheduled = true;
        } else {
          blk.fixed = rep.get<std::uint64_t>();
        }
        blocks.push_back(std::move(blk));
      }
      r.pattern.push_back(std::move(blocks));
    }
    if (base.size() != r.kind_names.size() || compose.size() != r.kind_names.size())
      throw std::invalid_argument(fw + ": base/compose entries must match the kinds");
    s.rule = r;
  }
  s.seed = Seed::parse(require(j, "seed", where).get<std::string>());
  s.validate();
  return s;
}

inline json system_to_json(const TilingSystem& s) {
  json j;
  j["name"] = s.name;
  j["alphabet"] = s.alphabet;
  json lengths = json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.mode == ScalarMode::exact && s.exact_lengths[i]) {
      lengths.push_back(s.exact_lengths[i]->str());
    } else {
      lengths.push_back(s.lengths[i]);
    }
  }
  j["lengths"] = lengths;
  j["mode"] = s.mode == ScalarMode::exact ? "exact" : "float";
  j["tolerance"] = s.tolerance;
  json rule;
  if (!s.is_fusion()) {
    json images;
    for (std::size_t i = 0; i < s.size(); ++i) images[s.alphabet[i]] = s.spell(s.substitution().images[i]);
    rule["substitution"] = images;
  } else {
    const auto& f = s.fusion();
    json fj;
    fj["kinds"] = f.kind_names;
    fj["base_level"] = f.base_level;
    json base, compose;
    for (std::size_t k = 0; k < f.kind_names.size(); ++k) {
      base[f.kind_names[k]] = s.spell(f.base[k]);
      json blocks = json::array();
      for (const auto& b : f.pattern[k]) {
        json bj;
        json kinds = json::array();
        for (int x : b.kinds) kinds.push_back(f.kind_names[static_cast<std::size_t>(x)]);
        bj["kinds"] = kinds;
        if (b.scheduled) {
          bj["repeat"] = "n";
        } else {
          bj["repeat"] = b.fixed;
        }
        blocks.push_back(bj);
      }
      compose[f.kind_names[k]] = blocks;
    }
    fj["base"] = base;
    fj["compose"] = compose;
    fj["schedule"] = f.schedule;
    fj["adjacency_levels"] = f.adjacency_levels;
    rule["fusion"] = fj;
  }
  j["rule"] = rule;
  j["seed"] = s.seed.str();
  if (!s.uniquely_ergodic) j["uniquely_ergodic"] = false;
  if (!s.ergodic_branch.empty()) j["ergodic_branch"] = s.ergodic_branch;
  return j;
}

inline TilingSystem load_system(const std::filesystem::path& path) { return system_from_json(load_json(path)); }

template <Scalar S>
json window_to_json(const TilingSystem& sys, const TilingWindow<S>& w) {
  json j;
  json labels = json::array();
  for (std::size_t i = 0; i < w.tile_count(); ++i) labels.push_back(sys.alphabet.at(static_cast<std::size_t>(w.label(i))));
  j["system"] = w.provenance().system;
  j["level"] = w.provenance().level;
  j["seed"] = w.provenance().seed;
  j["labels"] = labels;
  json v = json::array();
  for (const auto& x : w.vertices()) {
    if constexpr (ScalarTraits<S>::exact) {
      v.push_back(x.str());
    } else {
      v.push_back(x);
    }
  }
  j["vertices"] = v;
  j["origin_index"] = w.origin_index();
  return j;
}

// ---------------------------------------------------------------------------
// Forms

/// Collared label from its spelling: "(ctx)x(ctx)" as printed by
/// CollaredAlphabet::describe, or a bare label at depth 0.
inline int collared_key(const TilingSystem& sys, const CollaredAlphabet& alpha, const std::string& text) {
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (alpha.describe(sys, static_cast<int>(k)) == text) return static_cast<int>(k);
    if (alpha.depth() == 0 && sys.alphabet[static_cast<std::size_t>(alpha.bare(static_cast<int>(k)))] == text)
      return static_cast<int>(k);
  }
  throw std::invalid_argument("unknown collared label '" + text + "'");
}

/// {"builtin": "dx" | "indicator:<label>"}, {"depth", "weights": {label: value}}
/// or {"combination": [{"coef", "form"}]}; "name" optional.
template <Scalar S>
SpeForm<S> form_from_json(const TilingSystem& sys, const json& j) {
  const std::string where = "form";
  check_keys(j, {"name", "builtin", "depth", "weights", "combination"}, where);
  std::string name = j.value("name", std::string());
  SpeForm<S> f;
  if (j.contains("builtin")) {
    auto b = j.at("builtin").get<std::string>();
    if (b == "dx") {
      f = dx_form<S>(sys);
    } else if (b.rfind("indicator:", 0) == 0) {
      f = indicator_form<S>(sys, b.substr(10));
    } else {
      throw std::invalid_argument(where + ": unknown builtin '" + b + "'");
    }
  } else if (j.contains("weights")) {
    int depth = j.value("depth", 0);
    auto alpha = collar(sys, depth);
    std::vector<std::optional<S>> w(alpha.size());
    for (auto it = j.at("weights").begin(); it != j.at("weights").end(); ++it)
      w[static_cast<std::size_t>(collared_key(sys, alpha, it.key()))] = scalar<S>(it.value(), where + ".weights");
    std::vector<S> weights;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (!w[k]) throw std::invalid_argument(where + ": no weight for " + alpha.describe(sys, static_cast<int>(k)));
      weights.push_back(*w[k]);
    }
    f = form_from_weights<S>(sys, alpha, std::move(weights), name.empty() ? "form" : name);
  } else if (j.contains("combination")) {
    std::vector<std::pair<S, SpeForm<S>>> terms;
    for (const auto& t : j.at("combination")) {
      check_keys(t, {"coef", "form"}, where + ".combination");
      terms.emplace_back(scalar<S>(require(t, "coef", where), where + ".coef"), form_from_json<S>(sys, require(t, "form", where)));
    }
    if (terms.empty()) throw std::invalid_argument(where + ": empty combination");
    f = linear_combination<S>(sys, terms, name.empty() ? "combination" : name);
  } else {
    throw std::invalid_argument(where + ": give builtin, weights or combination");
  }
  if (!name.empty()) f.rename(name);
  return f;
}

// ---------------------------------------------------------------------------
// Maps and flows

/// Parsed map file:
///   {"builtin": "translation:<c>"}
///   {"builtin": "flow_time1", "velocity": {"speeds": {label: v}, "smoothing": d, "segments": n}}
///   {"displacement": {"sine": {label: p}, "segments": n}}
///   {"displacement": {"depth": d, "profiles": {label: [samples]}}}
/// plus optional "name" and "radius" (a declared radius must cover the map's).
struct MapSpec {
  json config;

  std::string kind() const {
    if (config.contains("displacement")) return "displacement";
    return config.at("builtin").get<std::string>().rfind("translation:", 0) == 0 ? "translation" : "flow_time1";
  }
};

namespace detail {

inline std::vector<double> per_letter(const TilingSystem& sys, const json& j, const std::string& where) {
  std::vector<std::optional<double>> v(sys.size());
  for (auto it = j.begin(); it != j.end(); ++it) v[static_cast<std::size_t>(sys.letter(it.key()))] = number(it.value(), where);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i]) throw std::invalid_argument(where + ": missing value for '" + sys.alphabet[i] + "'");
    out.push_back(*v[i]);
  }
  return out;
}

}  // namespace detail

inline SpeFlow<double> flow_from_json(const TilingSystem& sys, const json& v, const std::string& name) {
  check_keys(v, {"speeds", "smoothing", "segments"}, "map.velocity");
  auto speeds = detail::per_letter(sys, require(v, "speeds", "map.velocity"), "map.velocity.speeds");
  for (double s : speeds)
    if (!(s > 0)) throw std::invalid_argument("map.velocity: speeds must be positive");
  return smoothed_step_flow(sys, speeds, v.value("smoothing", 0.0), v.value("segments", std::size_t{64}), name);
}

inline DisplacementProfile displacement_from_json(const TilingSystem& sys, const json& d, const std::string& name) {
  check_keys(d, {"sine", "depth", "profiles", "segments"}, "map.displacement");
  if (d.contains("sine")) {
    auto p = sine_displacement(sys, detail::per_letter(sys, d.at("sine"), "map.displacement.sine"),
                               d.value("segments", std::size_t{256}));
    p.name = name;
    return p;
  }
  auto alpha = collar(sys, d.value("depth", 0));
  DisplacementProfile p{alpha, sys.lengths, std::vector<std::vector<double>>(alpha.size()), name};
  for (auto it = require(d, "profiles", "map.displacement").begin(); it != d.at("profiles").end(); ++it)
    p.samples[static_cast<std::size_t>(collared_key(sys, alpha, it.key()))] = it.value().get<std::vector<double>>();
  for (std::size_t k = 0; k < p.samples.size(); ++k)
    if (p.samples[k].empty()) throw std::invalid_argument("map.displacement: no profile for " + alpha.describe(sys, static_cast<int>(k)));
  p.validate(1e-9);
  return p;
}

inline MapSpec map_spec_from_json(const TilingSystem& sys, const json& j) {
  check_keys(j, {"name", "radius", "builtin", "velocity", "displacement"}, "map");
  if (j.contains("builtin") == j.contains("displacement")) throw std::invalid_argument("map: give exactly one of builtin, displacement");
  MapSpec m{j};
  const std::string name = j.value("name", std::string("map"));
  double radius = 0;
  if (j.contains("builtin")) {
    auto b = j.at("builtin").get<std::string>();
    if (b.rfind("translation:", 0) == 0) {
      if (j.contains("velocity")) throw std::invalid_argument("map: translation takes no velocity");
      number(json(b.substr(12)), "map.builtin");
    } else if (b == "flow_time1") {
      radius = flow_from_json(sys, require(j, "velocity", "map"), name).radius();
    } else {
      throw std::invalid_argument("map: unknown builtin '" + b + "'");
    }
  } else {
    if (j.contains("velocity")) throw std::invalid_argument("map: displacement takes no velocity");
    radius = displacement_from_json(sys, j.at("displacement"), name).radius();
  }
  if (j.contains("radius") && j.at("radius").get<double>() < radius)
    throw std::invalid_argument("map: declared radius " + format_double(j.at("radius").get<double>()) +
                                " is below the displacement's pattern radius " + format_double(radius));
  return m;
}

/// The map on `w`. Exact scalars support translations only.
template <Scalar S>
std::unique_ptr<SpeMap<S>> make_map(const TilingSystem& sys, const MapSpec& spec, const TilingWindow<S>& w) {
  const auto& j = spec.config;
  const std::string name = j.value("name", std::string("map"));
  auto kind = spec.kind();
  if (kind == "translation")
    return std::make_unique<TranslationMap<S>>(w, scalar<S>(json(j.at("builtin").get<std::string>().substr(12)), "map.builtin"));
  if constexpr (ScalarTraits<S>::exact) {
    throw std::invalid_argument("map '" + name + "' needs float mode (only translations run exactly)");
  } else {
    if (kind == "flow_time1") return std::make_unique<FlowMap<double>>(flow_from_json(sys, j.at("velocity"), name), w);
    return std::make_unique<DisplacementMap>(displacement_from_json(sys, j.at("displacement"), name), w);
  }
}

// ---------------------------------------------------------------------------
// Reports

/// Scenario/command report: provenance-tagged fields and pass/fail per
/// criterion. Timing is kept apart so the rest is byte-reproducible.
class Report {
 public:
  Report(std::string scenario, json config) : scenario_(std::move(scenario)), config_(std::move(config)) {
    hash_ = config_hash(config_);
  }

  const std::string& scenario() const { return scenario_; }
  const std::string& hash() const { return hash_; }
  const json& config() const { return config_; }

  void field(const std::string& name, json value, const std::string& tag) {
    fields_[name] = json{{"value", std::move(value)}, {"tag", tag}};
  }
  const json& fields() const { return fields_; }
  const json& value(const std::string& name) const { return fields_.at(name).at("value"); }

  bool check(const std::string& name, bool pass, const std::string& detail, const std::string& tag) {
    checks_.push_back(json{{"name", name}, {"pass", pass}, {"detail", detail}, {"tag", tag}});
    return pass;
  }
  const json& checks() const { return checks_; }
  bool passed() const {
    for (const auto& c : checks_)
      if (!c.at("pass").get<bool>()) return false;
    return true;
  }

  void note(const std::string& text) { notes_.push_back(text); }
  void seconds(double s) { seconds_ = s; }

  json to_json(bool with_timing = true) const {
    json j;
    j["schema"] = 1;
    j["scenario"] = scenario_;
    j["config_hash"] = hash_;
    j["config"] = config_;
    j["fields"] = fields_;
    j["checks"] = checks_;
    j["pass"] = passed();
    j["notes"] = notes_;
    if (with_timing) j["timing"] = json{{"seconds", seconds_}};
    return j;
  }
  /// Hash of the report without timing.
  std::string report_hash() const { return hex64(fnv1a64(dump(to_json(false), -1))); }

 private:
  std::string scenario_;
  json config_;
  std::string hash_;
  json fields_ = json::object();
  json checks_ = json::array();
  json notes_ = json::array();
  double seconds_ = 0;
};

}  // namespace tilerot::io
