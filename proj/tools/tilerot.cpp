#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tilerot/experiments.hpp"
#include "tilerot/io.hpp"
#include "tilerot/probes.hpp"
#include "tilerot/rotation.hpp"
#include "tilerot/semiconj.hpp"
#include "tilerot/shape_change.hpp"

namespace fs = std::filesystem;
using namespace tilerot;
using io::json;

namespace {

constexpr int kUnknownScenario = 2;

struct Options {
  std::string system, map, form, out, seed, x0 = "0", name = "all";
  std::optional<int> level;
  std::size_t iters = 10000;
  std::optional<std::string> radius;
  std::size_t budget = 2000;
  std::optional<double> tolerance;
  std::optional<double> rho;
  double horizon = 10000, from = 0, to = 1, step = 1e-3, slope_tol = 0.1;
  std::vector<std::string> samples;
  bool backward = false, quiet = false;
};

struct Loaded {
  TilingSystem sys;
  json config;
};

Loaded load(const Options& o, const std::string& command) {
  auto sj = io::load_json(o.system);
  Loaded l{io::system_from_json(sj), json::object()};
  if (!o.seed.empty()) l.sys.seed = Seed::parse(o.seed);
  if (o.tolerance) l.sys.tolerance = *o.tolerance;
  l.sys.validate();
  l.config["command"] = command;
  l.config["system"] = io::system_to_json(l.sys);
  if (!o.map.empty()) {
    l.config["map"] = io::load_json(o.map);
    // exact arithmetic covers translations only
    if (io::map_spec_from_json(l.sys, l.config["map"]).kind() != "translation") l.sys.mode = ScalarMode::floating;
  }
  if (!o.form.empty()) l.config["form"] = io::load_json(o.form);
  return l;
}

void log_config(const Options& o, const json& config) {
  if (o.quiet) return;
  std::cerr << "config " << io::config_hash(config) << "\n" << io::dump(config) << "\n";
}

const auto kStart = std::chrono::steady_clock::now();

void emit(const Options& o, io::Report& r, const std::map<std::string, io::CsvWriter>& traces = {}) {
  r.seconds(std::chrono::duration<double>(std::chrono::steady_clock::now() - kStart).count());
  auto text = io::dump(r.to_json(true)) + "\n";
  if (o.out.empty()) {
    std::cout << text;
  } else {
    fs::path out(o.out);
    io::write_atomic(out, text);
    for (const auto& [stem, csv] : traces) {
      auto p = out;
      p.replace_extension();
      csv.save(p.string() + "." + stem + ".csv");
    }
  }
  for (const auto& c : r.checks())
    if (!c.at("pass").get<bool>()) std::cerr << "FAIL " << c.at("name").get<std::string>() << ": " << c.at("detail").get<std::string>() << "\n";
}

template <class F>
int dispatch(const TilingSystem& sys, F&& f) {
  if (sys.mode == ScalarMode::exact) return f(QuadraticNumber{});
  return f(0.0);
}

template <Scalar S>
S parse_scalar(const std::string& text, const std::string& what) {
  return io::scalar<S>(json(text), what);
}

int level_or(const Options& o, int fallback) { return o.level.value_or(fallback); }

template <Scalar S>
S radius_for(const Options& o, double computed) {
  if (o.radius) return parse_scalar<S>(*o.radius, "--radius");
  auto milli = static_cast<std::int64_t>(std::ceil(computed * 1000));
  if constexpr (ScalarTraits<S>::exact)
    return QuadraticNumber(Rational(milli, 1000));
  else
    return static_cast<double>(milli) / 1000;
}

template <Scalar S>
std::string text(const S& x) {
  if constexpr (ScalarTraits<S>::exact)
    return x.str();
  else
    return io::format_double(x);
}

// ---------------------------------------------------------------------------

int cmd_gen(const Options& o) {
  auto l = load(o, "gen");
  const int level = level_or(o, 8);
  // a level-0 window is the single tile to the right of the seed's origin
  Seed seed = l.sys.seed;
  if (level == 0 && o.seed.empty()) seed.left.clear();
  l.config["level"] = level;
  l.config["seed"] = seed.str();
  log_config(o, l.config);
  return dispatch(l.sys, [&](auto tag) {
    using S = decltype(tag);
    auto w = build_window<S>(l.sys, level, seed);
    auto text = io::dump(io::window_to_json(l.sys, w)) + "\n";
    if (o.out.empty())
      std::cout << text;
    else
      io::write_atomic(o.out, text);
    return 0;
  });
}

int cmd_rotnum(const Options& o) {
  auto l = load(o, "rotnum");
  l.config["level"] = level_or(o, 12);
  l.config["iters"] = o.iters;
  l.config["x0"] = o.x0;
  l.config["backward"] = o.backward;
  log_config(o, l.config);
  return dispatch(l.sys, [&](auto tag) {
    using S = decltype(tag);
    auto w = build_window<S>(l.sys, level_or(o, 12), l.sys.seed);
    auto f = io::make_map<S>(l.sys, io::map_spec_from_json(l.sys, l.config.at("map")), w);
    const S x0 = parse_scalar<S>(o.x0, "--x0");
    auto e = rotation_number_estimate<S>(*f, x0, o.iters, o.backward);
    io::Report r("rotnum", l.config);
    r.field("rho", e.rho, experiments::kDerived);
    r.field("steps", e.steps, experiments::kDerived);
    r.field("cauchy_width", e.cauchy_width, experiments::kDerived);
    r.field("fixed_points", e.fixed_points, experiments::kDerived);
    if (!e.note.empty()) r.note(e.note);
    r.check("orbit stays inside the window", !e.truncated, std::to_string(e.steps) + " of " + std::to_string(o.iters) + " steps",
            experiments::kTrivial);
    emit(o, r, {{"trace", experiments::detail::rotation_trace(e, to_double(x0), o.backward)}});
    return r.passed() ? 0 : 1;
  });
}

int cmd_rho_from_form(const Options& o) {
  auto l = load(o, "rho-from-form");
  l.config["level"] = level_or(o, 12);
  l.config["x0"] = o.x0;
  l.config["backward"] = o.backward;
  if (o.radius) l.config["radius"] = *o.radius;
  log_config(o, l.config);
  return dispatch(l.sys, [&](auto tag) {
    using S = decltype(tag);
    auto w = build_window<S>(l.sys, level_or(o, 12), l.sys.seed);
    auto mu = io::form_from_json<S>(l.sys, l.config.at("form"));
    BoundForm<S> b(mu, w);
    auto res = rho_from_form(b, parse_scalar<S>(o.x0, "--x0"), radius_for<S>(o, mu.radius()), !o.backward);
    io::Report r("rho-from-form", l.config);
    r.field("rho", res.rho, experiments::kDerived);
    r.field("returns", res.returns, experiments::kDerived);
    r.field("spread", res.spread, experiments::kDerived);
    io::CsvWriter csv({"distance", "ratio"});
    for (const auto& [d, q] : res.trace) csv.row({d, q});
    emit(o, r, {{"trace", csv}});
    return 0;
  });
}

int cmd_verify_form(const Options& o) {
  auto l = load(o, "verify-form");
  l.config["level"] = level_or(o, 12);
  l.config["budget"] = o.budget;
  log_config(o, l.config);
  return dispatch(l.sys, [&](auto tag) {
    using S = decltype(tag);
    auto w = build_window<S>(l.sys, level_or(o, 12), l.sys.seed);
    auto f = io::make_map<S>(l.sys, io::map_spec_from_json(l.sys, l.config.at("map")), w);
    BoundForm<S> mu(io::form_from_json<S>(l.sys, l.config.at("form")), w);
    const S radius = radius_for<S>(o, std::max(mu.form().radius(), f->radius()));
    auto v = verify_rotation_form(*f, mu, matched_pairs(w, radius, o.budget, w.front(), w.back()));
    io::Report r("verify-form", l.config);
    r.field("verdict", v.verdict(), experiments::kDerived);
    r.field("tested", v.tested, experiments::kDerived);
    r.field("violations", v.violations, experiments::kDerived);
    r.field("boundary_cases", v.boundary_cases, experiments::kDerived);
    r.field("skipped", v.skipped, experiments::kDerived);
    if (v.counterexample) {
      const auto& c = *v.counterexample;
      r.field("counterexample",
              json{{"x1", text(c.x1)}, {"x2", text(c.x2)}, {"integral", text(c.integral)},
                   {"n_minus", c.n_minus}, {"n_plus", c.n_plus}, {"f_minus", text(c.f_minus)},
                   {"f_plus", text(c.f_plus)}},
              experiments::kDerived);
    }
    r.check("rotation form verified on sampled pairs", v.passes,
            std::to_string(v.decided()) + " decided pairs, " + std::to_string(v.violations) + " violations", experiments::kDerived);
    emit(o, r);
    return r.passed() ? 0 : 1;
  });
}

int cmd_shape_change(const Options& o) {
  auto l = load(o, "shape-change");
  log_config(o, l.config);
  return dispatch(l.sys, [&](auto tag) {
    using S = decltype(tag);
    auto sc = shape_change(l.sys, io::form_from_json<S>(l.sys, l.config.at("form")));
    if (!sc.target) {
      std::cerr << "no target tiling system: " << sc.note << "\n";
      return 1;
    }
    auto text = io::dump(io::system_to_json(*sc.target)) + "\n";
    if (o.out.empty())
      std::cout << text;
    else
      io::write_atomic(o.out, text);
    if (!o.quiet && sc.seed_level) std::cerr << "target level n matches source level n + " << sc.seed_level << "\n";
    return 0;
  });
}

int cmd_psi(const Options& o) {
  auto l = load(o, "psi");
  if (!o.rho) throw std::invalid_argument("psi needs --rho");
  l.config["level"] = level_or(o, 12);
  l.config["iters"] = o.iters;
  l.config["rho"] = *o.rho;
  l.config["grid"] = json{{"from", o.from}, {"to", o.to}, {"step", o.step}};
  l.config["slope_tol"] = o.slope_tol;
  log_config(o, l.config);
  if (l.sys.mode == ScalarMode::exact) l.sys.mode = ScalarMode::floating;  // grid samples are doubles
  auto w = build_window<double>(l.sys, level_or(o, 12), l.sys.seed);
  auto f = io::make_map<double>(l.sys, io::map_spec_from_json(l.sys, l.config.at("map")), w);
  auto est = psi_estimate<double>(*f, sample_grid(o.from, o.to, o.step), o.iters, *o.rho);
  auto found = collapsing_intervals(est, o.slope_tol);
  io::Report r("psi", l.config);
  json iv = json::array();
  for (const auto& c : found) iv.push_back(json::array({c.lo, c.hi}));
  r.field("collapsing_intervals", iv, experiments::kDerived);
  r.field("max_tail_increment", est.max_tail_increment, experiments::kDerived);
  r.field("truncated", est.truncated, experiments::kDerived);
  io::CsvWriter csv({"x", "psi", "tail_increment"});
  for (const auto& s : est.samples) csv.row({s.x, s.psi, s.tail_increment});
  emit(o, r, {{"psi", csv}});
  return 0;
}

int cmd_an_probe(const Options& o) {
  auto l = load(o, "an-probe");
  l.config["level"] = level_or(o, 20);
  l.config["horizon"] = o.horizon;
  l.config["x0"] = o.x0;
  log_config(o, l.config);
  if (l.sys.mode == ScalarMode::exact) l.sys.mode = ScalarMode::floating;
  auto w = build_window<double>(l.sys, level_or(o, 20), l.sys.seed);
  auto res = an_probe(BoundForm<double>(io::form_from_json<double>(l.sys, l.config.at("form")), w), io::number(json(o.x0), "--x0"),
                      o.horizon);
  io::Report r("an-probe", l.config);
  r.field("sup", res.sup, experiments::kDerived);
  r.field("growth", experiments::detail::growth_json(res.fit), experiments::kDerived);
  r.note("finite-horizon probe; it does not decide asymptotic negligibility");
  emit(o, r, {{"trace", experiments::detail::growth_trace(res.trace)}});
  return 0;
}

int cmd_rho_bounded(const Options& o) {
  auto l = load(o, "rho-bounded");
  if (!o.rho) throw std::invalid_argument("rho-bounded needs --rho");
  std::vector<std::string> samples = o.samples.empty() ? std::vector<std::string>{o.x0} : o.samples;
  l.config["level"] = level_or(o, 20);
  l.config["iters"] = o.iters;
  l.config["rho"] = *o.rho;
  l.config["samples"] = samples;
  log_config(o, l.config);
  if (l.sys.mode == ScalarMode::exact) l.sys.mode = ScalarMode::floating;
  auto w = build_window<double>(l.sys, level_or(o, 20), l.sys.seed);
  auto f = io::make_map<double>(l.sys, io::map_spec_from_json(l.sys, l.config.at("map")), w);
  std::vector<double> xs;
  for (const auto& s : samples) xs.push_back(io::number(json(s), "--sample"));
  auto res = rho_bounded_probe<double>(*f, *o.rho, o.iters, xs);
  io::Report r("rho-bounded", l.config);
  r.field("growth", experiments::detail::growth_json(res.fit), experiments::kDerived);
  r.note("finite-horizon probe; it does not decide rho-boundedness");
  emit(o, r, {{"trace", experiments::detail::growth_trace(res.trace)}});
  return 0;
}

int cmd_experiment(const Options& o) {
  std::vector<std::string> names;
  if (o.name == "all") {
    for (const auto& [n, fn] : experiments::scenarios()) names.push_back(n);
  } else if (experiments::find_scenario(o.name)) {
    names.push_back(o.name);
  } else {
    std::cerr << "unknown scenario '" << o.name << "'; known:";
    for (const auto& [n, fn] : experiments::scenarios()) std::cerr << " " << n;
    std::cerr << " all\n";
    return kUnknownScenario;
  }
  bool all_pass = true;
  json summary = json::array();
  for (const auto& name : names) {
    auto cfg = experiments::scenario_config(name);
    log_config(o, cfg);
    auto out = (*experiments::find_scenario(name))(cfg);
    all_pass = all_pass && out.report.passed();
    if (o.out.empty()) {
      std::cout << io::dump(out.report.to_json(true)) << "\n";
    } else {
      fs::create_directories(o.out);
      io::write_atomic(fs::path(o.out) / (name + ".json"), io::dump(out.report.to_json(true)) + "\n");
      for (const auto& [stem, csv] : out.traces) csv.save(fs::path(o.out) / (name + "." + stem + ".csv"));
    }
    for (const auto& c : out.report.checks())
      if (!c.at("pass").get<bool>())
        std::cerr << "FAIL " << name << ": " << c.at("name").get<std::string>() << ": " << c.at("detail").get<std::string>() << "\n";
    if (!o.quiet) std::cerr << name << ": " << (out.report.passed() ? "pass" : "FAIL") << "\n";
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rotation numbers and rotation forms for one-dimensional tilings"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("-q,--quiet", o.quiet, "do not log the resolved config");

  auto common = [&](CLI::App* c, bool map, bool form) {
    c->add_option("--system,system", o.system, "tiling system file (.json)")->required()->check(CLI::ExistingFile);
    if (map) c->add_option("--map", o.map, "map or flow file (.json)")->required()->check(CLI::ExistingFile);
    if (form) c->add_option("--form", o.form, "form file (.json)")->required()->check(CLI::ExistingFile);
    c->add_option("--level", o.level, "supertile level of the window")->check(CLI::NonNegativeNumber);
    c->add_option("--seed", o.seed, "seed such as a|b (overrides the system file)");
    c->add_option("--tolerance", o.tolerance, "float comparison tolerance")->check(CLI::PositiveNumber);
    c->add_option("--out", o.out, "output file (default stdout)");
  };

  auto* gen = app.add_subcommand("gen", "write a window of the tiling");
  common(gen, false, false);

  auto* rotnum = app.add_subcommand("rotnum", "estimate the rotation number of a map");
  common(rotnum, true, false);
  rotnum->add_option("--iters", o.iters, "iterations");
  rotnum->add_option("--x0", o.x0, "start point");
  rotnum->add_flag("--backward", o.backward, "iterate the inverse");

  auto* rff = app.add_subcommand("rho-from-form", "rotation number from return points of a form");
  common(rff, false, true);
  rff->add_option("--x0", o.x0, "base point");
  rff->add_option("--radius", o.radius, "patch radius (default: the form's)");
  rff->add_flag("--backward", o.backward, "use return points to the left");

  auto* verify = app.add_subcommand("verify-form", "test the rotation form condition on matched pairs");
  common(verify, true, true);
  verify->add_option("--budget", o.budget, "number of matched pairs");
  verify->add_option("--radius", o.radius, "pair radius (default: max of form and map radii)");

  auto* shape = app.add_subcommand("shape-change", "tiling system after a shape change by a positive form");
  common(shape, false, true);

  auto* psi = app.add_subcommand("psi", "estimate the semi-conjugacy on a grid");
  common(psi, true, false);
  psi->add_option("--iters", o.iters, "horizon N");
  psi->add_option("--rho", o.rho, "rotation number")->required();
  psi->add_option("--from", o.from, "grid start");
  psi->add_option("--to", o.to, "grid end");
  psi->add_option("--step", o.step, "grid step")->check(CLI::PositiveNumber);
  psi->add_option("--slope-tol", o.slope_tol, "flatness threshold for collapsing intervals");

  auto* an = app.add_subcommand("an-probe", "growth of the integral of a form");
  common(an, false, true);
  an->add_option("--iters,--horizon", o.horizon, "horizon length");
  an->add_option("--x0", o.x0, "start point");

  auto* rb = app.add_subcommand("rho-bounded", "growth of f^n(x) - x - n rho");
  common(rb, true, false);
  rb->add_option("--iters", o.iters, "iterations");
  rb->add_option("--rho", o.rho, "rotation number")->required();
  rb->add_option("--sample", o.samples, "start points (repeatable)");

  auto* exp = app.add_subcommand("experiment", "run a frozen scenario");
  exp->add_option("name", o.name, "scenario name or all");
  exp->add_option("--out", o.out, "output directory (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen(o);
    if (*rotnum) return cmd_rotnum(o);
    if (*rff) return cmd_rho_from_form(o);
    if (*verify) return cmd_verify_form(o);
    if (*shape) return cmd_shape_change(o);
    if (*psi) return cmd_psi(o);
    if (*an) return cmd_an_probe(o);
    if (*rb) return cmd_rho_bounded(o);
    if (*exp) return cmd_experiment(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
