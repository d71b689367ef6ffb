#include <gtest/gtest.h>

#include <clocale>
#include <filesystem>

#include "tilerot/catalog.hpp"
#include "tilerot/io.hpp"
#include "tilerot/shape_change.hpp"

using namespace tilerot;
using io::json;

namespace {

void expect_same_windows(const TilingSystem& a, const TilingSystem& b, int level) {
  auto wa = build_window<double>(a, level, a.seed);
  auto wb = build_window<double>(b, level, b.seed);
  EXPECT_EQ(wa.labels(), wb.labels());
  ASSERT_EQ(wa.vertices().size(), wb.vertices().size());
  for (std::size_t i = 0; i < wa.vertices().size(); ++i) EXPECT_EQ(wa.vertices()[i], wb.vertices()[i]);
}

}  // namespace

TEST(Io, SystemsRoundTrip) {
  for (const auto& sys : {catalog::fibonacci(), catalog::nonpisot(), catalog::multiclass(), catalog::fusion_noclass({3, 4}),
                          catalog::nue({10, 100})}) {
    auto j = io::system_to_json(sys);
    auto back = io::system_from_json(io::parse_json(io::dump(j), "test"));
    EXPECT_EQ(io::dump(io::system_to_json(back)), io::dump(j)) << sys.name;
    EXPECT_EQ(back.mode, sys.mode) << sys.name;
    expect_same_windows(sys, back, sys.is_fusion() ? 2 : 6);
  }
}

TEST(Io, ShapeChangeTargetRoundTrips) {
  auto fib = catalog::fibonacci();
  auto alpha = collar(fib, 1);
  std::vector<QuadraticNumber> w;
  for (std::size_t k = 0; k < alpha.size(); ++k) w.push_back(QuadraticNumber(Rational(static_cast<std::int64_t>(k) + 1, 2)));
  auto sc = shape_change(fib, form_from_weights<QuadraticNumber>(fib, alpha, w, "m"));
  auto back = io::system_from_json(io::system_to_json(*sc.target));
  expect_same_windows(*sc.target, back, 8);
}

TEST(Io, RejectsUnknownKeys) {
  auto j = io::system_to_json(catalog::fibonacci());
  j["colour"] = "red";
  EXPECT_THROW(io::system_from_json(j), std::invalid_argument);
  auto fib = catalog::fibonacci();
  EXPECT_THROW(io::form_from_json<double>(fib, json{{"builtin", "dx"}, {"extra", 1}}), std::invalid_argument);
  EXPECT_THROW(io::map_spec_from_json(fib, json{{"builtin", "translation:1"}, {"speed", 2}}), std::invalid_argument);
}

TEST(Io, UnknownLabelInSeed) {
  auto j = io::system_to_json(catalog::fibonacci());
  j["seed"] = "a|z";
  EXPECT_THROW(build_window<double>(io::system_from_json(j), 3, io::system_from_json(j).seed), std::invalid_argument);
}

TEST(Io, FloatLengthsFallBackToFloatMode) {
  auto j = io::system_to_json(catalog::fibonacci());
  j.erase("mode");
  j["lengths"] = json::array({"1", "13/4"});
  EXPECT_EQ(io::system_from_json(j).mode, ScalarMode::exact);
  j["lengths"] = json::array({"1", 3.141592653589793});
  auto s = io::system_from_json(j);
  EXPECT_EQ(s.mode, ScalarMode::floating);
  EXPECT_DOUBLE_EQ(s.lengths[1], 3.141592653589793);
  j["mode"] = "exact";
  EXPECT_THROW(io::system_from_json(j), std::invalid_argument);
}

TEST(Io, FormsFromJson) {
  auto fib = catalog::fibonacci("phi", "1");
  auto w = build_window<QuadraticNumber>(fib, 6, fib.seed);
  auto dx = io::form_from_json<QuadraticNumber>(fib, json{{"builtin", "dx"}});
  auto ia = io::form_from_json<QuadraticNumber>(fib, json{{"builtin", "indicator:a"}});
  auto mix = io::form_from_json<QuadraticNumber>(
      fib, json::parse(R"j({"combination": [{"coef": "2", "form": {"builtin": "indicator:a"}},
                                          {"coef": "-phi", "form": {"weights": {"a": 0, "b": 1}}}]})j"));
  BoundForm<QuadraticNumber> bdx(dx, w), bia(ia, w), bmix(mix, w);
  EXPECT_EQ(bdx.integrate(0, w.back()), w.back());
  EXPECT_EQ(bmix.integrate(0, QuadraticNumber::parse("2*phi+1")),
            QuadraticNumber(4) - QuadraticNumber::golden_ratio());  // a a b
  auto deep = io::form_from_json<double>(
      fib, json::parse(R"j({"depth": 1, "weights": {"(a)a(b)": 1, "(a)b(a)": 2, "(b)a(a)": 3, "(b)a(b)": 4}})j"));
  EXPECT_EQ(deep.depth(), 1);
  EXPECT_THROW(io::form_from_json<double>(fib, json::parse(R"j({"depth": 1, "weights": {"(a)a(b)": 1}})j")),
               std::invalid_argument);
}

TEST(Io, MapsFromJson) {
  auto nue = catalog::nue({10, 100});
  auto w = build_window<double>(nue, 2, nue.seed);
  auto spec = io::map_spec_from_json(
      nue, json::parse(R"j({"builtin": "flow_time1", "velocity": {"speeds": {"a": 1, "b": 2}, "smoothing": 0.05}})j"));
  auto f = io::make_map<double>(nue, spec, w);
  EXPECT_GT(f->apply(0.0), 0.9);
  auto t = io::make_map<double>(nue, io::map_spec_from_json(nue, json{{"builtin", "translation:1/2"}}), w);
  EXPECT_EQ(t->apply(0.0), 0.5);
  EXPECT_THROW(io::map_spec_from_json(nue, json{{"builtin", "translation:1"}, {"radius", 0}, {"velocity", json::object()}}),
               std::invalid_argument);
  auto fsys = catalog::fusion_noclass({10, 5});
  EXPECT_THROW(io::map_spec_from_json(
                   fsys, json::parse(R"j({"radius": 1.0, "displacement": {"sine": {"a": 0.4, "b": -0.8, "c": -0.14}}})j")),
               std::invalid_argument);
  EXPECT_NO_THROW(
      io::map_spec_from_json(fsys, json::parse(R"j({"displacement": {"sine": {"a": 0.4, "b": -0.8, "c": -0.14}}})j")));
}

TEST(Io, SeventeenDigitsRegardlessOfLocale) {
  const char* old = std::setlocale(LC_NUMERIC, nullptr);
  std::string saved = old ? old : "C";
  std::setlocale(LC_NUMERIC, "de_DE.UTF-8");  // may be missing; then the check is trivial
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  io::CsvWriter csv({"n", "x"});
  csv.row({1, 2.5});
  EXPECT_EQ(csv.str(), "n,x\n1,2.5\n");
  EXPECT_EQ(io::dump(json{{"x", 1.0 / 3}}, -1), "{\"x\":0.33333333333333331}");
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST(Io, WindowExportAndAtomicWrite) {
  auto fib = catalog::fibonacci("phi", "1");
  auto w = build_window<QuadraticNumber>(fib, 3, fib.seed);
  auto j = io::window_to_json(fib, w);
  EXPECT_EQ(j["labels"].size(), w.tile_count());
  EXPECT_EQ(j["vertices"][w.origin_index()], "0");
  auto dir = std::filesystem::temp_directory_path() / "tilerot_io_test";
  io::write_atomic(dir / "w.json", io::dump(j));
  EXPECT_EQ(io::parse_json(io::read_file(dir / "w.json"), "w")["origin_index"], w.origin_index());
  EXPECT_FALSE(std::filesystem::exists(dir / "w.json.tmp"));
  std::filesystem::remove_all(dir);
}

TEST(Io, ReportHashIgnoresTiming) {
  io::Report a("demo", json{{"n", 3}}), b("demo", json{{"n", 3}});
  for (auto* r : {&a, &b}) {
    r->field("x", 1.5, "[TRIVIAL]");
    r->check("x positive", true, "1.5 > 0", "[TRIVIAL]");
  }
  a.seconds(1);
  b.seconds(2);
  EXPECT_EQ(a.report_hash(), b.report_hash());
  EXPECT_EQ(a.hash(), io::config_hash(json{{"n", 3}}));
  EXPECT_TRUE(a.passed());
  a.check("fails", false, "", "[TRIVIAL]");
  EXPECT_FALSE(a.passed());
}
