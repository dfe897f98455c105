#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "qemlab/config.hpp"

using namespace qemlab;

namespace {

std::string diagnostic_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.diagnostic();
  }
  return "";
}

ExperimentConfig random_config(gen::Gen& g) {
  ExperimentConfig c;
  const auto& labels = builtin_labels();
  c.system = labels[g.integer(0, static_cast<int>(labels.size()) - 1)];
  c.amplitude = g.real(-0.04, 0.04);
  const int wk = g.integer(0, 2);
  if (wk == 1) {
    c.weight.kind = "constant";
    c.weight.value = g.real(-2, 2);
  } else if (wk == 2) {
    c.weight.kind = "table";
    c.weight.boxes = {Box::interval(0.0, g.real(0.1, 0.5))};
    c.weight.values = {g.real(-1, 1)};
    c.weight.fallback = g.real(-1, 0);
  }
  if (g.coin()) c.weight.cutoff = CutoffConfig{{Box::interval(0.0, 1.0 / 3.0)}, g.real(0.01, 0.3), {}};
  if (g.coin()) c.region = RegionConfig{{Box::interval(0.0, g.real(0.2, 1.0))}, "custom"};
  c.resolution = g.integer(1, 3000);
  c.epsilons.clear();
  for (int k = g.integer(1, 4); k > 0; --k) c.epsilons.push_back(g.real(0.0, 0.1));
  c.samples_per_cell = g.integer(1, 64);
  c.tol = g.real(1e-14, 1e-6);
  c.max_iters = g.integer(1, 1000000);
  c.mc.n = g.integer(1, 100000);
  c.mc.n_particles = g.integer(2, 100000);
  c.mc.resample_threshold = g.real(0, 1);
  c.mc.observables = {"x", "x2"};
  if (g.coin()) c.mc.start = Point{g.real(0, 1), g.real(0, 1)};
  if (g.coin()) {
    FiltrationConfig f;
    f.nodes = {{1, g.real(0, 1), {}}, {2, g.real(1.5, 2), {Box::interval(0, 1)}}};
    f.edges = {{2, 1}};
    c.filtration = f;
  }
  c.reference_depth = g.integer(1, 9);
  c.dictionary_k = g.integer(1, 16);
  c.seed = static_cast<std::uint64_t>(g.integer(0, 1 << 30)) * 4099u;
  c.outputs.dir = "out_" + std::to_string(g.integer(0, 99));
  c.outputs.format = g.coin() ? "csv" : "json";
  c.outputs.export_matrix = g.coin() ? "none" : "binary";
  return c;
}

}  // namespace

TEST(Config, RoundTripBitIdentical) {
  gen::Gen g(1);
  for (int t = 0; t < 200; ++t) {
    const auto c = random_config(g);
    const std::string a = serialize(c);
    const auto back = parse_config(a);
    EXPECT_EQ(serialize(back), a);
    EXPECT_EQ(back.tol, c.tol);
    EXPECT_EQ(back.amplitude, c.amplitude);
    EXPECT_EQ(back.epsilons, c.epsilons);
    EXPECT_EQ(back.seed, c.seed);
  }
}

TEST(Config, Defaults) {
  const auto c = parse_config(R"({"schema_version": 1})");
  EXPECT_EQ(c.system, "ternary_hole");
  EXPECT_EQ(c.weight.kind, "zero");
  EXPECT_EQ(c.epsilons, std::vector<double>{0.0});
}

TEST(Config, SingleEpsilonKey) {
  const auto c = parse_config(R"({"schema_version": 1, "noise": {"epsilon": 0.001}})");
  EXPECT_EQ(c.epsilons, std::vector<double>{0.001});
}

TEST(Config, DistinctDiagnostics) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {R"({"schema_version": 1, "noise": {"epsilon": -0.1}})", "E_EPSILON_NEGATIVE"},
      {R"({"schema_version": 1, "grid": {"resolution": 0}})", "E_RESOLUTION"},
      {R"({"schema_version": 1, "system": "hopf"})", "E_UNKNOWN_LABEL"},
      {R"({"schema_version": 1, "filtration": {"nodes": [{"id": 1, "pressure": 1}, {"id": 2, "pressure": 1}], "edges": []}})",
       "E_PRESSURE_TIE"},
      {R"({"schema_version": 1, "filtration": {"nodes": [{"id": 1, "pressure": 1}, {"id": 2, "pressure": 2}], "edges": [[1,2],[2,1]]}})",
       "E_CYCLE"},
      {R"({"schema_version": 2})", "E_SCHEMA"},
      {R"({"schema_version": 1, "noise": {"epsilons": []}})", "E_EPSILON_MISSING"},
      {R"({"schema_version": 1, "outputs": {"format": "xml"}})", "E_FORMAT"},
      {R"({"schema_version": 1, "weight": {"kind": "magic"}})", "E_WEIGHT"},
      {R"({"schema_version": 1, "grid": {"samples_per_cell": 0}})", "E_SAMPLES"},
      {"{not json", "E_CONFIG"},
  };
  std::set<std::string> seen;
  for (const auto& [text, code] : cases) {
    EXPECT_EQ(diagnostic_of(text), code) << text;
    seen.insert(code);
  }
  EXPECT_EQ(seen.size(), cases.size());
}

TEST(Config, ObservableNames) {
  const Point p{0.25, 0.5};
  EXPECT_EQ(observable_by_name("one")(p), 1.0);
  EXPECT_EQ(observable_by_name("x")(p), 0.25);
  EXPECT_EQ(observable_by_name("y")(p), 0.5);
  EXPECT_EQ(observable_by_name("x2")(p), 0.0625);
  EXPECT_NEAR(observable_by_name("cos2pix")(p), 0.0, 1e-15);
  EXPECT_NEAR(observable_by_name("sin2pix")(p), 1.0, 1e-15);
  EXPECT_THROW(observable_by_name("energy"), ConfigError);
}

TEST(Config, BuildWeight) {
  const auto map = ternary_hole().map;
  WeightConfig wc;
  wc.kind = "constant";
  wc.value = std::log(2.0);
  EXPECT_NEAR(eval_weight(build_weight(wc, map), {0.3, 0}), 2.0, 1e-15);
  wc.kind = "table";
  wc.boxes = {Box::interval(0.0, 0.5)};
  wc.values = {0.0};
  wc.fallback = std::log(3.0);
  const auto w = build_weight(wc, map);
  EXPECT_NEAR(eval_weight(w, {0.2, 0}), 1.0, 1e-15);
  EXPECT_NEAR(eval_weight(w, {0.7, 0}), 3.0, 1e-14);
  wc.cutoff = CutoffConfig{{Box::interval(0.0, 1.0 / 3.0)}, 0.05, {}};
  EXPECT_EQ(eval_weight(build_weight(wc, map), {1.0 / 3.0, 0}), 0.0);
}
