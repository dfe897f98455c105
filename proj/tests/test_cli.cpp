#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "qemlab/cli.hpp"

using namespace qemlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qemlab_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig base(const fs::path& dir) {
  ExperimentConfig c;
  c.outputs.dir = dir.string();
  return c;
}

double json_number(const fs::path& file, const std::string& key) {
  return nlohmann::json::parse(read_file(file)).at(key).get<double>();
}

}  // namespace

TEST(CmdSpectrum, TernaryLambda) {
  const auto dir = scratch("spectrum");
  auto c = base(dir);
  c.resolution = 2187;
  c.epsilons = {1e-3};
  std::ostringstream log;
  EXPECT_EQ(cmd_spectrum(c, 1, log), 0);
  const double lam = json_number(dir / "spectrum.json", "lambda");
  EXPECT_GE(lam, 0.647);
  EXPECT_LE(lam, 0.687);
  EXPECT_TRUE(fs::exists(dir / "vectors.csv"));
}

TEST(CmdSpectrum, ZeroResolutionRejected) {
  try {
    parse_config(R"({"schema_version": 1, "grid": {"resolution": 0}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(static_cast<int>(e.code()), 0);
  }
}

TEST(CmdSpectrum, ByteIdenticalReruns) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto c = base(a);
  c.system = "open_baker";
  c.resolution = 27;
  c.epsilons = {0.01};
  c.outputs.export_matrix = "binary";
  c.seed = 5;
  std::ostringstream log;
  cmd_spectrum(c, 1, log);
  c.outputs.dir = b.string();
  cmd_spectrum(c, 2, log);
  for (const auto* f : {"spectrum.json", "vectors.csv", "matrix.bin"})
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
}

TEST(CmdSpectrum, JsonVectors) {
  const auto dir = scratch("jsonvec");
  auto c = base(dir);
  c.resolution = 9;
  c.outputs.format = "json";
  c.outputs.export_matrix = "text";
  std::ostringstream log;
  cmd_spectrum(c, 1, log);
  const auto j = nlohmann::json::parse(read_file(dir / "vectors.json"));
  EXPECT_EQ(j.at("qem").size(), 9u);
  const auto m = matrix_from_text(read_file(dir / "matrix.txt"));
  EXPECT_EQ(m.n_cells(), 9);
}

TEST(CmdMc, SymmetricMeanAndConstant) {
  const auto dir = scratch("mc");
  auto c = base(dir);
  c.epsilons = {1e-3};
  c.mc.n = 1000;
  c.mc.n_particles = 2000;
  c.mc.observables = {"x", "one"};
  std::ostringstream log;
  EXPECT_EQ(cmd_mc(c, 1, log), 0);
  const auto j = nlohmann::json::parse(read_file(dir / "mc.json"));
  const double x = j["conditioned_average"][0], se = j["standard_error"][0];
  EXPECT_NEAR(x, 0.5, 3.0 * se);
  EXPECT_EQ(j["conditioned_average"][1].get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(dir / "log_mass.dat"));
}

TEST(CmdMc, ExtinctInHole) {
  auto c = base(scratch("mc_extinct"));
  c.epsilons = {0.0};
  c.mc.start = Point{0.5, 0.0};
  std::ostringstream log;
  try {
    cmd_mc(c, 1, log);
    FAIL();
  } catch (const EnsembleExtinct& e) {
    EXPECT_EQ(e.code(), ExitCode::extinction);
    EXPECT_NE(std::string(e.what()).find("ensemble extinct"), std::string::npos);
  }
}

TEST(CmdSweep, DiscrepancyDecreases) {
  const auto dir = scratch("sweep");
  auto c = base(dir);
  c.resolution = 729;
  c.epsilons = {1e-3, 1e-2, 3e-3};
  std::ostringstream log;
  EXPECT_EQ(cmd_sweep(c, 1, log), 0);
  const auto res = run_sweep(Experiment(c), 1);
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_EQ(res.rows[0].epsilon, 1e-2);
  EXPECT_EQ(res.rows[2].epsilon, 1e-3);
  for (std::size_t k = 1; k < 3; ++k) EXPECT_LT(res.rows[k].discrepancy, res.rows[k - 1].discrepancy);
  for (const auto& r : res.rows) {
    EXPECT_GT(r.lambda, 0.0);
    EXPECT_LE(r.lambda, 1.0);
  }
  for (const auto* f : {"sweep.csv", "lambda_vs_eps.dat", "discrepancy_vs_eps.dat", "qem_eps_0.csv",
                        "qem_eps_2.csv", "sweep_timing.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(CmdSweep, LambdaInUnitIntervalForNonpositiveWeight) {
  auto c = base(scratch("sweep_neg"));
  c.system = "smooth_perturbed";
  c.weight.kind = "constant";
  c.weight.value = -0.3;
  c.resolution = 243;
  c.epsilons = {0.02, 0.005};
  for (const auto& r : run_sweep(Experiment(c), 1).rows) {
    EXPECT_TRUE(r.ok);
    EXPECT_GT(r.lambda, 0.0);
    EXPECT_LE(r.lambda, 1.0);
  }
}

TEST(CmdSweep, SingleEpsilonRejected) {
  auto c = base(scratch("sweep_one"));
  c.epsilons = {1e-3};
  std::ostringstream log;
  EXPECT_THROW(cmd_sweep(c, 1, log), ConfigError);
}

TEST(CmdFiltration, SevenNodeSequence) {
  const auto dir = scratch("filt");
  auto c = base(dir);
  FiltrationConfig f;
  for (int i = 1; i <= 7; ++i) f.nodes.push_back({i, 0.1 * i, {}});
  f.edges = {{1, 4}, {4, 2}, {2, 7}, {5, 6}};
  c.filtration = f;
  std::ostringstream log;
  EXPECT_EQ(cmd_filtration(c, 1, log), 0);
  EXPECT_EQ(read_file(dir / "sequence.txt"), "1>4>2>7>5>6>3\n");
  const auto j = nlohmann::json::parse(read_file(dir / "filtration.json"));
  EXPECT_EQ(j.at("t").get<int>(), 2);
}

TEST(CmdFiltration, CycleRejected) {
  auto c = base(scratch("filt_cycle"));
  c.filtration = FiltrationConfig{{{1, 0.1, {}}, {2, 0.2, {}}}, {{1, 2}, {2, 1}}};
  std::ostringstream log;
  try {
    cmd_filtration(c, 1, log);
    FAIL();
  } catch (const CycleError& e) {
    EXPECT_EQ(e.witness().size(), 2u);
  }
}

TEST(CmdFiltration, TwoRepellerStrata) {
  const auto dir = scratch("filt_two");
  auto c = base(dir);
  c.system = "two_repeller";
  c.resolution = 243;
  c.epsilons = {1e-3};
  c.filtration = FiltrationConfig{{{1, std::log(2.0 / 3.0), {Box::interval(0, 1)}},
                                   {2, std::log(0.6), {Box::interval(2, 3)}}},
                                  {}};
  std::ostringstream log;
  EXPECT_EQ(cmd_filtration(c, 1, log), 0);
  const auto j = nlohmann::json::parse(read_file(dir / "filtration.json")).at("stratified");
  EXPECT_TRUE(j.at("consistent").get<bool>());
  EXPECT_NEAR(j.at("lambda_global").get<double>(), 2.0 / 3.0, 1e-3);
  for (const auto& s : j.at("strata"))
    EXPECT_NEAR(s.at("lambda").get<double>(), s.at("id").get<int>() == 1 ? 2.0 / 3.0 : 0.6, 1e-3);
}

TEST(CmdCompare, SelfAndShift) {
  const auto dir = scratch("cmp");
  const GridPartition g({Box::interval(0, 1)}, 4);
  write_file(dir / "a.csv", qem_csv(g, {0.25, 0.25, 0.25, 0.25}));
  write_file(dir / "b.csv", qem_csv(g, {0.5, 0.0, 0.0, 0.5}));
  std::ostringstream out;
  cmd_compare((dir / "a.csv").string(), (dir / "a.csv").string(), 8, out);
  EXPECT_EQ(out.str(), "weak_star_discrepancy 0\nw1 0\n");
  const auto c = compare_measures(read_qem_csv(read_file(dir / "a.csv")), read_qem_csv(read_file(dir / "b.csv")), 8);
  // CDFs differ by 1/4 on [1/8, 3/8) and on [5/8, 7/8)
  EXPECT_NEAR(*c.w1, 0.125, 1e-15);
}

TEST(Overrides, Apply) {
  RunOptions o;
  o.out = "elsewhere";
  o.seed = 77;
  o.format = "json";
  const auto c = apply_overrides(ExperimentConfig{}, o);
  EXPECT_EQ(c.outputs.dir, "elsewhere");
  EXPECT_EQ(c.seed, 77u);
  EXPECT_EQ(c.outputs.format, "json");
  o.format = "xml";
  EXPECT_THROW(apply_overrides(ExperimentConfig{}, o), ConfigError);
}
