#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "generators.hpp"
#include "qemlab/filtration.hpp"
#include "qemlab/ulam.hpp"

using namespace qemlab;

namespace {

/// Seven basic sets, pressures ascending in label, chains 1>>4>>2>>7 and 5>>6.
ConnectionGraph seven_node() {
  ConnectionGraph g;
  for (int i = 1; i <= 7; ++i) g.nodes.push_back({i, 0.1 * i});
  g.edges = {{1, 4}, {4, 2}, {2, 7}, {5, 6}};
  return g;
}

ConnectionGraph from_dag(const gen::Gen::Dag& d) {
  ConnectionGraph g;
  for (std::size_t i = 0; i < d.ids.size(); ++i) g.nodes.push_back({d.ids[i], d.pressure[i]});
  g.edges = d.edges;
  return g;
}

}  // namespace

TEST(DetectCycles, Dag) {
  ConnectionGraph g{{{1, 0}, {2, 1}, {3, 2}}, {{1, 2}, {2, 3}}};
  EXPECT_FALSE(detect_cycles(g).has_value());
}

TEST(DetectCycles, TwoCycle) {
  ConnectionGraph g{{{1, 0}, {2, 1}}, {{1, 2}, {2, 1}}};
  const auto c = detect_cycles(g);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, (std::vector<int>{1, 2}));
}

TEST(DetectCycles, ThreeCycle) {
  ConnectionGraph g{{{1, 0}, {2, 1}, {3, 2}}, {{1, 2}, {2, 3}, {3, 1}}};
  const auto c = detect_cycles(g);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, (std::vector<int>{1, 2, 3}));
}

TEST(DetectCycles, WitnessIsACycle) {
  gen::Gen gn(1);
  for (int t = 0; t < 100; ++t) {
    auto d = gn.dag(gn.integer(2, 9), 0.3);
    if (d.edges.empty()) continue;
    // reverse one edge of a path of length >= 1 to force a cycle
    const auto e = d.edges[gn.integer(0, static_cast<int>(d.edges.size()) - 1)];
    d.edges.emplace_back(e.second, e.first);
    const auto g = from_dag(d);
    const auto c = detect_cycles(g);
    ASSERT_TRUE(c);
    for (std::size_t k = 0; k < c->size(); ++k) {
      const std::pair<int, int> step{(*c)[k], (*c)[(k + 1) % c->size()]};
      EXPECT_NE(std::find(g.edges.begin(), g.edges.end(), step), g.edges.end());
    }
  }
}

TEST(Validate, BadGraphs) {
  EXPECT_THROW(detect_cycles(ConnectionGraph{{{1, 0}, {1, 1}}, {}}), ConfigError);
  EXPECT_THROW(detect_cycles(ConnectionGraph{{{1, 0}}, {{1, 2}}}), ConfigError);
  EXPECT_THROW(detect_cycles(ConnectionGraph{{{1, 0}}, {{1, 1}}}), ConfigError);
}

TEST(FiltrationOrder, SevenNodeExample) {
  const auto o = filtration_order(seven_node());
  EXPECT_EQ(o.sequence_string(), "1>4>2>7>5>6>3");
  ASSERT_EQ(o.subgraphs.size(), 3u);
  EXPECT_EQ(o.subgraphs[0], (std::vector<int>{1, 4, 2, 7}));
  EXPECT_EQ(o.subgraphs[1], (std::vector<int>{5, 6}));
  EXPECT_EQ(o.subgraphs[2], (std::vector<int>{3}));
  EXPECT_EQ(o.t(), 2);
  EXPECT_EQ(o.indices, (std::vector<int>{4, 2, 1}));
}

TEST(FiltrationOrder, SingleNode) {
  const auto o = filtration_order(ConnectionGraph{{{9, 0.3}}, {}});
  EXPECT_EQ(o.sequence, std::vector<int>{9});
  EXPECT_EQ(o.t(), 0);
}

TEST(FiltrationOrder, TwoDisconnected) {
  const auto o = filtration_order(ConnectionGraph{{{1, 1.0}, {2, 2.0}}, {}});
  EXPECT_EQ(o.sequence, (std::vector<int>{2, 1}));
  EXPECT_EQ(o.subgraphs.size(), 2u);
}

TEST(FiltrationOrder, CycleRejectedWithWitness) {
  auto g = seven_node();
  g.edges.emplace_back(7, 1);
  try {
    filtration_order(g);
    FAIL();
  } catch (const CycleError& e) {
    EXPECT_EQ(e.diagnostic(), "E_CYCLE");
    EXPECT_EQ(e.witness(), (std::vector<int>{1, 4, 2, 7}));
  }
}

TEST(FiltrationOrder, PressureTie) {
  try {
    filtration_order(ConnectionGraph{{{1, 0.5}, {2, 0.5 + 1e-13}}, {}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.diagnostic(), "E_PRESSURE_TIE");
    EXPECT_NE(std::string(e.what()).find("HG2 violated"), std::string::npos);
  }
}

TEST(FiltrationOrder, LinearExtensionProperty) {
  gen::Gen gn(2);
  for (int t = 0; t < 300; ++t) {
    const auto d = gn.dag(gn.integer(1, 12), gn.real(0.0, 0.5));
    const auto o = filtration_order(from_dag(d));
    auto pos = [&](int id) { return std::find(o.sequence.begin(), o.sequence.end(), id) - o.sequence.begin(); };
    for (const auto& [a, b] : d.edges) EXPECT_LT(pos(a), pos(b));
    // subgraph blocks concatenate to the sequence and indices strictly decrease
    std::vector<int> cat;
    for (const auto& s : o.subgraphs) cat.insert(cat.end(), s.begin(), s.end());
    EXPECT_EQ(cat, o.sequence);
    for (std::size_t k = 1; k < o.indices.size(); ++k) EXPECT_GT(o.indices[k - 1], o.indices[k]);
    // every selected node has the largest pressure among what was left
    std::size_t start = 0;
    for (std::size_t s = 0; s < o.subgraphs.size(); ++s) {
      double best = -1e300;
      for (std::size_t k = start; k < o.sequence.size(); ++k)
        best = std::max(best, d.pressure[o.sequence[k] - 1]);
      double in_sub = -1e300;
      for (int id : o.subgraphs[s]) in_sub = std::max(in_sub, d.pressure[id - 1]);
      EXPECT_EQ(in_sub, best);
      start += o.subgraphs[s].size();
    }
  }
}

TEST(FiltrationOrder, InputPermutationInvariant) {
  gen::Gen gn(3);
  for (int t = 0; t < 100; ++t) {
    const auto d = gn.dag(gn.integer(1, 10), 0.3);
    auto g = from_dag(d);
    const auto a = filtration_order(g);
    std::shuffle(g.nodes.begin(), g.nodes.end(), gn.engine());
    std::shuffle(g.edges.begin(), g.edges.end(), gn.engine());
    const auto b = filtration_order(g);
    EXPECT_EQ(a.sequence, b.sequence);
    EXPECT_EQ(a.indices, b.indices);
  }
}

TEST(FiltrationOrder, ConsistentEdgeKeepsSequence) {
  gen::Gen gn(4);
  for (int t = 0; t < 100; ++t) {
    const auto d = gn.dag(gn.integer(2, 10), 0.3);
    auto g = from_dag(d);
    const auto a = filtration_order(g);
    // add a >> b for some consecutive pair inside one subgraph; this is
    // consistent with the existing order
    for (const auto& s : a.subgraphs) {
      if (s.size() < 2) continue;
      const int k = gn.integer(0, static_cast<int>(s.size()) - 2);
      g.edges.emplace_back(s[k], s[k + 1]);
      break;
    }
    EXPECT_EQ(filtration_order(g).sequence, a.sequence);
  }
}

TEST(AssignBasin, Examples) {
  const auto o = filtration_order(seven_node());
  EXPECT_EQ(assign_basin(o, 5), 0);
  EXPECT_EQ(assign_basin(o, 4), 0);
  EXPECT_EQ(assign_basin(o, 3), 1);
  EXPECT_EQ(assign_basin(o, 1), 2);
  EXPECT_THROW(assign_basin(o, 0), ConfigError);
  EXPECT_THROW(assign_basin(o, 8), ConfigError);
}

TEST(AssignBasin, Monotone) {
  gen::Gen gn(5);
  for (int t = 0; t < 100; ++t) {
    const auto o = filtration_order(from_dag(gn.dag(gn.integer(1, 12), 0.3)));
    const int n = static_cast<int>(o.sequence.size());
    for (int j = 1; j < n; ++j) EXPECT_LE(assign_basin(o, j + 1), assign_basin(o, j));
    for (int j = 1; j <= n; ++j) {
      const int k = assign_basin(o, j);
      EXPECT_GE(k, 0);
      EXPECT_LE(k, o.t());
    }
  }
}

TEST(Stratified, TwoRepeller) {
  const auto s = two_repeller();
  const GridPartition grid(s.map.domain.boxes, 243);
  const auto m = assemble_operator(s.map, s.noise(1e-3), WeightField::zero(), s.survival, grid);
  // node 1 = ternary copy, node 2 = five copy; ternary has the larger pressure
  const auto o = filtration_order(ConnectionGraph{{{1, std::log(2.0 / 3.0)}, {2, std::log(0.6)}}, {}});
  std::map<int, std::vector<int>> strata;
  std::vector<int> a, b;
  for (int c = 0; c < grid.n_cells(); ++c) {
    if (m.row_weight()[c] == 0.0) continue;
    (grid.center(c)[0] < 1.5 ? a : b).push_back(c);
  }
  strata[o.rank.at(1)] = a;
  strata[o.rank.at(2)] = b;
  const auto rep = stratified_qem_workflow(m, o, strata);
  EXPECT_TRUE(rep.consistent);
  EXPECT_NEAR(rep.lambda_global, 2.0 / 3.0, 1e-3);
  ASSERT_EQ(rep.strata.size(), 2u);
  for (const auto& st : rep.strata) {
    ASSERT_TRUE(st.present);
    EXPECT_NEAR(st.triple.lambda, st.rank == o.rank.at(1) ? 2.0 / 3.0 : 0.6, 1e-3);
  }
}

TEST(Stratified, SingleStratumEqualsGlobal) {
  const auto m = AnnealedMatrix::from_dense({{0.2, 0.3, 0.0}, {0.1, 0.4, 0.2}, {0.0, 0.3, 0.3}});
  const auto o = filtration_order(ConnectionGraph{{{1, 0.0}}, {}});
  const auto rep = stratified_qem_workflow(m, o, {{1, {0, 1, 2}}});
  ASSERT_TRUE(rep.strata[0].present);
  EXPECT_EQ(rep.strata[0].triple.lambda, rep.global.lambda);
  EXPECT_EQ(rep.strata[0].triple.qem, rep.global.qem);
  EXPECT_TRUE(rep.consistent);
}

TEST(Stratified, ZeroBlockAbsent) {
  // cell 2 survives one step but has no mass flowing back into itself
  const auto m = AnnealedMatrix::from_dense({{0.5, 0.0, 0.0}, {0.0, 0.5, 0.0}, {0.3, 0.0, 0.0}});
  const auto o = filtration_order(ConnectionGraph{{{1, 1.0}, {2, 0.0}}, {}});
  const auto rep = stratified_qem_workflow(m, o, {{2, {0, 1}}, {1, {2}}});
  bool saw_absent = false;
  for (const auto& s : rep.strata)
    if (s.rank == 1) {
      EXPECT_FALSE(s.present);
      EXPECT_FALSE(s.note.empty());
      saw_absent = true;
    }
  EXPECT_TRUE(saw_absent);
  EXPECT_NEAR(rep.lambda_max_restricted, 0.5, 1e-12);
}

TEST(Stratified, Errors) {
  const auto m = AnnealedMatrix::from_dense({{0.5, 0.1}, {0.1, 0.5}});
  const auto o = filtration_order(ConnectionGraph{{{1, 1.0}, {2, 0.0}}, {}});
  EXPECT_THROW(stratified_qem_workflow(m, o, {{1, {0, 1}}, {2, {1}}}), ConfigError);  // overlap
  EXPECT_THROW(stratified_qem_workflow(m, o, {{1, {0}}}), ConfigError);               // uncovered
  EXPECT_THROW(stratified_qem_workflow(m, o, {{5, {0, 1}}}), ConfigError);            // bad rank
}
