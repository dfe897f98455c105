#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qemlab/error.hpp"
#include "qemlab/spectral.hpp"
#include "qemlab/ulam.hpp"

namespace qemlab {

struct BasicSetNode {
  int id = 0;
  double pressure = 0.0;
};

/// Basic sets with declared connections; edge (a, b) reads a >> b.
struct ConnectionGraph {
  std::vector<BasicSetNode> nodes;
  std::vector<std::pair<int, int>> edges;

  void validate() const {
    std::set<int> ids;
    for (const auto& n : nodes)
      if (!ids.insert(n.id).second) throw ConfigError("E_GRAPH", "duplicate node id " + std::to_string(n.id));
    for (const auto& [a, b] : edges) {
      if (!ids.count(a) || !ids.count(b))
        throw ConfigError("E_GRAPH", "edge references unknown node " + std::to_string(ids.count(a) ? b : a));
      if (a == b) throw ConfigError("E_GRAPH", "self edge on node " + std::to_string(a));
    }
  }
};

inline std::string join_ids(const std::vector<int>& ids, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(ids[i]);
  }
  return s;
}

class CycleError : public ConfigError {
 public:
  explicit CycleError(std::vector<int> witness)
      : ConfigError("E_CYCLE", "connection graph has a cycle: " + join_ids(witness, " >> ")),
        witness_(std::move(witness)) {}
  const std::vector<int>& witness() const noexcept { return witness_; }

 private:
  std::vector<int> witness_;
};

namespace detail {

/// Node ids sorted ascending and adjacency lists sorted by target id, so
/// results do not depend on input order.
struct Adjacency {
  std::vector<int> ids;
  std::map<int, int> pos;
  std::vector<std::vector<int>> out;
  std::vector<double> pressure;

  explicit Adjacency(const ConnectionGraph& g) {
    for (const auto& n : g.nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = static_cast<int>(i);
    out.resize(ids.size());
    pressure.resize(ids.size());
    for (const auto& n : g.nodes) pressure[pos[n.id]] = n.pressure;
    for (const auto& [a, b] : g.edges) out[pos[a]].push_back(pos[b]);
    for (auto& o : out) {
      std::sort(o.begin(), o.end());
      o.erase(std::unique(o.begin(), o.end()), o.end());
    }
  }
};

}  // namespace detail

/// Empty when acyclic, otherwise the node ids of one cycle in edge order.
inline std::optional<std::vector<int>> detect_cycles(const ConnectionGraph& g) {
  g.validate();
  const detail::Adjacency adj(g);
  const int n = static_cast<int>(adj.ids.size());
  std::vector<int> color(n, 0);
  std::vector<int> path;
  std::optional<std::vector<int>> found;
  auto dfs = [&](auto&& self, int v) -> bool {
    color[v] = 1;
    path.push_back(v);
    for (int w : adj.out[v]) {
      if (color[w] == 1) {
        std::vector<int> cyc;
        auto it = std::find(path.begin(), path.end(), w);
        for (; it != path.end(); ++it) cyc.push_back(adj.ids[*it]);
        found = std::move(cyc);
        return true;
      }
      if (color[w] == 0 && self(self, w)) return true;
    }
    path.pop_back();
    color[v] = 2;
    return false;
  };
  for (int v = 0; v < n; ++v)
    if (color[v] == 0 && dfs(dfs, v)) break;
  return found;
}

struct FiltrationOrder {
  /// Node ids, greatest first.
  std::vector<int> sequence;
  std::vector<std::vector<int>> subgraphs;
  /// i_0 > i_1 > ... > i_t: rank of the max-pressure node of each subgraph.
  std::vector<int> indices;
  /// id -> rank; the first node of the sequence has rank n.
  std::map<int, int> rank;

  int t() const noexcept { return static_cast<int>(indices.size()) - 1; }
  std::string sequence_string() const { return join_ids(sequence, ">"); }
};

inline constexpr double kPressureTieTolerance = 1e-12;

/// Repeatedly takes the remaining node of maximal pressure together with
/// every remaining node that reaches it, orders that subgraph as a linear
/// extension of >> (ties between incomparable nodes go to higher pressure)
/// and appends it to the sequence.
inline FiltrationOrder filtration_order(const ConnectionGraph& g) {
  if (auto cyc = detect_cycles(g)) throw CycleError(*cyc);
  const detail::Adjacency adj(g);
  const int n = static_cast<int>(adj.ids.size());
  if (n == 0) throw ConfigError("E_GRAPH", "empty connection graph");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(adj.pressure[i] - adj.pressure[j]) <= kPressureTieTolerance)
        throw ConfigError("E_PRESSURE_TIE", "HG2 violated: nodes " + std::to_string(adj.ids[i]) + " and " +
                                                std::to_string(adj.ids[j]) + " have equal pressure");

  // reach[v][s]: v reaches s along >> edges
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (int v = 0; v < n; ++v) {
    std::vector<int> stack{v};
    std::vector<char> seen(n, 0);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int w : adj.out[u]) {
        if (seen[w]) continue;
        seen[w] = 1;
        reach[v][w] = 1;
        stack.push_back(w);
      }
    }
  }

  FiltrationOrder ord;
  std::vector<char> placed(n, 0);
  std::vector<int> selected;
  int remaining = n;
  while (remaining > 0) {
    int s = -1;
    for (int v = 0; v < n; ++v)
      if (!placed[v] && (s < 0 || adj.pressure[v] > adj.pressure[s])) s = v;
    std::vector<char> in(n, 0);
    for (int v = 0; v < n; ++v)
      if (!placed[v] && (v == s || reach[v][s])) in[v] = 1;

    // Kahn's algorithm inside the subgraph, highest pressure first among ready nodes
    std::vector<int> indeg(n, 0);
    for (int v = 0; v < n; ++v)
      if (in[v])
        for (int w : adj.out[v])
          if (in[w]) ++indeg[w];
    std::vector<int> ready;
    for (int v = 0; v < n; ++v)
      if (in[v] && indeg[v] == 0) ready.push_back(v);
    std::vector<int> sub;
    while (!ready.empty()) {
      auto best = std::max_element(ready.begin(), ready.end(),
                                   [&](int l, int r) { return adj.pressure[l] < adj.pressure[r]; });
      const int v = *best;
      ready.erase(best);
      sub.push_back(adj.ids[v]);
      placed[v] = 1;
      --remaining;
      for (int w : adj.out[v])
        if (in[w] && --indeg[w] == 0) ready.push_back(w);
    }
    ord.sequence.insert(ord.sequence.end(), sub.begin(), sub.end());
    ord.subgraphs.push_back(std::move(sub));
    selected.push_back(adj.ids[s]);
  }
  for (int k = 0; k < n; ++k) ord.rank[ord.sequence[k]] = n - k;
  for (int id : selected) ord.indices.push_back(ord.rank[id]);
  return ord;
}

/// k with i_k <= j < i_{k-1}, where i_{-1} = n + 1.
inline int assign_basin(const FiltrationOrder& order, int j) {
  const int n = static_cast<int>(order.sequence.size());
  if (j < 1 || j > n) throw ConfigError("E_PARAMETER", "rank " + std::to_string(j) + " out of range");
  int upper = n + 1;
  for (int k = 0; k < static_cast<int>(order.indices.size()); ++k) {
    if (order.indices[k] <= j && j < upper) return k;
    upper = order.indices[k];
  }
  throw ConfigError("E_PARAMETER", "rank " + std::to_string(j) + " lies below every stratum");
}

struct StratumSolve {
  int rank = 0;
  bool present = false;
  std::string note;
  SpectralTriple triple;
};

struct StratifiedReport {
  double lambda_global = 0.0;
  double lambda_max_restricted = 0.0;
  bool consistent = false;
  std::vector<StratumSolve> strata;
  SpectralTriple global;
};

/// Restricts the global matrix to each stratum's cells and solves each
/// restricted problem; the global eigenvalue must be the largest restricted one.
inline StratifiedReport stratified_qem_workflow(const AnnealedMatrix& global, const FiltrationOrder& order,
                                                const std::map<int, std::vector<int>>& strata,
                                                const SolverOptions& opt = {}, double tolerance = 1e-8) {
  std::vector<int> owner(global.n_cells(), -1);
  for (const auto& [rank, cells] : strata) {
    if (rank < 1 || rank > static_cast<int>(order.sequence.size()))
      throw ConfigError("E_STRATA", "stratum rank " + std::to_string(rank) + " out of range");
    for (int c : cells) {
      if (c < 0 || c >= global.n_cells()) throw ConfigError("E_STRATA", "stratum cell out of range");
      if (owner[c] >= 0) throw ConfigError("E_STRATA", "strata overlap at cell " + std::to_string(c));
      owner[c] = rank;
    }
  }
  for (int c = 0; c < global.n_cells(); ++c)
    if (global.row_weight()[c] > 0.0 && owner[c] < 0)
      throw ConfigError("E_STRATA", "strata do not cover surviving cell " + std::to_string(c));

  StratifiedReport rep;
  rep.global = solve_spectrum(global, opt, false);
  rep.lambda_global = rep.global.lambda;
  for (auto it = strata.rbegin(); it != strata.rend(); ++it) {
    StratumSolve s;
    s.rank = it->first;
    try {
      const AnnealedMatrix sub = restrict_operator(global, it->second);
      s.triple = solve_spectrum(sub, opt, false);
      s.present = true;
      rep.lambda_max_restricted = std::max(rep.lambda_max_restricted, s.triple.lambda);
    } catch (const NumericalError& e) {
      s.note = e.what();
    }
    rep.strata.push_back(std::move(s));
  }
  rep.consistent = std::abs(rep.lambda_global - rep.lambda_max_restricted) <= tolerance * rep.lambda_global;
  return rep;
}

}  // namespace qemlab
