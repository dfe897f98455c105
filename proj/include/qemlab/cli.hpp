#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qemlab/conditioned_mc.hpp"
#include "qemlab/config.hpp"
#include "qemlab/dynamics.hpp"
#include "qemlab/equilibrium.hpp"
#include "qemlab/filtration.hpp"
#include "qemlab/grid.hpp"
#include "qemlab/io.hpp"
#include "qemlab/parallel.hpp"
#include "qemlab/spectral.hpp"
#include "qemlab/ulam.hpp"

namespace qemlab {

/// Command line overrides applied on top of the config file.
struct RunOptions {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
  int threads = 1;
};

inline ExperimentConfig apply_overrides(ExperimentConfig c, const RunOptions& o) {
  if (o.out) c.outputs.dir = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.format) {
    if (*o.format != "csv" && *o.format != "json") throw ConfigError("E_FORMAT", "format must be csv or json");
    c.outputs.format = *o.format;
  }
  if (o.threads < 1) throw ConfigError("E_PARAMETER", "threads must be >= 1");
  return c;
}

/// Everything the commands share once a config has been resolved.
struct Experiment {
  ExperimentConfig config;
  BuiltinSystem system;
  RegionSpec region;
  GridPartition grid;
  WeightField weight;

  explicit Experiment(const ExperimentConfig& c)
      : config(c),
        system(make_builtin(c.system, c.amplitude)),
        region(c.region ? RegionSpec(c.region->boxes, c.region->label) : system.survival),
        grid(system.map.domain.boxes, c.resolution),
        weight(build_weight(c.weight, system.map)) {
    if (region.dim() != system.map.dim) throw ConfigError("E_GEOMETRY", "region dimension does not match the system");
  }

  NoiseModel noise(double eps) const { return system.noise(eps); }

  SolverOptions solver(std::uint64_t stream = 0) const {
    SolverOptions s;
    s.tol = config.tol;
    s.max_iters = config.max_iters;
    s.seed = derive_seed(config.seed, stream);
    return s;
  }

  AnnealedMatrix assemble(double eps, int threads) const {
    AssemblyOptions a;
    a.samples_per_cell = config.samples_per_cell;
    a.seed = config.seed;
    a.threads = threads;
    return assemble_operator(system.map, noise(eps), weight, region, grid, a);
  }
};

namespace detail {

inline nlohmann::ordered_json triple_json(const ExperimentConfig& c, const GridPartition& g, double eps,
                                          const SpectralTriple& t) {
  nlohmann::ordered_json j;
  j["system"] = c.system;
  j["epsilon"] = eps;
  j["resolution"] = c.resolution;
  j["n_cells"] = g.n_cells();
  j["lambda"] = t.lambda;
  j["lambda_left"] = t.lambda_left;
  j["pairing"] = t.pairing;
  j["right_residual"] = t.right_residual;
  j["left_residual"] = t.left_residual;
  j["gap_ratio"] = t.gap_ratio;
  j["gap_converged"] = t.gap_converged;
  j["iterations"] = t.iterations;
  j["seed"] = c.seed;
  return j;
}

inline nlohmann::ordered_json vectors_json(const GridPartition& g, const SpectralTriple& t) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json x = nlohmann::ordered_json::array(), y = nlohmann::ordered_json::array();
  for (int i = 0; i < g.n_cells(); ++i) {
    x.push_back(g.center(i)[0]);
    if (g.dim() == 2) y.push_back(g.center(i)[1]);
  }
  j["x"] = x;
  if (g.dim() == 2) j["y"] = y;
  j["right"] = t.right;
  j["left"] = t.left;
  j["qem"] = t.qem;
  return j;
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

inline void export_matrix(const ExperimentConfig& c, const AnnealedMatrix& m, const std::filesystem::path& stem) {
  if (c.outputs.export_matrix == "text") write_file(stem.string() + ".txt", matrix_to_text(m));
  if (c.outputs.export_matrix == "binary") write_file(stem.string() + ".bin", matrix_to_binary(m));
}

inline std::string suffix(std::size_t k, std::size_t total) {
  return total == 1 ? std::string() : "_" + std::to_string(k);
}

}  // namespace detail

/// Oracle measure on the experiment grid, when the system has one: the
/// depth-d equilibrium cylinder projection for the Markov interval maps and
/// its product with itself for the baker. Empty otherwise.
inline std::vector<double> reference_measure(const Experiment& ex) {
  const auto& c = ex.config;
  if (c.weight.kind == "table") return {};
  if (c.region) return {};
  if (c.system == "ternary_hole" || c.system == "five_hole") {
    const MarkovModel m = c.system == "ternary_hole" ? ternary_model() : five_model();
    return equilibrium_cylinder_measure(m, c.reference_depth).project(ex.grid);
  }
  if (c.system == "open_baker") {
    const GridPartition line({Box::interval(0.0, 1.0)}, c.resolution);
    const auto p = equilibrium_cylinder_measure(ternary_model(), c.reference_depth).project(line);
    std::vector<double> out(ex.grid.n_cells());
    for (int i = 0; i < ex.grid.n_cells(); ++i) {
      const auto cc = ex.grid.coord(i);
      out[i] = p[cc.ix] * p[cc.iy];
    }
    return out;
  }
  return {};
}

// ---------------------------------------------------------------------------
// spectrum

inline int cmd_spectrum(const ExperimentConfig& cfg, int threads, std::ostream& log = std::cerr) {
  const Experiment ex(cfg);
  const std::filesystem::path dir = cfg.outputs.dir;
  const std::size_t n_eps = cfg.epsilons.size();
  for (std::size_t k = 0; k < n_eps; ++k) {
    const double eps = cfg.epsilons[k];
    const AnnealedMatrix m = ex.assemble(eps, threads);
    const SpectralTriple t = solve_spectrum(m, ex.solver(k));
    const std::string sfx = detail::suffix(k, n_eps);
    write_file(dir / ("spectrum" + sfx + ".json"), detail::dump(detail::triple_json(cfg, ex.grid, eps, t)));
    if (cfg.outputs.format == "csv")
      write_file(dir / ("vectors" + sfx + ".csv"), spectrum_csv(ex.grid, t));
    else
      write_file(dir / ("vectors" + sfx + ".json"), detail::dump(detail::vectors_json(ex.grid, t)));
    detail::export_matrix(cfg, m, dir / ("matrix" + sfx));
    log << "epsilon " << fmt(eps) << "  lambda " << fmt(t.lambda) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// mc

inline int cmd_mc(const ExperimentConfig& cfg, int threads, std::ostream& log = std::cerr) {
  const Experiment ex(cfg);
  if (cfg.epsilons.size() != 1) throw ConfigError("E_EPSILON_MISSING", "mc takes exactly one epsilon");
  const double eps = cfg.epsilons.front();
  std::vector<Observable> obs;
  for (const auto& name : cfg.mc.observables) obs.push_back(observable_by_name(name));
  McOptions o;
  o.n = cfg.mc.n;
  o.n_particles = cfg.mc.n_particles;
  o.resample_threshold = cfg.mc.resample_threshold;
  o.seed = cfg.seed;
  o.blocks = cfg.mc.blocks;
  o.threads = threads;
  StartSpec start = UniformOnRegion{};
  if (cfg.mc.start) start = *cfg.mc.start;
  const EnsembleStats st = run_conditioned(ex.system.map, ex.noise(eps), ex.weight, ex.region, start, obs, o);

  const std::filesystem::path dir = cfg.outputs.dir;
  std::optional<double> rate;
  try {
    rate = escape_rate_mc(st);
  } catch (const ConfigError&) {
  }
  nlohmann::ordered_json j;
  j["system"] = cfg.system;
  j["epsilon"] = eps;
  j["n"] = st.n;
  j["n_particles"] = cfg.mc.n_particles;
  j["blocks"] = cfg.mc.blocks;
  j["observables"] = cfg.mc.observables;
  j["conditioned_average"] = st.conditioned_average;
  j["standard_error"] = st.standard_error;
  j["survival_fraction"] = st.survival_fraction;
  j["resample_events"] = st.resample_events;
  if (rate) {
    j["escape_rate"] = *rate;
    j["lambda_mc"] = std::exp(-*rate);
  }
  j["seed"] = cfg.seed;
  write_file(dir / "mc.json", detail::dump(j));
  if (cfg.outputs.format == "csv") {
    std::string s = "observable,conditioned_average,standard_error\n";
    for (std::size_t k = 0; k < obs.size(); ++k)
      s += cfg.mc.observables[k] + "," + fmt(st.conditioned_average[k]) + "," + fmt(st.standard_error[k]) + "\n";
    write_file(dir / "mc.csv", s);
  }
  std::vector<double> t(st.log_mass.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  write_file(dir / "log_mass.dat", series_dat(t, st.log_mass));
  for (std::size_t k = 0; k < obs.size(); ++k)
    log << cfg.mc.observables[k] << "  " << fmt(st.conditioned_average[k]) << " +- " << fmt(st.standard_error[k])
        << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
  double epsilon = 0.0;
  double lambda = 0.0;
  double gap_ratio = 0.0;
  double discrepancy = std::numeric_limits<double>::quiet_NaN();
  double w1 = std::numeric_limits<double>::quiet_NaN();
  double runtime = 0.0;
  bool ok = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool complete = true;
};

inline SweepResult run_sweep(const Experiment& ex, int threads, std::vector<SpectralTriple>* triples = nullptr) {
  const auto& cfg = ex.config;
  if (cfg.epsilons.size() < 2) throw ConfigError("E_EPSILON_MISSING", "a sweep needs at least two epsilons");
  std::vector<double> eps = cfg.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  if (std::adjacent_find(eps.begin(), eps.end()) != eps.end())
    throw ConfigError("E_PARAMETER", "duplicate epsilon in sweep");

  const std::vector<double> ref = reference_measure(ex);
  const TestDictionary dict{cfg.dictionary_k, ex.grid.dim()};
  SweepResult res;
  res.rows.resize(eps.size());
  std::vector<SpectralTriple> tr(eps.size());
  // one worker slot per epsilon; assembly inside a slot stays serial
  parallel_for(static_cast<long>(eps.size()), threads, [&](long k) {
    SweepRow& row = res.rows[k];
    row.epsilon = eps[k];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const AnnealedMatrix m = ex.assemble(eps[k], 1);
      tr[k] = solve_spectrum(m, ex.solver(k));
      row.lambda = tr[k].lambda;
      row.gap_ratio = tr[k].gap_ratio;
      if (!ref.empty()) {
        row.discrepancy = weak_star_discrepancy(tr[k].qem, ref, dict, ex.grid);
        if (ex.grid.dim() == 1) row.w1 = w1_1d(tr[k].qem, ref, ex.grid);
      }
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  for (const auto& r : res.rows)
    if (!r.ok) res.complete = false;
  if (triples) *triples = std::move(tr);
  return res;
}

inline int cmd_sweep(const ExperimentConfig& cfg, int threads, std::ostream& log = std::cerr) {
  const Experiment ex(cfg);
  std::vector<SpectralTriple> tr;
  const SweepResult res = run_sweep(ex, threads, &tr);
  const std::filesystem::path dir = cfg.outputs.dir;

  std::string table = "epsilon,lambda,gap_ratio,discrepancy,w1,status\n";
  std::string timing = "epsilon,runtime_s\n";
  std::vector<double> xs, lam, disc;
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    const auto& r = res.rows[k];
    table += fmt(r.epsilon) + ",";
    if (r.ok) {
      table += fmt(r.lambda) + "," + fmt(r.gap_ratio) + "," + fmt(r.discrepancy) + "," + fmt(r.w1) + ",ok\n";
      xs.push_back(r.epsilon);
      lam.push_back(r.lambda);
      disc.push_back(r.discrepancy);
      write_file(dir / ("qem_eps_" + std::to_string(k) + ".csv"), qem_csv(ex.grid, tr[k].qem));
    } else {
      table += "nan,nan,nan,nan,failed\n";
    }
    timing += fmt(r.epsilon) + "," + fmt(r.runtime) + "\n";
  }
  if (!res.complete) table = "# partial: one or more epsilon points failed\n" + table;
  write_file(dir / "sweep.csv", table);
  write_file(dir / "sweep_timing.csv", timing);
  write_file(dir / "lambda_vs_eps.dat", series_dat(xs, lam));
  write_file(dir / "discrepancy_vs_eps.dat", series_dat(xs, disc));
  for (const auto& r : res.rows) {
    log << "epsilon " << fmt(r.epsilon);
    if (r.ok)
      log << "  lambda " << fmt(r.lambda) << "  discrepancy " << fmt(r.discrepancy) << "\n";
    else
      log << "  FAILED: " << r.error << "\n";
  }
  if (!res.complete) {
    for (const auto& r : res.rows)
      if (!r.ok) throw NumericalError("sweep incomplete, partial results written: " + r.error);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// filtration

inline ConnectionGraph graph_of(const FiltrationConfig& f) {
  ConnectionGraph g;
  for (const auto& n : f.nodes) g.nodes.push_back({n.id, n.pressure});
  g.edges = f.edges;
  return g;
}

inline nlohmann::ordered_json order_json(const FiltrationOrder& o) {
  nlohmann::ordered_json j;
  j["sequence"] = o.sequence;
  j["sequence_string"] = o.sequence_string();
  j["subgraphs"] = o.subgraphs;
  j["indices"] = o.indices;
  j["t"] = o.t();
  nlohmann::ordered_json rank = nlohmann::ordered_json::object();
  for (const auto& [id, r] : o.rank) rank[std::to_string(id)] = r;
  j["rank"] = rank;
  return j;
}

inline int cmd_filtration(const ExperimentConfig& cfg, int threads, std::ostream& log = std::cerr) {
  if (!cfg.filtration) throw ConfigError("E_GRAPH", "config has no filtration graph");
  const ConnectionGraph g = graph_of(*cfg.filtration);
  const FiltrationOrder order = filtration_order(g);
  const std::filesystem::path dir = cfg.outputs.dir;
  nlohmann::ordered_json j = order_json(order);

  bool with_strata = false;
  for (const auto& n : cfg.filtration->nodes)
    if (!n.boxes.empty()) with_strata = true;
  if (with_strata) {
    const Experiment ex(cfg);
    const double eps = cfg.epsilons.front();
    const AnnealedMatrix m = ex.assemble(eps, threads);
    std::map<int, std::vector<int>> strata;
    for (const auto& n : cfg.filtration->nodes) {
      if (n.boxes.empty()) continue;
      std::vector<int> cells;
      for (int c : ex.grid.cells_in(RegionSpec(n.boxes, "node")))
        if (m.row_weight()[c] > 0.0) cells.push_back(c);
      strata[order.rank.at(n.id)] = cells;
    }
    const StratifiedReport rep = stratified_qem_workflow(m, order, strata, ex.solver());
    std::map<int, int> id_of;
    for (const auto& [id, r] : order.rank) id_of[r] = id;
    nlohmann::ordered_json s;
    s["epsilon"] = eps;
    s["lambda_global"] = rep.lambda_global;
    s["lambda_max_restricted"] = rep.lambda_max_restricted;
    s["consistent"] = rep.consistent;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& st : rep.strata) {
      nlohmann::ordered_json e;
      e["rank"] = st.rank;
      e["id"] = id_of[st.rank];
      e["basin"] = assign_basin(order, st.rank);
      e["present"] = st.present;
      if (st.present)
        e["lambda"] = st.triple.lambda;
      else
        e["note"] = st.note;
      list.push_back(e);
    }
    s["strata"] = list;
    j["stratified"] = s;
    log << "lambda_global " << fmt(rep.lambda_global) << "  max restricted " << fmt(rep.lambda_max_restricted)
        << (rep.consistent ? "  consistent\n" : "  INCONSISTENT\n");
  }
  write_file(dir / "filtration.json", detail::dump(j));
  write_file(dir / "sequence.txt", order.sequence_string() + "\n");
  log << order.sequence_string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compare

struct Comparison {
  double discrepancy = 0.0;
  std::optional<double> w1;
};

/// Both measures are atoms at the listed centers; they need not share a grid.
inline Comparison compare_measures(const CellMeasure& a, const CellMeasure& b, int K) {
  if (a.dim != b.dim) throw ConfigError("E_DIMENSION", "measures of different dimension");
  if (K < 1) throw ConfigError("E_PARAMETER", "dictionary size must be >= 1");
  const TestDictionary dict{K, a.dim};
  // signed atoms, merged on shared centers
  std::map<std::pair<double, double>, double> atoms;
  for (std::size_t i = 0; i < a.mass.size(); ++i) atoms[{a.centers[i][0], a.centers[i][1]}] += a.mass[i];
  for (std::size_t i = 0; i < b.mass.size(); ++i) atoms[{b.centers[i][0], b.centers[i][1]}] -= b.mass[i];
  Comparison c;
  for (int f = 0; f < dict.size(); ++f) {
    double s = 0.0;
    for (const auto& [x, m] : atoms) s += m * dict.eval(f, Point{x.first, x.second});
    c.discrepancy = std::max(c.discrepancy, std::abs(s));
  }
  if (a.dim == 1 && !atoms.empty()) {
    double cdf = 0.0, w = 0.0;
    for (auto it = atoms.begin(); std::next(it) != atoms.end(); ++it) {
      cdf += it->second;
      w += std::abs(cdf) * (std::next(it)->first.first - it->first.first);
    }
    c.w1 = w;
  }
  return c;
}

inline int cmd_compare(const std::string& path_a, const std::string& path_b, int K, std::ostream& out = std::cout) {
  const Comparison c = compare_measures(read_qem_csv(read_file(path_a)), read_qem_csv(read_file(path_b)), K);
  out << "weak_star_discrepancy " << fmt(c.discrepancy) << "\n";
  if (c.w1) out << "w1 " << fmt(*c.w1) << "\n";
  return 0;
}

}  // namespace qemlab
