#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qemlab/conditioned_mc.hpp"
#include "qemlab/dynamics.hpp"
#include "qemlab/error.hpp"
#include "qemlab/filtration.hpp"
#include "qemlab/geometry.hpp"

namespace qemlab {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct CutoffConfig {
  std::vector<Box> boxes;
  double layer = 0.0;
  std::vector<Box> keep;
};

struct WeightConfig {
  std::string kind = "zero";  // zero | constant | table
  double value = 0.0;
  std::vector<Box> boxes;
  std::vector<double> values;
  double fallback = 0.0;
  std::optional<CutoffConfig> cutoff;
};

struct RegionConfig {
  std::vector<Box> boxes;
  std::string label;
};

struct McConfig {
  long n = 1000;
  long n_particles = 1000;
  double resample_threshold = 0.5;
  std::vector<std::string> observables{"x"};
  std::optional<Point> start;  // empty: uniform on the region
  int blocks = 10;
};

struct FiltrationNodeConfig {
  int id = 0;
  double pressure = 0.0;
  std::vector<Box> boxes;
};

struct FiltrationConfig {
  std::vector<FiltrationNodeConfig> nodes;
  std::vector<std::pair<int, int>> edges;
};

struct OutputConfig {
  std::string dir = "out";
  std::string format = "csv";
  std::string export_matrix = "none";  // none | text | binary
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string system = "ternary_hole";
  double amplitude = 0.03;
  WeightConfig weight;
  std::optional<RegionConfig> region;
  int resolution = 243;
  std::vector<double> epsilons{0.0};
  int samples_per_cell = 16;
  double tol = 1e-10;
  long max_iters = 100000;
  McConfig mc;
  std::optional<FiltrationConfig> filtration;
  int reference_depth = 7;
  int dictionary_k = 8;
  std::uint64_t seed = 0;
  OutputConfig outputs;
};

namespace detail {

inline json box_to_json(const Box& b) {
  if (b.dim == 1) return json::array({b.lo[0], b.hi[0]});
  return json::array({b.lo[0], b.hi[0], b.lo[1], b.hi[1]});
}

inline Box box_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("E_GEOMETRY", "box must be an array");
  if (j.size() == 2) return Box::interval(j[0].get<double>(), j[1].get<double>());
  if (j.size() == 4) return Box::rect(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
  throw ConfigError("E_GEOMETRY", "box must have 2 or 4 coordinates");
}

inline json boxes_to_json(const std::vector<Box>& bs) {
  json a = json::array();
  for (const auto& b : bs) a.push_back(box_to_json(b));
  return a;
}

inline std::vector<Box> boxes_from_json(const json& j) {
  std::vector<Box> out;
  for (const auto& b : j) out.push_back(box_from_json(b));
  return out;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace detail

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["system"] = {{"builtin", c.system}, {"amplitude", c.amplitude}};
  json w = {{"kind", c.weight.kind}};
  if (c.weight.kind == "constant") w["value"] = c.weight.value;
  if (c.weight.kind == "table") {
    w["boxes"] = detail::boxes_to_json(c.weight.boxes);
    w["values"] = c.weight.values;
    w["fallback"] = c.weight.fallback;
  }
  if (c.weight.cutoff) {
    w["cutoff"] = {{"boxes", detail::boxes_to_json(c.weight.cutoff->boxes)},
                   {"layer", c.weight.cutoff->layer},
                   {"keep", detail::boxes_to_json(c.weight.cutoff->keep)}};
  }
  j["weight"] = w;
  if (c.region)
    j["region"] = {{"boxes", detail::boxes_to_json(c.region->boxes)}, {"label", c.region->label}};
  else
    j["region"] = nullptr;
  j["grid"] = {{"resolution", c.resolution}, {"samples_per_cell", c.samples_per_cell}};
  j["noise"] = {{"epsilons", c.epsilons}};
  j["solver"] = {{"tol", c.tol}, {"max_iters", c.max_iters}};
  json mc = {{"n", c.mc.n},
             {"n_particles", c.mc.n_particles},
             {"resample_threshold", c.mc.resample_threshold},
             {"observables", c.mc.observables},
             {"blocks", c.mc.blocks}};
  if (c.mc.start)
    mc["start"] = json::array({(*c.mc.start)[0], (*c.mc.start)[1]});
  else
    mc["start"] = "uniform";
  j["mc"] = mc;
  if (c.filtration) {
    json nodes = json::array();
    for (const auto& n : c.filtration->nodes) {
      json nj = {{"id", n.id}, {"pressure", n.pressure}};
      if (!n.boxes.empty()) nj["boxes"] = detail::boxes_to_json(n.boxes);
      nodes.push_back(nj);
    }
    json edges = json::array();
    for (const auto& [a, b] : c.filtration->edges) edges.push_back(json::array({a, b}));
    j["filtration"] = {{"nodes", nodes}, {"edges", edges}};
  } else {
    j["filtration"] = nullptr;
  }
  j["reference"] = {{"depth", c.reference_depth}, {"dictionary_k", c.dictionary_k}};
  j["seed"] = c.seed;
  j["outputs"] = {{"dir", c.outputs.dir}, {"format", c.outputs.format}, {"export_matrix", c.outputs.export_matrix}};
  return j;
}

/// Parses and validates. Every rejection carries a diagnostic code.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.schema_version = detail::get_or(j, "schema_version", 0);
    if (c.schema_version != kSchemaVersion)
      throw ConfigError("E_SCHEMA", "unsupported schema_version " + std::to_string(c.schema_version));
    if (j.contains("system")) {
      const auto& s = j.at("system");
      if (s.is_string()) {
        c.system = s.get<std::string>();
      } else {
        c.system = s.at("builtin").get<std::string>();
        c.amplitude = detail::get_or(s, "amplitude", c.amplitude);
      }
    }
    if (j.contains("weight")) {
      const auto& w = j.at("weight");
      c.weight.kind = detail::get_or<std::string>(w, "kind", "zero");
      if (c.weight.kind == "constant") {
        c.weight.value = w.at("value").get<double>();
      } else if (c.weight.kind == "table") {
        c.weight.boxes = detail::boxes_from_json(w.at("boxes"));
        c.weight.values = w.at("values").get<std::vector<double>>();
        c.weight.fallback = detail::get_or(w, "fallback", 0.0);
        if (c.weight.boxes.size() != c.weight.values.size())
          throw ConfigError("E_WEIGHT", "weight table boxes and values differ in length");
      } else if (c.weight.kind != "zero") {
        throw ConfigError("E_WEIGHT", "unknown weight kind '" + c.weight.kind + "'");
      }
      if (w.contains("cutoff") && !w.at("cutoff").is_null()) {
        const auto& cj = w.at("cutoff");
        CutoffConfig cc;
        cc.boxes = detail::boxes_from_json(cj.at("boxes"));
        cc.layer = cj.at("layer").get<double>();
        if (cj.contains("keep")) cc.keep = detail::boxes_from_json(cj.at("keep"));
        if (!(cc.layer > 0.0)) throw ConfigError("E_WEIGHT", "cutoff layer must be positive");
        c.weight.cutoff = cc;
      }
    }
    if (j.contains("region") && !j.at("region").is_null()) {
      RegionConfig r;
      r.boxes = detail::boxes_from_json(j.at("region").at("boxes"));
      r.label = detail::get_or<std::string>(j.at("region"), "label", "custom");
      c.region = r;
    }
    if (j.contains("grid")) {
      c.resolution = detail::get_or(j.at("grid"), "resolution", c.resolution);
      c.samples_per_cell = detail::get_or(j.at("grid"), "samples_per_cell", c.samples_per_cell);
    }
    if (j.contains("noise")) {
      const auto& nz = j.at("noise");
      if (nz.contains("epsilons"))
        c.epsilons = nz.at("epsilons").get<std::vector<double>>();
      else if (nz.contains("epsilon"))
        c.epsilons = {nz.at("epsilon").get<double>()};
    }
    if (j.contains("solver")) {
      c.tol = detail::get_or(j.at("solver"), "tol", c.tol);
      c.max_iters = detail::get_or(j.at("solver"), "max_iters", c.max_iters);
    }
    if (j.contains("mc")) {
      const auto& m = j.at("mc");
      c.mc.n = detail::get_or(m, "n", c.mc.n);
      c.mc.n_particles = detail::get_or(m, "n_particles", c.mc.n_particles);
      c.mc.resample_threshold = detail::get_or(m, "resample_threshold", c.mc.resample_threshold);
      if (m.contains("observables")) c.mc.observables = m.at("observables").get<std::vector<std::string>>();
      c.mc.blocks = detail::get_or(m, "blocks", c.mc.blocks);
      if (m.contains("start") && m.at("start").is_array()) {
        const auto& s = m.at("start");
        Point p{s.at(0).get<double>(), s.size() > 1 ? s.at(1).get<double>() : 0.0};
        c.mc.start = p;
      }
    }
    if (j.contains("filtration") && !j.at("filtration").is_null()) {
      FiltrationConfig f;
      for (const auto& n : j.at("filtration").at("nodes")) {
        FiltrationNodeConfig nc;
        nc.id = n.at("id").get<int>();
        nc.pressure = n.at("pressure").get<double>();
        if (n.contains("boxes")) nc.boxes = detail::boxes_from_json(n.at("boxes"));
        f.nodes.push_back(nc);
      }
      for (const auto& e : j.at("filtration").at("edges")) f.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      c.filtration = f;
    }
    if (j.contains("reference")) {
      c.reference_depth = detail::get_or(j.at("reference"), "depth", c.reference_depth);
      c.dictionary_k = detail::get_or(j.at("reference"), "dictionary_k", c.dictionary_k);
    }
    c.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("outputs")) {
      const auto& o = j.at("outputs");
      c.outputs.dir = detail::get_or(o, "dir", c.outputs.dir);
      c.outputs.format = detail::get_or(o, "format", c.outputs.format);
      c.outputs.export_matrix = detail::get_or(o, "export_matrix", c.outputs.export_matrix);
    }
  } catch (const json::exception& e) {
    throw ConfigError("E_CONFIG", std::string("malformed config: ") + e.what());
  }

  // validation
  if (c.resolution < 1) throw ConfigError("E_RESOLUTION", "grid resolution must be >= 1");
  if (c.samples_per_cell < 1) throw ConfigError("E_SAMPLES", "samples_per_cell must be >= 1");
  if (c.epsilons.empty()) throw ConfigError("E_EPSILON_MISSING", "no epsilon given");
  for (double e : c.epsilons)
    if (!(e >= 0.0)) throw ConfigError("E_EPSILON_NEGATIVE", "epsilon must be >= 0");
  if (!(c.tol > 0.0) || c.max_iters < 1) throw ConfigError("E_PARAMETER", "solver tol and max_iters must be positive");
  if (c.outputs.format != "csv" && c.outputs.format != "json")
    throw ConfigError("E_FORMAT", "format must be csv or json");
  if (c.outputs.export_matrix != "none" && c.outputs.export_matrix != "text" && c.outputs.export_matrix != "binary")
    throw ConfigError("E_FORMAT", "export_matrix must be none, text or binary");
  make_builtin(c.system, c.amplitude);  // throws E_UNKNOWN_LABEL
  if (c.reference_depth < 1) throw ConfigError("E_PARAMETER", "reference depth must be >= 1");
  if (c.dictionary_k < 1) throw ConfigError("E_PARAMETER", "dictionary_k must be >= 1");
  if (c.filtration) {
    ConnectionGraph g;
    for (const auto& n : c.filtration->nodes) g.nodes.push_back({n.id, n.pressure});
    g.edges = c.filtration->edges;
    filtration_order(g);  // rejects cycles and pressure ties
  }
  return c;
}

inline std::string serialize(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("E_CONFIG", std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("E_CONFIG", "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Named observables usable in configs.
inline Observable observable_by_name(const std::string& name) {
  if (name == "one") return [](const Point&) { return 1.0; };
  if (name == "x") return [](const Point& p) { return p[0]; };
  if (name == "y") return [](const Point& p) { return p[1]; };
  if (name == "x2") return [](const Point& p) { return p[0] * p[0]; };
  if (name == "y2") return [](const Point& p) { return p[1] * p[1]; };
  if (name == "cos2pix") return [](const Point& p) { return std::cos(2.0 * std::numbers::pi * p[0]); };
  if (name == "sin2pix") return [](const Point& p) { return std::sin(2.0 * std::numbers::pi * p[0]); };
  throw ConfigError("E_UNKNOWN_LABEL", "unknown observable '" + name + "'");
}

inline WeightField build_weight(const WeightConfig& wc, const MapSystem& map) {
  WeightField w;
  if (wc.kind == "constant")
    w = WeightField::constant(wc.value);
  else if (wc.kind == "table")
    w = WeightField::table(wc.boxes, wc.values, wc.fallback);
  else
    w = WeightField::zero();
  if (wc.cutoff) {
    SupportCutoff cut;
    cut.boxes = wc.cutoff->boxes;
    cut.layer = wc.cutoff->layer;
    cut.keep = wc.cutoff->keep;
    for (int a = 0; a < map.dim; ++a)
      if (map.domain.periodic[a] && map.domain.boxes.size() == 1) cut.period[a] = map.domain.boxes[0].extent(a);
    w = w.with_cutoff(cut);
  }
  return w;
}

}  // namespace qemlab
