#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "qemlab/error.hpp"
#include "qemlab/grid.hpp"
#include "qemlab/spectral.hpp"
#include "qemlab/ulam.hpp"

namespace qemlab {

/// Round-trip decimal form of a double.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("E_IO", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// cell, x[, y], right, left, qem
inline std::string spectrum_csv(const GridPartition& grid, const SpectralTriple& t) {
  std::string s = grid.dim() == 1 ? "cell,x,right,left,qem\n" : "cell,x,y,right,left,qem\n";
  for (int i = 0; i < grid.n_cells(); ++i) {
    const Point c = grid.center(i);
    s += std::to_string(i) + "," + fmt(c[0]);
    if (grid.dim() == 2) s += "," + fmt(c[1]);
    s += "," + fmt(t.right[i]) + "," + fmt(t.left[i]) + "," + fmt(t.qem[i]) + "\n";
  }
  return s;
}

inline std::string qem_csv(const GridPartition& grid, const std::vector<double>& q) {
  std::string s = grid.dim() == 1 ? "cell,x,qem\n" : "cell,x,y,qem\n";
  for (int i = 0; i < grid.n_cells(); ++i) {
    const Point c = grid.center(i);
    s += std::to_string(i) + "," + fmt(c[0]);
    if (grid.dim() == 2) s += "," + fmt(c[1]);
    s += "," + fmt(q[i]) + "\n";
  }
  return s;
}

/// Plain "x y" lines for plotting.
inline std::string series_dat(const std::vector<double>& x, const std::vector<double>& y) {
  std::string s;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) s += fmt(x[i]) + " " + fmt(y[i]) + "\n";
  return s;
}

/// A measure on cell centers read back from a qem CSV.
struct CellMeasure {
  int dim = 1;
  std::vector<Point> centers;
  std::vector<double> mass;
};

inline CellMeasure read_qem_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("E_IO", "empty qem CSV");
  std::vector<std::string> head;
  {
    std::stringstream hs(line);
    std::string f;
    while (std::getline(hs, f, ',')) head.push_back(f);
  }
  auto col = [&](const std::string& name) {
    for (std::size_t k = 0; k < head.size(); ++k)
      if (head[k] == name) return static_cast<int>(k);
    return -1;
  };
  const int cx = col("x"), cy = col("y"), cq = col("qem");
  if (cx < 0 || cq < 0) throw ConfigError("E_IO", "qem CSV needs x and qem columns");
  CellMeasure m;
  m.dim = cy >= 0 ? 2 : 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string v;
    while (std::getline(ls, v, ',')) f.push_back(v);
    if (static_cast<int>(f.size()) != static_cast<int>(head.size())) throw ConfigError("E_IO", "ragged qem CSV row");
    Point p{std::stod(f[cx]), cy >= 0 ? std::stod(f[cy]) : 0.0};
    m.centers.push_back(p);
    m.mass.push_back(std::stod(f[cq]));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Matrix export

inline nlohmann::ordered_json metadata_json(const AnnealedMatrix& m) {
  const auto& md = m.metadata();
  return {{"system", md.system},       {"epsilon", md.epsilon},
          {"weight", md.weight},       {"region", md.region},
          {"samples_per_cell", md.samples_per_cell}, {"seed", md.seed}};
}

inline MatrixMetadata metadata_from_json(const nlohmann::ordered_json& j) {
  MatrixMetadata md;
  md.system = j.value("system", "");
  md.epsilon = j.value("epsilon", 0.0);
  md.weight = j.value("weight", "");
  md.region = j.value("region", "");
  md.samples_per_cell = j.value("samples_per_cell", 0);
  md.seed = j.value("seed", std::uint64_t{0});
  return md;
}

/// Text triplets: header line, n_cells, metadata JSON, nnz, then "i j value".
inline std::string matrix_to_text(const AnnealedMatrix& m) {
  std::string s = "# qemlab-matrix v1\n";
  s += std::to_string(m.n_cells()) + "\n";
  s += metadata_json(m).dump() + "\n";
  s += std::to_string(m.nnz()) + "\n";
  for (int i = 0; i < m.n_cells(); ++i) {
    const auto cols = m.row_columns(i);
    const auto vals = m.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      s += std::to_string(i) + " " + std::to_string(cols[k]) + " " + fmt(vals[k]) + "\n";
  }
  return s;
}

/// Rebuilds a matrix from triplets. Row weights are not part of the format
/// and are set to the row sums; cell volumes are supplied by the caller.
inline AnnealedMatrix matrix_from_rows(int n, const std::vector<std::tuple<int, int, double>>& trip,
                                       std::vector<double> volumes, MatrixMetadata md) {
  std::vector<AnnealedMatrix::Row> rows(n);
  std::vector<double> weight(n, 0.0);
  for (const auto& [i, j, v] : trip) {
    if (i < 0 || i >= n || j < 0 || j >= n) throw ConfigError("E_IO", "matrix index out of range");
    rows[i].emplace_back(j, v);
    weight[i] += v;
  }
  for (auto& r : rows) std::sort(r.begin(), r.end());
  if (volumes.empty()) volumes.assign(n, 1.0 / n);
  return AnnealedMatrix(rows, std::move(weight), std::move(volumes), std::move(md));
}

inline AnnealedMatrix matrix_from_text(const std::string& text, std::vector<double> volumes = {}) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != "# qemlab-matrix v1") throw ConfigError("E_IO", "not a qemlab text matrix");
  int n = 0;
  std::size_t nnz = 0;
  in >> n;
  std::getline(in, line);
  std::getline(in, line);
  const auto md = metadata_from_json(nlohmann::ordered_json::parse(line));
  in >> nnz;
  std::vector<std::tuple<int, int, double>> trip;
  trip.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    int i, j;
    std::string v;
    if (!(in >> i >> j >> v)) throw ConfigError("E_IO", "truncated matrix body");
    trip.emplace_back(i, j, std::stod(v));
  }
  return matrix_from_rows(n, trip, std::move(volumes), md);
}

namespace detail {
inline void put_u64(std::string& s, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}
inline std::uint64_t get_u64(const std::string& s, std::size_t& pos) {
  if (pos + 8 > s.size()) throw ConfigError("E_IO", "truncated binary matrix");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos + b])) << (8 * b);
  pos += 8;
  return v;
}
}  // namespace detail

/// Little-endian binary: "QEMMAT01", u64 n_cells, u64 meta_len, meta JSON,
/// u64 nnz, then (u64 i, u64 j, f64 value) per entry.
inline std::string matrix_to_binary(const AnnealedMatrix& m) {
  std::string s = "QEMMAT01";
  const std::string meta = metadata_json(m).dump();
  detail::put_u64(s, static_cast<std::uint64_t>(m.n_cells()));
  detail::put_u64(s, meta.size());
  s += meta;
  detail::put_u64(s, m.nnz());
  for (int i = 0; i < m.n_cells(); ++i) {
    const auto cols = m.row_columns(i);
    const auto vals = m.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      detail::put_u64(s, static_cast<std::uint64_t>(i));
      detail::put_u64(s, static_cast<std::uint64_t>(cols[k]));
      std::uint64_t bits;
      std::memcpy(&bits, &vals[k], sizeof bits);
      detail::put_u64(s, bits);
    }
  }
  return s;
}

inline AnnealedMatrix matrix_from_binary(const std::string& s, std::vector<double> volumes = {}) {
  if (s.compare(0, 8, "QEMMAT01") != 0) throw ConfigError("E_IO", "not a qemlab binary matrix");
  std::size_t pos = 8;
  const auto n = detail::get_u64(s, pos);
  const auto meta_len = detail::get_u64(s, pos);
  if (pos + meta_len > s.size()) throw ConfigError("E_IO", "truncated binary matrix");
  const auto md = metadata_from_json(nlohmann::ordered_json::parse(s.substr(pos, meta_len)));
  pos += meta_len;
  const auto nnz = detail::get_u64(s, pos);
  std::vector<std::tuple<int, int, double>> trip;
  trip.reserve(nnz);
  for (std::uint64_t k = 0; k < nnz; ++k) {
    const auto i = detail::get_u64(s, pos);
    const auto j = detail::get_u64(s, pos);
    const auto bits = detail::get_u64(s, pos);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }
  return matrix_from_rows(static_cast<int>(n), trip, std::move(volumes), md);
}

}  // namespace qemlab
