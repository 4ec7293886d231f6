#pragma once

/** @file io.hh
    @brief Matrix Market, plain vector, legacy VTK and CSV input/output.
*/

#include "anisomg/mesh.hh"
#include "anisomg/types.hh"

#include <array>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace anisomg {

/// Shortest round-trip text for a double ("%.17g").
inline std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Compact text for tables ("%.6e").
inline std::string format_sci(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

/// Coordinate real general format, entries in row-major order. Each comment line is prefixed with '%'.
inline void write_matrix_market(std::ostream& os, const SparseMatrix& A, const std::vector<std::string>& comments = {})
{
  os << "%%MatrixMarket matrix coordinate real general\n";
  for (const auto& c : comments) os << "% " << c << "\n";
  os << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  for (int i = 0; i < A.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) os << (it.row() + 1) << " " << (it.col() + 1) << " " << format_double(it.value()) << "\n";
}

/// Reads coordinate real/integer general or symmetric matrices.
inline SparseMatrix read_matrix_market(std::istream& is)
{
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0) throw Error("read_matrix_market: missing header");
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (object != "matrix" || format != "coordinate") throw Error("read_matrix_market: only coordinate matrices are supported");
  if (field != "real" && field != "integer" && field != "double") throw Error("read_matrix_market: unsupported field '" + field + "'");
  const bool sym = symmetry == "symmetric";
  if (!sym && symmetry != "general") throw Error("read_matrix_market: unsupported symmetry '" + symmetry + "'");
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '%') break;
  std::istringstream ss(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(ss >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) throw Error("read_matrix_market: bad size line");
  std::vector<Triplet> trips;
  trips.reserve(sym ? 2 * nnz : nnz);
  for (long k = 0; k < nnz; ++k) {
    long i = 0, j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v)) throw Error("read_matrix_market: truncated entry list");
    if (i < 1 || j < 1 || i > rows || j > cols) throw Error("read_matrix_market: index out of range");
    trips.emplace_back(int(i - 1), int(j - 1), v);
    if (sym && i != j) trips.emplace_back(int(j - 1), int(i - 1), v);
  }
  SparseMatrix A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

inline void write_vector(std::ostream& os, const Vector& v)
{
  for (Index i = 0; i < v.size(); ++i) os << format_double(v[i]) << "\n";
}

inline Vector read_vector(std::istream& is)
{
  std::vector<double> vals;
  double x = 0.0;
  while (is >> x) vals.push_back(x);
  if (!is.eof()) throw Error("read_vector: malformed value");
  return Eigen::Map<Vector>(vals.data(), Index(vals.size()));
}

/// Legacy VTK unstructured grid with one point per dof. P2 triangles are split into four.
inline void write_vtk(std::ostream& os, const Grids& g, const std::vector<std::pair<std::string, Vector>>& point_data, const std::string& title = "anisomg")
{
  const DofMap& dm = g.dofs;
  for (const auto& [name, v] : point_data)
    if (v.size() != dm.size()) throw DimensionError("write_vtk: field '" + name + "' has wrong length");
  std::vector<std::array<int, 3>> cells;
  for (std::size_t t = 0; t < dm.cell_dofs.size(); ++t) {
    const auto& c = dm.cell_dofs[t];
    if (dm.degree == 1) cells.push_back({c[0], c[1], c[2]});
    else {
      cells.push_back({c[0], c[3], c[5]});
      cells.push_back({c[3], c[1], c[4]});
      cells.push_back({c[5], c[4], c[2]});
      cells.push_back({c[3], c[4], c[5]});
    }
  }
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << dm.size() << " double\n";
  for (const Point& p : dm.coords) os << format_double(p.x) << " " << format_double(p.y) << " 0\n";
  os << "CELLS " << cells.size() << " " << 4 * cells.size() << "\n";
  for (const auto& c : cells) os << "3 " << c[0] << " " << c[1] << " " << c[2] << "\n";
  os << "CELL_TYPES " << cells.size() << "\n";
  for (std::size_t i = 0; i < cells.size(); ++i) os << "5\n";
  if (!point_data.empty()) os << "POINT_DATA " << dm.size() << "\n";
  for (const auto& [name, v] : point_data) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Index i = 0; i < v.size(); ++i) os << format_double(v[i]) << "\n";
  }
}

/// Minimal CSV table: a header row and string cells, no quoting (cells must not contain commas).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row)
  {
    if (row.size() != header.size()) throw DimensionError("CsvTable: row width does not match header");
    for (const auto& c : row)
      if (c.find_first_of(",\n") != std::string::npos) throw Error("CsvTable: cell contains a separator");
    rows.push_back(std::move(row));
  }

  int column(const std::string& name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return int(i);
    throw Error("CsvTable: no column '" + name + "'");
  }

  /// Lines starting with '#' are written first as comments.
  void write(std::ostream& os, const std::vector<std::string>& comments = {}) const
  {
    for (const auto& c : comments) os << "# " << c << "\n";
    const auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
  }

  static CsvTable parse(std::istream& is)
  {
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cells;
      std::string cell;
      std::istringstream ls(line);
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (!line.empty() && line.back() == ',') cells.emplace_back();
      if (!have_header) {
        t.header = std::move(cells);
        have_header = true;
      } else t.add_row(std::move(cells));
    }
    if (!have_header) throw Error("CsvTable::parse: empty input");
    return t;
  }
};

inline std::ofstream open_output(const std::string& path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  return os;
}

} // namespace anisomg
