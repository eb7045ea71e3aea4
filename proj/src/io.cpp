#include "fluxforms/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fluxforms {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

void write_point(std::ofstream& out, const Vec& p) {
  for (int a = 0; a < 3; ++a)
    out << (a < p.size() ? fmt(p[a]) : "0") << (a + 1 < 3 ? ' ' : '\n');
}

}  // namespace

void write_vtk_complex(const std::string& path, const Complex& K,
                       const std::vector<std::pair<std::string, Vec>>& cell_data,
                       const std::vector<std::pair<std::string, Mat>>& cell_vectors) {
  int n = K.dimension();
  if (n != 2 && n != 3)
    throw std::invalid_argument("write_vtk_complex: only 2D/3D complexes");
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\ncomplex\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  long nv = K.cell_count(0);
  out << "POINTS " << nv << " double\n";
  for (long v = 0; v < nv; ++v) write_point(out, K.physical_center(0, v));
  long nc = K.cell_count(n);
  int per_cell = 1 << n;
  out << "CELLS " << nc << " " << nc * (per_cell + 1) << "\n";
  // Lattice corner order (last axis fastest) -> VTK vertex cycles.
  static const int quad_order[4] = {0, 2, 3, 1};
  static const int hex_order[8] = {0, 4, 6, 2, 1, 5, 7, 3};
  const int* order = n == 2 ? quad_order : hex_order;
  for (long c = 0; c < nc; ++c) {
    std::vector<long> corners = K.cell_corners(c);
    out << per_cell;
    for (int i = 0; i < per_cell; ++i) out << ' ' << corners[order[i]];
    out << '\n';
  }
  out << "CELL_TYPES " << nc << "\n";
  for (long c = 0; c < nc; ++c) out << (n == 2 ? 9 : 12) << '\n';
  if (cell_data.empty() && cell_vectors.empty()) return;
  out << "CELL_DATA " << nc << "\n";
  for (const auto& [name, values] : cell_data) {
    if (values.size() != nc)
      throw std::invalid_argument("write_vtk_complex: bad size for " + name);
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (long c = 0; c < nc; ++c) out << fmt(values[c]) << '\n';
  }
  for (const auto& [name, rows] : cell_vectors) {
    if (rows.rows() != nc)
      throw std::invalid_argument("write_vtk_complex: bad size for " + name);
    out << "VECTORS " << name << " double\n";
    for (long c = 0; c < nc; ++c) write_point(out, rows.row(c).transpose());
  }
}

void write_vtk_polylines(const std::string& path, const std::vector<Polyline>& lines) {
  long total = 0;
  int dim = 0;
  for (const Polyline& l : lines) {
    total += l.count();
    dim = std::max(dim, static_cast<int>(l.points.cols()));
  }
  if (dim > 3)
    throw std::invalid_argument("write_vtk_polylines: points exceed 3 components");
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\nflowlines\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << total << " double\n";
  for (const Polyline& l : lines)
    for (long i = 0; i < l.count(); ++i) write_point(out, l.points.row(i).transpose());
  long nlines = static_cast<long>(lines.size());
  out << "LINES " << nlines << " " << nlines + total << "\n";
  long base = 0;
  for (const Polyline& l : lines) {
    out << l.count();
    for (long i = 0; i < l.count(); ++i) out << ' ' << base + i;
    out << '\n';
    base += l.count();
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Mat& rows) {
  if (static_cast<long>(header.size()) != rows.cols())
    throw std::invalid_argument("write_csv: header/column mismatch");
  std::ofstream out = open_out(path);
  for (size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? ',' : '\n');
  for (long r = 0; r < rows.rows(); ++r)
    for (long c = 0; c < rows.cols(); ++c)
      out << fmt(rows(r, c)) << (c + 1 < rows.cols() ? ',' : '\n');
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return nlohmann::json::parse(in);
}

}  // namespace fluxforms
