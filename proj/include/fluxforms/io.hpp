#pragma once

// Plain-text exporters: legacy VTK (unstructured grids for complexes, polydata
// for traced lines), CSV tables, and JSON documents.  All output is
// deterministic — fixed "%.17g" float formatting, no timestamps, insertion
// order fixed by the callers — so repeated runs are byte-identical.

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluxforms/dec.hpp"
#include "fluxforms/flowlines.hpp"

namespace fluxforms {

// Unstructured grid over the n-cells of a 2D/3D complex (quads/hexahedra on
// the physical chart image; periodic cells reuse wrapped vertices).
// cell_data: named scalars per n-cell; cell_vectors: named per-cell vectors
// (columns = chart dimension, padded to 3 components).
void write_vtk_complex(
    const std::string& path, const Complex& K,
    const std::vector<std::pair<std::string, Vec>>& cell_data = {},
    const std::vector<std::pair<std::string, Mat>>& cell_vectors = {});

// Polydata with one polyline per traced field line (2D/3D points).
void write_vtk_polylines(const std::string& path, const std::vector<Polyline>& lines);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Mat& rows);

void write_json(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::string& path);

}  // namespace fluxforms
