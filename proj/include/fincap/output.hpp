#pragma once

// File emitters: full-precision CSV, SVG heatmaps, and atomic writes.

#include <string>
#include <vector>

#include "fincap/invariants.hpp"

namespace fincap {

// 17 significant digits; infinities print as +inf / -inf.
std::string format_number(double v);

// Writes to a temporary sibling and renames it over `path`; creates parent directories.
void write_file_atomic(const std::string& path, const std::string& content);

// Header "i,j,x1,x2,u,pinned".
std::string field_csv(const ScalarField& u, const SphereBundleGrid& grid);
// Header "key,value".
std::string key_value_csv(const std::vector<std::pair<std::string, std::string>>& rows);
// One row per vertex: "continuum,kind,vertex,x1,x2,size".
std::string continua_csv(const std::vector<Shape>& shapes);
std::string reports_csv(const std::vector<CheckReport>& reports);

// One rect per base node, colored by a linear ramp between min and max of u.
// Nodes outside `mask` (when given) are drawn grey.
std::string heatmap_svg(const ScalarField& u, const SphereBundleGrid& grid, const std::vector<char>* mask = nullptr);

}  // namespace fincap
