#include "fincap/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "fincap/errors.hpp"

namespace fincap {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ConfigError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ConfigError("cannot rename onto '" + path + "': " + ec.message());
  }
}

std::string field_csv(const ScalarField& u, const SphereBundleGrid& grid) {
  std::ostringstream os;
  os << "i,j,x1,x2,u,pinned\n";
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j)
      os << i << ',' << j << ',' << format_number(grid.x1(i)) << ',' << format_number(grid.x2(j)) << ','
         << format_number(u(i, j)) << ',' << (u.pinned(i, j) ? 1 : 0) << '\n';
  return os.str();
}

std::string key_value_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ostringstream os;
  os << "key,value\n";
  for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
  return os.str();
}

std::string continua_csv(const std::vector<Shape>& shapes) {
  static const char* names[] = {"disk",  "rectangle",      "segment",  "blob", "outer_boundary",
                                "exterior_disk", "polyline", "outside_rect"};
  std::ostringstream os;
  os << "continuum,kind,vertex,x1,x2,size\n";
  for (std::size_t c = 0; c < shapes.size(); ++c) {
    const Shape& s = shapes[c];
    const auto& v = s.vertices();
    for (std::size_t k = 0; k < v.size(); ++k)
      os << c << ',' << names[static_cast<int>(s.kind())] << ',' << k << ',' << format_number(v[k][0]) << ','
         << format_number(v[k][1]) << ',' << format_number(s.size()) << '\n';
  }
  return os.str();
}

std::string reports_csv(const std::vector<CheckReport>& reports) {
  std::ostringstream os;
  write_reports_csv(os, reports);
  return os.str();
}

std::string heatmap_svg(const ScalarField& u, const SphereBundleGrid& grid, const std::vector<char>* mask) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  const int cell = std::max(1, 512 / std::max(nx, ny));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t b = 0; b < u.values().size(); ++b)
    if (!mask || (*mask)[b]) {
      lo = std::min(lo, u.values()[b]);
      hi = std::max(hi, u.values()[b]);
    }
  const double span = hi > lo ? hi - lo : 1.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << nx * cell << "\" height=\"" << ny * cell
     << "\" shape-rendering=\"crispEdges\">\n";
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const std::size_t b = grid.base_index(i, j);
      int r = 160, g = 160, bl = 160;
      if (!mask || (*mask)[b]) {
        // Blue (low) to red (high).
        const double t = std::clamp((u.values()[b] - lo) / span, 0.0, 1.0);
        r = static_cast<int>(std::lround(255 * t));
        g = static_cast<int>(std::lround(64 * (1 - std::abs(2 * t - 1))));
        bl = static_cast<int>(std::lround(255 * (1 - t)));
      }
      // Row 0 of the image is the top edge, x2 = x2max.
      os << "<rect x=\"" << i * cell << "\" y=\"" << (ny - 1 - j) * cell << "\" width=\"" << cell << "\" height=\""
         << cell << "\" fill=\"rgb(" << r << ',' << g << ',' << bl << ")\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace fincap
