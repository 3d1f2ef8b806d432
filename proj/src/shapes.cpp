#include "fincap/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fincap/errors.hpp"

namespace fincap {

namespace {

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double wx = p[0] - a[0], wy = p[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? (wx * vx + wy * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(wx - t * vx, wy - t * vy);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace

Shape Shape::disk(const Vec2& center, double radius) {
  require_positive(radius, "disk radius");
  Shape s;
  s.kind_ = Kind::disk;
  s.pts_ = {center};
  s.size_ = radius;
  return s;
}

Shape Shape::rectangle(const Vec2& a, const Vec2& b) {
  Shape s;
  s.kind_ = Kind::rectangle;
  s.rect_ = Rect{std::min(a[0], b[0]), std::max(a[0], b[0]), std::min(a[1], b[1]), std::max(a[1], b[1])};
  s.pts_ = {a, b};
  return s;
}

Shape Shape::segment(const Vec2& p, const Vec2& q, double thickness) {
  require_positive(thickness, "segment thickness");
  Shape s;
  s.kind_ = Kind::segment;
  s.pts_ = {p, q};
  s.size_ = thickness;
  return s;
}

Shape Shape::blob(const Vec2& center, double radius) {
  if (!(radius >= 0.0)) throw ConfigError("blob radius must be nonnegative");
  Shape s;
  s.kind_ = Kind::blob;
  s.pts_ = {center};
  s.size_ = radius;
  return s;
}

Shape Shape::outer_boundary(int width) {
  if (width < 1) throw ConfigError("outer boundary width must be at least 1");
  Shape s;
  s.kind_ = Kind::outer_boundary;
  s.size_ = width;
  return s;
}

Shape Shape::exterior_disk(const Vec2& center, double radius) {
  require_positive(radius, "exterior disk radius");
  Shape s;
  s.kind_ = Kind::exterior_disk;
  s.pts_ = {center};
  s.size_ = radius;
  return s;
}

Shape Shape::polyline(std::vector<Vec2> vertices, double thickness) {
  require_positive(thickness, "polyline thickness");
  if (vertices.empty()) throw ConfigError("polyline needs at least one vertex");
  Shape s;
  s.kind_ = Kind::polyline;
  s.pts_ = std::move(vertices);
  s.size_ = thickness;
  return s;
}

Shape Shape::outside_rect(const Rect& r) {
  Shape s;
  s.kind_ = Kind::outside_rect;
  s.rect_ = r;
  return s;
}

Shape Shape::image_of(const PlanarMap& f) const {
  if (map_) throw ConfigError("shape is already the image of a map");
  if (kind_ == Kind::outer_boundary) throw ConfigError("outer_boundary has no image under a map");
  Shape s = *this;
  s.map_ = std::make_shared<const PlanarMap>(f);
  return s;
}

bool Shape::contains_source(const Vec2& q) const {
  switch (kind_) {
    case Kind::disk:
    case Kind::blob:
      return std::hypot(q[0] - pts_[0][0], q[1] - pts_[0][1]) <= size_;
    case Kind::exterior_disk:
      return std::hypot(q[0] - pts_[0][0], q[1] - pts_[0][1]) >= size_;
    case Kind::rectangle:
      return rect_.contains(q);
    case Kind::outside_rect:
      return !rect_.contains(q);
    case Kind::segment:
      return segment_distance(q, pts_[0], pts_[1]) <= 0.5 * size_;
    case Kind::polyline: {
      if (pts_.size() == 1) return std::hypot(q[0] - pts_[0][0], q[1] - pts_[0][1]) <= 0.5 * size_;
      for (std::size_t i = 0; i + 1 < pts_.size(); ++i)
        if (segment_distance(q, pts_[i], pts_[i + 1]) <= 0.5 * size_) return true;
      return false;
    }
    case Kind::outer_boundary:
      return false;
  }
  return false;
}

bool Shape::contains(const Vec2& p) const {
  if (!map_) return contains_source(p);
  Vec2 q;
  try {
    q = map_->inverse(p);
  } catch (const DomainError&) {
    // Outside f(plane): complements contain it, bounded sets do not.
    return kind_ == Kind::exterior_disk || kind_ == Kind::outside_rect;
  }
  return contains_source(q);
}

std::vector<Vec2> Shape::anchors() const {
  std::vector<Vec2> out;
  if (kind_ == Kind::blob) out.push_back(pts_[0]);
  if (kind_ == Kind::polyline) {
    out.push_back(pts_.front());
    out.push_back(pts_.back());
  }
  if (map_)
    for (Vec2& a : out) a = (*map_)(a);
  return out;
}

std::vector<char> Shape::rasterize(const SphereBundleGrid& grid) const {
  std::vector<char> mask(grid.base_size(), 0);
  if (kind_ == Kind::outer_boundary) {
    const int w = static_cast<int>(size_);
    for (int i = 0; i < grid.nx(); ++i)
      for (int j = 0; j < grid.ny(); ++j)
        if (i < w || j < w || i >= grid.nx() - w || j >= grid.ny() - w) mask[grid.base_index(i, j)] = 1;
    return mask;
  }
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j)
      if (contains(grid.node(i, j))) mask[grid.base_index(i, j)] = 1;
  for (const Vec2& a : anchors()) {
    if (!grid.base().contains(a)) continue;
    const int i = std::clamp(static_cast<int>(std::floor((a[0] - grid.base().x1min) / grid.dx1())), 0, grid.nx() - 1);
    const int j = std::clamp(static_cast<int>(std::floor((a[1] - grid.base().x2min) / grid.dx2())), 0, grid.ny() - 1);
    mask[grid.base_index(i, j)] = 1;
  }
  return mask;
}

std::string Shape::describe() const {
  std::ostringstream os;
  os.precision(10);
  auto point = [&](const Vec2& p) { os << "(" << p[0] << "," << p[1] << ")"; };
  switch (kind_) {
    case Kind::disk: os << "disk "; point(pts_[0]); os << " r=" << size_; break;
    case Kind::blob: os << "blob "; point(pts_[0]); os << " r=" << size_; break;
    case Kind::exterior_disk: os << "exterior_disk "; point(pts_[0]); os << " r=" << size_; break;
    case Kind::rectangle: os << "rectangle "; point(pts_[0]); os << " "; point(pts_[1]); break;
    case Kind::segment: os << "segment "; point(pts_[0]); os << " "; point(pts_[1]); os << " t=" << size_; break;
    case Kind::polyline:
      os << "polyline";
      for (const Vec2& p : pts_) { os << " "; point(p); }
      os << " t=" << size_;
      break;
    case Kind::outer_boundary: os << "outer_boundary w=" << size_; break;
    case Kind::outside_rect:
      os << "outside_rect [" << rect_.x1min << "," << rect_.x1max << "]x[" << rect_.x2min << "," << rect_.x2max << "]";
      break;
  }
  if (map_) os << " under " << map_->describe();
  return os.str();
}

std::size_t count_nodes(const std::vector<char>& mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](char c) { return c != 0; }));
}

}  // namespace fincap
