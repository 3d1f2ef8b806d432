#pragma once

// Plane sets rasterized onto base nodes: a node belongs to a shape when its
// cell center lies inside.

#include <memory>
#include <string>
#include <vector>

#include "fincap/planar_map.hpp"
#include "fincap/sphere_bundle.hpp"

namespace fincap {

class Shape {
 public:
  enum class Kind { disk, rectangle, segment, blob, outer_boundary, exterior_disk, polyline, outside_rect };

  static Shape disk(const Vec2& center, double radius);
  static Shape rectangle(const Vec2& corner_a, const Vec2& corner_b);
  // Points within thickness / 2 of the segment pq.
  static Shape segment(const Vec2& p, const Vec2& q, double thickness);
  // A disk that always contains the node nearest its center.
  static Shape blob(const Vec2& center, double radius);
  // The outermost `width` rings of base nodes of whatever grid it is rasterized on.
  static Shape outer_boundary(int width = 1);
  // Complement of the open disk.
  static Shape exterior_disk(const Vec2& center, double radius);
  // Points within thickness / 2 of the polygonal chain; endpoints' nearest nodes included.
  static Shape polyline(std::vector<Vec2> vertices, double thickness);
  // Complement of the closed rectangle.
  static Shape outside_rect(const Rect& r);

  // The set f(S), tested through f^{-1}. Only one level of mapping is supported.
  Shape image_of(const PlanarMap& f) const;

  Kind kind() const { return kind_; }
  const std::vector<Vec2>& vertices() const { return pts_; }
  double size() const { return size_; }
  bool mapped() const { return map_ != nullptr; }

  bool contains(const Vec2& p) const;
  std::vector<char> rasterize(const SphereBundleGrid& grid) const;
  std::string describe() const;

 private:
  bool contains_source(const Vec2& q) const;
  // Points whose nearest node is always included (blob center, polyline endpoints).
  std::vector<Vec2> anchors() const;

  Kind kind_ = Kind::disk;
  std::vector<Vec2> pts_;
  double size_ = 0.0;  // radius, thickness or ring width
  Rect rect_;
  std::shared_ptr<const PlanarMap> map_;
};

std::size_t count_nodes(const std::vector<char>& mask);

}  // namespace fincap
