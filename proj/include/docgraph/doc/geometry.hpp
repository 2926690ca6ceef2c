#pragma once

#include <array>

namespace docgraph::doc {

/// Axis-aligned box in page pixels. (x, y) is the top-left corner.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// overlap / min(area(a), area(b)); the containment test for annotations.
double overlap_ratio(const BoundingBox& annotation, const BoundingBox& segment);

/// Shifts the box inside [0, page_w] x [0, page_h], shrinking it only when it
/// is larger than the page.
BoundingBox clamp_to_page(BoundingBox box, double page_w, double page_h);

/// [dx, dy, w_src/h_src, h_dst/h_src, w_dst/h_src] where dx, dy are signed
/// center-to-center offsets measured in units of the source height.
using EdgeFeature = std::array<double, 5>;
inline constexpr std::size_t kEdgeFeatureDim = 5;

EdgeFeature edge_features(const BoundingBox& src, const BoundingBox& dst);

}  // namespace docgraph::doc
