#include "docgraph/doc/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace docgraph::doc {

bool BoundingBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0.0 && h > 0.0;
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  return ix * iy;
}

double overlap_ratio(const BoundingBox& annotation, const BoundingBox& segment) {
  return intersection_area(annotation, segment) / std::min(annotation.area(), segment.area());
}

BoundingBox clamp_to_page(BoundingBox box, double page_w, double page_h) {
  box.w = std::min(box.w, page_w);
  box.h = std::min(box.h, page_h);
  box.x = std::clamp(box.x, 0.0, page_w - box.w);
  box.y = std::clamp(box.y, 0.0, page_h - box.h);
  return box;
}

EdgeFeature edge_features(const BoundingBox& src, const BoundingBox& dst) {
  const double h = src.h;
  return {(dst.center_x() - src.center_x()) / h, (dst.center_y() - src.center_y()) / h, src.w / h, dst.h / h,
          dst.w / h};
}

}  // namespace docgraph::doc
