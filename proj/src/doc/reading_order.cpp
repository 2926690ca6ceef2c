#include "docgraph/doc/reading_order.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace docgraph::doc {

std::vector<std::size_t> reading_order_indices(const Document& doc) {
  const std::size_t n = doc.segments.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (n == 0) return order;

  std::vector<double> heights;
  heights.reserve(n);
  for (const auto& s : doc.segments) heights.push_back(s.bbox.h);
  std::sort(heights.begin(), heights.end());
  const double median = n % 2 ? heights[n / 2] : 0.5 * (heights[n / 2 - 1] + heights[n / 2]);
  const double tolerance = 0.5 * median;

  auto cy = [&](std::size_t i) { return doc.segments[i].bbox.center_y(); };
  auto cx = [&](std::size_t i) { return doc.segments[i].bbox.center_x(); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cy(a) != cy(b)) return cy(a) < cy(b);
    return doc.segments[a].id < doc.segments[b].id;
  });

  struct Line {
    double sum_cy = 0.0;
    std::vector<std::size_t> members;
    double mean() const { return sum_cy / static_cast<double>(members.size()); }
  };
  std::vector<Line> lines;
  for (std::size_t i : order) {
    if (lines.empty() || std::abs(cy(i) - lines.back().mean()) > tolerance) lines.emplace_back();
    lines.back().sum_cy += cy(i);
    lines.back().members.push_back(i);
  }

  std::vector<std::size_t> out;
  out.reserve(n);
  for (Line& line : lines) {
    std::stable_sort(line.members.begin(), line.members.end(), [&](std::size_t a, std::size_t b) {
      if (cx(a) != cx(b)) return cx(a) < cx(b);
      return doc.segments[a].id < doc.segments[b].id;
    });
    out.insert(out.end(), line.members.begin(), line.members.end());
  }
  return out;
}

std::vector<int> reading_order(const Document& doc) {
  std::vector<int> ids;
  for (std::size_t i : reading_order_indices(doc)) ids.push_back(doc.segments[i].id);
  return ids;
}

}  // namespace docgraph::doc
