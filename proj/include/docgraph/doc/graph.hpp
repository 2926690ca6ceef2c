#pragma once

#include <cstddef>
#include <vector>

#include "docgraph/doc/document.hpp"
#include "docgraph/doc/geometry.hpp"

namespace docgraph::doc {

/// Complete directed graph over a document's segments, self-edges included.
/// Edge (i, j) sits at index i * n + j.
struct DocumentGraph {
  std::size_t node_count = 0;
  std::vector<EdgeFeature> edges;

  const EdgeFeature& edge(std::size_t i, std::size_t j) const { return edges[i * node_count + j]; }
  std::size_t edge_count() const { return edges.size(); }
};

DocumentGraph build_graph(const Document& doc);

}  // namespace docgraph::doc
