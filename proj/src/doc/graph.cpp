#include "docgraph/doc/graph.hpp"

namespace docgraph::doc {

DocumentGraph build_graph(const Document& doc) {
  if (doc.segments.empty()) throw DocumentError("cannot build a graph for document '" + doc.doc_id + "' with no segments");
  DocumentGraph g;
  g.node_count = doc.segments.size();
  g.edges.reserve(g.node_count * g.node_count);
  for (const TextSegment& src : doc.segments) {
    for (const TextSegment& dst : doc.segments) g.edges.push_back(edge_features(src.bbox, dst.bbox));
  }
  return g;
}

}  // namespace docgraph::doc
