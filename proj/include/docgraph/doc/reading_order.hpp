#pragma once

#include <cstddef>
#include <vector>

#include "docgraph/doc/document.hpp"

namespace docgraph::doc {

/// Left-to-right, top-to-bottom order of segment positions (indices into
/// doc.segments). Segments join a line while their vertical center is
/// within 0.5 x median segment height of the line's mean center.
std::vector<std::size_t> reading_order_indices(const Document& doc);

/// The same order expressed as segment ids.
std::vector<int> reading_order(const Document& doc);

}  // namespace docgraph::doc
