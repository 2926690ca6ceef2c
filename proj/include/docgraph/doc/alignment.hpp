#pragma once

#include <string>
#include <vector>

#include "docgraph/doc/document.hpp"
#include "docgraph/doc/tags.hpp"

namespace docgraph::doc {

inline constexpr double kDefaultOverlapThreshold = 0.7;

/// Token supervision derived from box annotations.
struct SegmentLabels {
  /// tags[s][k] for token k of segment s (IOB indices into the TagSet).
  std::vector<std::vector<int>> tags;
  /// Segment class for the auxiliary task: entity index of the first entity
  /// assigned to the segment, or entity_count() for "other".
  std::vector<std::size_t> segment_class;
  std::size_t aligned = 0;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
};

/// Assigns every annotation to the segment it overlaps most, among segments
/// whose overlap / min(area) exceeds the threshold, then labels the first
/// still-unlabeled occurrence of the value's tokens B-X I-X... An entity whose
/// value cannot be found is dropped and reported. Unknown entity types throw.
SegmentLabels align_annotations(const Document& doc, const TagSet& tagset,
                                double threshold = kDefaultOverlapThreshold,
                                TokenizerMode mode = TokenizerMode::word);

}  // namespace docgraph::doc
