#include "docgraph/doc/alignment.hpp"

#include <stdexcept>

namespace docgraph::doc {
namespace {

// First position where `needle` occurs in `hay` over tokens that are all
// still O. Returns hay.size() when absent.
std::size_t find_free_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle,
                          const std::vector<int>& tags) {
  if (needle.empty() || needle.size() > hay.size()) return hay.size();
  for (std::size_t start = 0; start + needle.size() <= hay.size(); ++start) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size() && ok; ++k) {
      ok = hay[start + k] == needle[k] && tags[start + k] == TagSet::outside();
    }
    if (ok) return start;
  }
  return hay.size();
}

}  // namespace

SegmentLabels align_annotations(const Document& doc, const TagSet& tagset, double threshold, TokenizerMode mode) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("overlap threshold must lie in (0, 1]");
  SegmentLabels out;
  out.tags.resize(doc.segments.size());
  out.segment_class.assign(doc.segments.size(), tagset.entity_count());
  for (std::size_t s = 0; s < doc.segments.size(); ++s) {
    out.tags[s].assign(doc.segments[s].tokens.size(), TagSet::outside());
  }

  for (const EntityAnnotation& ann : doc.annotations) {
    const auto entity = tagset.entity_index(ann.entity_type);
    if (!entity) {
      throw std::invalid_argument("document '" + doc.doc_id + "': entity type '" + ann.entity_type +
                                  "' is not in the schema");
    }
    std::size_t best = doc.segments.size();
    double best_ratio = 0.0;
    for (std::size_t s = 0; s < doc.segments.size(); ++s) {
      const double r = overlap_ratio(ann.bbox, doc.segments[s].bbox);
      if (r > threshold && r > best_ratio) {
        best = s;
        best_ratio = r;
      }
    }
    if (best == doc.segments.size()) {
      ++out.dropped;
      out.warnings.push_back(doc.doc_id + ": " + ann.entity_type + " '" + ann.value + "' overlaps no segment");
      continue;
    }
    const TextSegment& seg = doc.segments[best];
    const auto value_tokens = tokenize(ann.value, mode);
    auto& tags = out.tags[best];
    const std::size_t start = find_free_run(seg.tokens, value_tokens, tags);
    if (start == seg.tokens.size()) {
      ++out.dropped;
      out.warnings.push_back(doc.doc_id + ": " + ann.entity_type + " '" + ann.value + "' not found in segment " +
                             std::to_string(seg.id) + " text '" + seg.text + "'");
      continue;
    }
    tags[start] = tagset.begin_tag(*entity);
    for (std::size_t k = 1; k < value_tokens.size(); ++k) tags[start + k] = tagset.inside_tag(*entity);
    if (out.segment_class[best] == tagset.entity_count()) out.segment_class[best] = *entity;
    ++out.aligned;
  }
  return out;
}

}  // namespace docgraph::doc
