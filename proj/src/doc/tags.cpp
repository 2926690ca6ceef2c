#include "docgraph/doc/tags.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace docgraph::doc {

TagSet::TagSet(std::vector<std::string> entity_types) : types_(std::move(entity_types)) {
  std::set<std::string> seen;
  for (const auto& t : types_) {
    if (t.empty()) throw std::invalid_argument("entity type names must be non-empty");
    if (!seen.insert(t).second) throw std::invalid_argument("duplicate entity type '" + t + "'");
  }
}

std::optional<std::size_t> TagSet::entity_index(const std::string& type) const {
  auto it = std::find(types_.begin(), types_.end(), type);
  if (it == types_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - types_.begin());
}

std::optional<std::size_t> TagSet::entity_of(int tag) const {
  if (tag <= 0 || static_cast<std::size_t>(tag) >= size()) return std::nullopt;
  return static_cast<std::size_t>((tag - 1) / 2);
}

std::string TagSet::name(int tag) const {
  if (tag == 0) return "O";
  const auto e = entity_of(tag);
  if (!e) throw std::out_of_range("tag index " + std::to_string(tag) + " out of range");
  return (is_begin(tag) ? "B-" : "I-") + types_[*e];
}

int TagSet::parse(const std::string& name) const {
  if (name == "O") return 0;
  if (name.size() > 2 && (name.starts_with("B-") || name.starts_with("I-"))) {
    if (const auto e = entity_index(name.substr(2))) return name[0] == 'B' ? begin_tag(*e) : inside_tag(*e);
  }
  throw std::invalid_argument("unknown tag '" + name + "'");
}

bool is_valid_iob(std::span<const int> tags, const TagSet& tagset) {
  int prev = TagSet::outside();
  for (int tag : tags) {
    if (tag < 0 || static_cast<std::size_t>(tag) >= tagset.size()) return false;
    if (tagset.is_inside(tag)) {
      if (prev == TagSet::outside() || tagset.entity_of(prev) != tagset.entity_of(tag)) return false;
    }
    prev = tag;
  }
  return true;
}

}  // namespace docgraph::doc
