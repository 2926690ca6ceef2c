#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace docgraph::doc {

/// IOB tag inventory over an entity schema. O is index 0, then B-X, I-X per
/// entity type in schema order.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(std::vector<std::string> entity_types);

  const std::vector<std::string>& entity_types() const { return types_; }
  std::size_t entity_count() const { return types_.size(); }
  std::size_t size() const { return 1 + 2 * types_.size(); }

  static constexpr int outside() { return 0; }
  int begin_tag(std::size_t entity) const { return static_cast<int>(1 + 2 * entity); }
  int inside_tag(std::size_t entity) const { return static_cast<int>(2 + 2 * entity); }

  std::optional<std::size_t> entity_index(const std::string& type) const;
  /// Entity index of a B-/I- tag; nullopt for O.
  std::optional<std::size_t> entity_of(int tag) const;
  bool is_begin(int tag) const { return tag > 0 && tag % 2 == 1; }
  bool is_inside(int tag) const { return tag > 0 && tag % 2 == 0; }

  std::string name(int tag) const;
  int parse(const std::string& name) const;

 private:
  std::vector<std::string> types_;
};

/// I-X may only follow B-X or I-X.
bool is_valid_iob(std::span<const int> tags, const TagSet& tagset);

}  // namespace docgraph::doc
