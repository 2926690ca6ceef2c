#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "docgraph/doc/document.hpp"

namespace docgraph::doc {

/// Token -> row of an embedding table. Lookups fold case and map every
/// ASCII digit to '0', so amounts and ids share rows by shape.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kSep = 2;

  Vocabulary();

  static std::string lookup_key(std::string_view token);

  /// Adds every token of every segment with count >= min_count.
  static Vocabulary build(const std::vector<Document>& docs, std::size_t min_count = 1);
  static Vocabulary from_entries(std::vector<std::string> entries);

  std::size_t add(std::string_view token);
  std::size_t id(std::string_view token) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::string>& entries() const { return entries_; }

  /// Token ids for a segment; an empty segment becomes [PAD].
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace docgraph::doc
