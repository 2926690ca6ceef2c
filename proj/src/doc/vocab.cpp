#include "docgraph/doc/vocab.hpp"

#include <cctype>
#include <map>
#include <stdexcept>

namespace docgraph::doc {

Vocabulary::Vocabulary() {
  for (const char* special : {"[PAD]", "[UNK]", "[SEP]"}) {
    index_.emplace(lookup_key(special), entries_.size());
    entries_.emplace_back(special);
  }
}

std::string Vocabulary::lookup_key(std::string_view token) {
  std::string key(token);
  for (char& c : key) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) {
      if (std::isdigit(u)) {
        c = '0';
      } else {
        c = static_cast<char>(std::tolower(u));
      }
    }
  }
  return key;
}

std::size_t Vocabulary::add(std::string_view token) {
  std::string key = lookup_key(token);
  auto [it, inserted] = index_.emplace(key, entries_.size());
  if (inserted) entries_.push_back(std::move(key));
  return it->second;
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(lookup_key(token));
  return it == index_.end() ? kUnk : it->second;
}

Vocabulary Vocabulary::build(const std::vector<Document>& docs, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> first_seen;
  for (const Document& d : docs) {
    for (const TextSegment& s : d.segments) {
      for (const std::string& t : s.tokens) {
        auto key = lookup_key(t);
        if (counts[key]++ == 0) first_seen.push_back(key);
      }
    }
  }
  Vocabulary v;
  for (const std::string& key : first_seen) {
    if (counts[key] >= min_count) v.add(key);
  }
  return v;
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries) {
  if (entries.size() < 3 || entries[0] != "[PAD]" || entries[1] != "[UNK]" || entries[2] != "[SEP]") {
    throw std::invalid_argument("vocabulary must start with [PAD], [UNK], [SEP]");
  }
  Vocabulary v;
  for (std::size_t i = 3; i < entries.size(); ++i) {
    if (v.add(entries[i]) != i) throw std::invalid_argument("vocabulary entry '" + entries[i] + "' is duplicated");
  }
  return v;
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) return {kPad};
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

}  // namespace docgraph::doc
