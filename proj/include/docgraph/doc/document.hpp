#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docgraph/doc/geometry.hpp"
#include "docgraph/doc/tokenizer.hpp"

namespace docgraph::doc {

struct TextSegment {
  int id = 0;
  std::string text;  // may be empty
  BoundingBox bbox;
  std::vector<std::string> tokens;  // tokenize(text)
};

struct EntityAnnotation {
  std::string entity_type;
  std::string value;
  BoundingBox bbox;
};

struct Document {
  std::string doc_id;
  double page_w = 0.0;
  double page_h = 0.0;
  std::vector<TextSegment> segments;
  std::vector<EntityAnnotation> annotations;  // empty for unlabeled input
};

/// Malformed document record. The message names the record and field.
class DocumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses and validates one document object. `locus` prefixes error messages
/// (for example "train.ndjson:12").
Document load_document(const nlohmann::json& record, TokenizerMode mode = TokenizerMode::word,
                       const std::string& locus = "document");
nlohmann::json document_to_json(const Document& doc);

/// Re-derives tokens and clamps boxes to the page; throws DocumentError on
/// any invariant violation.
void validate_document(Document& doc, TokenizerMode mode, const std::string& locus);

/// Newline-delimited JSON, one document per line. Blank lines are skipped.
std::vector<Document> read_corpus(const std::filesystem::path& path, TokenizerMode mode = TokenizerMode::word);
void write_corpus(const std::vector<Document>& docs, const std::filesystem::path& path);
std::string corpus_to_ndjson(const std::vector<Document>& docs);

}  // namespace docgraph::doc
