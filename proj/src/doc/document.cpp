#include "docgraph/doc/document.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace docgraph::doc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& locus, const std::string& what) { throw DocumentError(locus + ": " + what); }

const json& field(const json& obj, const char* name, const std::string& locus) {
  if (!obj.is_object()) fail(locus, "expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) fail(locus, std::string("missing field '") + name + "'");
  return *it;
}

double number(const json& obj, const char* name, const std::string& locus) {
  const json& v = field(obj, name, locus);
  if (!v.is_number()) fail(locus, std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

BoundingBox parse_bbox(const json& obj, const std::string& locus) {
  const json& b = field(obj, "bbox", locus);
  if (!b.is_array() || b.size() != 4) fail(locus, "'bbox' must be [x, y, w, h]");
  for (const auto& v : b) {
    if (!v.is_number()) fail(locus, "'bbox' entries must be numbers");
  }
  return BoundingBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
}

json bbox_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

}  // namespace

void validate_document(Document& doc, TokenizerMode mode, const std::string& locus) {
  const std::string where = locus + " (doc_id '" + doc.doc_id + "')";
  if (!(doc.page_w > 0.0) || !(doc.page_h > 0.0)) fail(where, "page width and height must be > 0");
  if (doc.segments.empty()) fail(where, "a document needs at least one segment");
  std::set<int> ids;
  for (TextSegment& s : doc.segments) {
    const std::string seg_locus = where + " segment " + std::to_string(s.id);
    if (!ids.insert(s.id).second) fail(seg_locus, "duplicate segment id");
    if (!s.bbox.valid()) fail(seg_locus, "bbox needs finite coordinates and w > 0, h > 0");
    s.bbox = clamp_to_page(s.bbox, doc.page_w, doc.page_h);
    s.tokens = tokenize(s.text, mode);
  }
  for (std::size_t i = 0; i < doc.annotations.size(); ++i) {
    EntityAnnotation& a = doc.annotations[i];
    const std::string ann_locus = where + " annotation " + std::to_string(i);
    if (a.entity_type.empty()) fail(ann_locus, "empty entity type");
    if (!a.bbox.valid()) fail(ann_locus, "bbox needs finite coordinates and w > 0, h > 0");
  }
}

Document load_document(const json& record, TokenizerMode mode, const std::string& locus) {
  Document doc;
  const json& id = field(record, "doc_id", locus);
  if (!id.is_string()) fail(locus, "'doc_id' must be a string");
  doc.doc_id = id.get<std::string>();
  const std::string where = locus + " (doc_id '" + doc.doc_id + "')";

  const json& page = field(record, "page", where);
  doc.page_w = number(page, "w", where + " page");
  doc.page_h = number(page, "h", where + " page");

  const json& segs = field(record, "segments", where);
  if (!segs.is_array()) fail(where, "'segments' must be an array");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string seg_locus = where + " segments[" + std::to_string(i) + "]";
    const json& s = segs[i];
    TextSegment seg;
    const json& sid = field(s, "id", seg_locus);
    if (!sid.is_number_integer()) fail(seg_locus, "'id' must be an integer");
    seg.id = sid.get<int>();
    const json& text = field(s, "text", seg_locus);
    if (!text.is_string()) fail(seg_locus, "'text' must be a string");
    seg.text = text.get<std::string>();
    seg.bbox = parse_bbox(s, seg_locus + " (id " + std::to_string(seg.id) + ")");
    doc.segments.push_back(std::move(seg));
  }

  if (auto it = record.find("annotations"); it != record.end()) {
    if (!it->is_array()) fail(where, "'annotations' must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string ann_locus = where + " annotations[" + std::to_string(i) + "]";
      const json& a = (*it)[i];
      EntityAnnotation ann;
      const json& type = field(a, "type", ann_locus);
      const json& value = field(a, "value", ann_locus);
      if (!type.is_string() || !value.is_string()) fail(ann_locus, "'type' and 'value' must be strings");
      ann.entity_type = type.get<std::string>();
      ann.value = value.get<std::string>();
      ann.bbox = parse_bbox(a, ann_locus);
      doc.annotations.push_back(std::move(ann));
    }
  }
  validate_document(doc, mode, locus);
  return doc;
}

json document_to_json(const Document& doc) {
  json segs = json::array();
  for (const TextSegment& s : doc.segments) {
    segs.push_back({{"id", s.id}, {"text", s.text}, {"bbox", bbox_json(s.bbox)}});
  }
  json anns = json::array();
  for (const EntityAnnotation& a : doc.annotations) {
    anns.push_back({{"type", a.entity_type}, {"value", a.value}, {"bbox", bbox_json(a.bbox)}});
  }
  return json{{"doc_id", doc.doc_id},
              {"page", {{"w", doc.page_w}, {"h", doc.page_h}}},
              {"segments", std::move(segs)},
              {"annotations", std::move(anns)}};
}

std::vector<Document> read_corpus(const std::filesystem::path& path, TokenizerMode mode) {
  std::ifstream in(path);
  if (!in) throw DocumentError("cannot open corpus file " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string locus = path.filename().string() + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DocumentError(locus + ": invalid JSON (" + e.what() + ")");
    }
    docs.push_back(load_document(record, mode, locus));
  }
  return docs;
}

std::string corpus_to_ndjson(const std::vector<Document>& docs) {
  std::ostringstream out;
  for (const Document& d : docs) out << document_to_json(d).dump() << '\n';
  return out.str();
}

void write_corpus(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DocumentError("cannot write corpus file " + path.string());
  out << corpus_to_ndjson(docs);
}

}  // namespace docgraph::doc
