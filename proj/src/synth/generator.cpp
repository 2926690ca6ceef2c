#include "docgraph/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "docgraph/nn/params.hpp"

namespace docgraph::synth {

using doc::BoundingBox;

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(n)));
}

std::size_t pick_between(std::mt19937_64& rng, std::size_t lo, std::size_t hi) { return lo + pick(rng, hi - lo + 1); }

template <typename T>
const T& choose(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[pick(rng, items.size())];
}

const std::vector<std::string> kNameHead = {"Acme",    "Nordic", "Blue",     "Summit",   "Apex",    "Harbor",
                                            "Golden",  "Silver", "Pioneer",  "Vertex",   "Crescent", "Maple",
                                            "Orion",   "Atlas",  "Cedar",    "Delta",    "Evergreen", "Falcon",
                                            "Granite", "Horizon"};
const std::vector<std::string> kNameBody = {"Supply",   "Trading", "Logistics", "Foods",    "Systems",
                                            "Partners", "Textiles", "Electric", "Holdings", "Services"};
const std::vector<std::string> kNameTail = {"Ltd", "Inc", "Co", "GmbH", "LLC"};
const std::vector<std::string> kItems = {"Paper", "Toner", "Cables", "Chairs", "Lamps", "Boxes",
                                         "Tape",  "Desk",  "Pens",   "Labels", "Fuel",  "Repair"};
const std::vector<std::string> kNotes = {"Thank you", "Page 1", "Notes", "Original", "Copy", "Paid", "Due on receipt"};

std::string make_value(ValueKind kind, std::mt19937_64& rng) {
  char buf[64];
  switch (kind) {
    case ValueKind::invoice_number:
      std::snprintf(buf, sizeof buf, "INV-%06zu", pick(rng, 1000000));
      return buf;
    case ValueKind::date:
      std::snprintf(buf, sizeof buf, "%04zu-%02zu-%02zu", pick_between(rng, 2015, 2024), pick_between(rng, 1, 12),
                    pick_between(rng, 1, 28));
      return buf;
    case ValueKind::name: {
      std::string s = choose(rng, kNameHead) + " " + choose(rng, kNameBody);
      if (nn::uniform01(rng) < 0.6) s += " " + choose(rng, kNameTail);
      return s;
    }
    case ValueKind::amount: {
      const std::size_t digits = pick_between(rng, 1, 4);
      std::size_t whole = pick_between(rng, 1, 9);
      for (std::size_t d = 1; d < digits; ++d) whole = whole * 10 + pick(rng, 10);
      std::snprintf(buf, sizeof buf, "$%zu.%02zu", whole, pick(rng, 100));
      return buf;
    }
  }
  return {};
}

BoundingBox to_pixels(const BoundingBox& f, double page_w, double page_h) {
  return {f.x * page_w, f.y * page_h, f.w * page_w, f.h * page_h};
}

bool overlaps(const BoundingBox& a, const BoundingBox& b) { return doc::intersection_area(a, b) > 0.0; }

SlotSpec anchor(std::string text, BoundingBox box) {
  SlotSpec s;
  s.text = std::move(text);
  s.box = box;
  return s;
}

SlotSpec value(std::string type, ValueKind kind, BoundingBox box, std::string prefix = {}, std::string copy_of = {}) {
  SlotSpec s;
  s.entity_type = std::move(type);
  s.kind = kind;
  s.box = box;
  s.text = std::move(prefix);
  s.copy_of = std::move(copy_of);
  return s;
}

std::vector<BoundingBox> cell_grid(double top, std::size_t rows, double row_step, std::vector<double> xs, double w,
                                   double h) {
  std::vector<BoundingBox> out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (double x : xs) out.push_back({x, top + static_cast<double>(r) * row_step, w, h});
  }
  return out;
}

}  // namespace

std::vector<std::string> TemplateSpec::entity_types() const {
  std::vector<std::string> out;
  for (const auto& s : slots) {
    if (!s.entity_type.empty() && std::find(out.begin(), out.end(), s.entity_type) == out.end()) {
      out.push_back(s.entity_type);
    }
  }
  return out;
}

void validate_template(const TemplateSpec& spec, std::size_t max_item_rows) {
  std::vector<std::pair<std::string, BoundingBox>> boxes;
  for (const auto& s : spec.slots) boxes.emplace_back(s.entity_type.empty() ? s.text : s.entity_type, s.box);
  for (std::size_t r = 0; r < max_item_rows; ++r) {
    for (const auto& c : spec.item_columns) {
      BoundingBox b = c;
      b.y += static_cast<double>(r) * spec.item_row_step;
      boxes.emplace_back("item row " + std::to_string(r), b);
    }
  }
  for (const auto& c : spec.distractor_cells) boxes.emplace_back("distractor cell", c);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i].second;
    if (!(b.w > 0 && b.h > 0 && b.x >= 0 && b.y >= 0 && b.x + b.w <= 1 && b.y + b.h <= 1)) {
      throw std::invalid_argument(spec.name + ": box of '" + boxes[i].first + "' leaves the page");
    }
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (overlaps(b, boxes[j].second)) {
        throw std::invalid_argument(spec.name + ": boxes of '" + boxes[i].first + "' and '" + boxes[j].first +
                                    "' overlap");
      }
    }
  }
  std::map<ValueKind, std::size_t> kinds;
  for (const auto& s : spec.slots) {
    if (!s.entity_type.empty()) ++kinds[s.kind];
  }
  const bool shared = std::any_of(kinds.begin(), kinds.end(), [](const auto& kv) { return kv.second >= 2; });
  if (!shared) throw std::invalid_argument(spec.name + ": no two value slots share a value generator");
}

TemplateSpec fixed_template() {
  TemplateSpec t;
  t.name = "fixed";
  const double h = 0.018;
  t.slots = {
      anchor("INVOICE", {0.40, 0.04, 0.20, 0.025}),
      value("invoice_no", ValueKind::invoice_number, {0.06, 0.10, 0.36, h}, "Invoice No :"),
      value("date", ValueKind::date, {0.60, 0.10, 0.34, h}, "Date :"),
      anchor("Buyer", {0.06, 0.16, 0.12, h}),
      value("buyer", ValueKind::name, {0.06, 0.19, 0.38, h}, "Name :"),
      anchor("Seller", {0.55, 0.16, 0.12, h}),
      value("seller", ValueKind::name, {0.55, 0.19, 0.38, h}, "Name :"),
      anchor("Description", {0.06, 0.26, 0.20, h}),
      anchor("Qty", {0.50, 0.26, 0.08, h}),
      anchor("Amount", {0.70, 0.26, 0.14, h}),
      anchor("Total", {0.06, 0.46, 0.12, h}),
      value("price", ValueKind::amount, {0.50, 0.46, 0.16, h}),
      value("tax", ValueKind::amount, {0.72, 0.46, 0.16, h}, "", "price"),
  };
  t.item_columns = {{0.06, 0.29, 0.38, h}, {0.50, 0.29, 0.08, h}, {0.70, 0.29, 0.20, h}};
  t.item_row_step = 0.03;
  t.distractor_cells = cell_grid(0.55, 3, 0.05, {0.06, 0.38, 0.70}, 0.26, h);
  return t;
}

std::vector<TemplateSpec> multi_templates(std::size_t count, std::uint64_t seed) {
  struct Group {
    const char* type;
    ValueKind kind;
    std::vector<std::string> keys;
    const char* copy_of;
  };
  const std::vector<Group> groups = {
      {"invoice_no", ValueKind::invoice_number, {"Invoice No", "Invoice #", "Reference", "Document No"}, ""},
      {"date", ValueKind::date, {"Date", "Issued", "Invoice Date"}, ""},
      {"vendor", ValueKind::name, {"Vendor", "From", "Supplier"}, ""},
      {"payer", ValueKind::name, {"Payer", "Bill To", "Customer"}, ""},
      {"subtotal", ValueKind::amount, {"Subtotal", "Net", "Sum"}, ""},
      {"total", ValueKind::amount, {"Total", "Amount Due", "Balance"}, "subtotal"},
  };
  const double h = 0.018;
  std::vector<TemplateSpec> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::mt19937_64 rng(seed ^ (0x7e3a1c5bULL + 0x100000001b3ULL * (k + 1)));
    TemplateSpec t;
    t.name = "template_" + std::to_string(k);
    t.slots.push_back(anchor(choose(rng, std::vector<std::string>{"INVOICE", "BILL", "RECEIPT", "STATEMENT"}),
                             {0.40, 0.02, 0.20, 0.025}));
    // 2 columns x 8 rows of cells, 0.05 apart; each group takes a distinct cell.
    std::vector<std::size_t> cells(16);
    for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = c;
    for (std::size_t i = cells.size(); i > 1; --i) std::swap(cells[i - 1], cells[pick(rng, i)]);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const std::size_t cell = cells[g];
      const double x = cell % 2 == 0 ? 0.06 : 0.52;
      const double y = 0.07 + 0.05 * static_cast<double>(cell / 2);
      const bool above = nn::uniform01(rng) < 0.5;
      const std::string key = choose(rng, groups[g].keys);
      if (above) {
        t.slots.push_back(anchor(key, {x, y, 0.16, h}));
        t.slots.push_back(value(groups[g].type, groups[g].kind, {x, y + 0.022, 0.30, h}, "", groups[g].copy_of));
      } else {
        t.slots.push_back(anchor(key, {x, y, 0.14, h}));
        t.slots.push_back(value(groups[g].type, groups[g].kind, {x + 0.15, y, 0.26, h}, "", groups[g].copy_of));
      }
    }
    t.item_columns = {{0.06, 0.50, 0.38, h}, {0.50, 0.50, 0.08, h}, {0.70, 0.50, 0.20, h}};
    t.item_row_step = 0.03;
    t.distractor_cells = cell_grid(0.68, 3, 0.05, {0.06, 0.38, 0.70}, 0.26, h);
    out.push_back(std::move(t));
  }
  return out;
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("generator." + field + ": " + why);
  };
  if (n_documents == 0) fail("n_documents", "must be positive");
  if (n_templates == 0) fail("n_templates", "must be positive");
  if (!(jitter >= 0.0) || !std::isfinite(jitter)) fail("jitter", "must be a finite value >= 0");
  if (min_distractors > max_distractors) fail("min_distractors", "exceeds max_distractors");
  if (max_distractors > 7) fail("max_distractors", "at most 7 (9 cells, 2 reserved for empty segments)");
  if (min_item_rows > max_item_rows) fail("min_item_rows", "exceeds max_item_rows");
  if (max_item_rows > 4) fail("max_item_rows", "at most 4");
  if (!(empty_segment_rate >= 0.0 && empty_segment_rate <= 1.0)) fail("empty_segment_rate", "must lie in [0, 1]");
  for (const auto& [name, v] : {std::pair{"train_fraction", train_fraction}, std::pair{"val_fraction", val_fraction},
                                std::pair{"test_fraction", test_fraction}}) {
    if (!(v >= 0.0 && v <= 1.0)) fail(name, "must lie in [0, 1]");
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) fail("train_fraction", "splits must sum to 1");
  if (!(page_w > 0.0 && page_h > 0.0)) fail("page_w", "page size must be positive");
}

nlohmann::json to_json(const GeneratorConfig& c) {
  return {{"n_documents", c.n_documents},
          {"n_templates", c.n_templates},
          {"jitter", c.jitter},
          {"min_distractors", c.min_distractors},
          {"max_distractors", c.max_distractors},
          {"min_item_rows", c.min_item_rows},
          {"max_item_rows", c.max_item_rows},
          {"empty_segment_rate", c.empty_segment_rate},
          {"seed", c.seed},
          {"train_fraction", c.train_fraction},
          {"val_fraction", c.val_fraction},
          {"test_fraction", c.test_fraction},
          {"page_w", c.page_w},
          {"page_h", c.page_h}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    try {
      if (k == "n_documents") c.n_documents = it->get<std::size_t>();
      else if (k == "n_templates") c.n_templates = it->get<std::size_t>();
      else if (k == "jitter") c.jitter = it->get<double>();
      else if (k == "min_distractors") c.min_distractors = it->get<std::size_t>();
      else if (k == "max_distractors") c.max_distractors = it->get<std::size_t>();
      else if (k == "min_item_rows") c.min_item_rows = it->get<std::size_t>();
      else if (k == "max_item_rows") c.max_item_rows = it->get<std::size_t>();
      else if (k == "empty_segment_rate") c.empty_segment_rate = it->get<double>();
      else if (k == "seed") c.seed = it->get<std::uint64_t>();
      else if (k == "train_fraction") c.train_fraction = it->get<double>();
      else if (k == "val_fraction") c.val_fraction = it->get<double>();
      else if (k == "test_fraction") c.test_fraction = it->get<double>();
      else if (k == "page_w") c.page_w = it->get<double>();
      else if (k == "page_h") c.page_h = it->get<double>();
      else throw std::invalid_argument("generator." + k + ": unknown key");
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument("generator." + k + ": wrong type");
    }
  }
  return c;
}

std::vector<TemplateSpec> templates_for(const GeneratorConfig& config) {
  std::vector<TemplateSpec> templates =
      config.n_templates == 1 ? std::vector<TemplateSpec>{fixed_template()} : multi_templates(config.n_templates, config.seed);
  for (const auto& t : templates) validate_template(t, config.max_item_rows);
  return templates;
}

double standard_normal(std::mt19937_64& rng) {
  // Box-Muller on the library's own uniform draw, so values do not depend on
  // the standard library's distribution implementation.
  const double u1 = 1.0 - nn::uniform01(rng);
  const double u2 = nn::uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

doc::Document perturb(const doc::Document& doc, double sigma, std::mt19937_64& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("perturb: sigma must be >= 0");
  doc::Document out = doc;
  if (sigma == 0.0) return out;
  std::vector<std::pair<double, double>> shift(doc.segments.size());
  for (std::size_t s = 0; s < doc.segments.size(); ++s) {
    BoundingBox b = doc.segments[s].bbox;
    b.x += standard_normal(rng) * sigma * doc.page_w;
    b.y += standard_normal(rng) * sigma * doc.page_h;
    b = doc::clamp_to_page(b, doc.page_w, doc.page_h);
    shift[s] = {b.x - doc.segments[s].bbox.x, b.y - doc.segments[s].bbox.y};
    out.segments[s].bbox = b;
  }
  for (auto& a : out.annotations) {
    std::size_t best = doc.segments.size();
    double best_ratio = 0.0;
    for (std::size_t s = 0; s < doc.segments.size(); ++s) {
      const double r = doc::overlap_ratio(a.bbox, doc.segments[s].bbox);
      if (r > best_ratio) {
        best_ratio = r;
        best = s;
      }
    }
    if (best == doc.segments.size()) continue;
    a.bbox.x += shift[best].first;
    a.bbox.y += shift[best].second;
    a.bbox = doc::clamp_to_page(a.bbox, doc.page_w, doc.page_h);
  }
  return out;
}

doc::Document generate_document(const GeneratorConfig& config, const std::vector<TemplateSpec>& templates,
                                std::size_t index) {
  std::mt19937_64 rng(config.seed ^ static_cast<std::uint64_t>(index));
  const TemplateSpec& t = templates[index % templates.size()];
  doc::Document d;
  char id[32];
  std::snprintf(id, sizeof id, "doc%05zu", index);
  d.doc_id = id;
  d.page_w = config.page_w;
  d.page_h = config.page_h;

  struct Pending {
    std::string text;
    BoundingBox box;
    std::string entity_type;
    std::string value;
  };
  std::vector<Pending> segs;
  std::map<std::string, std::string> values;
  for (const auto& s : t.slots) {
    const BoundingBox box = to_pixels(s.box, d.page_w, d.page_h);
    if (s.entity_type.empty()) {
      segs.push_back({s.text, box, "", ""});
      continue;
    }
    std::string v = s.copy_of.empty() ? make_value(s.kind, rng) : values.at(s.copy_of);
    values[s.entity_type] = v;
    segs.push_back({s.text.empty() ? v : s.text + " " + v, box, s.entity_type, v});
  }
  const std::size_t rows = pick_between(rng, config.min_item_rows, config.max_item_rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double dy = static_cast<double>(r) * t.item_row_step;
    const std::string texts[3] = {choose(rng, kItems) + " " + choose(rng, kItems),
                                  std::to_string(pick_between(rng, 1, 20)), make_value(ValueKind::amount, rng)};
    for (std::size_t c = 0; c < t.item_columns.size(); ++c) {
      BoundingBox f = t.item_columns[c];
      f.y += dy;
      segs.push_back({texts[c], to_pixels(f, d.page_w, d.page_h), "", ""});
    }
  }
  std::vector<std::size_t> cells(t.distractor_cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = c;
  for (std::size_t i = cells.size(); i > 1; --i) std::swap(cells[i - 1], cells[pick(rng, i)]);
  std::size_t next_cell = 0;
  const std::size_t distractors = pick_between(rng, config.min_distractors, config.max_distractors);
  for (std::size_t k = 0; k < distractors && next_cell < cells.size(); ++k) {
    const double u = nn::uniform01(rng);
    const std::string text = u < 0.4   ? make_value(ValueKind::amount, rng)
                             : u < 0.7 ? make_value(ValueKind::name, rng)
                                       : choose(rng, kNotes);
    segs.push_back({text, to_pixels(t.distractor_cells[cells[next_cell++]], d.page_w, d.page_h), "", ""});
  }
  for (int k = 0; k < 2 && next_cell < cells.size(); ++k) {
    if (nn::uniform01(rng) < config.empty_segment_rate) {
      segs.push_back({"", to_pixels(t.distractor_cells[cells[next_cell++]], d.page_w, d.page_h), "", ""});
    }
  }

  // Emit in a shuffled order so segment ids carry no layout information.
  std::vector<std::size_t> order(segs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[pick(rng, i)]);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Pending& p = segs[order[k]];
    doc::TextSegment seg;
    seg.id = static_cast<int>(k);
    seg.text = p.text;
    seg.bbox = p.box;
    seg.tokens = doc::tokenize(p.text);
    d.segments.push_back(std::move(seg));
    if (!p.entity_type.empty()) d.annotations.push_back({p.entity_type, p.value, p.box});
  }
  std::stable_sort(d.annotations.begin(), d.annotations.end(),
                   [](const auto& a, const auto& b) { return a.entity_type < b.entity_type; });
  return perturb(d, config.jitter, rng);
}

Corpus generate_corpus(const GeneratorConfig& config, std::size_t jobs) {
  config.validate();
  const auto templates = templates_for(config);
  const std::size_t n = config.n_documents;
  std::vector<doc::Document> docs(n);
  jobs = std::clamp<std::size_t>(jobs, 1, n);
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t t = 0; t < jobs; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += jobs) docs[i] = generate_document(config, templates, i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(n)));
  const auto n_val =
      std::min(n - n_train, static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(n))));
  Corpus c;
  for (std::size_t i = 0; i < n; ++i) {
    auto& bucket = i < n_train ? c.train : i < n_train + n_val ? c.val : c.test;
    bucket.push_back(std::move(docs[i]));
  }
  return c;
}

double ambiguity_rate(const std::vector<doc::Document>& docs) {
  if (docs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& d : docs) {
    bool found = false;
    for (std::size_t i = 0; i < d.annotations.size() && !found; ++i) {
      for (std::size_t j = i + 1; j < d.annotations.size() && !found; ++j) {
        found = d.annotations[i].entity_type != d.annotations[j].entity_type &&
                doc::normalize_value(d.annotations[i].value) == doc::normalize_value(d.annotations[j].value);
      }
    }
    hits += found;
  }
  return static_cast<double>(hits) / static_cast<double>(docs.size());
}

}  // namespace docgraph::synth
