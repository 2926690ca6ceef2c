#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docgraph/doc/document.hpp"

namespace docgraph::synth {

enum class ValueKind { invoice_number, date, name, amount };

/// One fixed piece of a template. Value slots carry an entity type; slots
/// without one are anchors or keys and stay unlabeled.
struct SlotSpec {
  std::string entity_type;
  std::string text;  // anchor/key text, or an inline key prefix for value slots
  ValueKind kind = ValueKind::name;
  std::string copy_of;     // entity type whose value this slot repeats verbatim
  doc::BoundingBox box;    // page fractions
};

struct TemplateSpec {
  std::string name;
  std::vector<SlotSpec> slots;
  /// Item rows (description, quantity, amount; all unlabeled).
  std::vector<doc::BoundingBox> item_columns;  // page fractions for the first row
  double item_row_step = 0.03;
  /// Free cells for distractors and empty segments.
  std::vector<doc::BoundingBox> distractor_cells;

  std::vector<std::string> entity_types() const;
};

/// Throws std::invalid_argument if slot or item boxes overlap, or no two
/// value slots share a value generator.
void validate_template(const TemplateSpec& spec, std::size_t max_item_rows);

TemplateSpec fixed_template();
/// `count` layouts with keys left of or above their values, derived from seed.
std::vector<TemplateSpec> multi_templates(std::size_t count, std::uint64_t seed);

struct GeneratorConfig {
  std::size_t n_documents = 300;
  std::size_t n_templates = 1;  // 1: fixed template, otherwise that many layouts
  double jitter = 0.005;        // sigma as a fraction of page size
  std::size_t min_distractors = 0;
  std::size_t max_distractors = 4;
  std::size_t min_item_rows = 1;
  std::size_t max_item_rows = 4;
  double empty_segment_rate = 0.3;  // chance of each of up to two empty segments
  std::uint64_t seed = 1;
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  double page_w = 1000.0;
  double page_h = 1400.0;

  void validate() const;
};

nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

struct Corpus {
  std::vector<doc::Document> train;
  std::vector<doc::Document> val;
  std::vector<doc::Document> test;
};

/// Document i uses an engine seeded with seed ^ i, so output does not depend
/// on generation order.
doc::Document generate_document(const GeneratorConfig& config, const std::vector<TemplateSpec>& templates,
                                std::size_t index);
/// Documents are generated on `jobs` threads; output is identical for any count.
Corpus generate_corpus(const GeneratorConfig& config, std::size_t jobs = 1);
std::vector<TemplateSpec> templates_for(const GeneratorConfig& config);

/// Shifts each box by independent N(0, sigma x page size) in x and y,
/// clamped to the page. Annotations move with the segment they overlap most.
doc::Document perturb(const doc::Document& doc, double sigma, std::mt19937_64& rng);

/// Fraction of documents with two gold entities of different types and the same value.
double ambiguity_rate(const std::vector<doc::Document>& docs);

double standard_normal(std::mt19937_64& rng);

}  // namespace docgraph::synth
