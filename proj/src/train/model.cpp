#include "docgraph/train/model.hpp"

#include <limits>
#include <stdexcept>

#include "docgraph/doc/alignment.hpp"
#include "docgraph/doc/reading_order.hpp"
#include "docgraph/nn/checkpoint.hpp"
#include "docgraph/nn/ops.hpp"
#include "docgraph/tagger/crf.hpp"
#include "docgraph/train/multitask.hpp"

namespace docgraph::train {

using nn::Tensor;
using nn::Var;

namespace {
constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
}

Model build_model(const TrainConfig& config, doc::TagSet tagset, doc::Vocabulary vocab) {
  config.validate();
  if (tagset.entity_count() == 0) throw std::invalid_argument("model.entity_types: schema has no entity types");
  Model m;
  m.config = config;
  m.tagset = std::move(tagset);
  m.vocab = std::move(vocab);
  std::mt19937_64 rng(config.seed);
  nn::ParameterStore& store = *m.store;
  const ModelDims& d = config.dims;
  const bool graph = uses_graph(config.mode);

  if (graph) {
    if (!config.ablation.no_text_features) {
      m.encoder = gconv::SegmentEncoder::create(store, "encoder", m.vocab.size(), d.segment_embed, d.encoder_hidden,
                                                rng);
    }
    for (std::size_t l = 0; l < config.layers; ++l) {
      gconv::GraphConvDims g;
      g.node_in = l == 0 ? 2 * d.encoder_hidden : d.node_out;
      g.edge_in = l == 0 ? doc::kEdgeFeatureDim : d.edge_out;
      g.hidden = d.graph_hidden;
      g.node_out = d.node_out;
      g.edge_out = d.edge_out;
      m.layers.push_back(gconv::GraphConvLayer::create(store, "graph" + std::to_string(l), g, rng));
    }
  }

  tagger::TaggerDims t;
  t.vocab = m.vocab.size();
  t.embed_dim = d.token_embed;
  t.graph_dim = graph ? d.node_out : 0;
  t.hidden = d.tagger_hidden;
  t.tags = m.tagset.size();
  m.tagger_params = tagger::TaggerParams::create(store, "tagger", t, rng);

  if (config.mode == Mode::gcn_multitask) {
    m.classifier_w = &store.add("classifier.w", nn::fan_in_uniform(d.node_out, m.class_count(), rng));
    m.classifier_b = &store.add("classifier.b", Tensor({m.class_count()}));
    m.task_log_vars = &store.add("multitask.log_vars", Tensor({2}));
  }
  return m;
}

PreparedDocument prepare_document(const Model& model, const doc::Document& doc, bool with_labels) {
  PreparedDocument p;
  p.source = &doc;
  p.graph = doc::build_graph(doc);
  for (const doc::TextSegment& s : doc.segments) {
    std::vector<std::size_t> ids;
    for (const auto& tok : s.tokens) ids.push_back(model.vocab.id(tok));
    p.token_ids.push_back(std::move(ids));
  }
  if (with_labels) {
    auto labels = doc::align_annotations(doc, model.tagset, model.config.overlap_threshold, model.config.tokenizer);
    p.labeled = true;
    p.gold_tags = std::move(labels.tags);
    p.segment_class = std::move(labels.segment_class);
    p.aligned = labels.aligned;
    p.warnings = std::move(labels.warnings);
  }
  return p;
}

SequenceLayout sequence_layout(const Model& model, const PreparedDocument& doc) {
  SequenceLayout l;
  std::vector<std::size_t> lengths;
  auto push = [&l](std::size_t id, std::size_t owner, std::size_t pos) {
    l.token_ids.push_back(id);
    l.owner.push_back(owner);
    l.position.push_back(pos);
  };
  if (model.config.mode == Mode::baseline2) {
    const auto order = doc::reading_order_indices(*doc.source);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t s = order[k];
      if (k > 0) push(doc::Vocabulary::kSep, order[k - 1], npos);
      for (std::size_t t = 0; t < doc.token_ids[s].size(); ++t) push(doc.token_ids[s][t], s, t);
    }
    if (l.token_ids.empty()) push(doc::Vocabulary::kPad, 0, npos);
    lengths.push_back(l.token_ids.size());
  } else {
    for (std::size_t s = 0; s < doc.token_ids.size(); ++s) {
      const auto& ids = doc.token_ids[s];
      if (ids.empty()) {
        push(doc::Vocabulary::kPad, s, npos);
        lengths.push_back(1);
        continue;
      }
      for (std::size_t t = 0; t < ids.size(); ++t) push(ids[t], s, t);
      lengths.push_back(ids.size());
    }
  }
  l.batch = gconv::SequenceBatch::from_lengths(lengths);
  return l;
}

ForwardResult forward(nn::Tape& tape, const Model& model, const PreparedDocument& doc, std::mt19937_64* dropout_rng) {
  ForwardResult r;
  r.layout = sequence_layout(model, doc);
  Var graph_rows;
  if (uses_graph(model.config.mode)) {
    const std::size_t n = doc.graph.node_count;
    const Var initial = model.encoder ? model.encoder->encode(tape, doc.token_ids)
                                      : tape.constant(Tensor({n, 2 * model.config.dims.encoder_hidden}));
    gconv::StackOptions opt;
    opt.attention = model.config.ablation.no_attention ? gconv::AttentionMode::uniform : gconv::AttentionMode::learned;
    opt.zero_edges = model.config.ablation.no_edge_features;
    auto stack = gconv::stack_forward(tape, doc.graph, initial, model.layers, opt);
    r.node_embeddings = stack.nodes;
    r.attention = std::move(stack.attention);
    graph_rows = r.node_embeddings;
    if (model.multitask()) {
      r.class_logits = segment_classifier_logits(r.node_embeddings, *model.classifier_w, *model.classifier_b);
    }
  }
  Var fused = tagger::fuse_inputs(tape, model.tagger_params, r.layout.token_ids, graph_rows, r.layout.owner);
  const double rate = model.config.dropout;
  if (dropout_rng != nullptr && rate > 0.0) {
    Tensor mask(fused.shape());
    for (double& v : mask.data()) v = nn::uniform01(*dropout_rng) < rate ? 0.0 : 1.0 / (1.0 - rate);
    fused = nn::mul(fused, tape.constant(std::move(mask)));
  }
  r.emissions = tagger::emissions(model.tagger_params, fused, r.layout.batch);
  return r;
}

namespace {

std::vector<std::vector<int>> gold_sequences(const SequenceLayout& l, const PreparedDocument& doc) {
  std::vector<std::vector<int>> gold;
  for (std::size_t b = 0; b < l.batch.count(); ++b) {
    std::vector<int> y;
    for (std::size_t k = 0; k < l.batch.lengths[b]; ++k) {
      const std::size_t row = l.batch.offsets[b] + k;
      y.push_back(l.position[row] == npos ? doc::TagSet::outside() : doc.gold_tags[l.owner[row]][l.position[row]]);
    }
    gold.push_back(std::move(y));
  }
  return gold;
}

}  // namespace

Var document_loss(nn::Tape& tape, const Model& model, const PreparedDocument& doc, LossParts* parts,
                  std::mt19937_64* dropout_rng) {
  if (!doc.labeled) throw std::invalid_argument("document_loss: document '" + doc.source->doc_id + "' has no labels");
  const ForwardResult r = forward(tape, model, doc, dropout_rng);
  const Var extraction =
      tagger::crf_negative_log_likelihood(r.emissions, model.tagger_params.crf, r.layout.batch, gold_sequences(r.layout, doc));
  Var total = extraction;
  double classification = 0.0;
  if (model.multitask()) {
    const Var cls = sigmoid_bce(r.class_logits, doc.segment_class);
    classification = cls.value().item();
    total = multitask_combine(std::vector<Var>{extraction, cls}, tape.param(*model.task_log_vars));
  }
  if (parts != nullptr) {
    parts->extraction = extraction.value().item();
    parts->classification = classification;
    parts->total = total.value().item();
  }
  return total;
}

DocumentPrediction predict(const Model& model, const PreparedDocument& doc) {
  nn::Tape tape;
  const ForwardResult r = forward(tape, model, doc);
  const doc::Document& d = *doc.source;
  DocumentPrediction out;
  out.doc_id = d.doc_id;
  out.tags.resize(d.segments.size());
  for (std::size_t s = 0; s < d.segments.size(); ++s) out.tags[s].assign(d.segments[s].tokens.size(), 0);

  const Tensor& em = r.emissions.value();
  const std::size_t K = model.tagset.size();
  const auto crf = model.tagger_params.crf.scores();
  const auto& l = r.layout;
  for (std::size_t b = 0; b < l.batch.count(); ++b) {
    Tensor e({l.batch.lengths[b], K});
    std::copy_n(em.raw() + l.batch.offsets[b] * K, e.size(), e.raw());
    const auto path = tagger::viterbi_decode(e, crf);
    for (std::size_t k = 0; k < path.size(); ++k) {
      const std::size_t row = l.batch.offsets[b] + k;
      if (l.position[row] != npos) out.tags[l.owner[row]][l.position[row]] = path[k];
    }
  }
  for (std::size_t s = 0; s < d.segments.size(); ++s) {
    for (const auto& span : tagger::decode_entities(out.tags[s], d.segments[s].tokens, model.tagset,
                                                    model.config.tokenizer)) {
      out.entities.push_back({span.entity_type, span.value, d.segments[s].id, span.begin, span.end});
    }
  }
  if (r.class_logits.valid()) {
    const Tensor& z = r.class_logits.value();
    for (std::size_t i = 0; i < z.rows(); ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < z.cols(); ++c) {
        if (z.at(i, c) > z.at(i, best)) best = c;
      }
      out.segment_class.push_back(best);
    }
  }
  for (const Var& a : r.attention) out.attention.push_back(a.value());
  return out;
}

DocumentPrediction tag_document(const Model& model, const doc::Document& doc) {
  return predict(model, prepare_document(model, doc, false));
}

nlohmann::json extraction_to_json(const DocumentPrediction& prediction) {
  nlohmann::json entities = nlohmann::json::array();
  for (const auto& e : prediction.entities) {
    entities.push_back({{"type", e.entity_type},
                        {"value", e.value},
                        {"segment_id", e.segment_id},
                        {"token_range", {e.begin, e.end}}});
  }
  return {{"doc_id", prediction.doc_id}, {"entities", std::move(entities)}};
}

void save_model(const Model& model, const std::filesystem::path& path) {
  nn::Checkpoint ckpt;
  ckpt.config = {{"train", to_json(model.config)},
                 {"entity_types", model.tagset.entity_types()},
                 {"vocabulary", model.vocab.entries()}};
  ckpt.parameters = nn::parameters_to_json(*model.store);
  nn::save_checkpoint(ckpt, path);
}

Model load_model(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::read_checkpoint(path);
  try {
    const auto& c = ckpt.config;
    TrainConfig config = train_config_from_json(c.at("train"));
    doc::TagSet tagset(c.at("entity_types").get<std::vector<std::string>>());
    auto vocab = doc::Vocabulary::from_entries(c.at("vocabulary").get<std::vector<std::string>>());
    Model m = build_model(config, std::move(tagset), std::move(vocab));
    nn::load_parameters(ckpt.parameters, *m.store);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw nn::CheckpointError(path.string() + ": malformed model config: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw nn::CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace docgraph::train
