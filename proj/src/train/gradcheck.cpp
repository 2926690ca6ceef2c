#include "docgraph/train/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "docgraph/train/model.hpp"

namespace docgraph::train {

doc::Document micro_document() {
  doc::Document d;
  d.doc_id = "micro";
  d.page_w = 200.0;
  d.page_h = 100.0;
  const char* texts[2] = {"invoice alpha beta", "total gamma delta"};
  const doc::BoundingBox boxes[2] = {{10.0, 10.0, 80.0, 12.0}, {110.0, 40.0, 70.0, 12.0}};
  for (int s = 0; s < 2; ++s) {
    doc::TextSegment seg;
    seg.id = s;
    seg.text = texts[s];
    seg.bbox = boxes[s];
    seg.tokens = doc::tokenize(seg.text);
    d.segments.push_back(std::move(seg));
  }
  d.annotations.push_back({"number", "alpha beta", boxes[0]});
  d.annotations.push_back({"amount", "delta", boxes[1]});
  return d;
}

TrainConfig micro_config(Mode mode, Ablation ablation) {
  TrainConfig c;
  c.mode = mode;
  c.ablation = ablation;
  c.dims.token_embed = 3;
  c.dims.tagger_hidden = 3;
  c.dims.segment_embed = 3;
  c.dims.encoder_hidden = 2;
  c.dims.graph_hidden = 4;
  c.dims.node_out = 3;
  c.dims.edge_out = 2;
  c.layers = 2;
  c.entity_types = {"amount", "number"};
  return c;
}

std::vector<TrainConfig> gradcheck_suite() {
  std::vector<TrainConfig> out;
  for (Mode m : {Mode::baseline1, Mode::baseline2, Mode::gcn, Mode::gcn_multitask}) out.push_back(micro_config(m));
  Ablation a;
  a.no_edge_features = true;
  out.push_back(micro_config(Mode::gcn, a));
  a = {};
  a.no_text_features = true;
  out.push_back(micro_config(Mode::gcn, a));
  a = {};
  a.no_attention = true;
  out.push_back(micro_config(Mode::gcn, a));
  a.no_edge_features = a.no_text_features = true;
  out.push_back(micro_config(Mode::gcn, a));
  a = {};
  a.no_edge_features = true;
  out.push_back(micro_config(Mode::gcn_multitask, a));
  return out;
}

ModelGradCheck check_model_gradients(const TrainConfig& config, std::uint64_t seed, double eps, double min_gradient) {
  const doc::Document d = micro_document();
  Model model = build_model(config, doc::TagSet(config.entity_types), doc::Vocabulary::build({d}));
  const PreparedDocument prepared = prepare_document(model, d, true);
  const auto params = model.store->all();
  auto loss = [&](nn::Tape& tape) { return document_loss(tape, model, prepared); };

  ModelGradCheck out;
  out.label = std::string(to_string(config.mode)) + "/" + config.ablation.label();
  constexpr std::uint64_t kMaxDraws = 64;
  for (std::uint64_t k = 0; k < kMaxDraws; ++k) {
    std::mt19937_64 rng(seed + k);
    for (nn::Parameter* p : params) {
      for (double& v : p->value.data()) v = 2.0 * nn::uniform01(rng) - 1.0;
    }
    nn::zero_gradients(params);
    nn::Tape tape;
    tape.backward(loss(tape));
    double smallest = std::numeric_limits<double>::infinity();
    for (const nn::Parameter* p : params) {
      for (double g : p->grad.data()) {
        if (g != 0.0) smallest = std::min(smallest, std::abs(g));
      }
    }
    nn::zero_gradients(params);
    out.point_seed = seed + k;
    out.min_abs_gradient = smallest;
    if (smallest >= min_gradient) break;
  }

  nn::GradCheckOptions opt;
  opt.eps = eps;
  out.report = nn::gradient_check(loss, params, opt);
  std::map<std::string, double> components;
  std::vector<std::string> order;
  for (const auto& p : out.report.per_param) {
    const std::string key = p.param.substr(0, p.param.find('.'));
    if (!components.count(key)) order.push_back(key);
    components[key] = std::max(components[key], p.max_rel_error);
  }
  for (const auto& k : order) out.per_component.emplace_back(k, components[k]);
  return out;
}

}  // namespace docgraph::train
