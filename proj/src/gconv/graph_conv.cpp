#include "docgraph/gconv/graph_conv.hpp"

#include <stdexcept>

#include "docgraph/nn/ops.hpp"

namespace docgraph::gconv {

using nn::Tensor;
using nn::Var;

GraphConvLayer GraphConvLayer::create(nn::ParameterStore& store, const std::string& prefix,
                                      const GraphConvDims& dims, std::mt19937_64& rng) {
  if (dims.node_in == 0 || dims.edge_in == 0 || dims.hidden == 0 || dims.node_out == 0 || dims.edge_out == 0) {
    throw std::invalid_argument(prefix + ": graph convolution sizes must be positive");
  }
  GraphConvLayer l;
  l.dims = dims;
  const std::size_t in = 2 * dims.node_in + dims.edge_in;
  l.w1 = &store.add(prefix + ".w1", nn::fan_in_uniform(in, dims.hidden, rng));
  l.b1 = &store.add(prefix + ".b1", Tensor({dims.hidden}));
  l.w2 = &store.add(prefix + ".w2", nn::fan_in_uniform(dims.hidden, dims.node_out, rng));
  l.b2 = &store.add(prefix + ".b2", Tensor({dims.node_out}));
  l.w_a = &store.add(prefix + ".w_a", nn::fan_in_uniform(dims.node_out, 1, rng));
  l.we1 = &store.add(prefix + ".we1", nn::fan_in_uniform(dims.node_out, dims.hidden, rng));
  l.be1 = &store.add(prefix + ".be1", Tensor({dims.hidden}));
  l.we2 = &store.add(prefix + ".we2", nn::fan_in_uniform(dims.hidden, dims.edge_out, rng));
  l.be2 = &store.add(prefix + ".be2", Tensor({dims.edge_out}));
  return l;
}

namespace {

Var triplet_output(Var pre_activation, const GraphConvLayer& layer) {
  nn::Tape& tape = pre_activation.tape();
  return nn::add(nn::matmul(nn::leaky_relu(pre_activation, kMlpSlope), tape.param(*layer.w2)),
                 tape.param(*layer.b2));
}

void check_width(const Var& v, std::size_t width, const char* what) {
  const auto& s = v.shape();
  if (s.size() != 2 || s[1] != width) {
    throw nn::NumericError(std::string(what) + " has shape " + nn::shape_string(s) + ", expected width " +
                           std::to_string(width));
  }
}

}  // namespace

Var triplet_features(Var t_src, Var r, Var t_dst, const GraphConvLayer& layer) {
  check_width(t_src, layer.dims.node_in, "source node embedding");
  check_width(r, layer.dims.edge_in, "edge embedding");
  check_width(t_dst, layer.dims.node_in, "target node embedding");
  nn::Tape& tape = t_src.tape();
  const Var x = nn::concat({t_src, r, t_dst}, 1);
  return triplet_output(nn::add(nn::matmul(x, tape.param(*layer.w1)), tape.param(*layer.b1)), layer);
}

Var all_triplets(const GraphState& state, const GraphConvLayer& layer) {
  const std::size_t n = state.n;
  const std::size_t d = layer.dims.node_in;
  const std::size_t de = layer.dims.edge_in;
  check_width(state.nodes, d, "node embeddings");
  check_width(state.edges, de, "edge embeddings");
  if (state.nodes.shape()[0] != n || state.edges.shape()[0] != n * n) {
    throw nn::NumericError("graph state sizes disagree with n = " + std::to_string(n));
  }
  nn::Tape& tape = state.nodes.tape();
  const Var w1 = tape.param(*layer.w1);
  const Var src_proj = nn::matmul(state.nodes, nn::slice(w1, 0, 0, d));
  const Var edge_proj = nn::matmul(state.edges, nn::slice(w1, 0, d, d + de));
  const Var dst_proj = nn::matmul(state.nodes, nn::slice(w1, 0, d + de, 2 * d + de));
  std::vector<std::size_t> src(n * n);
  std::vector<std::size_t> dst(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      src[i * n + j] = i;
      dst[i * n + j] = j;
    }
  }
  Var pre = nn::add(nn::gather_rows(src_proj, src), edge_proj);
  pre = nn::add(pre, nn::gather_rows(dst_proj, dst));
  pre = nn::add(pre, tape.param(*layer.b1));
  return triplet_output(pre, layer);
}

Var attention_coefficients(Var h, std::size_t sources, const GraphConvLayer& layer) {
  check_width(h, layer.dims.node_out, "triplet features");
  const std::size_t rows = h.shape()[0];
  if (sources == 0 || rows % sources != 0 || rows == 0) {
    throw std::invalid_argument("attention_coefficients: " + std::to_string(rows) + " rows do not split into " +
                                std::to_string(sources) + " sources");
  }
  nn::Tape& tape = h.tape();
  const Var scores = nn::matmul(h, tape.param(*layer.w_a));
  const Var logits = nn::leaky_relu(nn::reshape(scores, {sources, rows / sources}), kAttentionSlope);
  return nn::softmax(logits);
}

LayerResult layer_forward(const GraphState& state, const GraphConvLayer& layer, AttentionMode mode,
                          bool update_edges) {
  const std::size_t n = state.n;
  if (n == 0) throw std::invalid_argument("layer_forward: empty graph");
  nn::Tape& tape = state.nodes.tape();
  LayerResult out;
  out.triplets = all_triplets(state, layer);
  if (mode == AttentionMode::learned) {
    out.attention = attention_coefficients(out.triplets, n, layer);
  } else {
    out.attention = tape.constant(Tensor({n, n}, 1.0 / static_cast<double>(n)));
  }
  const Var weighted = nn::mul(out.triplets, nn::reshape(out.attention, {n * n, 1}));
  const Var summed = nn::sum_axis(nn::reshape(weighted, {n, n, layer.dims.node_out}), 1);
  out.state.n = n;
  out.state.nodes = nn::tanh(summed);
  if (update_edges) {
    const Var hidden = nn::leaky_relu(
        nn::add(nn::matmul(out.triplets, tape.param(*layer.we1)), tape.param(*layer.be1)), kMlpSlope);
    out.state.edges = nn::add(nn::matmul(hidden, tape.param(*layer.we2)), tape.param(*layer.be2));
  }
  return out;
}

Tensor edge_feature_tensor(const doc::DocumentGraph& graph) {
  Tensor t({graph.edge_count(), doc::kEdgeFeatureDim});
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    for (std::size_t k = 0; k < doc::kEdgeFeatureDim; ++k) t.at(e, k) = graph.edges[e][k];
  }
  return t;
}

StackResult stack_forward(nn::Tape& tape, const doc::DocumentGraph& graph, Var initial_nodes,
                          const std::vector<GraphConvLayer>& layers, const StackOptions& options) {
  if (layers.empty()) throw std::invalid_argument("stack_forward: at least one layer is required");
  const std::size_t n = graph.node_count;
  GraphState state;
  state.n = n;
  state.nodes = options.zero_text ? tape.constant(Tensor(initial_nodes.shape())) : initial_nodes;
  state.edges = options.zero_edges ? tape.constant(Tensor({n * n, doc::kEdgeFeatureDim}))
                                   : tape.constant(edge_feature_tensor(graph));
  StackResult result;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const bool last = l + 1 == layers.size();
    LayerResult r = layer_forward(state, layers[l], options.attention, !last);
    result.attention.push_back(r.attention);
    state = r.state;
  }
  result.nodes = state.nodes;
  return result;
}

StackResult stack_forward(nn::Tape& tape, const doc::DocumentGraph& graph, const SegmentEncoder& encoder,
                          const std::vector<std::vector<std::size_t>>& segment_tokens,
                          const std::vector<GraphConvLayer>& layers, const StackOptions& options) {
  if (segment_tokens.size() != graph.node_count) {
    throw std::invalid_argument("stack_forward: " + std::to_string(segment_tokens.size()) +
                                " token lists for a graph of " + std::to_string(graph.node_count) + " nodes");
  }
  return stack_forward(tape, graph, encoder.encode(tape, segment_tokens), layers, options);
}

nlohmann::json attention_to_json(const std::vector<int>& segment_ids, const std::vector<Tensor>& attention) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Tensor& a : attention) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < a.rows(); ++i) {
      rows.push_back(std::vector<double>(a.raw() + i * a.cols(), a.raw() + (i + 1) * a.cols()));
    }
    layers.push_back(std::move(rows));
  }
  return {{"segment_ids", segment_ids}, {"layers", std::move(layers)}};
}

}  // namespace docgraph::gconv
