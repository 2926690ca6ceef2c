#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docgraph/doc/graph.hpp"
#include "docgraph/gconv/segment_encoder.hpp"
#include "docgraph/nn/params.hpp"
#include "docgraph/nn/tape.hpp"

namespace docgraph::gconv {

inline constexpr double kAttentionSlope = 0.01;
inline constexpr double kMlpSlope = 0.01;

struct GraphConvDims {
  std::size_t node_in = 64;
  std::size_t edge_in = doc::kEdgeFeatureDim;
  std::size_t hidden = 64;    // triplet MLP hidden width
  std::size_t node_out = 64;  // width of h_ij and t'_i
  std::size_t edge_out = 16;
};

/// Triplet MLP  [t_i | r_ij | t_j] -> leaky -> h_ij, the attention vector
/// w_a, and the edge MLP  h_ij -> leaky -> r'_ij.
struct GraphConvLayer {
  GraphConvDims dims;
  nn::Parameter* w1 = nullptr;  // [2 node_in + edge_in, hidden]
  nn::Parameter* b1 = nullptr;
  nn::Parameter* w2 = nullptr;  // [hidden, node_out]
  nn::Parameter* b2 = nullptr;
  nn::Parameter* w_a = nullptr;  // [node_out, 1]
  nn::Parameter* we1 = nullptr;  // [node_out, hidden]
  nn::Parameter* be1 = nullptr;
  nn::Parameter* we2 = nullptr;  // [hidden, edge_out]
  nn::Parameter* be2 = nullptr;

  static GraphConvLayer create(nn::ParameterStore& store, const std::string& prefix, const GraphConvDims& dims,
                               std::mt19937_64& rng);
};

/// Node embeddings [n, d] and edge embeddings [n*n, d_e], edge (i,j) at row i*n+j.
struct GraphState {
  std::size_t n = 0;
  nn::Var nodes;
  nn::Var edges;
};

enum class AttentionMode { learned, uniform };

struct LayerResult {
  GraphState state;   // edges left invalid when the edge update is skipped
  nn::Var triplets;   // h, [n*n, node_out]
  nn::Var attention;  // alpha, [n, n]
};

/// Row-wise h = MLP([t_src | r | t_dst]) for matching rows of the three inputs.
nn::Var triplet_features(nn::Var t_src, nn::Var r, nn::Var t_dst, const GraphConvLayer& layer);

/// h for every ordered pair of a state, [n*n, node_out]. Same map as
/// triplet_features, computed by projecting each node once.
nn::Var all_triplets(const GraphState& state, const GraphConvLayer& layer);

/// softmax_j(leaky(w_a . h_ij)) for h laid out [sources * n, node_out] -> [sources, n].
nn::Var attention_coefficients(nn::Var h, std::size_t sources, const GraphConvLayer& layer);

/// t'_i = tanh(sum_j alpha_ij h_ij) and, when update_edges, r'_ij = MLP(h_ij).
LayerResult layer_forward(const GraphState& state, const GraphConvLayer& layer,
                          AttentionMode mode = AttentionMode::learned, bool update_edges = true);

struct StackOptions {
  AttentionMode attention = AttentionMode::learned;
  bool zero_text = false;   // initial node embeddings replaced by zeros
  bool zero_edges = false;  // initial edge features replaced by zeros
};

struct StackResult {
  nn::Var nodes;                       // [n, node_out of last layer]
  std::vector<nn::Var> attention;      // one [n, n] per layer
};

nn::Tensor edge_feature_tensor(const doc::DocumentGraph& graph);

/// Applies every layer in turn starting from the given node embeddings and
/// the graph's edge features. The last layer skips the unused edge update.
StackResult stack_forward(nn::Tape& tape, const doc::DocumentGraph& graph, nn::Var initial_nodes,
                          const std::vector<GraphConvLayer>& layers, const StackOptions& options = {});

/// Encodes each segment's token ids, then runs the stack.
StackResult stack_forward(nn::Tape& tape, const doc::DocumentGraph& graph, const SegmentEncoder& encoder,
                          const std::vector<std::vector<std::size_t>>& segment_tokens,
                          const std::vector<GraphConvLayer>& layers, const StackOptions& options = {});

/// {"segment_ids": [...], "layers": [n x n matrices]}
nlohmann::json attention_to_json(const std::vector<int>& segment_ids, const std::vector<nn::Tensor>& attention);

}  // namespace docgraph::gconv
