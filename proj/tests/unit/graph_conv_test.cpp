#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "docgraph/doc/graph.hpp"
#include "docgraph/gconv/graph_conv.hpp"
#include "docgraph/gconv/lstm.hpp"
#include "docgraph/gconv/segment_encoder.hpp"
#include "docgraph/nn/gradcheck.hpp"
#include "docgraph/nn/ops.hpp"

namespace {

using namespace docgraph;
using nn::Tensor;
using nn::Var;

Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, double limit = 1.0) {
  return nn::uniform_tensor(std::move(shape), limit, rng);
}

void zero_all(nn::ParameterStore& store) {
  for (nn::Parameter* p : store.all()) p->value.fill(0.0);
}

doc::Document random_document(std::size_t n, std::mt19937_64& rng) {
  doc::Document d;
  d.doc_id = "rand";
  d.page_w = 1000;
  d.page_h = 1400;
  for (std::size_t i = 0; i < n; ++i) {
    doc::TextSegment s;
    s.id = static_cast<int>(i);
    s.bbox = {50 + 800 * nn::uniform01(rng), 50 + 1200 * nn::uniform01(rng), 20 + 120 * nn::uniform01(rng),
              10 + 20 * nn::uniform01(rng)};
    d.segments.push_back(s);
  }
  return d;
}

std::vector<std::vector<std::size_t>> random_tokens(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> out(n);
  for (auto& seg : out) {
    const std::size_t len = 1 + rng() % 4;
    for (std::size_t k = 0; k < len; ++k) seg.push_back(3 + rng() % (vocab - 3));
  }
  return out;
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straight-line LSTM over one sequence, returning every hidden state.
std::vector<std::vector<double>> naive_lstm(const gconv::LstmCell& cell, const std::vector<std::vector<double>>& xs) {
  const std::size_t H = cell.hidden;
  const std::size_t I = cell.input_dim;
  std::vector<double> h(H, 0.0), c(H, 0.0);
  std::vector<std::vector<double>> out;
  for (const auto& x : xs) {
    std::vector<double> z(4 * H);
    for (std::size_t g = 0; g < 4 * H; ++g) {
      double acc = cell.bias->value[g];
      for (std::size_t k = 0; k < I; ++k) acc += x[k] * cell.w_input->value.at(k, g);
      for (std::size_t k = 0; k < H; ++k) acc += h[k] * cell.w_hidden->value.at(k, g);
      z[g] = acc;
    }
    for (std::size_t u = 0; u < H; ++u) {
      const double i = sigm(z[u]), f = sigm(z[H + u]), g = std::tanh(z[2 * H + u]), o = sigm(z[3 * H + u]);
      c[u] = f * c[u] + i * g;
      h[u] = o * std::tanh(c[u]);
    }
    out.push_back(h);
  }
  return out;
}

TEST(BiLstm, PackedBatchMatchesStraightLineRecurrence) {
  std::mt19937_64 rng(11);
  nn::ParameterStore store;
  const auto lstm = gconv::BiLstm::create(store, "l", 3, 4, rng);
  const std::vector<std::size_t> lengths{3, 1, 5};
  const auto batch = gconv::SequenceBatch::from_lengths(lengths);
  const Tensor x = random_tensor({batch.total(), 3}, rng);

  nn::Tape tape;
  const auto out = gconv::run_bilstm(lstm, tape.constant(x), batch, true);
  const Tensor& fin = out.final_states.value();
  const Tensor& tok = out.token_states.value();
  ASSERT_EQ(fin.shape(), (nn::Shape{3, 8}));
  ASSERT_EQ(tok.shape(), (nn::Shape{9, 8}));

  for (std::size_t b = 0; b < lengths.size(); ++b) {
    std::vector<std::vector<double>> seq;
    for (std::size_t p = 0; p < lengths[b]; ++p) {
      const std::size_t r = batch.offsets[b] + p;
      seq.emplace_back(x.raw() + r * 3, x.raw() + r * 3 + 3);
    }
    auto rev = seq;
    std::reverse(rev.begin(), rev.end());
    const auto fw = naive_lstm(lstm.forward, seq);
    const auto bw = naive_lstm(lstm.backward, rev);
    for (std::size_t u = 0; u < 4; ++u) {
      EXPECT_NEAR(fin.at(b, u), fw.back()[u], 1e-12);
      EXPECT_NEAR(fin.at(b, 4 + u), bw.back()[u], 1e-12);
    }
    for (std::size_t p = 0; p < lengths[b]; ++p) {
      const std::size_t r = batch.offsets[b] + p;
      for (std::size_t u = 0; u < 4; ++u) {
        EXPECT_NEAR(tok.at(r, u), fw[p][u], 1e-12);
        EXPECT_NEAR(tok.at(r, 4 + u), bw[lengths[b] - 1 - p][u], 1e-12);
      }
    }
  }
}

TEST(BiLstm, ForgetGateBiasStartsAtOne) {
  std::mt19937_64 rng(1);
  nn::ParameterStore store;
  const auto cell = gconv::LstmCell::create(store, "c", 2, 3, rng);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(cell.bias->value[k], (k >= 3 && k < 6) ? 1.0 : 0.0);
}

TEST(BiLstm, RejectsEmptySequence) {
  std::mt19937_64 rng(1);
  nn::ParameterStore store;
  const auto lstm = gconv::BiLstm::create(store, "l", 2, 2, rng);
  nn::Tape tape;
  const auto batch = gconv::SequenceBatch::from_lengths({2, 0});
  EXPECT_THROW(gconv::run_bilstm(lstm, tape.constant(Tensor({2, 2})), batch, false), std::invalid_argument);
}

TEST(SegmentEncoder, DeterministicAndPadForEmpty) {
  std::mt19937_64 rng(5);
  nn::ParameterStore store;
  const auto enc = gconv::SegmentEncoder::create(store, "enc", 20, 8, 32, rng);
  EXPECT_EQ(enc.output_dim(), 64u);
  const std::vector<std::size_t> ids{4, 7, 9};
  EXPECT_EQ(gconv::encode_segment(enc, ids), gconv::encode_segment(enc, ids));
  EXPECT_EQ(gconv::encode_segment(enc, {}), gconv::encode_segment(enc, {0}));
  for (std::size_t len : {1u, 2u, 17u, 50u}) {
    std::vector<std::size_t> seq(len);
    for (auto& v : seq) v = 3 + rng() % 17;
    const Tensor e = gconv::encode_segment(enc, seq);
    EXPECT_EQ(e.shape(), (nn::Shape{64}));
    EXPECT_TRUE(e.all_finite());
  }
}

TEST(SegmentEncoder, BatchRowsEqualSingleSegmentEncodings) {
  std::mt19937_64 rng(6);
  nn::ParameterStore store;
  const auto enc = gconv::SegmentEncoder::create(store, "enc", 20, 5, 3, rng);
  const std::vector<std::vector<std::size_t>> segs{{4, 5}, {}, {6, 7, 8, 9}, {10}};
  nn::Tape tape;
  const Tensor all = enc.encode(tape, segs).value();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const Tensor one = gconv::encode_segment(enc, segs[s]);
    for (std::size_t u = 0; u < 6; ++u) EXPECT_NEAR(all.at(s, u), one[u], 1e-14);
  }
}

gconv::GraphConvDims small_dims(std::size_t d, std::size_t de, std::size_t hidden, std::size_t out,
                                std::size_t eout = 3) {
  gconv::GraphConvDims g;
  g.node_in = d;
  g.edge_in = de;
  g.hidden = hidden;
  g.node_out = out;
  g.edge_out = eout;
  return g;
}

TEST(Triplet, ZeroWeightsGiveZero) {
  std::mt19937_64 rng(2);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(3, 5, 4, 4), rng);
  zero_all(store);
  nn::Tape tape;
  const Var h = gconv::triplet_features(tape.constant(random_tensor({2, 3}, rng)), tape.constant(random_tensor({2, 5}, rng)),
                                        tape.constant(random_tensor({2, 3}, rng)), layer);
  for (double v : h.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Triplet, HandSizedCaseMatchesMatrixArithmetic) {
  std::mt19937_64 rng(0);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(2, 1, 2, 2), rng);
  // x = [t_i | r_ij | t_j] = [1, -2 | 0.5 | 3, 1]
  layer.w1->value = Tensor::matrix(5, 2, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8, 0.9, 1.0});
  layer.b1->value = Tensor::vector({0.05, -0.1});
  layer.w2->value = Tensor::matrix(2, 2, {1.0, -1.0, 0.5, 2.0});
  layer.b2->value = Tensor::vector({0.2, -0.3});
  // z1 = x W1 + b1:
  //   col0 = 1*0.1 - 2*0.3 + 0.5*(-0.5) + 3*0.7 + 1*0.9 + 0.05 = 2.3
  //   col1 = 1*(-0.2) - 2*0.4 + 0.5*0.6 + 3*(-0.8) + 1*1.0 - 0.1 = -2.2
  // a = leaky(z1, 0.01) = [2.3, -0.022]
  // h = a W2 + b2 = [2.3 - 0.011 + 0.2, -2.3 - 0.044 - 0.3] = [2.489, -2.644]
  nn::Tape tape;
  const Var h = gconv::triplet_features(tape.constant(Tensor::matrix(1, 2, {1, -2})),
                                        tape.constant(Tensor::matrix(1, 1, {0.5})),
                                        tape.constant(Tensor::matrix(1, 2, {3, 1})), layer);
  EXPECT_NEAR(h.value()[0], 2.489, 1e-12);
  EXPECT_NEAR(h.value()[1], -2.644, 1e-12);
}

TEST(Triplet, DirectionSensitive) {
  std::mt19937_64 rng(3);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(3, 5, 4, 4), rng);
  nn::Tape tape;
  const Var a = tape.constant(random_tensor({1, 3}, rng));
  const Var b = tape.constant(random_tensor({1, 3}, rng));
  const Var r = tape.constant(random_tensor({1, 5}, rng));
  const Tensor ab = gconv::triplet_features(a, r, b, layer).value();
  const Tensor ba = gconv::triplet_features(b, r, a, layer).value();
  EXPECT_NE(ab, ba);
}

TEST(Triplet, FactoredPairsEqualConcatenatedRows) {
  std::mt19937_64 rng(4);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(3, 5, 6, 4), rng);
  const std::size_t n = 4;
  nn::Tape tape;
  gconv::GraphState st{n, tape.constant(random_tensor({n, 3}, rng)), tape.constant(random_tensor({n * n, 5}, rng))};
  const Tensor fact = gconv::all_triplets(st, layer).value();
  std::vector<std::size_t> src, dst;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      src.push_back(i);
      dst.push_back(j);
    }
  }
  const Tensor direct = gconv::triplet_features(nn::gather_rows(st.nodes, src), st.edges,
                                                nn::gather_rows(st.nodes, dst), layer)
                            .value();
  ASSERT_EQ(fact.shape(), direct.shape());
  for (std::size_t k = 0; k < fact.size(); ++k) EXPECT_NEAR(fact[k], direct[k], 1e-12);
}

TEST(Attention, IdenticalTripletsGiveUniformWeights) {
  std::mt19937_64 rng(7);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(2, 5, 3, 3), rng);
  for (std::size_t n : {1u, 2u, 7u}) {
    nn::Tape tape;
    Tensor h({n, 3});
    for (std::size_t j = 0; j < n; ++j) h.at(j, 0) = 0.3, h.at(j, 1) = -1.2, h.at(j, 2) = 2.0;
    const Tensor a = gconv::attention_coefficients(tape.constant(h), 1, layer).value();
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(a[j], 1.0 / n, 1e-15);
  }
}

TEST(Attention, MatchesIndependentSoftmax) {
  std::mt19937_64 rng(8);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(2, 5, 3, 6), rng);
  const std::size_t n = 9;
  const Tensor h = random_tensor({n, 6}, rng, 3.0);
  nn::Tape tape;
  const Tensor a = gconv::attention_coefficients(tape.constant(h), 1, layer).value();
  std::vector<double> e(n);
  double z = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < 6; ++k) s += h.at(j, k) * layer.w_a->value[k];
    s = s > 0 ? s : 0.01 * s;
    e[j] = std::exp(s);
    z += e[j];
  }
  for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(a[j], e[j] / z, 1e-12);
}

TEST(Attention, RowsSumToOneUpToFiftyNodes) {
  std::mt19937_64 rng(9);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(4, 5, 8, 8), rng);
  for (std::size_t n : {1u, 3u, 20u, 50u}) {
    nn::Tape tape;
    gconv::GraphState st{n, tape.constant(random_tensor({n, 4}, rng)), tape.constant(random_tensor({n * n, 5}, rng))};
    const Tensor a = gconv::layer_forward(st, layer).attention.value();
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a.at(i, j);
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(LayerForward, SingleNodeCollapsesToTanhOfSelfTriplet) {
  std::mt19937_64 rng(10);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(3, 5, 4, 4), rng);
  nn::Tape tape;
  gconv::GraphState st{1, tape.constant(random_tensor({1, 3}, rng)), tape.constant(random_tensor({1, 5}, rng))};
  const auto r = gconv::layer_forward(st, layer);
  const Tensor h = gconv::triplet_features(st.nodes, st.edges, st.nodes, layer).value();
  EXPECT_EQ(r.attention.value()[0], 1.0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(r.state.nodes.value()[k], std::tanh(h[k]), 1e-15);
  EXPECT_EQ(r.state.edges.shape(), (nn::Shape{1, 3}));
}

TEST(LayerForward, ZeroWeightsGiveZeroEmbeddings) {
  std::mt19937_64 rng(12);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(3, 5, 4, 4), rng);
  zero_all(store);
  nn::Tape tape;
  gconv::GraphState st{5, tape.constant(random_tensor({5, 3}, rng)), tape.constant(random_tensor({25, 5}, rng))};
  for (double v : gconv::layer_forward(st, layer).state.nodes.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerForward, UniformAttentionAveragesTriplets) {
  std::mt19937_64 rng(13);
  nn::ParameterStore store;
  const auto layer = gconv::GraphConvLayer::create(store, "g", small_dims(3, 5, 4, 4), rng);
  const std::size_t n = 3;
  nn::Tape tape;
  gconv::GraphState st{n, tape.constant(random_tensor({n, 3}, rng)), tape.constant(random_tensor({n * n, 5}, rng))};
  const auto r = gconv::layer_forward(st, layer, gconv::AttentionMode::uniform);
  const Tensor& h = r.triplets.value();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += h.at(i * n + j, k) / n;
      EXPECT_NEAR(r.state.nodes.value().at(i, k), std::tanh(s), 1e-14);
    }
  }
}

struct Model {
  nn::ParameterStore store;
  gconv::SegmentEncoder encoder;
  std::vector<gconv::GraphConvLayer> layers;

  Model(std::size_t vocab, std::size_t embed, std::size_t enc_hidden, std::size_t width, std::size_t depth,
        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    encoder = gconv::SegmentEncoder::create(store, "enc", vocab, embed, enc_hidden, rng);
    std::size_t in = encoder.output_dim();
    std::size_t edge = doc::kEdgeFeatureDim;
    for (std::size_t l = 0; l < depth; ++l) {
      layers.push_back(gconv::GraphConvLayer::create(store, "g" + std::to_string(l),
                                                     small_dims(in, edge, width, width, 4), rng));
      in = width;
      edge = 4;
    }
  }

  Tensor run(const doc::Document& d, const std::vector<std::vector<std::size_t>>& toks) const {
    nn::Tape tape;
    return gconv::stack_forward(tape, doc::build_graph(d), encoder, toks, layers).nodes.value();
  }
};

TEST(Stack, PermutingSegmentsPermutesOutputs) {
  std::mt19937_64 rng(14);
  const Model m(30, 6, 4, 8, 2, 99);
  const std::size_t n = 9;
  const auto d = random_document(n, rng);
  const auto toks = random_tokens(n, 30, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  doc::Document pd = d;
  std::vector<std::vector<std::size_t>> ptoks(n);
  for (std::size_t k = 0; k < n; ++k) {
    pd.segments[k] = d.segments[perm[k]];
    ptoks[k] = toks[perm[k]];
  }
  const Tensor a = m.run(d, toks);
  const Tensor b = m.run(pd, ptoks);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t u = 0; u < a.cols(); ++u) EXPECT_NEAR(b.at(k, u), a.at(perm[k], u), 1e-9);
  }
}

TEST(Stack, InvariantToPageTranslationAndScale) {
  std::mt19937_64 rng(15);
  const Model m(30, 6, 4, 8, 2, 5);
  const auto d = random_document(7, rng);
  const auto toks = random_tokens(7, 30, rng);
  doc::Document moved = d;
  moved.page_w *= 3;
  moved.page_h *= 3;
  for (auto& s : moved.segments) s.bbox = {3 * s.bbox.x + 17, 3 * s.bbox.y - 11, 3 * s.bbox.w, 3 * s.bbox.h};
  const Tensor a = m.run(d, toks);
  const Tensor b = m.run(moved, toks);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
}

TEST(Stack, SingleLayerEqualsEncodeThenLayer) {
  std::mt19937_64 rng(16);
  const Model m(30, 6, 4, 8, 1, 3);
  const auto d = random_document(5, rng);
  const auto toks = random_tokens(5, 30, rng);
  const auto g = doc::build_graph(d);
  nn::Tape tape;
  gconv::GraphState st{5, m.encoder.encode(tape, toks), tape.constant(gconv::edge_feature_tensor(g))};
  const Tensor direct = gconv::layer_forward(st, m.layers[0]).state.nodes.value();
  EXPECT_EQ(m.run(d, toks), direct);
}

TEST(Stack, DefaultDepthOnTwentyNodesIsFinite) {
  std::mt19937_64 rng(17);
  const Model m(50, 64, 32, 64, 2, 1);
  const auto d = random_document(20, rng);
  const Tensor out = m.run(d, random_tokens(20, 50, rng));
  EXPECT_EQ(out.shape(), (nn::Shape{20, 64}));
  EXPECT_TRUE(out.all_finite());
}

TEST(Stack, AblationsChangeTheInputsTheyTarget) {
  std::mt19937_64 rng(18);
  const Model m(30, 6, 4, 8, 2, 8);
  const auto d = random_document(4, rng);
  const auto toks = random_tokens(4, 30, rng);
  const auto g = doc::build_graph(d);
  auto run = [&](gconv::StackOptions o) {
    nn::Tape tape;
    return gconv::stack_forward(tape, g, m.encoder, toks, m.layers, o).nodes.value();
  };
  const Tensor base = run({});
  gconv::StackOptions uni;
  uni.attention = gconv::AttentionMode::uniform;
  gconv::StackOptions no_text;
  no_text.zero_text = true;
  gconv::StackOptions no_edge;
  no_edge.zero_edges = true;
  EXPECT_NE(run(uni), base);
  EXPECT_NE(run(no_text), base);
  EXPECT_NE(run(no_edge), base);
  // With text removed the output no longer depends on the tokens.
  auto toks2 = random_tokens(4, 30, rng);
  nn::Tape tape;
  EXPECT_EQ(gconv::stack_forward(tape, g, m.encoder, toks2, m.layers, no_text).nodes.value(), run(no_text));
}

TEST(Stack, GradientCheckOfScalarReadout) {
  std::mt19937_64 rng(19);
  const Model m(12, 3, 2, 3, 2, 21);
  const auto d = random_document(3, rng);
  const auto toks = random_tokens(3, 12, rng);
  const auto g = doc::build_graph(d);
  const Tensor readout = random_tensor({3, 3}, rng);
  auto loss = [&](nn::Tape& tape) {
    const Var out = gconv::stack_forward(tape, g, m.encoder, toks, m.layers).nodes;
    return nn::sum(nn::mul(out, tape.constant(readout)));
  };
  const auto report = nn::gradient_check(loss, m.store.all());
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst.param << "[" << report.worst.index << "]";
}

TEST(AttentionExport, JsonLayout) {
  const auto j = gconv::attention_to_json({4, 9}, {Tensor::matrix(2, 2, {0.25, 0.75, 0.5, 0.5})});
  EXPECT_EQ(j["segment_ids"], nlohmann::json({4, 9}));
  EXPECT_EQ(j["layers"][0][0][1], 0.75);
  EXPECT_EQ(j["layers"][0][1][0], 0.5);
}

}  // namespace
