#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "docgraph/nn/checkpoint.hpp"
#include "docgraph/nn/gradcheck.hpp"
#include "docgraph/nn/ops.hpp"
#include "docgraph/synth/generator.hpp"
#include "docgraph/train/evaluate.hpp"
#include "docgraph/train/gradcheck.hpp"
#include "docgraph/train/multitask.hpp"
#include "docgraph/train/trainer.hpp"

namespace {

using namespace docgraph;
using nn::Tensor;

TEST(Multitask, ZeroClassifierGivesHalfProbabilityAndLn2) {
  nn::Tape tape;
  nn::Parameter w{"w", Tensor({4, 3})};
  nn::Parameter b{"b", Tensor({3})};
  const Tensor h = Tensor::matrix(2, 4, {1, 2, 3, 4, -1, 0, 2, 5});
  const nn::Var z = train::segment_classifier_logits(tape.constant(h), w, b);
  const nn::Var p = nn::sigmoid(z);
  for (double v : p.value().data()) EXPECT_DOUBLE_EQ(v, 0.5);
  EXPECT_NEAR(train::sigmoid_bce(z, {0, 2}).value().item(), std::log(2.0), 1e-15);
}

TEST(Multitask, BceMatchesDirectFormulaAndStaysFinite) {
  nn::Tape tape;
  const Tensor z = Tensor::matrix(2, 3, {0.3, -2.0, 40.0, -800.0, 1.5, 0.0});
  const std::vector<std::size_t> cls = {2, 0};
  double expected = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double x = z.at(i, c);
      const double y = cls[i] == c ? 1.0 : 0.0;
      // log(1 + e^x) - y x written to avoid overflow for |x| large.
      expected += std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) - y * x;
    }
  }
  expected /= 6.0;
  const double got = train::sigmoid_bce(tape.constant(z), cls).value().item();
  EXPECT_TRUE(std::isfinite(got));
  EXPECT_NEAR(got, expected, 1e-12);
}

TEST(Multitask, BceGradientCheck) {
  std::mt19937_64 rng(4);
  nn::Parameter w{"w", nn::uniform_tensor({3, 4}, 1.0, rng)};
  nn::Parameter b{"b", nn::uniform_tensor({4}, 1.0, rng)};
  nn::Parameter h{"h", nn::uniform_tensor({5, 3}, 1.0, rng)};
  const std::vector<std::size_t> cls = {0, 3, 1, 1, 2};
  auto loss = [&](nn::Tape& t) { return train::sigmoid_bce(train::segment_classifier_logits(t.param(h), w, b), cls); };
  std::vector<nn::Parameter*> ps = {&w, &b, &h};
  EXPECT_LT(nn::gradient_check(loss, ps).max_rel_error, 1e-6);
}

TEST(Multitask, ZeroLogVariancesGivePlainSum) {
  nn::Tape tape;
  const std::vector<nn::Var> losses = {tape.constant(Tensor::scalar(2.5)), tape.constant(Tensor::scalar(0.75))};
  const nn::Var s = tape.constant(Tensor({2}));
  EXPECT_DOUBLE_EQ(train::multitask_combine(losses, s).value().item(), 3.25);
}

TEST(Multitask, LogVarianceDescentSettlesAtLogOfLoss) {
  // For fixed task losses L the minimizer of exp(-s) L + s is s = ln L.
  nn::Parameter s{"s", Tensor({2})};
  const double l1 = 1.0, l2 = 4.0;
  for (int it = 0; it < 4000; ++it) {
    nn::Tape tape;
    const std::vector<nn::Var> losses = {tape.constant(Tensor::scalar(l1)), tape.constant(Tensor::scalar(l2))};
    tape.backward(train::multitask_combine(losses, tape.param(s)));
    for (std::size_t k = 0; k < 2; ++k) s.value.data()[k] -= 0.05 * s.grad.data()[k];
    s.grad = Tensor({2});
  }
  EXPECT_NEAR(s.value.data()[0], 0.0, 1e-9);
  EXPECT_NEAR(s.value.data()[1], std::log(4.0), 1e-9);
}

doc::Document labeled(const std::string& id, std::vector<std::pair<std::string, std::string>> entities) {
  doc::Document d;
  d.doc_id = id;
  d.page_w = 100;
  d.page_h = 100;
  for (auto& [type, value] : entities) d.annotations.push_back({type, value, {0, 0, 1, 1}});
  return d;
}

train::DocumentPrediction predicted(const std::string& id, std::vector<std::pair<std::string, std::string>> entities) {
  train::DocumentPrediction p;
  p.doc_id = id;
  for (auto& [type, value] : entities) p.entities.push_back({type, value, 0, 0, 1});
  return p;
}

TEST(Evaluate, IdenticalPredictionsScoreOne) {
  const auto g = labeled("a", {{"date", "2024-01-02"}, {"total", "$5.00"}});
  const auto m = train::score_predictions({g}, {predicted("a", {{"total", "$5.00"}, {"date", "2024-01-02"}})},
                                          {"date", "total"});
  EXPECT_DOUBLE_EQ(m.micro.f1(), 1.0);
  EXPECT_DOUBLE_EQ(m.per_type.at("date").precision(), 1.0);
}

TEST(Evaluate, NoPredictionsScoreZero) {
  const auto g = labeled("a", {{"date", "x"}});
  const auto m = train::score_predictions({g}, {predicted("a", {})}, {"date"});
  EXPECT_DOUBLE_EQ(m.micro.precision(), 0.0);
  EXPECT_DOUBLE_EQ(m.micro.recall(), 0.0);
  EXPECT_DOUBLE_EQ(m.micro.f1(), 0.0);
  EXPECT_EQ(m.micro.fn, 1u);
}

TEST(Evaluate, HalfRightGivesHalfEverywhere) {
  const auto g = labeled("a", {{"price", "$5.00"}, {"tax", "$5.00"}});
  const auto m = train::score_predictions({g}, {predicted("a", {{"price", "$5.00"}, {"price", "$5.00"}})},
                                          {"price", "tax"});
  EXPECT_DOUBLE_EQ(m.micro.precision(), 0.5);
  EXPECT_DOUBLE_EQ(m.micro.recall(), 0.5);
  EXPECT_DOUBLE_EQ(m.micro.f1(), 0.5);
  EXPECT_EQ(m.ambiguous.tp, 1u);
  EXPECT_EQ(m.ambiguous.fp, 1u);
  EXPECT_EQ(m.ambiguous.fn, 1u);
  EXPECT_DOUBLE_EQ(m.per_type.at("tax").recall(), 0.0);
}

TEST(Evaluate, ValuesCompareAfterNormalization) {
  const auto g = labeled("a", {{"name", "Acme  Supply Ltd"}});
  const auto m = train::score_predictions({g}, {predicted("a", {{"name", "Acme Supply Ltd"}})}, {"name"});
  EXPECT_DOUBLE_EQ(m.micro.f1(), 1.0);
}

TEST(Evaluate, ScoreIgnoresPredictionOrder) {
  std::mt19937_64 rng(2);
  const std::vector<std::string> types = {"a", "b", "c"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, std::string>> gold, pred;
    for (int k = 0; k < 6; ++k) {
      gold.push_back({types[rng() % 3], std::to_string(rng() % 4)});
      pred.push_back({types[rng() % 3], std::to_string(rng() % 4)});
    }
    const auto base = train::score_predictions({labeled("d", gold)}, {predicted("d", pred)}, types);
    std::shuffle(pred.begin(), pred.end(), rng);
    std::shuffle(gold.begin(), gold.end(), rng);
    const auto again = train::score_predictions({labeled("d", gold)}, {predicted("d", pred)}, types);
    EXPECT_EQ(base.micro.tp, again.micro.tp);
    EXPECT_EQ(base.micro.fp, again.micro.fp);
    EXPECT_EQ(base.ambiguous.tp, again.ambiguous.tp);
    EXPECT_EQ(base.micro.tp + base.micro.fp, 6u);
    EXPECT_EQ(base.micro.tp + base.micro.fn, 6u);
  }
}

TEST(Evaluate, MismatchedCorporaRejected) {
  EXPECT_THROW(train::score_predictions({labeled("a", {})}, {predicted("b", {})}, {}), std::invalid_argument);
  EXPECT_THROW(train::score_predictions({labeled("a", {})}, {}, {}), std::invalid_argument);
}

TEST(ModelGradients, EveryModeAndAblation) {
  for (const auto& config : train::gradcheck_suite()) {
    const auto check = train::check_model_gradients(config, 20);
    EXPECT_LT(check.report.max_rel_error, 1e-4) << check.label << " worst " << check.report.worst.param;
    EXPECT_GE(check.min_abs_gradient, train::kMinResolvableGradient) << check.label;
    EXPECT_FALSE(check.per_component.empty());
  }
}

TEST(ModelGradients, SignFlipMutationIsCaught) {
  nn::Tape::inject_sign_flip("matmul");
  const auto check = train::check_model_gradients(train::micro_config(train::Mode::gcn), 20);
  nn::Tape::inject_sign_flip("");
  EXPECT_GT(check.report.max_rel_error, 0.5);
}

TEST(Model, MicroDocumentShape) {
  const auto d = train::micro_document();
  ASSERT_EQ(d.segments.size(), 2u);
  for (const auto& s : d.segments) EXPECT_EQ(s.tokens.size(), 3u);
  EXPECT_EQ(doc::TagSet(train::micro_config(train::Mode::gcn).entity_types).size(), 5u);
}

train::Model micro_model(train::TrainConfig config) {
  const auto d = train::micro_document();
  return train::build_model(config, doc::TagSet(config.entity_types), doc::Vocabulary::build({d}));
}

TEST(Model, BaselineOneEqualsGraphModelWithZeroGraphOutput) {
  const auto d = train::micro_document();
  train::Model b1 = micro_model(train::micro_config(train::Mode::baseline1));
  auto gc = train::micro_config(train::Mode::gcn);
  gc.seed = 99;
  train::Model g = micro_model(gc);
  // t' = tanh(0) = 0 when the last layer's output weights vanish.
  g.layers.back().w2->value.fill(0.0);
  g.layers.back().b2->value.fill(0.0);
  auto copy = [](const nn::Parameter* from, nn::Parameter* to) { to->value = from->value; };
  copy(b1.tagger_params.embedding, g.tagger_params.embedding);
  copy(b1.tagger_params.w_out, g.tagger_params.w_out);
  copy(b1.tagger_params.b_out, g.tagger_params.b_out);
  copy(b1.tagger_params.crf.transitions, g.tagger_params.crf.transitions);
  copy(b1.tagger_params.crf.start, g.tagger_params.crf.start);
  copy(b1.tagger_params.crf.end, g.tagger_params.crf.end);
  for (auto [from, to] : {std::pair{&b1.tagger_params.lstm.forward, &g.tagger_params.lstm.forward},
                          std::pair{&b1.tagger_params.lstm.backward, &g.tagger_params.lstm.backward}}) {
    copy(from->w_hidden, to->w_hidden);
    copy(from->bias, to->bias);
    const Tensor& src = from->w_input->value;
    Tensor& dst = to->w_input->value;
    for (std::size_t r = 0; r < src.rows(); ++r) {
      for (std::size_t c = 0; c < src.cols(); ++c) dst.at(r, c) = src.at(r, c);
    }
  }
  const auto pb = train::prepare_document(b1, d, true);
  const auto pg = train::prepare_document(g, d, true);
  nn::Tape t1, t2;
  const Tensor e1 = train::forward(t1, b1, pb).emissions.value();
  const Tensor e2 = train::forward(t2, g, pg).emissions.value();
  ASSERT_EQ(e1.shape(), e2.shape());
  for (std::size_t i = 0; i < e1.size(); ++i) EXPECT_NEAR(e1.data()[i], e2.data()[i], 1e-12);
  nn::Tape t3, t4;
  EXPECT_NEAR(train::document_loss(t3, b1, pb).value().item(), train::document_loss(t4, g, pg).value().item(), 1e-11);
}

TEST(Model, UniformAttentionAblationRowsAreOneOverN) {
  auto c = train::micro_config(train::Mode::gcn);
  c.ablation.no_attention = true;
  const auto m = micro_model(c);
  const auto p = train::prepare_document(m, train::micro_document(), false);
  nn::Tape tape;
  const auto r = train::forward(tape, m, p);
  ASSERT_EQ(r.attention.size(), c.layers);
  for (const auto& a : r.attention) {
    for (double v : a.value().data()) EXPECT_DOUBLE_EQ(v, 0.5);
  }
}

TEST(Model, BaselineTwoSequenceHasSeparators) {
  const auto docs = synth::generate_corpus([] {
                      synth::GeneratorConfig g;
                      g.n_documents = 5;
                      return g;
                    }())
                        .train;
  auto c = train::micro_config(train::Mode::baseline2);
  c.entity_types = {};
  const auto m = train::build_model(c, train::schema_for(docs, c), doc::Vocabulary::build(docs));
  for (const auto& d : docs) {
    std::size_t tokens = 0;
    for (const auto& s : d.segments) tokens += s.tokens.size();
    const auto l = train::sequence_layout(m, train::prepare_document(m, d, false));
    EXPECT_EQ(l.batch.count(), 1u);
    EXPECT_EQ(l.token_ids.size(), tokens + d.segments.size() - 1);
    EXPECT_EQ(std::count(l.token_ids.begin(), l.token_ids.end(), doc::Vocabulary::kSep),
              static_cast<std::ptrdiff_t>(d.segments.size() - 1));
  }
}

TEST(Model, PerSegmentLayoutPadsEmptySegments) {
  auto d = train::micro_document();
  d.segments.push_back({2, "", {150, 80, 20, 10}, {}});
  const auto m = micro_model(train::micro_config(train::Mode::gcn));
  const auto l = train::sequence_layout(m, train::prepare_document(m, d, false));
  EXPECT_EQ(l.batch.count(), 3u);
  EXPECT_EQ(l.batch.lengths[2], 1u);
  EXPECT_EQ(l.token_ids.back(), doc::Vocabulary::kPad);
}

TEST(Config, InvalidCombinationsRejected) {
  train::TrainConfig c;
  c.mode = train::Mode::baseline1;
  c.ablation.no_edge_features = true;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.layers = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(train::parse_mode("gcn2"), std::invalid_argument);
  EXPECT_THROW(train::train_config_from_json({{"epoch", 3}}), std::invalid_argument);
  c = {};
  c.mode = train::Mode::gcn_multitask;
  c.ablation.no_text_features = true;
  EXPECT_EQ(train::to_json(train::train_config_from_json(train::to_json(c))), train::to_json(c));
}

train::TrainConfig memorize_config(train::Mode mode) {
  auto c = train::micro_config(mode);
  c.dims.token_embed = c.dims.tagger_hidden = 8;
  c.dims.node_out = 4;
  c.learning_rate = 0.05;
  c.epochs = 200;
  return c;
}

TEST(Training, MemorizesOneDocument) {
  const std::vector<doc::Document> docs = {train::micro_document()};
  for (auto mode : {train::Mode::baseline1, train::Mode::gcn}) {
    const auto c = memorize_config(mode);
    const auto r = train::train(docs, {}, c);
    ASSERT_FALSE(r.history.empty());
    EXPECT_LT(r.history.back().loss, 0.01) << to_string(mode);
    EXPECT_DOUBLE_EQ(train::evaluate(r.model, docs).micro.f1(), 1.0) << to_string(mode);
  }
}

TEST(Training, MemorizationLossSettlesMonotonically) {
  const std::vector<doc::Document> docs = {train::micro_document()};
  // Multitask totals include the log-variance terms and may go negative, so
  // the check covers the single-objective modes.
  for (auto mode : {train::Mode::baseline1, train::Mode::baseline2, train::Mode::gcn}) {
    const auto r = train::train(docs, {}, memorize_config(mode));
    ASSERT_EQ(r.history.size(), 200u);
    for (std::size_t e = 20; e < r.history.size(); ++e) {
      EXPECT_LE(r.history[e].loss, r.history[e - 1].loss + 1e-3) << to_string(mode) << " epoch " << e + 1;
    }
  }
}

TEST(Evaluate, CorpusOrderDoesNotMatter) {
  synth::GeneratorConfig g;
  g.n_documents = 20;
  g.n_templates = 10;
  const auto corpus = synth::generate_corpus(g);
  auto c = train::micro_config(train::Mode::gcn);
  c.entity_types = {};
  c.epochs = 1;
  const auto r = train::train(corpus.train, {}, c);
  auto docs = corpus.train;
  const auto a = train::metrics_to_json(train::evaluate(r.model, docs), c);
  std::reverse(docs.begin(), docs.end());
  std::swap(docs[1], docs[4]);
  const auto b = train::metrics_to_json(train::evaluate(r.model, docs, 2), c);
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Training, SameSeedSameHistoryAndMetrics) {
  synth::GeneratorConfig g;
  g.n_documents = 12;
  const auto corpus = synth::generate_corpus(g);
  auto c = train::micro_config(train::Mode::gcn_multitask);
  c.entity_types = {};
  c.epochs = 2;
  c.dropout = 0.1;
  const auto a = train::train(corpus.train, corpus.val, c);
  const auto b = train::train(corpus.train, corpus.val, c);
  EXPECT_EQ(train::history_to_csv(a.history), train::history_to_csv(b.history));
  const auto ma = train::metrics_to_json(train::evaluate(a.model, corpus.test), c).dump();
  const auto mb = train::metrics_to_json(train::evaluate(b.model, corpus.test, 3), c).dump();
  EXPECT_EQ(ma, mb);
  EXPECT_NE(ma.find("segment_accuracy"), std::string::npos);
  c.seed = 2;
  EXPECT_NE(train::history_to_csv(train::train(corpus.train, corpus.val, c).history), train::history_to_csv(a.history));
}

TEST(Training, DivergenceNamesEpochAndDocument) {
  const std::vector<doc::Document> docs = {train::micro_document()};
  auto c = memorize_config(train::Mode::gcn);
  c.learning_rate = 1e300;
  c.grad_clip = 1e300;
  try {
    train::train(docs, {}, c);
    ADD_FAILURE() << "expected divergence";
  } catch (const train::TrainingDivergence& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch"), std::string::npos);
    EXPECT_NE(msg.find("micro"), std::string::npos);
  }
}

TEST(Training, UnalignableCorpusRejected) {
  auto d = train::micro_document();
  for (auto& a : d.annotations) a.value = "nowhere";
  auto c = memorize_config(train::Mode::baseline1);
  EXPECT_THROW(train::train({d}, {}, c), std::invalid_argument);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  const std::vector<doc::Document> docs = {train::micro_document()};
  auto c = memorize_config(train::Mode::gcn_multitask);
  c.epochs = 30;
  const auto r = train::train(docs, {}, c);
  const auto path = std::filesystem::temp_directory_path() / "docgraph_ckpt_test.json";
  train::save_model(r.model, path);
  const auto loaded = train::load_model(path);
  const auto before = train::tag_document(r.model, docs[0]);
  const auto after = train::tag_document(loaded, docs[0]);
  EXPECT_EQ(train::extraction_to_json(before), train::extraction_to_json(after));
  EXPECT_EQ(before.segment_class, after.segment_class);
  nn::Tape t1, t2;
  const auto p1 = train::prepare_document(r.model, docs[0], false);
  const auto p2 = train::prepare_document(loaded, docs[0], false);
  const Tensor e1 = train::forward(t1, r.model, p1).emissions.value();
  const Tensor e2 = train::forward(t2, loaded, p2).emissions.value();
  for (std::size_t i = 0; i < e1.size(); ++i) EXPECT_EQ(e1.data()[i], e2.data()[i]);

  auto j = nlohmann::json::parse(std::ifstream(path));
  j["format_version"] = 999;
  std::ofstream(path) << j.dump();
  EXPECT_THROW(train::load_model(path), nn::CheckpointError);
  std::filesystem::remove(path);
}

TEST(Extraction, JsonLayout) {
  train::DocumentPrediction p;
  p.doc_id = "d1";
  p.entities.push_back({"tax", "$5.00", 3, 1, 2});
  const auto j = train::extraction_to_json(p);
  EXPECT_EQ(j.at("doc_id"), "d1");
  ASSERT_EQ(j.at("entities").size(), 1u);
  EXPECT_EQ(j["entities"][0]["type"], "tax");
  EXPECT_EQ(j["entities"][0]["value"], "$5.00");
  EXPECT_EQ(j["entities"][0]["segment_id"], 3);
  EXPECT_EQ(j["entities"][0]["token_range"], nlohmann::json::array({1, 2}));
}

}  // namespace
