#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "docgraph/doc/alignment.hpp"
#include "docgraph/doc/document.hpp"
#include "docgraph/synth/generator.hpp"

namespace {

using namespace docgraph;

synth::GeneratorConfig small_config(std::size_t n, std::size_t templates, double jitter) {
  synth::GeneratorConfig c;
  c.n_documents = n;
  c.n_templates = templates;
  c.jitter = jitter;
  c.seed = 7;
  return c;
}

std::vector<doc::Document> all_docs(const synth::Corpus& c) {
  std::vector<doc::Document> out = c.train;
  out.insert(out.end(), c.val.begin(), c.val.end());
  out.insert(out.end(), c.test.begin(), c.test.end());
  return out;
}

TEST(SyntheticCorpus, SameSeedGivesIdenticalBytes) {
  for (std::size_t templates : {1u, 10u}) {
    const auto cfg = small_config(40, templates, 0.005);
    const auto a = synth::generate_corpus(cfg);
    const auto b = synth::generate_corpus(cfg, 4);
    EXPECT_EQ(doc::corpus_to_ndjson(all_docs(a)), doc::corpus_to_ndjson(all_docs(b)));
    auto other = cfg;
    other.seed = 8;
    EXPECT_NE(doc::corpus_to_ndjson(all_docs(a)), doc::corpus_to_ndjson(all_docs(synth::generate_corpus(other))));
  }
}

TEST(SyntheticCorpus, DefaultSplitIs210_45_45) {
  synth::GeneratorConfig cfg;
  const auto c = synth::generate_corpus(cfg);
  EXPECT_EQ(c.train.size(), 210u);
  EXPECT_EQ(c.val.size(), 45u);
  EXPECT_EQ(c.test.size(), 45u);
  std::set<std::string> ids;
  for (const auto& d : all_docs(c)) ids.insert(d.doc_id);
  EXPECT_EQ(ids.size(), 300u);
}

TEST(SyntheticCorpus, EveryDocumentHasAnAmbiguousPair) {
  for (std::size_t templates : {1u, 10u}) {
    const auto docs = all_docs(synth::generate_corpus(small_config(100, templates, 0.01)));
    EXPECT_DOUBLE_EQ(synth::ambiguity_rate(docs), 1.0);
  }
}

TEST(SyntheticCorpus, SegmentCountsAndTypesAtDeskScale) {
  for (std::size_t templates : {1u, 10u}) {
    const auto cfg = small_config(60, templates, 0.0);
    const auto tmpl = synth::templates_for(cfg);
    EXPECT_EQ(tmpl.size(), templates);
    for (const auto& t : tmpl) {
      EXPECT_GE(t.entity_types().size(), 4u);
      EXPECT_LE(t.entity_types().size(), 8u);
    }
    for (const auto& d : all_docs(synth::generate_corpus(cfg))) {
      EXPECT_GE(d.segments.size(), 10u);
      EXPECT_LE(d.segments.size(), 35u);
    }
  }
}

TEST(SyntheticCorpus, ZeroNoiseDocumentsPassLoading) {
  for (std::size_t templates : {1u, 10u}) {
    for (const auto& d : all_docs(synth::generate_corpus(small_config(50, templates, 0.0)))) {
      const auto j = doc::document_to_json(d);
      EXPECT_NO_THROW(doc::load_document(j)) << d.doc_id;
    }
  }
}

TEST(SyntheticCorpus, GoldBoxesMatchSegmentBoxesAtZeroNoise) {
  const auto docs = all_docs(synth::generate_corpus(small_config(30, 10, 0.0)));
  for (const auto& d : docs) {
    for (const auto& a : d.annotations) {
      std::size_t matches = 0;
      for (const auto& s : d.segments) {
        matches += s.bbox.x == a.bbox.x && s.bbox.y == a.bbox.y && s.bbox.w == a.bbox.w && s.bbox.h == a.bbox.h;
      }
      EXPECT_EQ(matches, 1u) << d.doc_id << " " << a.entity_type;
    }
  }
}

std::size_t alignment_failures(const std::vector<doc::Document>& docs, const std::vector<std::string>& types) {
  const doc::TagSet tags(types);
  std::size_t failed = 0;
  for (const auto& d : docs) {
    const auto labels = doc::align_annotations(d, tags, 0.7);
    failed += labels.dropped;
    EXPECT_EQ(labels.aligned + labels.dropped, d.annotations.size());
  }
  return failed;
}

TEST(SyntheticCorpus, AlignmentSucceedsWithAndWithoutJitter) {
  for (std::size_t templates : {1u, 10u}) {
    for (double sigma : {0.0, 0.01}) {
      const auto cfg = small_config(100, templates, sigma);
      const auto docs = all_docs(synth::generate_corpus(cfg));
      ASSERT_EQ(docs.size(), 100u);
      std::set<std::string> types;
      for (const auto& t : synth::templates_for(cfg)) {
        for (const auto& e : t.entity_types()) types.insert(e);
      }
      EXPECT_EQ(alignment_failures(docs, {types.begin(), types.end()}), 0u)
          << "templates=" << templates << " sigma=" << sigma;
    }
  }
}

TEST(Perturb, ZeroSigmaIsIdentity) {
  const auto docs = all_docs(synth::generate_corpus(small_config(10, 1, 0.0)));
  std::mt19937_64 rng(3);
  for (const auto& d : docs) {
    EXPECT_EQ(doc::document_to_json(synth::perturb(d, 0.0, rng)), doc::document_to_json(d));
  }
}

TEST(Perturb, BoxesStayOnPageAndTextIsUnchanged) {
  const auto docs = all_docs(synth::generate_corpus(small_config(50, 10, 0.0)));
  std::mt19937_64 rng(5);
  for (const auto& d : docs) {
    // A large sigma forces clamping often.
    for (double sigma : {0.01, 0.3}) {
      const auto p = synth::perturb(d, sigma, rng);
      ASSERT_EQ(p.segments.size(), d.segments.size());
      for (std::size_t s = 0; s < d.segments.size(); ++s) {
        const auto& b = p.segments[s].bbox;
        EXPECT_EQ(p.segments[s].text, d.segments[s].text);
        EXPECT_GE(b.x, 0.0);
        EXPECT_GE(b.y, 0.0);
        EXPECT_LE(b.x + b.w, d.page_w + 1e-9);
        EXPECT_LE(b.y + b.h, d.page_h + 1e-9);
        EXPECT_DOUBLE_EQ(b.w, d.segments[s].bbox.w);
        EXPECT_DOUBLE_EQ(b.h, d.segments[s].bbox.h);
      }
      for (std::size_t a = 0; a < d.annotations.size(); ++a) {
        EXPECT_EQ(p.annotations[a].value, d.annotations[a].value);
      }
    }
  }
}

TEST(Perturb, AnnotationsFollowTheirSegment) {
  const auto docs = all_docs(synth::generate_corpus(small_config(20, 1, 0.0)));
  std::mt19937_64 rng(9);
  for (const auto& d : docs) {
    const auto p = synth::perturb(d, 0.01, rng);
    for (const auto& a : p.annotations) {
      bool same = false;
      for (const auto& s : p.segments) same |= s.bbox.x == a.bbox.x && s.bbox.y == a.bbox.y;
      EXPECT_TRUE(same);
    }
  }
}

TEST(Perturb, ShiftsAreGaussianWithRequestedScale) {
  std::mt19937_64 rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = synth::standard_normal(rng);
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Perturb, NegativeSigmaRejected) {
  std::mt19937_64 rng(1);
  doc::Document d;
  EXPECT_THROW(synth::perturb(d, -0.1, rng), std::invalid_argument);
}

std::vector<std::pair<std::string, std::vector<double>>> slot_geometry(const doc::Document& d) {
  // Geometry of the labeled segments keyed by entity type.
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (const auto& a : d.annotations) out.push_back({a.entity_type, {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}});
  std::sort(out.begin(), out.end());
  return out;
}

TEST(SyntheticCorpus, SameTemplateSameSlotGeometry) {
  for (std::size_t templates : {1u, 10u}) {
    const auto cfg = small_config(40, templates, 0.0);
    const auto docs = all_docs(synth::generate_corpus(cfg));
    for (std::size_t i = 0; i + templates < docs.size(); ++i) {
      EXPECT_EQ(slot_geometry(docs[i]), slot_geometry(docs[i + templates]));
      EXPECT_NE(doc::document_to_json(docs[i]), doc::document_to_json(docs[i + templates]));
    }
  }
}

TEST(SyntheticCorpus, TemplatesDifferInLayout) {
  const auto cfg = small_config(20, 10, 0.0);
  const auto docs = all_docs(synth::generate_corpus(cfg));
  std::set<std::vector<std::pair<std::string, std::vector<double>>>> layouts;
  for (std::size_t i = 0; i < 10; ++i) layouts.insert(slot_geometry(docs[i]));
  EXPECT_GE(layouts.size(), 9u);
}

TEST(TemplateSpec, BuiltInTemplatesAreValid) {
  EXPECT_NO_THROW(synth::validate_template(synth::fixed_template(), 4));
  for (const auto& t : synth::multi_templates(30, 99)) EXPECT_NO_THROW(synth::validate_template(t, 4)) << t.name;
}

TEST(TemplateSpec, OverlapAndMissingAmbiguityRejected) {
  auto t = synth::fixed_template();
  t.slots[1].box = t.slots[2].box;
  EXPECT_THROW(synth::validate_template(t, 4), std::invalid_argument);

  synth::TemplateSpec lone;
  lone.name = "lone";
  synth::SlotSpec s;
  s.entity_type = "a";
  s.kind = synth::ValueKind::date;
  s.box = {0.1, 0.1, 0.1, 0.1};
  lone.slots.push_back(s);
  s.entity_type = "b";
  s.kind = synth::ValueKind::amount;
  s.box = {0.5, 0.5, 0.1, 0.1};
  lone.slots.push_back(s);
  EXPECT_THROW(synth::validate_template(lone, 0), std::invalid_argument);
}

TEST(GeneratorConfig, ValidationAndJsonRoundTrip) {
  synth::GeneratorConfig c;
  c.n_templates = 10;
  c.jitter = 0.02;
  c.seed = 123;
  const auto back = synth::generator_config_from_json(synth::to_json(c));
  EXPECT_EQ(synth::to_json(back), synth::to_json(c));

  auto bad = c;
  bad.jitter = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.train_fraction = 0.8;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.n_documents = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_THROW(synth::generator_config_from_json({{"n_docs", 3}}), std::invalid_argument);
  EXPECT_THROW(synth::generator_config_from_json({{"jitter", "x"}}), std::invalid_argument);
}

}  // namespace
