#include "docgraph/tagger/tagger.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "docgraph/nn/ops.hpp"

namespace docgraph::tagger {

using nn::Tensor;
using nn::Var;

TaggerParams TaggerParams::create(nn::ParameterStore& store, const std::string& prefix, const TaggerDims& dims,
                                  std::mt19937_64& rng) {
  if (dims.vocab < 3 || dims.embed_dim == 0 || dims.hidden == 0 || dims.tags == 0) {
    throw std::invalid_argument(prefix + ": tagger sizes must be positive and cover PAD/UNK/SEP");
  }
  TaggerParams p;
  p.dims = dims;
  p.embedding = &store.add(prefix + ".embedding", nn::uniform_tensor({dims.vocab, dims.embed_dim}, 0.1, rng));
  p.lstm = gconv::BiLstm::create(store, prefix + ".lstm", dims.embed_dim + dims.graph_dim, dims.hidden, rng);
  p.w_out = &store.add(prefix + ".w_out", nn::fan_in_uniform(2 * dims.hidden, dims.tags, rng));
  p.b_out = &store.add(prefix + ".b_out", Tensor({dims.tags}));
  p.crf = CrfParams::create(store, prefix + ".crf", dims.tags);
  return p;
}

std::size_t load_pretrained_vectors(TaggerParams& params, const doc::Vocabulary& vocab,
                                    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pretrained vectors '" + path.string() + "'");
  const std::size_t d = params.dims.embed_dim;
  Tensor& table = params.embedding->value;
  std::size_t loaded = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (v.size() != d) {
      if (line_no == 1 && v.size() == 1) continue;  // "count dim" header line
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(d) +
                               " values, found " + std::to_string(v.size()));
    }
    const std::size_t row = vocab.id(word);
    if (row == doc::Vocabulary::kUnk && doc::Vocabulary::lookup_key(word) != "[unk]") continue;
    std::copy(v.begin(), v.end(), table.raw() + row * d);
    ++loaded;
  }
  return loaded;
}

Var fuse_inputs(nn::Tape& tape, const TaggerParams& params, const std::vector<std::size_t>& token_ids,
                Var graph_rows, const std::vector<std::size_t>& owner) {
  const Var e = nn::gather_rows(tape.param(*params.embedding), token_ids);
  if (params.dims.graph_dim == 0) return e;
  if (!graph_rows.valid()) throw std::invalid_argument("fuse_inputs: tagger expects graph embeddings");
  if (owner.size() != token_ids.size()) throw std::invalid_argument("fuse_inputs: one owner per token required");
  if (graph_rows.shape().size() != 2 || graph_rows.shape()[1] != params.dims.graph_dim) {
    throw nn::NumericError("fuse_inputs: graph embeddings " + nn::shape_string(graph_rows.shape()) +
                           " do not have width " + std::to_string(params.dims.graph_dim));
  }
  return nn::concat({e, nn::gather_rows(graph_rows, owner)}, 1);
}

Var emissions(const TaggerParams& params, Var fused, const gconv::SequenceBatch& batch) {
  nn::Tape& tape = fused.tape();
  const Var states = gconv::run_bilstm(params.lstm, fused, batch, true).token_states;
  return nn::add(nn::matmul(states, tape.param(*params.w_out)), tape.param(*params.b_out));
}

std::vector<EntitySpan> decode_entities(const std::vector<int>& tags, const std::vector<std::string>& tokens,
                                        const doc::TagSet& tagset, doc::TokenizerMode mode) {
  if (tags.size() != tokens.size()) throw std::invalid_argument("decode_entities: tags and tokens differ in length");
  std::vector<EntitySpan> spans;
  std::size_t k = 0;
  while (k < tags.size()) {
    const auto entity = tagset.entity_of(tags[k]);
    if (!entity) {
      ++k;
      continue;
    }
    // Either B-X or a stray I-X, which opens a span the same way.
    std::size_t end = k + 1;
    while (end < tags.size() && tags[end] == tagset.inside_tag(*entity)) ++end;
    EntitySpan s;
    s.entity_type = tagset.entity_types()[*entity];
    s.begin = k;
    s.end = end;
    s.value = join_tokens(std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(k),
                                                   tokens.begin() + static_cast<std::ptrdiff_t>(end)),
                          mode);
    spans.push_back(std::move(s));
    k = end;
  }
  return spans;
}

std::vector<int> encode_entities(const std::vector<EntitySpan>& spans, std::size_t length, const doc::TagSet& tagset) {
  std::vector<int> tags(length, doc::TagSet::outside());
  for (const EntitySpan& s : spans) {
    const auto entity = tagset.entity_index(s.entity_type);
    if (!entity || s.begin >= s.end || s.end > length) throw std::invalid_argument("encode_entities: bad span");
    tags[s.begin] = tagset.begin_tag(*entity);
    for (std::size_t k = s.begin + 1; k < s.end; ++k) tags[k] = tagset.inside_tag(*entity);
  }
  return tags;
}

}  // namespace docgraph::tagger
