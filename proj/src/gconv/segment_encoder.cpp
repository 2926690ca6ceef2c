#include "docgraph/gconv/segment_encoder.hpp"

#include <stdexcept>

#include "docgraph/doc/vocab.hpp"
#include "docgraph/nn/ops.hpp"

namespace docgraph::gconv {

SegmentEncoder SegmentEncoder::create(nn::ParameterStore& store, const std::string& prefix, std::size_t vocab_size,
                                      std::size_t embed_dim, std::size_t hidden, std::mt19937_64& rng) {
  if (vocab_size == 0 || embed_dim == 0) throw std::invalid_argument(prefix + ": embedding sizes must be positive");
  SegmentEncoder e;
  e.embedding = &store.add(prefix + ".embedding", nn::uniform_tensor({vocab_size, embed_dim}, 0.1, rng));
  e.lstm = BiLstm::create(store, prefix + ".lstm", embed_dim, hidden, rng);
  return e;
}

nn::Var SegmentEncoder::encode(nn::Tape& tape, const std::vector<std::vector<std::size_t>>& segments) const {
  if (segments.empty()) throw std::invalid_argument("SegmentEncoder::encode: no segments");
  std::vector<std::size_t> ids;
  std::vector<std::size_t> lengths;
  for (const auto& seg : segments) {
    if (seg.empty()) {
      ids.push_back(doc::Vocabulary::kPad);
      lengths.push_back(1);
    } else {
      ids.insert(ids.end(), seg.begin(), seg.end());
      lengths.push_back(seg.size());
    }
  }
  const nn::Var table = tape.param(*embedding);
  const nn::Var inputs = nn::gather_rows(table, ids);
  return run_bilstm(lstm, inputs, SequenceBatch::from_lengths(lengths), false).final_states;
}

nn::Tensor encode_segment(const SegmentEncoder& encoder, const std::vector<std::size_t>& token_ids) {
  nn::Tape tape;
  const nn::Var out = encoder.encode(tape, {token_ids});
  return out.value().reshaped({encoder.output_dim()});
}

}  // namespace docgraph::gconv
