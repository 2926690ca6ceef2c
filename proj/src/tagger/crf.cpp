#include "docgraph/tagger/crf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "docgraph/nn/ops.hpp"

namespace docgraph::tagger {

using nn::Tensor;
using nn::Var;

CrfScores CrfScores::zeros(std::size_t tags) {
  return {Tensor({tags, tags}), Tensor({tags}), Tensor({tags})};
}

CrfParams CrfParams::create(nn::ParameterStore& store, const std::string& prefix, std::size_t tags) {
  if (tags == 0) throw std::invalid_argument(prefix + ": CRF needs at least one tag");
  CrfParams p;
  p.transitions = &store.add(prefix + ".transitions", Tensor({tags, tags}));
  p.start = &store.add(prefix + ".start", Tensor({tags}));
  p.end = &store.add(prefix + ".end", Tensor({tags}));
  return p;
}

CrfScores CrfParams::scores() const { return {transitions->value, start->value, end->value}; }

namespace {

void check(const Tensor& emissions, const CrfScores& crf) {
  const std::size_t K = crf.tag_count();
  if (emissions.rank() != 2 || emissions.dim(0) == 0 || emissions.dim(1) != K) {
    throw nn::NumericError("CRF emissions " + nn::shape_string(emissions.shape()) + " do not match " +
                           std::to_string(K) + " tags");
  }
}

void check_tags(std::span<const int> tags, std::size_t m, std::size_t K) {
  if (tags.size() != m) throw std::invalid_argument("CRF tag sequence length differs from emissions");
  for (int t : tags) {
    if (t < 0 || static_cast<std::size_t>(t) >= K) throw std::invalid_argument("CRF tag out of range");
  }
}

}  // namespace

double crf_path_score(const Tensor& emissions, const CrfScores& crf, std::span<const int> tags) {
  check(emissions, crf);
  const std::size_t m = emissions.dim(0);
  const std::size_t K = crf.tag_count();
  check_tags(tags, m, K);
  double s = crf.start[tags[0]] + crf.end[tags[m - 1]];
  for (std::size_t k = 0; k < m; ++k) {
    s += emissions.at(k, tags[k]);
    if (k > 0) s += crf.transitions.at(tags[k - 1], tags[k]);
  }
  return s;
}

double crf_log_partition(const Tensor& emissions, const CrfScores& crf) {
  check(emissions, crf);
  const std::size_t m = emissions.dim(0);
  const std::size_t K = crf.tag_count();
  std::vector<double> alpha(K), next(K), terms(K);
  for (std::size_t j = 0; j < K; ++j) alpha[j] = crf.start[j] + emissions.at(0, j);
  for (std::size_t k = 1; k < m; ++k) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t i = 0; i < K; ++i) terms[i] = alpha[i] + crf.transitions.at(i, j);
      next[j] = nn::logsumexp_values(terms) + emissions.at(k, j);
    }
    alpha.swap(next);
  }
  for (std::size_t j = 0; j < K; ++j) terms[j] = alpha[j] + crf.end[j];
  return nn::logsumexp_values(terms);
}

double crf_log_likelihood(const Tensor& emissions, const CrfScores& crf, std::span<const int> tags) {
  return crf_path_score(emissions, crf, tags) - crf_log_partition(emissions, crf);
}

std::vector<int> viterbi_decode(const Tensor& emissions, const CrfScores& crf) {
  check(emissions, crf);
  const std::size_t m = emissions.dim(0);
  const std::size_t K = crf.tag_count();
  std::vector<double> delta(K), next(K);
  std::vector<std::vector<int>> back(m, std::vector<int>(K, 0));
  for (std::size_t j = 0; j < K; ++j) delta[j] = crf.start[j] + emissions.at(0, j);
  for (std::size_t k = 1; k < m; ++k) {
    for (std::size_t j = 0; j < K; ++j) {
      int best = 0;
      double best_score = delta[0] + crf.transitions.at(0, j);
      for (std::size_t i = 1; i < K; ++i) {
        const double s = delta[i] + crf.transitions.at(i, j);
        if (s > best_score) {
          best_score = s;
          best = static_cast<int>(i);
        }
      }
      back[k][j] = best;
      next[j] = best_score + emissions.at(k, j);
    }
    delta.swap(next);
  }
  int last = 0;
  double best_score = delta[0] + crf.end[0];
  for (std::size_t j = 1; j < K; ++j) {
    const double s = delta[j] + crf.end[j];
    if (s > best_score) {
      best_score = s;
      last = static_cast<int>(j);
    }
  }
  std::vector<int> path(m);
  path[m - 1] = last;
  for (std::size_t k = m - 1; k > 0; --k) path[k - 1] = back[k][path[k]];
  return path;
}

Var crf_negative_log_likelihood(Var emissions, const CrfParams& crf, const gconv::SequenceBatch& batch,
                                const std::vector<std::vector<int>>& gold) {
  nn::Tape& tape = emissions.tape();
  const std::size_t K = crf.tag_count();
  const std::size_t B = batch.count();
  const std::size_t total = batch.total();
  if (B == 0) throw std::invalid_argument("crf_negative_log_likelihood: empty batch");
  if (emissions.shape() != nn::Shape{total, K}) {
    throw nn::NumericError("CRF emissions " + nn::shape_string(emissions.shape()) + " do not match batch of " +
                           std::to_string(total) + " tokens and " + std::to_string(K) + " tags");
  }
  if (gold.size() != B) throw std::invalid_argument("crf_negative_log_likelihood: one gold sequence per batch entry");
  for (std::size_t b = 0; b < B; ++b) check_tags(gold[b], batch.lengths[b], K);

  const Var trans = tape.param(*crf.transitions);
  const Var start = tape.param(*crf.start);
  const Var end = tape.param(*crf.end);
  const std::size_t max_len = *std::max_element(batch.lengths.begin(), batch.lengths.end());

  // Forward algorithm over all sequences at once; finished rows are frozen by mask.
  std::vector<std::size_t> rows(B);
  for (std::size_t b = 0; b < B; ++b) rows[b] = batch.offsets[b];
  Var alpha = nn::add(nn::gather_rows(emissions, rows), start);  // [B, K]
  const Var trans_t = nn::transpose(trans);                       // [to, from]
  for (std::size_t t = 1; t < max_len; ++t) {
    Tensor mask({B, 1});
    bool all_active = true;
    for (std::size_t b = 0; b < B; ++b) {
      if (t < batch.lengths[b]) {
        rows[b] = batch.offsets[b] + t;
        mask[b] = 1.0;
      } else {
        rows[b] = batch.offsets[b];
        all_active = false;
      }
    }
    const Var scores = nn::add(nn::reshape(alpha, {B, 1, K}), trans_t);  // [B, to, from]
    const Var next = nn::add(nn::logsumexp(scores), nn::gather_rows(emissions, rows));
    alpha = all_active ? next : nn::add(alpha, nn::mul(tape.constant(std::move(mask)), nn::sub(next, alpha)));
  }
  const Var log_z = nn::sum(nn::logsumexp(nn::add(alpha, end)));

  // Gold path scores by gathering flattened score tables.
  std::vector<std::size_t> emit_idx, trans_idx, start_idx, end_idx;
  for (std::size_t b = 0; b < B; ++b) {
    const auto& y = gold[b];
    start_idx.push_back(static_cast<std::size_t>(y.front()));
    end_idx.push_back(static_cast<std::size_t>(y.back()));
    for (std::size_t k = 0; k < y.size(); ++k) {
      emit_idx.push_back((batch.offsets[b] + k) * K + static_cast<std::size_t>(y[k]));
      if (k > 0) trans_idx.push_back(static_cast<std::size_t>(y[k - 1]) * K + static_cast<std::size_t>(y[k]));
    }
  }
  Var gold_score = nn::add(nn::sum(nn::gather_rows(nn::reshape(emissions, {total * K}), emit_idx)),
                           nn::sum(nn::gather_rows(start, start_idx)));
  gold_score = nn::add(gold_score, nn::sum(nn::gather_rows(end, end_idx)));
  if (!trans_idx.empty()) {
    gold_score = nn::add(gold_score, nn::sum(nn::gather_rows(nn::reshape(trans, {K * K}), trans_idx)));
  }
  return nn::sub(log_z, gold_score);
}

}  // namespace docgraph::tagger
