#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "docgraph/gconv/lstm.hpp"
#include "docgraph/nn/params.hpp"
#include "docgraph/nn/tape.hpp"

namespace docgraph::tagger {

/// Linear-chain CRF scores. transitions(a, b) scores tag a followed by tag b.
struct CrfScores {
  nn::Tensor transitions;  // [K, K]
  nn::Tensor start;        // [K]
  nn::Tensor end;          // [K]

  static CrfScores zeros(std::size_t tags);
  std::size_t tag_count() const { return start.size(); }
};

struct CrfParams {
  nn::Parameter* transitions = nullptr;
  nn::Parameter* start = nullptr;
  nn::Parameter* end = nullptr;

  static CrfParams create(nn::ParameterStore& store, const std::string& prefix, std::size_t tags);
  std::size_t tag_count() const { return start->value.size(); }
  CrfScores scores() const;
};

// Plain evaluation over one sequence; emissions are [m, K].

double crf_path_score(const nn::Tensor& emissions, const CrfScores& crf, std::span<const int> tags);
/// logZ by the forward algorithm in log space.
double crf_log_partition(const nn::Tensor& emissions, const CrfScores& crf);
double crf_log_likelihood(const nn::Tensor& emissions, const CrfScores& crf, std::span<const int> tags);
/// Highest-scoring sequence. Ties go to the lowest tag index, both when
/// choosing the final tag and at every backtrack step.
std::vector<int> viterbi_decode(const nn::Tensor& emissions, const CrfScores& crf);

/// Sum over sequences of -(path score(gold) - logZ), recorded on the tape.
/// Emissions are packed [total, K] following the batch layout.
nn::Var crf_negative_log_likelihood(nn::Var emissions, const CrfParams& crf, const gconv::SequenceBatch& batch,
                                    const std::vector<std::vector<int>>& gold);

}  // namespace docgraph::tagger
