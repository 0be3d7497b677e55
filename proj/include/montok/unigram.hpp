#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "montok/corpus.hpp"
#include "montok/model.hpp"
#include "montok/pretok.hpp"

namespace montok {

struct UnigramTrainConfig {
  std::size_t vocab_size = 0;
  double seed_multiplier = 4.0;    // seed vocab = multiplier x vocab_size
  double prune_fraction = 0.25;    // share of removable tokens dropped per round
  std::size_t max_token_chars = 16;
  std::size_t em_rounds_per_prune = 2;
};

// Training-corpus log-likelihood after each EM round, grouped by phase (the
// rounds between two prunes form one phase; likelihood may drop at a prune).
struct UnigramTrainLog {
  std::vector<std::vector<double>> phase_log_likelihoods;
};

// Trains a Unigram-LM tokenizer: seed vocabulary of all single bytes plus the
// highest count-x-length character-aligned substrings, hard-EM probability
// re-estimation, and iterative pruning of the tokens whose removal costs the
// least likelihood (single bytes are never pruned). Throws VocabTooSmall
// (< 257), EmptyCorpus and DomainError (bad config).
TokenizerModel train_unigram(const ScaledSubset& subset, const UnigramTrainConfig& cfg,
                             const pretok::PreTokenizerSpec& spec,
                             UnigramTrainLog* log = nullptr);

// Max-log-probability segmentation per pre-token span; ties prefer fewer
// tokens, then the leftmost-longest split. Equivalent to Encoder::encode for
// unigram models.
std::vector<std::int32_t> viterbi_encode(const TokenizerModel& model,
                                         std::string_view text);

}  // namespace montok
