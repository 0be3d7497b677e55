#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "montok/corpus.hpp"
#include "montok/model.hpp"
#include "montok/pretok.hpp"

namespace montok {

namespace bpe {

// A deduplicated pre-token span as a symbol sequence with its corpus count.
struct Word {
  std::vector<std::int32_t> syms;
  std::uint64_t count = 0;
};

std::vector<Word> build_words(const std::vector<std::string>& lines,
                              const pretok::PreTokenizerSpec& spec);

// Replays an existing merge table over freshly segmented words, lowest rank
// first (leftmost occurrence first within a rank).
void apply_merges(std::vector<Word>& words,
                  const std::vector<std::pair<std::int32_t, std::int32_t>>& merges);

// Grows vocab/merges by repeatedly merging the most frequent adjacent pair
// until target_vocab entries exist or no pair occurs at least twice. Ties
// prefer the lexicographically smaller concatenated bytes, then the smaller
// left token. Words are rewritten in place as merges land.
void extend_merges(std::vector<std::string>& vocab,
                   std::vector<std::pair<std::int32_t, std::int32_t>>& merges,
                   std::vector<Word>& words, std::size_t target_vocab);

std::uint64_t total_symbols(const std::vector<Word>& words);

}  // namespace bpe

// Trains a byte-level BPE tokenizer on the subset's lines.
// Throws VocabTooSmall (< 257) and EmptyCorpus.
TokenizerModel train_bpe(const ScaledSubset& subset, std::size_t vocab_size,
                         const pretok::PreTokenizerSpec& spec);

}  // namespace montok
