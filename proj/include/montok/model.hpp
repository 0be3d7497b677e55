#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "montok/pretok.hpp"

// The trained tokenizer artifact shared by all three algorithms, plus its
// file format and the encode/decode entry points. Token ids 0..255 are always
// the 256 single bytes, so every byte sequence is encodable (byte fallback).

namespace montok {

enum class Algorithm { bpe, unigram, superbpe };

const char* algorithm_name(Algorithm a);
// Returns false if the name is unknown.
bool algorithm_from_name(std::string_view name, Algorithm& out);

struct Provenance {
  std::string language_tag;
  long long training_bytes = 0;
  long long seed = 0;

  bool operator==(const Provenance&) const = default;
};

struct TokenizerModel {
  Algorithm algorithm = Algorithm::bpe;
  // Token id -> raw bytes. Ids 0..255 are the single bytes; id 256+k is the
  // token created by merges[k] (bpe/superbpe) or the k-th learned unigram
  // piece.
  std::vector<std::string> vocab;
  // Merge ranks in learned order (bpe/superbpe only).
  std::vector<std::pair<std::int32_t, std::int32_t>> merges;
  // Log-probability per token id (unigram only), aligned with vocab.
  std::vector<double> scores;
  pretok::PreTokenizerSpec pretokenizer;
  // Achieved vocabulary size (== vocab.size()); may be smaller than the
  // requested size when training stops early.
  std::int32_t vocab_size = 0;
  // Number of tokens learned before whitespace boundaries were lifted
  // (superbpe only, 0 otherwise).
  std::int32_t transition_point = 0;
  Provenance provenance;

  bool operator==(const TokenizerModel&) const = default;
};

// Model with just the 256 byte tokens.
TokenizerModel make_byte_base_model(Algorithm algorithm,
                                    const pretok::PreTokenizerSpec& spec);

// Throws MalformedModelFile if any structural invariant is violated
// (duplicate token bytes, broken merge parentage, missing scores, ...).
void validate_model(const TokenizerModel& model);

// Lossless JSON round trip. save throws IoError; load throws IoError or
// MalformedModelFile.
void save_model(const TokenizerModel& model, const std::filesystem::path& path);
TokenizerModel load_model(const std::filesystem::path& path);

// Reusable encoder: builds the merge-rank table (bpe/superbpe) or the token
// trie (unigram) once, then encodes any number of texts.
class Encoder {
 public:
  explicit Encoder(const TokenizerModel& model);

  std::vector<std::int32_t> encode(std::string_view text) const;
  // Encodes one pre-token span (no pre-tokenization applied).
  std::vector<std::int32_t> encode_span(std::string_view span) const;

 private:
  struct TrieNode {
    std::unordered_map<unsigned char, std::int32_t> next;
    std::int32_t token = -1;
  };

  std::vector<std::int32_t> encode_span_merges(std::string_view span) const;
  std::vector<std::int32_t> encode_span_viterbi(std::string_view span) const;

  const TokenizerModel* model_;
  std::unordered_map<std::uint64_t, std::int32_t> merge_rank_;
  std::vector<TrieNode> trie_;
};

// One-shot conveniences; construct an Encoder for repeated use.
std::vector<std::int32_t> encode(const TokenizerModel& model,
                                 std::string_view text);
// Throws UnknownTokenId on any id outside the vocabulary.
std::string decode(const TokenizerModel& model,
                   const std::vector<std::int32_t>& ids);

inline std::uint64_t pack_pair(std::int32_t a, std::int32_t b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace montok
