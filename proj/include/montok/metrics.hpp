#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "montok/model.hpp"

namespace montok {

// One grid cell of compression measurements for a (language, tokenizer) pair.
struct CompressionReport {
  std::string language_tag;
  std::string tokenizer_id;
  Algorithm algorithm = Algorithm::bpe;
  std::int32_t vocab_size = 0;
  std::uint64_t ctc = 0;
  double token_premium = 1.0;
  double mean_token_len_vocab = 0.0;
  double mean_token_len_corpus = 0.0;
  double data_sim = 0.0;
  double proportion_whitespace = 0.0;
};

enum class ScriptGroup { latin, cyrillic, arabic, other };

const char* script_group_name(ScriptGroup g);
// latn -> latin, cyrl -> cyrillic, arab -> arabic, anything else -> other.
ScriptGroup script_group(const std::string& language_tag);

struct CharStats {
  std::uint64_t unigrams_unique = 0;
  double unigram_entropy = 0.0;  // bits
  double bigram_entropy = 0.0;   // bits
};

// Per-language predictor row; n_phonemes comes from a user-supplied table.
struct LanguageProfile {
  std::string language_tag;
  std::optional<std::int64_t> n_phonemes;
  double proportion_whitespace = 0.0;
  std::uint64_t unigrams_unique = 0;
  double bigrams_entropy_nospace = 0.0;
  double unigrams_entropy_nospace = 0.0;
  double char_coef = 1.0;
  double byte_coef = 1.0;
  double byte_premium = 1.0;
  double vocab_mean_token_len = 0.0;
  double flores_mean_token_len = 0.0;
  double data_sim = 0.0;
  ScriptGroup script = ScriptGroup::other;
};

// Total number of tokens the model produces over the evaluation lines.
std::uint64_t corpus_token_count(const Encoder& encoder,
                                 const std::vector<std::string>& eval_lines);
std::uint64_t corpus_token_count(const TokenizerModel& model,
                                 const std::vector<std::string>& eval_lines);

// ctc_lang / ctc_ref. Throws ZeroReference.
double token_premium(std::uint64_t ctc_lang, std::uint64_t ctc_ref);

enum class LengthScope { vocab, corpus };

// vocab scope: mean characters per vocabulary entry (tokens that are not
// valid UTF-8 on their own count as one character). corpus scope: total eval
// characters / CTC. Throws EmptyVocab, EmptyCorpus (corpus scope, no eval).
double mean_token_length(const TokenizerModel& model, LengthScope scope,
                         const std::vector<std::string>& eval_lines = {});

// |distinct ids used on train ∩ distinct ids used on eval| / vocab_size.
double data_similarity(const TokenizerModel& model,
                       const std::vector<std::string>& train_lines,
                       const std::vector<std::string>& eval_lines);

// Unicode-whitespace characters / all characters, separators excluded.
// Throws EmptyCorpus when there are no characters at all.
double proportion_whitespace(const std::vector<std::string>& eval_lines);

// Character unigram/bigram Shannon entropies in bits; bigrams never cross
// line boundaries. With exclude_whitespace, whitespace characters are removed
// before pairing (the "nospace" variants). Throws EmptyCorpus.
CharStats char_stats(const std::vector<std::string>& train_lines,
                     bool exclude_whitespace);

}  // namespace montok
