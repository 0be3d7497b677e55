#include "montok/metrics.hpp"

#include <cmath>
#include <unordered_map>

#include "montok/byteops.hpp"
#include "montok/corpus.hpp"
#include "montok/errors.hpp"

namespace montok {

const char* script_group_name(ScriptGroup g) {
  switch (g) {
    case ScriptGroup::latin: return "latin";
    case ScriptGroup::cyrillic: return "cyrillic";
    case ScriptGroup::arabic: return "arabic";
    default: return "other";
  }
}

ScriptGroup script_group(const std::string& language_tag) {
  if (!language_tag_well_formed(language_tag)) {
    throw BadLanguageTag("malformed language tag: " + language_tag);
  }
  const std::string script = language_tag.substr(4);
  if (script == "latn") return ScriptGroup::latin;
  if (script == "cyrl") return ScriptGroup::cyrillic;
  if (script == "arab") return ScriptGroup::arabic;
  return ScriptGroup::other;
}

std::uint64_t corpus_token_count(const Encoder& encoder,
                                 const std::vector<std::string>& eval_lines) {
  std::uint64_t total = 0;
  for (const std::string& line : eval_lines) total += encoder.encode(line).size();
  return total;
}

std::uint64_t corpus_token_count(const TokenizerModel& model,
                                 const std::vector<std::string>& eval_lines) {
  return corpus_token_count(Encoder(model), eval_lines);
}

double token_premium(std::uint64_t ctc_lang, std::uint64_t ctc_ref) {
  if (ctc_ref == 0) throw ZeroReference("reference CTC is zero");
  return static_cast<double>(ctc_lang) / static_cast<double>(ctc_ref);
}

namespace {

// Characters per line, with undecodable bytes counted one character each.
std::uint64_t char_count(const std::string& line) {
  std::uint64_t n = 0;
  std::size_t pos = 0;
  while (pos < line.size()) {
    if (!byteops::utf8_next(line, pos)) ++pos;
    ++n;
  }
  return n;
}

}  // namespace

double mean_token_length(const TokenizerModel& model, LengthScope scope,
                         const std::vector<std::string>& eval_lines) {
  if (scope == LengthScope::vocab) {
    if (model.vocab.empty()) throw EmptyVocab("model has an empty vocabulary");
    std::uint64_t chars = 0;
    for (const std::string& token : model.vocab) {
      auto n = byteops::utf8_length(token);
      chars += n ? *n : 1;  // partial UTF-8 sequences count as one character
    }
    return static_cast<double>(chars) / static_cast<double>(model.vocab.size());
  }
  std::uint64_t chars = 0;
  for (const std::string& line : eval_lines) chars += char_count(line);
  const std::uint64_t ctc = corpus_token_count(model, eval_lines);
  if (ctc == 0) throw EmptyCorpus("corpus-scope mean token length needs eval text");
  return static_cast<double>(chars) / static_cast<double>(ctc);
}

double data_similarity(const TokenizerModel& model,
                       const std::vector<std::string>& train_lines,
                       const std::vector<std::string>& eval_lines) {
  Encoder encoder(model);
  std::vector<char> in_train(model.vocab.size(), 0), in_eval(model.vocab.size(), 0);
  for (const std::string& line : train_lines) {
    for (std::int32_t id : encoder.encode(line)) in_train[id] = 1;
  }
  for (const std::string& line : eval_lines) {
    for (std::int32_t id : encoder.encode(line)) in_eval[id] = 1;
  }
  std::uint64_t overlap = 0;
  for (std::size_t i = 0; i < in_train.size(); ++i) {
    overlap += in_train[i] && in_eval[i];
  }
  return static_cast<double>(overlap) / static_cast<double>(model.vocab.size());
}

double proportion_whitespace(const std::vector<std::string>& eval_lines) {
  std::uint64_t total = 0, ws = 0;
  for (const std::string& line : eval_lines) {
    std::size_t pos = 0;
    while (pos < line.size()) {
      auto cp = byteops::utf8_next(line, pos);
      if (!cp) ++pos;
      ++total;
      if (cp && byteops::is_unicode_whitespace(*cp)) ++ws;
    }
  }
  if (total == 0) throw EmptyCorpus("no characters to measure whitespace over");
  return static_cast<double>(ws) / static_cast<double>(total);
}

namespace {

double entropy_bits(const std::unordered_map<std::uint64_t, std::uint64_t>& counts,
                    std::uint64_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [key, count] : counts) {
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

CharStats char_stats(const std::vector<std::string>& train_lines,
                     bool exclude_whitespace) {
  std::unordered_map<std::uint64_t, std::uint64_t> uni, bi;
  std::uint64_t uni_total = 0, bi_total = 0;
  std::vector<std::uint32_t> kept;
  for (const std::string& line : train_lines) {
    kept.clear();
    std::size_t pos = 0;
    while (pos < line.size()) {
      auto cp = byteops::utf8_next(line, pos);
      std::uint32_t c;
      if (cp) {
        c = *cp;
      } else {
        // Undecodable byte: private sentinel above the Unicode range.
        c = 0x110000u + static_cast<unsigned char>(line[pos]);
        ++pos;
      }
      if (exclude_whitespace && cp && byteops::is_unicode_whitespace(*cp)) continue;
      kept.push_back(c);
    }
    for (std::uint32_t c : kept) {
      ++uni[c];
      ++uni_total;
    }
    for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
      ++bi[(static_cast<std::uint64_t>(kept[i]) << 32) | kept[i + 1]];
      ++bi_total;
    }
  }
  if (uni_total == 0) throw EmptyCorpus("no characters left for char_stats");
  CharStats stats;
  stats.unigrams_unique = uni.size();
  stats.unigram_entropy = entropy_bits(uni, uni_total);
  stats.bigram_entropy = entropy_bits(bi, bi_total);
  return stats;
}

}  // namespace montok
