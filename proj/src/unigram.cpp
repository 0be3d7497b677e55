#include "montok/unigram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "montok/byteops.hpp"
#include "montok/errors.hpp"

namespace montok {

namespace {

// Log-probability floor for tokens with zero expected count. Finite (not
// -inf) so likelihoods stay comparable and EM stays monotone within a phase.
constexpr double kFloorLogProb = -1e30;
const double kNegInf = -std::numeric_limits<double>::infinity();

struct TrainWord {
  std::string bytes;
  std::uint64_t count = 0;
};

std::vector<TrainWord> collect_words(const std::vector<std::string>& lines,
                                     const pretok::PreTokenizerSpec& spec) {
  std::unordered_map<std::string, std::uint64_t> counts;
  std::vector<const std::string*> order;
  for (const std::string& line : lines) {
    for (std::string_view span : pretok::pretokenize(line, spec)) {
      auto [it, fresh] = counts.try_emplace(std::string(span), 0);
      if (fresh) order.push_back(&it->first);
      ++it->second;
    }
  }
  std::vector<TrainWord> words;
  words.reserve(order.size());
  for (const std::string* key : order) words.push_back({*key, counts[*key]});
  return words;
}

// Byte offsets of character boundaries; undecodable bytes count as one
// character so arbitrary input still yields a partition.
std::vector<std::size_t> char_boundaries(const std::string& bytes) {
  std::vector<std::size_t> offs{0};
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    if (!byteops::utf8_next(bytes, pos)) ++pos;
    offs.push_back(pos);
  }
  return offs;
}

struct SeedCandidate {
  std::string bytes;
  std::uint64_t weight = 0;  // occurrence count x character length
};

// Character-aligned substrings of at least two bytes, ranked by
// count x length; byte occurrence counts are gathered in the same pass.
std::vector<SeedCandidate> seed_candidates(const std::vector<TrainWord>& words,
                                           std::size_t max_token_chars,
                                           std::vector<std::uint64_t>& byte_counts) {
  std::unordered_map<std::string, std::uint64_t> counts;
  byte_counts.assign(256, 0);
  for (const TrainWord& w : words) {
    for (unsigned char b : w.bytes) byte_counts[b] += w.count;
    const std::vector<std::size_t> offs = char_boundaries(w.bytes);
    const std::size_t nchars = offs.size() - 1;
    for (std::size_t i = 0; i < nchars; ++i) {
      const std::size_t last = std::min(nchars, i + max_token_chars);
      for (std::size_t j = i + 1; j <= last; ++j) {
        if (offs[j] - offs[i] < 2) continue;
        counts[w.bytes.substr(offs[i], offs[j] - offs[i])] += w.count;
      }
    }
  }
  std::vector<SeedCandidate> cands;
  cands.reserve(counts.size());
  for (auto& [bytes, count] : counts) {
    auto chars = byteops::utf8_length(bytes);
    const std::uint64_t len = chars ? *chars : bytes.size();
    cands.push_back({bytes, count * len});
  }
  std::sort(cands.begin(), cands.end(), [](const SeedCandidate& a, const SeedCandidate& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.bytes < b.bytes;
  });
  return cands;
}

struct TrieNode {
  std::unordered_map<unsigned char, std::int32_t> next;
  std::int32_t token = -1;
};

std::vector<TrieNode> build_trie(const std::vector<std::string>& tokens) {
  std::vector<TrieNode> trie(1);
  for (std::size_t id = 0; id < tokens.size(); ++id) {
    std::int32_t node = 0;
    for (unsigned char b : tokens[id]) {
      auto [it, fresh] = trie[node].next.try_emplace(b, 0);
      if (fresh) {
        it->second = static_cast<std::int32_t>(trie.size());
        trie.emplace_back();
      }
      node = it->second;
    }
    trie[node].token = static_cast<std::int32_t>(id);
  }
  return trie;
}

struct ViterbiCell {
  double lp = 0.0;
  std::int32_t count = 0;
  std::int32_t token = -1;
  std::int32_t next = 0;
};

// Backward DP; ties prefer fewer tokens, then the longest leftmost token.
double viterbi_word(const std::string& bytes, const std::vector<TrieNode>& trie,
                    const std::vector<double>& score, const std::vector<char>& alive,
                    std::int32_t banned, std::vector<std::int32_t>* out) {
  const std::size_t n = bytes.size();
  if (n == 0) {
    if (out) out->clear();
    return 0.0;
  }
  std::vector<ViterbiCell> best(n + 1);
  for (std::size_t i = 0; i < n; ++i) best[i].lp = kNegInf;
  for (std::size_t ii = n; ii-- > 0;) {
    std::int32_t node = 0;
    ViterbiCell& cur = best[ii];
    for (std::size_t j = ii; j < n; ++j) {
      auto itn = trie[node].next.find(static_cast<unsigned char>(bytes[j]));
      if (itn == trie[node].next.end()) break;
      node = itn->second;
      const std::int32_t tok = trie[node].token;
      if (tok < 0 || !alive[tok] || tok == banned) continue;
      const ViterbiCell& tail = best[j + 1];
      if (tail.lp == kNegInf) continue;
      const double lp = score[tok] + tail.lp;
      const std::int32_t count = tail.count + 1;
      const std::int32_t end = static_cast<std::int32_t>(j + 1);
      bool take = cur.token < 0;
      if (!take && lp > cur.lp) take = true;
      if (!take && lp == cur.lp &&
          (count < cur.count || (count == cur.count && end > cur.next))) {
        take = true;
      }
      if (take) {
        cur.lp = lp;
        cur.count = count;
        cur.token = tok;
        cur.next = end;
      }
    }
  }
  if (out) {
    out->clear();
    std::size_t i = 0;
    while (i < n) {
      out->push_back(best[i].token);
      i = static_cast<std::size_t>(best[i].next);
    }
  }
  return best[0].lp;
}

struct Trainer {
  std::vector<TrainWord> words;
  std::vector<std::string> tokens;        // id -> bytes (0..255 = single bytes)
  std::vector<std::uint64_t> seed_weight; // 0 for byte tokens
  std::vector<TrieNode> trie;
  std::vector<double> score;
  std::vector<char> alive;

  std::size_t alive_total() const {
    std::size_t n = 0;
    for (char a : alive) n += a != 0;
    return n;
  }

  double em_round(std::vector<double>* counts_out) {
    std::vector<double> counts(tokens.size(), 0.0);
    double ll = 0.0;
    std::vector<std::int32_t> path;
    for (const TrainWord& w : words) {
      const double lp = viterbi_word(w.bytes, trie, score, alive, -1, &path);
      ll += static_cast<double>(w.count) * lp;
      for (std::int32_t id : path) counts[id] += static_cast<double>(w.count);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (alive[i]) total += counts[i];
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!alive[i]) continue;
      score[i] = counts[i] > 0.0 ? std::log(counts[i] / total) : kFloorLogProb;
    }
    if (counts_out) *counts_out = std::move(counts);
    return ll;
  }

  void renormalize() {
    double m = kNegInf;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (alive[i] && score[i] > m) m = score[i];
    }
    double s = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (alive[i]) s += std::exp(score[i] - m);
    }
    const double z = m + std::log(s);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (alive[i]) score[i] -= z;
    }
  }

  // Removes the tokens whose removal costs the least likelihood.
  void prune_round(std::size_t target_vocab, double prune_fraction) {
    std::vector<std::vector<std::int32_t>> paths(words.size());
    std::vector<double> vbest(words.size(), 0.0);
    std::vector<double> ecounts(tokens.size(), 0.0);
    for (std::size_t w = 0; w < words.size(); ++w) {
      vbest[w] = viterbi_word(words[w].bytes, trie, score, alive, -1, &paths[w]);
      for (std::int32_t id : paths[w]) {
        ecounts[id] += static_cast<double>(words[w].count);
      }
    }
    std::unordered_map<std::int32_t, std::vector<std::size_t>> used_in;
    for (std::size_t w = 0; w < words.size(); ++w) {
      std::unordered_set<std::int32_t> seen;
      for (std::int32_t id : paths[w]) {
        if (id >= 256 && seen.insert(id).second) used_in[id].push_back(w);
      }
    }

    struct PruneCand {
      double loss = 0.0;
      double em_count = 0.0;
      std::uint64_t seed_w = 0;
      std::int32_t id = 0;
    };
    std::vector<PruneCand> cands;
    std::size_t removable = 0;
    for (std::size_t id = 256; id < tokens.size(); ++id) {
      if (!alive[id]) continue;
      ++removable;
      PruneCand c;
      c.id = static_cast<std::int32_t>(id);
      c.em_count = ecounts[id];
      c.seed_w = seed_weight[id];
      auto it = used_in.find(c.id);
      if (it != used_in.end()) {
        for (std::size_t w : it->second) {
          const double banned = viterbi_word(words[w].bytes, trie, score, alive, c.id, nullptr);
          c.loss += static_cast<double>(words[w].count) * (vbest[w] - banned);
        }
      }
      cands.push_back(c);
    }
    const std::size_t excess = 256 + removable - target_vocab;
    std::size_t remove_n = static_cast<std::size_t>(
        prune_fraction * static_cast<double>(removable));
    if (remove_n < 1) remove_n = 1;
    if (remove_n > excess) remove_n = excess;
    std::sort(cands.begin(), cands.end(), [this](const PruneCand& a, const PruneCand& b) {
      if (a.loss != b.loss) return a.loss < b.loss;
      if (a.em_count != b.em_count) return a.em_count < b.em_count;
      if (a.seed_w != b.seed_w) return a.seed_w < b.seed_w;
      return tokens[a.id] > tokens[b.id];
    });
    for (std::size_t i = 0; i < remove_n; ++i) alive[cands[i].id] = 0;
    renormalize();
  }
};

}  // namespace

TokenizerModel train_unigram(const ScaledSubset& subset, const UnigramTrainConfig& cfg,
                             const pretok::PreTokenizerSpec& spec,
                             UnigramTrainLog* log) {
  if (cfg.vocab_size < 257) {
    throw VocabTooSmall("vocab_size must be >= 257, got " +
                        std::to_string(cfg.vocab_size));
  }
  if (!(cfg.seed_multiplier > 1.0)) throw DomainError("seed_multiplier must be > 1");
  if (!(cfg.prune_fraction > 0.0 && cfg.prune_fraction < 1.0)) {
    throw DomainError("prune_fraction must lie in (0, 1)");
  }
  if (cfg.max_token_chars < 1) throw DomainError("max_token_chars must be >= 1");
  if (cfg.em_rounds_per_prune < 1) throw DomainError("em_rounds_per_prune must be >= 1");

  Trainer tr;
  tr.words = collect_words(subset.lines, spec);
  if (tr.words.empty()) {
    throw EmptyCorpus("training subset has no pre-tokens: " +
                      subset.parent.language_tag);
  }

  std::vector<std::uint64_t> byte_counts;
  std::vector<SeedCandidate> cands =
      seed_candidates(tr.words, cfg.max_token_chars, byte_counts);
  const std::uint64_t seed_total = static_cast<std::uint64_t>(
      std::llround(cfg.seed_multiplier * static_cast<double>(cfg.vocab_size)));
  const std::size_t extras =
      seed_total > 256 ? static_cast<std::size_t>(seed_total - 256) : 0;
  if (cands.size() > extras) cands.resize(extras);

  tr.tokens.reserve(256 + cands.size());
  tr.seed_weight.assign(256, 0);
  for (int b = 0; b < 256; ++b) tr.tokens.push_back(std::string(1, static_cast<char>(b)));
  std::uint64_t weight_total = 0;
  for (int b = 0; b < 256; ++b) weight_total += byte_counts[b];
  for (const SeedCandidate& c : cands) {
    tr.tokens.push_back(c.bytes);
    tr.seed_weight.push_back(c.weight);
    weight_total += c.weight;
  }
  tr.score.assign(tr.tokens.size(), kFloorLogProb);
  for (int b = 0; b < 256; ++b) {
    if (byte_counts[b] > 0) {
      tr.score[b] = std::log(static_cast<double>(byte_counts[b]) /
                             static_cast<double>(weight_total));
    }
  }
  for (std::size_t i = 0; i < cands.size(); ++i) {
    tr.score[256 + i] = std::log(static_cast<double>(cands[i].weight) /
                                 static_cast<double>(weight_total));
  }
  tr.alive.assign(tr.tokens.size(), 1);
  tr.trie = build_trie(tr.tokens);

  UnigramTrainLog local_log;
  UnigramTrainLog& tl = log ? *log : local_log;
  while (true) {
    std::vector<double> phase;
    for (std::size_t r = 0; r < cfg.em_rounds_per_prune; ++r) {
      phase.push_back(tr.em_round(nullptr));
    }
    tl.phase_log_likelihoods.push_back(std::move(phase));
    if (tr.alive_total() <= cfg.vocab_size) break;
    tr.prune_round(cfg.vocab_size, cfg.prune_fraction);
  }

  TokenizerModel model = make_byte_base_model(Algorithm::unigram, spec);
  model.scores.assign(256, 0.0);
  for (int b = 0; b < 256; ++b) model.scores[b] = tr.score[b];
  for (std::size_t id = 256; id < tr.tokens.size(); ++id) {
    if (!tr.alive[id]) continue;
    model.vocab.push_back(tr.tokens[id]);
    model.scores.push_back(tr.score[id]);
  }
  model.vocab_size = static_cast<std::int32_t>(model.vocab.size());
  model.provenance.language_tag = subset.parent.language_tag;
  model.provenance.training_bytes = static_cast<long long>(subset.actual_bytes);
  model.provenance.seed = static_cast<long long>(subset.seed);
  validate_model(model);
  return model;
}

std::vector<std::int32_t> viterbi_encode(const TokenizerModel& model,
                                         std::string_view text) {
  if (model.algorithm != Algorithm::unigram) {
    throw DomainError("viterbi_encode requires a unigram model");
  }
  return Encoder(model).encode(text);
}

}  // namespace montok
