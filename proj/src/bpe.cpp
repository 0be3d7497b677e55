#include "montok/bpe.hpp"

#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "montok/errors.hpp"

namespace montok {
namespace bpe {

namespace {

inline std::int32_t pair_left(std::uint64_t key) {
  return static_cast<std::int32_t>(key >> 32);
}

inline std::int32_t pair_right(std::uint64_t key) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(key));
}

// Lexicographic compare of (a1+a2) vs (b1+b2) without concatenating.
int compare_concat(const std::string& a1, const std::string& a2,
                   const std::string& b1, const std::string& b2) {
  const std::size_t na = a1.size() + a2.size();
  const std::size_t nb = b1.size() + b2.size();
  const std::size_t n = na < nb ? na : nb;
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char ca =
        static_cast<unsigned char>(i < a1.size() ? a1[i] : a2[i - a1.size()]);
    unsigned char cb =
        static_cast<unsigned char>(i < b1.size() ? b1[i] : b2[i - b1.size()]);
    if (ca != cb) return ca < cb ? -1 : 1;
  }
  if (na != nb) return na < nb ? -1 : 1;
  return 0;
}

struct HeapEntry {
  std::uint64_t count = 0;
  std::int32_t left = 0;
  std::int32_t right = 0;
};

// priority_queue "less": true when a ranks below b. Highest count wins; ties
// go to the lexicographically smaller concatenation, then the smaller left
// token bytes (which pins the split when two pairs concatenate equally).
struct EntryBelow {
  const std::vector<std::string>* vocab = nullptr;

  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.count != b.count) return a.count < b.count;
    int c = compare_concat((*vocab)[a.left], (*vocab)[a.right], (*vocab)[b.left],
                           (*vocab)[b.right]);
    if (c != 0) return c > 0;
    return (*vocab)[a.left] > (*vocab)[b.left];
  }
};

}  // namespace

std::vector<Word> build_words(const std::vector<std::string>& lines,
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
  std::vector<Word> words;
  words.reserve(order.size());
  for (const std::string* key : order) {
    Word w;
    w.count = counts[*key];
    w.syms.reserve(key->size());
    for (unsigned char b : *key) w.syms.push_back(static_cast<std::int32_t>(b));
    words.push_back(std::move(w));
  }
  return words;
}

void apply_merges(std::vector<Word>& words,
                  const std::vector<std::pair<std::int32_t, std::int32_t>>& merges) {
  if (merges.empty()) return;
  std::unordered_map<std::uint64_t, std::int32_t> rank;
  rank.reserve(merges.size() * 2);
  for (std::size_t k = 0; k < merges.size(); ++k) {
    rank.emplace(pack_pair(merges[k].first, merges[k].second),
                 static_cast<std::int32_t>(k));
  }

  struct Cand {
    std::int32_t merge_rank = 0;
    std::int32_t pos = 0;
  };
  auto below = [](const Cand& a, const Cand& b) {
    if (a.merge_rank != b.merge_rank) return a.merge_rank > b.merge_rank;
    return a.pos > b.pos;  // lowest rank first, then leftmost occurrence
  };

  for (Word& word : words) {
    const std::size_t n = word.syms.size();
    if (n < 2) continue;
    std::vector<std::int32_t> next(n), prev(n);
    std::vector<char> alive(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = i + 1 < n ? static_cast<std::int32_t>(i + 1) : -1;
      prev[i] = static_cast<std::int32_t>(i) - 1;
    }
    std::priority_queue<Cand, std::vector<Cand>, decltype(below)> heap(below);
    auto push_if_ranked = [&](std::int32_t pos) {
      std::int32_t nx = next[pos];
      if (nx < 0) return;
      auto it = rank.find(pack_pair(word.syms[pos], word.syms[nx]));
      if (it != rank.end()) heap.push({it->second, pos});
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
      push_if_ranked(static_cast<std::int32_t>(i));
    }
    while (!heap.empty()) {
      Cand c = heap.top();
      heap.pop();
      if (!alive[c.pos]) continue;
      std::int32_t nx = next[c.pos];
      if (nx < 0) continue;
      auto it = rank.find(pack_pair(word.syms[c.pos], word.syms[nx]));
      if (it == rank.end() || it->second != c.merge_rank) continue;  // stale
      word.syms[c.pos] = 256 + c.merge_rank;
      alive[nx] = 0;
      next[c.pos] = next[nx];
      if (next[nx] >= 0) prev[next[nx]] = c.pos;
      if (prev[c.pos] >= 0) push_if_ranked(prev[c.pos]);
      push_if_ranked(c.pos);
    }
    std::vector<std::int32_t> out;
    for (std::int32_t p = 0; p >= 0; p = next[p]) {
      if (alive[p]) out.push_back(word.syms[p]);
    }
    word.syms = std::move(out);
  }
}

void extend_merges(std::vector<std::string>& vocab,
                   std::vector<std::pair<std::int32_t, std::int32_t>>& merges,
                   std::vector<Word>& words, std::size_t target_vocab) {
  if (vocab.size() >= target_vocab) return;

  std::unordered_map<std::uint64_t, std::uint64_t> pair_counts;
  std::unordered_map<std::uint64_t, std::unordered_set<std::int32_t>> pair_words;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const Word& word = words[w];
    for (std::size_t i = 0; i + 1 < word.syms.size(); ++i) {
      std::uint64_t key = pack_pair(word.syms[i], word.syms[i + 1]);
      pair_counts[key] += word.count;
      pair_words[key].insert(static_cast<std::int32_t>(w));
    }
  }

  std::priority_queue<HeapEntry, std::vector<HeapEntry>, EntryBelow> heap(
      EntryBelow{&vocab});
  for (const auto& [key, count] : pair_counts) {
    if (count >= 2) heap.push({count, pair_left(key), pair_right(key)});
  }

  std::unordered_map<std::uint64_t, std::int64_t> delta;
  while (vocab.size() < target_vocab && !heap.empty()) {
    HeapEntry top = heap.top();
    heap.pop();
    const std::uint64_t key = pack_pair(top.left, top.right);
    auto itc = pair_counts.find(key);
    const std::uint64_t current = itc == pair_counts.end() ? 0 : itc->second;
    if (current != top.count) {
      // Stale snapshot: requeue at the live count if still mergeable.
      if (current >= 2) heap.push({current, top.left, top.right});
      continue;
    }
    if (top.count < 2) break;

    const std::int32_t new_id = static_cast<std::int32_t>(vocab.size());
    vocab.push_back(vocab[top.left] + vocab[top.right]);
    merges.emplace_back(top.left, top.right);

    auto ito = pair_words.find(key);
    std::vector<std::int32_t> affected;
    if (ito != pair_words.end()) {
      affected.assign(ito->second.begin(), ito->second.end());
    }
    delta.clear();
    for (std::int32_t w : affected) {
      Word& word = words[w];
      bool contains = false;
      for (std::size_t i = 0; i + 1 < word.syms.size(); ++i) {
        if (word.syms[i] == top.left && word.syms[i + 1] == top.right) {
          contains = true;
          break;
        }
      }
      if (!contains) continue;
      const std::int64_t wc = static_cast<std::int64_t>(word.count);
      for (std::size_t i = 0; i + 1 < word.syms.size(); ++i) {
        delta[pack_pair(word.syms[i], word.syms[i + 1])] -= wc;
      }
      std::vector<std::int32_t> out;
      out.reserve(word.syms.size());
      std::size_t i = 0;
      while (i < word.syms.size()) {
        if (i + 1 < word.syms.size() && word.syms[i] == top.left &&
            word.syms[i + 1] == top.right) {
          out.push_back(new_id);
          i += 2;
        } else {
          out.push_back(word.syms[i]);
          ++i;
        }
      }
      word.syms = std::move(out);
      for (std::size_t j = 0; j + 1 < word.syms.size(); ++j) {
        std::uint64_t k2 = pack_pair(word.syms[j], word.syms[j + 1]);
        delta[k2] += wc;
        pair_words[k2].insert(w);
      }
    }
    for (const auto& [k2, d] : delta) {
      if (d == 0) continue;
      auto it2 = pair_counts.find(k2);
      const std::int64_t now =
          (it2 == pair_counts.end() ? 0 : static_cast<std::int64_t>(it2->second)) + d;
      if (now <= 0) {
        if (it2 != pair_counts.end()) pair_counts.erase(it2);
        pair_words.erase(k2);
        continue;
      }
      const std::uint64_t now_u = static_cast<std::uint64_t>(now);
      if (it2 == pair_counts.end()) {
        pair_counts.emplace(k2, now_u);
      } else {
        it2->second = now_u;
      }
      // Only pairs touching the new token can gain count; give them an entry.
      if (d > 0 && now_u >= 2) heap.push({now_u, pair_left(k2), pair_right(k2)});
    }
  }
}

std::uint64_t total_symbols(const std::vector<Word>& words) {
  std::uint64_t total = 0;
  for (const Word& w : words) total += w.count * w.syms.size();
  return total;
}

}  // namespace bpe

TokenizerModel train_bpe(const ScaledSubset& subset, std::size_t vocab_size,
                         const pretok::PreTokenizerSpec& spec) {
  if (vocab_size < 257) {
    throw VocabTooSmall("vocab_size must be >= 257, got " +
                        std::to_string(vocab_size));
  }
  std::vector<bpe::Word> words = bpe::build_words(subset.lines, spec);
  if (words.empty()) {
    throw EmptyCorpus("training subset has no pre-tokens: " +
                      subset.parent.language_tag);
  }
  TokenizerModel model = make_byte_base_model(Algorithm::bpe, spec);
  bpe::extend_merges(model.vocab, model.merges, words, vocab_size);
  model.vocab_size = static_cast<std::int32_t>(model.vocab.size());
  model.provenance.language_tag = subset.parent.language_tag;
  model.provenance.training_bytes = static_cast<long long>(subset.actual_bytes);
  model.provenance.seed = static_cast<long long>(subset.seed);
  validate_model(model);
  return model;
}

}  // namespace montok
