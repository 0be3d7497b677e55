#include "oracles.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>

namespace montok::testing {
namespace {

struct OracleWord {
  std::vector<std::string> syms;  // current symbols as byte strings
  std::uint64_t count = 0;
};

}  // namespace

std::vector<std::pair<std::string, std::string>> naive_bpe_merges(
    const std::vector<std::string>& lines, std::size_t vocab_size,
    const pretok::PreTokenizerSpec& spec) {
  std::unordered_map<std::string, std::uint64_t> counts;
  std::vector<std::string> order;
  for (const auto& line : lines) {
    for (std::string_view span : pretok::pretokenize(line, spec)) {
      const std::string key(span);
      if (!counts.count(key)) order.push_back(key);
      counts[key] += 1;
    }
  }
  std::vector<OracleWord> words;
  for (const auto& key : order) {
    OracleWord w;
    for (char c : key) w.syms.emplace_back(1, c);
    w.count = counts[key];
    words.push_back(std::move(w));
  }

  std::vector<std::pair<std::string, std::string>> merges;
  const std::size_t budget = vocab_size - 256;
  while (merges.size() < budget) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> pair_counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        pair_counts[{w.syms[i], w.syms[i + 1]}] += w.count;
      }
    }
    bool found = false;
    std::pair<std::string, std::string> best;
    std::uint64_t best_count = 0;
    for (const auto& [pair, count] : pair_counts) {
      if (count < 2) continue;
      const std::string concat = pair.first + pair.second;
      if (!found) {
        best = pair;
        best_count = count;
        found = true;
        continue;
      }
      const std::string best_concat = best.first + best.second;
      if (count > best_count ||
          (count == best_count &&
           (concat < best_concat || (concat == best_concat && pair.first < best.first)))) {
        best = pair;
        best_count = count;
      }
    }
    if (!found) break;
    merges.push_back(best);
    const std::string merged = best.first + best.second;
    for (auto& w : words) {
      std::vector<std::string> next;
      for (std::size_t i = 0; i < w.syms.size();) {
        if (i + 1 < w.syms.size() && w.syms[i] == best.first && w.syms[i + 1] == best.second) {
          next.push_back(merged);
          i += 2;
        } else {
          next.push_back(w.syms[i]);
          i += 1;
        }
      }
      w.syms = std::move(next);
    }
  }
  return merges;
}

std::vector<std::pair<std::string, std::string>> model_merge_bytes(const TokenizerModel& model) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [left, right] : model.merges) {
    out.emplace_back(model.vocab.at(static_cast<std::size_t>(left)),
                     model.vocab.at(static_cast<std::size_t>(right)));
  }
  return out;
}

double exhaustive_best_logprob(const TokenizerModel& model, const std::string& text) {
  std::unordered_map<std::string, double> score;
  for (std::size_t id = 0; id < model.vocab.size(); ++id) {
    const auto it = score.find(model.vocab[id]);
    const double s = model.scores.at(id);
    if (it == score.end() || s > it->second) score[model.vocab[id]] = s;
  }
  const double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> best(text.size() + 1, kNegInf);
  best[text.size()] = 0.0;
  for (std::size_t pos = text.size(); pos-- > 0;) {
    for (std::size_t end = pos + 1; end <= text.size(); ++end) {
      if (best[end] == kNegInf) continue;
      const auto it = score.find(text.substr(pos, end - pos));
      if (it == score.end()) continue;
      best[pos] = std::max(best[pos], it->second + best[end]);
    }
  }
  return best[0];
}

}  // namespace montok::testing
