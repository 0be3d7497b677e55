#include "montok/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "json.hpp"
#include "montok/byteops.hpp"
#include "montok/errors.hpp"

namespace montok {

using nlohmann::json;

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::bpe: return "bpe";
    case Algorithm::unigram: return "unigram";
    case Algorithm::superbpe: return "superbpe";
  }
  return "bpe";
}

bool algorithm_from_name(std::string_view name, Algorithm& out) {
  if (name == "bpe") { out = Algorithm::bpe; return true; }
  if (name == "unigram") { out = Algorithm::unigram; return true; }
  if (name == "superbpe") { out = Algorithm::superbpe; return true; }
  return false;
}

TokenizerModel make_byte_base_model(Algorithm algorithm,
                                    const pretok::PreTokenizerSpec& spec) {
  TokenizerModel m;
  m.algorithm = algorithm;
  m.pretokenizer = spec;
  m.vocab.reserve(256);
  for (int b = 0; b < 256; ++b) {
    m.vocab.push_back(std::string(1, static_cast<char>(b)));
  }
  m.vocab_size = 256;
  return m;
}

void validate_model(const TokenizerModel& model) {
  const auto fail = [](const std::string& why) {
    throw MalformedModelFile("model invariant violated: " + why);
  };
  if (model.vocab.size() < 256) fail("fewer than 256 vocabulary entries");
  if (model.vocab_size != static_cast<std::int32_t>(model.vocab.size())) {
    fail("vocab_size does not match the vocabulary length");
  }
  for (int b = 0; b < 256; ++b) {
    if (model.vocab[b] != std::string(1, static_cast<char>(b))) {
      fail("ids 0..255 must map to the 256 single bytes");
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& bytes : model.vocab) {
    if (bytes.empty()) fail("empty token bytes");
    if (!seen.insert(bytes).second) fail("duplicate token bytes");
  }
  if (model.algorithm == Algorithm::unigram) {
    if (!model.merges.empty()) fail("unigram models carry no merges");
    if (model.scores.size() != model.vocab.size()) {
      fail("scores must cover every token id");
    }
    for (double s : model.scores) {
      if (!(s <= 0.0) || std::isnan(s)) fail("scores must be log-probabilities");
    }
  } else {
    if (!model.scores.empty()) fail("merge models carry no scores");
    if (model.merges.size() != model.vocab.size() - 256) {
      fail("merge ranks must be dense");
    }
    for (std::size_t k = 0; k < model.merges.size(); ++k) {
      const auto [l, r] = model.merges[k];
      const std::int32_t child = static_cast<std::int32_t>(256 + k);
      if (l < 0 || r < 0 || l >= child || r >= child) {
        fail("merge parents must precede their token");
      }
      if (model.vocab[child] != model.vocab[l] + model.vocab[r]) {
        fail("token bytes must equal the concatenation of its parents");
      }
    }
  }
  if (model.algorithm == Algorithm::superbpe) {
    if (model.transition_point < 256 ||
        model.transition_point > model.vocab_size) {
      fail("transition_point out of range");
    }
  } else if (model.transition_point != 0) {
    fail("transition_point is reserved for superbpe models");
  }
}

void save_model(const TokenizerModel& model,
                const std::filesystem::path& path) {
  json j;
  j["version"] = 1;
  j["algorithm"] = algorithm_name(model.algorithm);
  json vocab = json::array();
  for (std::size_t id = 0; id < model.vocab.size(); ++id) {
    vocab.push_back(json{{"id", id}, {"bytes_hex", byteops::to_hex(model.vocab[id])}});
  }
  j["vocab"] = std::move(vocab);
  json merges = json::array();
  for (const auto& [l, r] : model.merges) merges.push_back(json::array({l, r}));
  j["merges"] = std::move(merges);
  if (model.algorithm == Algorithm::unigram) {
    json scores = json::object();
    for (std::size_t id = 0; id < model.scores.size(); ++id) {
      scores[std::to_string(id)] = model.scores[id];
    }
    j["scores"] = std::move(scores);
  }
  j["pretokenizer"] = model.pretokenizer;
  j["vocab_size"] = model.vocab_size;
  j["transition_point"] = model.transition_point;
  j["specials"] = json::array();  // reserved, always empty for now
  j["provenance"] = json{{"language_tag", model.provenance.language_tag},
                         {"training_bytes", model.provenance.training_bytes},
                         {"seed", model.provenance.seed}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(1, '\t') << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

TokenizerModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw MalformedModelFile("unparseable model file '" + path.string() +
                             "': " + e.what());
  }

  TokenizerModel m;
  try {
    if (j.at("version").get<int>() != 1) {
      throw MalformedModelFile("unsupported model file version");
    }
    const std::string algo = j.at("algorithm").get<std::string>();
    if (!algorithm_from_name(algo, m.algorithm)) {
      throw MalformedModelFile("unknown algorithm: " + algo);
    }
    const auto& vocab = j.at("vocab");
    m.vocab.resize(vocab.size());
    std::vector<bool> filled(vocab.size(), false);
    for (const auto& entry : vocab) {
      const auto id = entry.at("id").get<std::int64_t>();
      if (id < 0 || id >= static_cast<std::int64_t>(vocab.size()) || filled[id]) {
        throw MalformedModelFile("vocab ids must be dense and unique");
      }
      const auto bytes = byteops::from_hex(entry.at("bytes_hex").get<std::string>());
      if (!bytes) throw MalformedModelFile("bad bytes_hex in vocab entry");
      m.vocab[id] = *bytes;
      filled[id] = true;
    }
    for (const auto& pair : j.at("merges")) {
      if (!pair.is_array() || pair.size() != 2) {
        throw MalformedModelFile("merge entries must be [left, right] pairs");
      }
      m.merges.emplace_back(pair[0].get<std::int32_t>(), pair[1].get<std::int32_t>());
    }
    if (m.algorithm == Algorithm::unigram) {
      const auto& scores = j.at("scores");
      m.scores.assign(m.vocab.size(), std::numeric_limits<double>::quiet_NaN());
      for (auto it = scores.begin(); it != scores.end(); ++it) {
        const long id = std::stol(it.key());
        if (id < 0 || id >= static_cast<long>(m.vocab.size())) {
          throw MalformedModelFile("score id outside the vocabulary");
        }
        m.scores[id] = it.value().get<double>();
      }
    }
    m.pretokenizer = j.at("pretokenizer").get<pretok::PreTokenizerSpec>();
    m.vocab_size = j.at("vocab_size").get<std::int32_t>();
    m.transition_point = j.at("transition_point").get<std::int32_t>();
    const auto& prov = j.at("provenance");
    m.provenance.language_tag = prov.at("language_tag").get<std::string>();
    m.provenance.training_bytes = prov.at("training_bytes").get<long long>();
    m.provenance.seed = prov.at("seed").get<long long>();
  } catch (const MalformedModelFile&) {
    throw;
  } catch (const std::exception& e) {
    throw MalformedModelFile("bad model file '" + path.string() + "': " + e.what());
  }
  validate_model(m);
  return m;
}

// ---------------------------------------------------------------------------
// Encoding

Encoder::Encoder(const TokenizerModel& model) : model_(&model) {
  if (model.algorithm == Algorithm::unigram) {
    trie_.emplace_back();
    for (std::size_t id = 0; id < model.vocab.size(); ++id) {
      std::int32_t node = 0;
      for (unsigned char b : model.vocab[id]) {
        auto it = trie_[node].next.find(b);
        if (it == trie_[node].next.end()) {
          const std::int32_t fresh = static_cast<std::int32_t>(trie_.size());
          trie_[node].next.emplace(b, fresh);
          trie_.emplace_back();
          node = fresh;
        } else {
          node = it->second;
        }
      }
      trie_[node].token = static_cast<std::int32_t>(id);
    }
  } else {
    merge_rank_.reserve(model.merges.size() * 2);
    for (std::size_t k = 0; k < model.merges.size(); ++k) {
      merge_rank_.emplace(pack_pair(model.merges[k].first, model.merges[k].second),
                          static_cast<std::int32_t>(k));
    }
  }
}

std::vector<std::int32_t> Encoder::encode(std::string_view text) const {
  std::vector<std::int32_t> out;
  for (std::string_view span : pretok::pretokenize(text, model_->pretokenizer)) {
    auto ids = encode_span(span);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::vector<std::int32_t> Encoder::encode_span(std::string_view span) const {
  if (span.empty()) return {};
  return model_->algorithm == Algorithm::unigram ? encode_span_viterbi(span)
                                                 : encode_span_merges(span);
}

std::vector<std::int32_t> Encoder::encode_span_merges(std::string_view span) const {
  std::vector<std::int32_t> syms;
  syms.reserve(span.size());
  for (unsigned char b : span) syms.push_back(b);

  // Apply merges lowest rank first; each pass rewrites every occurrence of
  // the best pair left to right. New pairs created by a merge always have a
  // higher rank than the merge itself, so one pass per rank is exact.
  while (syms.size() > 1) {
    std::int32_t best_rank = std::numeric_limits<std::int32_t>::max();
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const auto it = merge_rank_.find(pack_pair(syms[i], syms[i + 1]));
      if (it != merge_rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == std::numeric_limits<std::int32_t>::max()) break;
    const auto [l, r] = model_->merges[best_rank];
    const std::int32_t merged = 256 + best_rank;
    std::size_t w = 0;
    for (std::size_t i = 0; i < syms.size();) {
      if (i + 1 < syms.size() && syms[i] == l && syms[i + 1] == r) {
        syms[w++] = merged;
        i += 2;
      } else {
        syms[w++] = syms[i++];
      }
    }
    syms.resize(w);
  }
  return syms;
}

std::vector<std::int32_t> Encoder::encode_span_viterbi(std::string_view span) const {
  const std::size_t n = span.size();
  struct Cell {
    double lp = -std::numeric_limits<double>::infinity();
    std::int32_t count = 0;
    std::int32_t token = -1;
    std::size_t next = 0;
  };
  std::vector<Cell> best(n + 1);
  best[n].lp = 0.0;

  // Backward DP. Ties prefer fewer tokens, then the longest leftmost token,
  // which the backward direction makes local: prefer the larger end offset.
  for (std::size_t i = n; i-- > 0;) {
    std::int32_t node = 0;
    for (std::size_t j = i; j < n; ++j) {
      const auto it = trie_[node].next.find(static_cast<unsigned char>(span[j]));
      if (it == trie_[node].next.end()) break;
      node = it->second;
      const std::int32_t tok = trie_[node].token;
      if (tok < 0) continue;
      const Cell& tail = best[j + 1];
      if (tail.count == 0 && j + 1 != n) continue;  // unreachable suffix
      const double lp = model_->scores[tok] + tail.lp;
      const std::int32_t count = tail.count + 1;
      Cell& cur = best[i];
      const bool better =
          lp > cur.lp ||
          (lp == cur.lp && (count < cur.count ||
                            (count == cur.count && j + 1 > cur.next)));
      if (cur.token < 0 || better) {
        cur = {lp, count, tok, j + 1};
      }
    }
  }

  std::vector<std::int32_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n;) {
    out.push_back(best[i].token);
    i = best[i].next;
  }
  return out;
}

std::vector<std::int32_t> encode(const TokenizerModel& model,
                                 std::string_view text) {
  return Encoder(model).encode(text);
}

std::string decode(const TokenizerModel& model,
                   const std::vector<std::int32_t>& ids) {
  std::string out;
  for (std::int32_t id : ids) {
    if (id < 0 || id >= static_cast<std::int32_t>(model.vocab.size())) {
      throw UnknownTokenId("token id " + std::to_string(id) +
                           " outside vocabulary of size " +
                           std::to_string(model.vocab.size()));
    }
    out += model.vocab[id];
  }
  return out;
}

}  // namespace montok
