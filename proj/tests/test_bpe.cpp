#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "montok/bpe.hpp"
#include "montok/errors.hpp"
#include "montok/model.hpp"
#include "oracles.hpp"

using namespace montok;
using montok::testing::subset_from_lines;

namespace {

const pretok::PreTokenizerSpec kTrainSpec{pretok::PretokMode::whitespace, false};

TokenizerModel train_lines(std::vector<std::string> lines, std::size_t vocab_size) {
  return train_bpe(subset_from_lines(std::move(lines), "eng_latn"), vocab_size, kTrainSpec);
}

}  // namespace

TEST_CASE("repeated word learns its single merge and stops") {
  const TokenizerModel m = train_lines({"ab ab ab"}, 258);
  REQUIRE(m.merges.size() == 1);
  CHECK(m.merges[0] == std::pair<std::int32_t, std::int32_t>{97, 98});
  CHECK(m.vocab.size() == 257);  // early stop below the requested 258
  CHECK(m.vocab[256] == "ab");
  CHECK(m.vocab_size == 257);
  CHECK(m.algorithm == Algorithm::bpe);
  CHECK(m.pretokenizer == kTrainSpec);
}

TEST_CASE("merges chain and stop when every pair is unique") {
  const TokenizerModel m = train_lines({"abcabc"}, 260);
  REQUIRE(m.merges.size() == 2);
  CHECK(m.vocab[256] == "ab");  // (a,b) beats (b,c) on smaller concatenation
  CHECK(m.vocab[257] == "abc");
  CHECK(m.merges[0] == std::pair<std::int32_t, std::int32_t>{97, 98});
  CHECK(m.merges[1] == std::pair<std::int32_t, std::int32_t>{256, 99});
  CHECK(m.vocab.size() == 258);

  // No pair reaches count two: no merges at all.
  const TokenizerModel none = train_lines({"abc"}, 260);
  CHECK(none.merges.empty());
  CHECK(none.vocab.size() == 256);
}

TEST_CASE("count ties break on concatenated bytes") {
  const TokenizerModel m = train_lines({"ab", "ab", "cd", "cd"}, 260);
  REQUIRE(m.merges.size() == 2);
  CHECK(m.vocab[256] == "ab");
  CHECK(m.vocab[257] == "cd");
}

TEST_CASE("vocabulary bounds") {
  CHECK_THROWS_AS(train_lines({"ab ab"}, 256), VocabTooSmall);
  CHECK_THROWS_AS(train_lines({"ab ab"}, 0), VocabTooSmall);
  const TokenizerModel m = train_lines({"ab ab"}, 257);  // budget for one merge
  CHECK(m.merges.size() == 1);
  CHECK_THROWS_AS(train_lines({}, 258), EmptyCorpus);
  CHECK_THROWS_AS(train_lines({"", ""}, 258), EmptyCorpus);
}

TEST_CASE("byte ids and merge ids are structural") {
  const TokenizerModel m = train_lines({"abab abab cdcd"}, 300);
  for (int b = 0; b < 256; ++b) {
    REQUIRE(m.vocab[static_cast<std::size_t>(b)] ==
            std::string(1, static_cast<char>(b)));
  }
  for (std::size_t r = 0; r < m.merges.size(); ++r) {
    const auto [l, rgt] = m.merges[r];
    CHECK(l < static_cast<std::int32_t>(256 + r));   // parents precede children
    CHECK(rgt < static_cast<std::int32_t>(256 + r));
    CHECK(m.vocab[256 + r] == m.vocab[static_cast<std::size_t>(l)] +
                                  m.vocab[static_cast<std::size_t>(rgt)]);
  }
}

TEST_CASE("training is deterministic") {
  const std::vector<std::string> lines = {"the cat sat", "the cat", "sat the"};
  CHECK(train_lines(lines, 280) == train_lines(lines, 280));
}

TEST_CASE("encoding replays merges per span") {
  const TokenizerModel m = train_lines({"ab ab ab"}, 258);
  const Encoder enc(m);
  CHECK(enc.encode("abab") == std::vector<std::int32_t>{256, 256});
  CHECK(enc.encode("ab ab") == std::vector<std::int32_t>{256, 32, 256});
  CHECK(enc.encode("xyz") == std::vector<std::int32_t>{120, 121, 122});  // byte fallback
  CHECK(enc.encode("").empty());
  CHECK(decode(m, enc.encode("ab ab")) == "ab ab");
  CHECK_THROWS_AS(decode(m, {9999}), UnknownTokenId);
}

TEST_CASE("incremental trainer matches the naive recount oracle") {
  std::mt19937_64 rng(42);
  for (int iter = 0; iter < 15; ++iter) {
    const std::vector<std::string> lines = testing::random_ascii_lines(rng, 600);
    const std::size_t vocab = 257 + rng() % 60;
    const auto expected = testing::naive_bpe_merges(lines, vocab, kTrainSpec);
    TokenizerModel model;
    try {
      model = train_bpe(subset_from_lines(lines, "eng_latn"), vocab, kTrainSpec);
    } catch (const EmptyCorpus&) {
      CHECK(expected.empty());
      continue;
    }
    REQUIRE(testing::model_merge_bytes(model) == expected);
  }
}

TEST_CASE("apply_merges reproduces training segmentation") {
  const std::vector<std::string> lines = {"aab aab baa", "aab baa baa aab"};
  const TokenizerModel m = train_lines(lines, 270);
  // Re-segment the corpus from scratch and replay the merge table; the
  // resulting symbols must match what the encoder produces span by span.
  std::vector<bpe::Word> words = bpe::build_words(lines, kTrainSpec);
  bpe::apply_merges(words, m.merges);
  const Encoder enc(m);
  for (const auto& w : words) {
    std::string text;
    for (std::int32_t id : w.syms) text += m.vocab[static_cast<std::size_t>(id)];
    CHECK(enc.encode_span(text) == w.syms);
  }
  CHECK(bpe::total_symbols(words) >= words.size());
}

TEST_CASE("encode and decode are inverse on random text") {
  const TokenizerModel m = train_lines({"the quick brown fox", "the lazy dog"}, 290);
  const Encoder enc(m);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 300; ++i) {
    const std::string text = testing::random_utf8(rng, 48);
    CHECK(decode(m, enc.encode(text)) == text);
  }
}

TEST_CASE("provenance records the training subset") {
  ScaledSubset subset = subset_from_lines({"ab ab"}, "fra_latn");
  subset.seed = 77;
  const TokenizerModel m = train_bpe(subset, 258, kTrainSpec);
  CHECK(m.provenance.language_tag == "fra_latn");
  CHECK(m.provenance.training_bytes == static_cast<long long>(subset.actual_bytes));
  CHECK(m.provenance.seed == 77);
}
