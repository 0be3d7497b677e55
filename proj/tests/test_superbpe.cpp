#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "montok/bpe.hpp"
#include "montok/errors.hpp"
#include "montok/metrics.hpp"
#include "montok/superbpe.hpp"
#include "oracles.hpp"

using namespace montok;
using montok::testing::subset_from_lines;

namespace {

const pretok::PreTokenizerSpec kTrainSpec{pretok::PretokMode::whitespace, false};

TokenizerModel train(std::vector<std::string> lines, std::size_t vocab, double fraction) {
  SuperBpeConfig cfg;
  cfg.vocab_size = vocab;
  cfg.transition_fraction = fraction;
  cfg.base_pretok = kTrainSpec;
  return train_superbpe(subset_from_lines(std::move(lines), "eng_latn"), cfg);
}

}  // namespace

TEST_CASE("phase two learns tokens that span words") {
  const TokenizerModel m = train({"of the of the of the"}, 268, 0.97);
  CHECK(m.algorithm == Algorithm::superbpe);
  CHECK(m.transition_point == 259);  // phase 1 ran out of repeated pairs early
  CHECK(m.vocab.size() == 262);
  CHECK(std::find(m.vocab.begin(), m.vocab.end(), "of the") != m.vocab.end());
  // The encoder works on whole lines, so multi-word tokens actually fire.
  CHECK(m.pretokenizer.mode == pretok::PretokMode::none);
  const Encoder enc(m);
  CHECK(enc.encode("of the of the of the").size() == 3);
  CHECK(decode(m, enc.encode("of the of the of the")) == "of the of the of the");
}

TEST_CASE("phase one merges never contain whitespace") {
  const auto langs = testing::synthetic_parallel(300, 5);
  const TokenizerModel m = train(langs[0].lines, 300, 0.9);
  const auto merges = testing::model_merge_bytes(m);
  const std::size_t transition_merges = static_cast<std::size_t>(m.transition_point) - 256;
  for (std::size_t r = 0; r < transition_merges; ++r) {
    const std::string token = merges[r].first + merges[r].second;
    CHECK(token.find(' ') == std::string::npos);
  }
}

TEST_CASE("phase one is a prefix of plain BPE") {
  const auto langs = testing::synthetic_parallel(300, 5);
  const std::vector<std::string>& lines = langs[0].lines;
  const TokenizerModel sup = train(lines, 300, 0.9);
  const std::size_t transition = 270;  // llround(0.9 * 300)
  CHECK(static_cast<std::size_t>(sup.transition_point) == transition);
  const TokenizerModel plain =
      train_bpe(subset_from_lines(lines, "eng_latn"), transition, kTrainSpec);
  const auto sup_merges = testing::model_merge_bytes(sup);
  const auto plain_merges = testing::model_merge_bytes(plain);
  REQUIRE(plain_merges.size() == transition - 256);
  for (std::size_t r = 0; r < plain_merges.size(); ++r) {
    REQUIRE(sup_merges.at(r) == plain_merges[r]);
  }
}

TEST_CASE("a transition at the full vocabulary reduces to plain BPE compression") {
  const auto langs = testing::synthetic_parallel(400, 6);
  const std::vector<std::string>& lines = langs[0].lines;
  const std::vector<std::string> eval(lines.begin(), lines.begin() + 50);
  // llround(0.9999 x 300) == 300: every merge is learned under word bounds.
  const TokenizerModel sup = train(lines, 300, 0.9999);
  CHECK(sup.transition_point == 300);
  const TokenizerModel plain = train_bpe(subset_from_lines(lines, "eng_latn"), 300, kTrainSpec);
  CHECK(corpus_token_count(sup, eval) == corpus_token_count(plain, eval));
}

TEST_CASE("training-corpus compression beats plain BPE once merges cross words") {
  const auto langs = testing::synthetic_parallel(500, 7);
  const std::vector<std::string>& lines = langs[0].lines;
  const TokenizerModel sup = train(lines, 420, 0.7);
  const TokenizerModel plain = train_bpe(subset_from_lines(lines, "eng_latn"), 420, kTrainSpec);
  CHECK(corpus_token_count(sup, lines) < corpus_token_count(plain, lines));
}

TEST_CASE("guards") {
  CHECK_THROWS_AS(train({"ab ab"}, 256, 0.9), VocabTooSmall);
  CHECK_THROWS_AS(train({"ab ab"}, 257, 0.5), TransitionTooSmall);
  CHECK_THROWS_AS(train({"ab ab"}, 300, 0.0), DomainError);
  CHECK_THROWS_AS(train({"ab ab"}, 300, 1.0), DomainError);
  CHECK_THROWS_AS(train({}, 300, 0.9), EmptyCorpus);
  SuperBpeConfig cfg;
  cfg.vocab_size = 300;
  cfg.base_pretok = pretok::PreTokenizerSpec{pretok::PretokMode::none, false};
  CHECK_THROWS_AS(train_superbpe(subset_from_lines({"ab ab"}, "eng_latn"), cfg), DomainError);
}

TEST_CASE("training is deterministic") {
  const auto langs = testing::synthetic_parallel(120, 9);
  const TokenizerModel a = train(langs[0].lines, 320, 0.9);
  const TokenizerModel b = train(langs[0].lines, 320, 0.9);
  CHECK(a == b);
}
