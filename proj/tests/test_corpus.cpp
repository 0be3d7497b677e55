#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "montok/corpus.hpp"
#include "montok/errors.hpp"
#include "montok/model.hpp"

using namespace montok;
namespace fs = std::filesystem;

namespace {

CorpusHandle handle_from_lines(std::vector<std::string> lines, const std::string& tag) {
  CorpusHandle h;
  h.language_tag = tag;
  h.line_count = lines.size();
  for (const auto& line : lines) h.total_bytes += line.size() + 1;
  h.lines = std::move(lines);
  return h;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace

TEST_CASE("language tag shape") {
  CHECK(language_tag_well_formed("eng_latn"));
  CHECK(language_tag_well_formed("mya_mymr"));
  CHECK_FALSE(language_tag_well_formed("en_latn"));
  CHECK_FALSE(language_tag_well_formed("eng-latn"));
  CHECK_FALSE(language_tag_well_formed("Eng_latn"));
  CHECK_FALSE(language_tag_well_formed("eng_latn2"));
  CHECK_FALSE(language_tag_well_formed(""));
}

TEST_CASE("ingest normalizes newlines and keeps file boundaries") {
  const fs::path dir = testing::fresh_temp_dir("corpus_ingest");
  write_bytes(dir / "a.txt", "alpha\r\nbeta\r");
  write_bytes(dir / "b.txt", "gamma");  // no trailing newline
  const CorpusHandle h =
      ingest_corpus({(dir / "a.txt").string(), (dir / "b.txt").string()}, "eng_latn");
  CHECK(h.lines == std::vector<std::string>{"alpha", "beta", "gamma"});
  CHECK(h.line_count == 3);
  // "alpha\nbeta\n" is 11 bytes after normalization, plus "gamma".
  CHECK(h.total_bytes == 16);
  CHECK(h.language_tag == "eng_latn");
  CHECK(h.source_paths.size() == 2);
}

TEST_CASE("ingest rejects bad input") {
  const fs::path dir = testing::fresh_temp_dir("corpus_bad");
  write_bytes(dir / "bad.txt", "ok\xFFrest");
  CHECK_THROWS_AS(ingest_corpus({(dir / "bad.txt").string()}, "eng_latn"), InvalidUtf8);
  try {
    ingest_corpus({(dir / "bad.txt").string()}, "eng_latn");
  } catch (const InvalidUtf8& e) {
    CHECK(e.offset == 2);
    CHECK(e.file == (dir / "bad.txt").string());
  }
  CHECK_THROWS_AS(ingest_corpus({(dir / "missing.txt").string()}, "eng_latn"), MissingFile);
  write_bytes(dir / "ok.txt", "fine\n");
  CHECK_THROWS_AS(ingest_corpus({(dir / "ok.txt").string()}, "bad tag!"), BadLanguageTag);
  CHECK_THROWS_AS(ingest_corpus({}, "eng_latn"), MissingFile);
}

TEST_CASE("sample_bytes takes whole lines until the budget is crossed") {
  // Ten lines of 9 content bytes; each costs 10 with its separator.
  std::vector<std::string> lines;
  for (int i = 0; i < 10; ++i) lines.push_back("line-" + std::to_string(i) + "xxx");
  const CorpusHandle corpus = handle_from_lines(lines, "eng_latn");

  const std::uint64_t seed = 11;
  const ScaledSubset s = sample_bytes(corpus, 35, Scaling::none, 1.0, seed);
  CHECK(s.lines.size() == 4);  // 35 requested; the fourth line crosses the budget
  CHECK(s.actual_bytes == 40);
  CHECK(s.requested_bytes == 35);
  CHECK_FALSE(s.exhausted);
  CHECK(s.byte_premium_used == 1.0);
  CHECK(s.seed == seed);
  CHECK(s.parent.lines.empty());
  CHECK(s.parent.line_count == 10);

  const std::uint64_t start = std::mt19937_64(seed)() % 10;
  for (std::size_t i = 0; i < s.lines.size(); ++i) {
    CHECK(s.lines[i] == corpus.lines[(start + i) % 10]);
  }
  // Same seed, same subset.
  CHECK(sample_bytes(corpus, 35, Scaling::none, 1.0, seed).lines == s.lines);
}

TEST_CASE("sample_bytes wraps circularly and flags exhaustion") {
  std::vector<std::string> lines;
  for (int i = 0; i < 10; ++i) lines.push_back("line-" + std::to_string(i) + "xxx");
  const CorpusHandle corpus = handle_from_lines(lines, "eng_latn");

  // Find a seed whose start position forces a wrap within four lines.
  std::uint64_t wrap_seed = 0;
  while (std::mt19937_64(wrap_seed)() % 10 < 7) ++wrap_seed;
  const ScaledSubset s = sample_bytes(corpus, 35, Scaling::none, 1.0, wrap_seed);
  const std::uint64_t start = std::mt19937_64(wrap_seed)() % 10;
  REQUIRE(s.lines.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(s.lines[i] == corpus.lines[(start + i) % 10]);
  }

  const ScaledSubset all = sample_bytes(corpus, 1000, Scaling::none, 1.0, 3);
  CHECK(all.exhausted);
  CHECK(all.lines.size() == 10);
  CHECK(all.actual_bytes == 100);
}

TEST_CASE("byte premium scaling inflates the byte budget") {
  std::vector<std::string> lines;
  for (int i = 0; i < 10; ++i) lines.push_back("line-" + std::to_string(i) + "xxx");
  const CorpusHandle corpus = handle_from_lines(lines, "eng_latn");

  const ScaledSubset s = sample_bytes(corpus, 35, Scaling::byte_premium, 2.0, 5);
  CHECK(s.lines.size() == 7);  // budget 35 x 2.0 = 70 bytes
  CHECK(s.actual_bytes == 70);
  CHECK(s.byte_premium_used == 2.0);

  // Unscaled sampling ignores the premium argument.
  const ScaledSubset u = sample_bytes(corpus, 35, Scaling::none, 7.0, 5);
  CHECK(u.lines.size() == 4);
  CHECK(u.byte_premium_used == 1.0);

  CHECK_THROWS_AS(sample_bytes(corpus, 0, Scaling::none, 1.0, 1), DomainError);
  CHECK_THROWS_AS(sample_bytes(corpus, 10, Scaling::byte_premium, 0.0, 1), DomainError);
  CHECK_THROWS_AS(sample_bytes(handle_from_lines({}, "eng_latn"), 10, Scaling::none, 1.0, 1),
                  EmptyCorpus);
}

TEST_CASE("scaling names round trip") {
  CHECK(std::string(scaling_name(Scaling::none)) == "none");
  CHECK(std::string(scaling_name(Scaling::byte_premium)) == "byte_premium");
  CHECK(scaling_from_name("none") == Scaling::none);
  CHECK(scaling_from_name("byte_premium") == Scaling::byte_premium);
  CHECK_THROWS_AS(scaling_from_name("linear"), Error);
}

TEST_CASE("parallel pairs require matching line counts") {
  const CorpusHandle a = handle_from_lines({"x", "y"}, "aaa_latn");
  const CorpusHandle b = handle_from_lines({"u", "v"}, "eng_latn");
  const ParallelPair pair = make_parallel_pair(a, b);
  CHECK(pair.sentence_count == 2);
  CHECK(pair.lang_a.language_tag == "aaa_latn");
  CHECK(pair.lang_b.language_tag == "eng_latn");
  CHECK_THROWS_AS(make_parallel_pair(a, handle_from_lines({"u"}, "eng_latn")), LengthMismatch);
}

TEST_CASE("encoding ratios over parallel content") {
  // "aé" is 3 bytes / 2 chars; "ab" is 2 bytes / 2 chars.
  const auto pair = make_parallel_pair(handle_from_lines({"a\xC3\xA9"}, "fra_latn"),
                                       handle_from_lines({"ab"}, "eng_latn"));
  const EncodingRatios r = encoding_ratios(pair);
  CHECK(r.byte_premium == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.length_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.byte_coefficient == doctest::Approx(1.5).epsilon(1e-12));

  const auto same = make_parallel_pair(handle_from_lines({"abc"}, "eng_latn"),
                                       handle_from_lines({"abc"}, "eng_latn"));
  const EncodingRatios identity = encoding_ratios(same);
  CHECK(identity.byte_premium == 1.0);
  CHECK(identity.length_ratio == 1.0);
  CHECK(identity.byte_coefficient == 1.0);

  CHECK_THROWS_AS(encoding_ratios(make_parallel_pair(handle_from_lines({"a"}, "aaa_latn"),
                                                     handle_from_lines({""}, "eng_latn"))),
                  ZeroReference);
  CHECK_THROWS_AS(encoding_ratios(make_parallel_pair(handle_from_lines({""}, "aaa_latn"),
                                                     handle_from_lines({"b"}, "eng_latn"))),
                  EmptyCorpus);
  CHECK_THROWS_AS(encoding_ratios(make_parallel_pair(handle_from_lines({}, "aaa_latn"),
                                                     handle_from_lines({}, "eng_latn"))),
                  EmptyCorpus);
}

TEST_CASE("contamination scan counts overlapping token prefixes") {
  const pretok::PreTokenizerSpec spec{pretok::PretokMode::whitespace, false};
  const TokenizerModel bytes = make_byte_base_model(Algorithm::bpe, spec);
  const CorpusHandle train = handle_from_lines({"ababa"}, "eng_latn");

  const ContaminationReport r = contamination_scan(train, {"aba"}, bytes);
  CHECK(r.language_tag == "eng_latn");
  CHECK(r.eval_examples == 1);
  CHECK(r.matched_examples == 1);
  CHECK(r.total_occurrences == 2);  // positions 0 and 2 overlap
  CHECK(r.prefix_len == 10);

  // Only the first prefix_len tokens of each example are searched.
  const ContaminationReport p2 = contamination_scan(train, {"abxyz"}, bytes, 2);
  CHECK(p2.total_occurrences == 2);  // "ab" occurs twice
  CHECK(p2.prefix_len == 2);

  // Empty examples are skipped; misses count as zero.
  const ContaminationReport mixed = contamination_scan(train, {"", "aba", "zz"}, bytes);
  CHECK(mixed.eval_examples == 3);
  CHECK(mixed.matched_examples == 1);
  CHECK(mixed.total_occurrences == 2);

  CHECK_THROWS_AS(contamination_scan(train, {"aba"}, bytes, 0), DomainError);
}

TEST_CASE("contamination scans one concatenated token stream") {
  const pretok::PreTokenizerSpec spec{pretok::PretokMode::whitespace, false};
  const TokenizerModel bytes = make_byte_base_model(Algorithm::bpe, spec);
  // Lines "xa" and "bx" concatenate to the stream x-a-b-x, so the prefix
  // "ab" is found once, across the line join.
  const CorpusHandle train = handle_from_lines({"xa", "bx"}, "eng_latn");
  const ContaminationReport r = contamination_scan(train, {"ab"}, bytes);
  CHECK(r.total_occurrences == 1);
}
