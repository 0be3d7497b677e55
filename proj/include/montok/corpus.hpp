#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "montok/model.hpp"

namespace montok {

// A language-tagged text corpus, normalized to '\n' separators at ingestion.
struct CorpusHandle {
  std::string language_tag;                // "xxx_yyyy" (iso639_3-iso15924)
  std::vector<std::string> source_paths;
  std::uint64_t total_bytes = 0;           // bytes after newline normalization
  std::uint64_t line_count = 0;
  std::vector<std::string> lines;          // content only, separators stripped

  bool operator==(const CorpusHandle&) const = default;
};

enum class Scaling { none, byte_premium };

const char* scaling_name(Scaling s);
Scaling scaling_from_name(const std::string& name);

// A byte-budgeted sample of contiguous whole lines from a seeded start.
struct ScaledSubset {
  CorpusHandle parent;                     // metadata only; parent.lines left empty
  std::uint64_t requested_bytes = 0;
  std::uint64_t actual_bytes = 0;          // content + one separator per line
  Scaling scaling = Scaling::none;
  double byte_premium_used = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> lines;
  bool exhausted = false;                  // whole corpus used, budget unmet
};

struct ParallelPair {
  CorpusHandle lang_a;
  CorpusHandle lang_b;                     // reference side
  std::uint64_t sentence_count = 0;
};

struct EncodingRatios {
  double byte_premium = 1.0;               // bytes(a) / bytes(b)
  double length_ratio = 1.0;               // chars(a) / chars(b)
  double byte_coefficient = 1.0;           // byte_premium / length_ratio
};

struct ContaminationReport {
  std::string language_tag;
  std::uint64_t eval_examples = 0;
  std::uint64_t matched_examples = 0;
  std::uint64_t total_occurrences = 0;
  std::uint64_t prefix_len = 0;
};

// Reads, validates (strict UTF-8) and newline-normalizes the given files.
// Throws MissingFile, InvalidUtf8 (with file and byte offset), BadLanguageTag.
CorpusHandle ingest_corpus(const std::vector<std::string>& paths,
                           const std::string& language_tag);

bool language_tag_well_formed(const std::string& tag);

// Takes contiguous whole lines from a seeded start (wrapping circularly) until
// the byte budget — requested_bytes x premium when scaled — is met or every
// line has been used once. The line that crosses the budget is included.
ScaledSubset sample_bytes(const CorpusHandle& corpus, std::uint64_t requested_bytes,
                          Scaling scaling, double byte_premium, std::uint64_t seed);

// Throws LengthMismatch when the two sides disagree on line count.
ParallelPair make_parallel_pair(CorpusHandle lang_a, CorpusHandle lang_b);

// Ratios over line content (separators excluded); reference side is lang_b.
EncodingRatios encoding_ratios(const ParallelPair& pair);

// Counts occurrences (overlapping) of each example's first prefix_len token
// ids inside the token stream of the whole training corpus.
ContaminationReport contamination_scan(const CorpusHandle& train,
                                       const std::vector<std::string>& eval_examples,
                                       const TokenizerModel& model,
                                       std::uint64_t prefix_len = 10);

}  // namespace montok
