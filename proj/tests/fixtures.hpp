#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "montok/corpus.hpp"

namespace montok::testing {

// One language of the deterministic synthetic parallel corpus family.
struct SyntheticLanguage {
  std::string tag;
  std::vector<std::string> lines;
};

// Five scripts over a shared concept stream, so the languages are parallel
// line for line: ASCII Latin (1 byte/char), Cyrillic and Arabic (2 bytes),
// Han (3 bytes, written without spaces) and Devanagari (3 bytes). About 30%
// of word slots are high-frequency function words, which gives cross-word
// merges something to win on.
std::vector<SyntheticLanguage> synthetic_parallel(std::size_t line_count, std::uint64_t seed,
                                                  std::size_t words_per_line = 8);

// Random valid UTF-8 (mixed 1..4-byte characters, no newlines), at most
// max_bytes long.
std::string random_utf8(std::mt19937_64& rng, std::size_t max_bytes);

// Random lowercase-ASCII lines totalling at most max_total_bytes.
std::vector<std::string> random_ascii_lines(std::mt19937_64& rng, std::size_t max_total_bytes);

// Writes lines joined with '\n' (trailing newline included) and returns path.
std::filesystem::path write_lines(const std::filesystem::path& path,
                                  const std::vector<std::string>& lines);

// Wraps lines as a ready-made training subset for direct trainer calls.
ScaledSubset subset_from_lines(std::vector<std::string> lines, const std::string& tag);

// A scratch directory under the system temp root, wiped on construction.
std::filesystem::path fresh_temp_dir(const std::string& name);

}  // namespace montok::testing
