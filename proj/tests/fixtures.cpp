#include "fixtures.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "montok/byteops.hpp"
#include "montok/errors.hpp"

namespace montok::testing {
namespace {

constexpr std::size_t kFunctionWords = 8;
constexpr std::size_t kContentWords = 400;

struct ScriptSpec {
  const char* tag;
  std::uint32_t alphabet_start;
  std::uint32_t alphabet_size;
  bool spaces;
};

constexpr ScriptSpec kScripts[] = {
    {"aaa_latn", 0x0061, 26, true},   // a..z, 1 byte each
    {"bbb_cyrl", 0x0430, 32, true},   // Cyrillic small letters, 2 bytes
    {"ccc_arab", 0x0627, 20, true},   // Arabic letters, 2 bytes
    {"ddd_hani", 0x4E00, 512, false}, // Han, 3 bytes, no spaces
    {"eee_deva", 0x0905, 53, true},   // Devanagari, 3 bytes
};

// Deterministic distinct word for (script, word id); function words (ids
// below kFunctionWords) are kept short so they dominate the corpus.
std::string render_word(const ScriptSpec& script, std::size_t word_id,
                        std::set<std::string>& used) {
  for (std::uint64_t salt = 0;; ++salt) {
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull ^ (word_id * 0x100000001b3ull) ^
                        (salt << 32) ^ script.alphabet_start);
    const bool function_word = word_id < kFunctionWords;
    const std::size_t len = function_word ? 1 + rng() % 2 : 2 + rng() % 3;
    std::string word;
    for (std::size_t i = 0; i < len; ++i) {
      byteops::utf8_append(word, script.alphabet_start +
                                     static_cast<std::uint32_t>(rng() % script.alphabet_size));
    }
    if (used.insert(word).second) return word;
  }
}

}  // namespace

std::vector<SyntheticLanguage> synthetic_parallel(std::size_t line_count, std::uint64_t seed,
                                                  std::size_t words_per_line) {
  // Shared concept stream; every language renders the same word ids.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<std::size_t>> stream(line_count);
  for (auto& line : stream) {
    line.reserve(words_per_line);
    for (std::size_t w = 0; w < words_per_line; ++w) {
      if (unit(rng) < 0.3) {
        line.push_back(rng() % kFunctionWords);
      } else {
        const double u = unit(rng);
        const double r = std::exp(u * std::log(static_cast<double>(kContentWords + 1))) - 1.0;
        const std::size_t rank = std::min<std::size_t>(kContentWords - 1,
                                                       static_cast<std::size_t>(r));
        line.push_back(kFunctionWords + rank);
      }
    }
  }

  std::vector<SyntheticLanguage> out;
  for (const ScriptSpec& script : kScripts) {
    SyntheticLanguage lang;
    lang.tag = script.tag;
    std::set<std::string> used;
    std::vector<std::string> lexicon(kFunctionWords + kContentWords);
    for (std::size_t id = 0; id < lexicon.size(); ++id) {
      lexicon[id] = render_word(script, id, used);
    }
    lang.lines.reserve(line_count);
    for (const auto& concepts : stream) {
      std::string line;
      for (std::size_t w = 0; w < concepts.size(); ++w) {
        if (w && script.spaces) line += ' ';
        line += lexicon[concepts[w]];
      }
      lang.lines.push_back(std::move(line));
    }
    out.push_back(std::move(lang));
  }
  return out;
}

std::string random_utf8(std::mt19937_64& rng, std::size_t max_bytes) {
  const std::size_t target = rng() % (max_bytes + 1);
  std::string out;
  while (out.size() < target) {
    const std::size_t remaining = target - out.size();
    const int cls = static_cast<int>(rng() % 4);
    std::uint32_t cp = 0;
    if (cls == 0 || remaining < 2) {
      cp = 0x20 + static_cast<std::uint32_t>(rng() % (0x7F - 0x20));
    } else if (cls == 1 || remaining < 3) {
      cp = 0x80 + static_cast<std::uint32_t>(rng() % (0x800 - 0x80));
    } else if (cls == 2 || remaining < 4) {
      do {
        cp = 0x800 + static_cast<std::uint32_t>(rng() % (0x10000 - 0x800));
      } while (cp >= 0xD800 && cp <= 0xDFFF);
    } else {
      cp = 0x10000 + static_cast<std::uint32_t>(rng() % (0x110000 - 0x10000));
    }
    byteops::utf8_append(out, cp);
  }
  return out;
}

std::vector<std::string> random_ascii_lines(std::mt19937_64& rng, std::size_t max_total_bytes) {
  static const char alphabet[] = "aabbcde ";
  std::vector<std::string> lines;
  std::size_t total = 0;
  while (total < max_total_bytes) {
    const std::size_t len = std::min(rng() % 41, max_total_bytes - total);
    std::string line;
    for (std::size_t i = 0; i < len; ++i) {
      line.push_back(alphabet[rng() % (sizeof(alphabet) - 1)]);
    }
    total += line.size() + 1;
    lines.push_back(std::move(line));
  }
  return lines;
}

std::filesystem::path write_lines(const std::filesystem::path& path,
                                  const std::vector<std::string>& lines) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for write: " + path.string());
  for (const auto& line : lines) out << line << '\n';
  return path;
}

ScaledSubset subset_from_lines(std::vector<std::string> lines, const std::string& tag) {
  ScaledSubset subset;
  subset.parent.language_tag = tag;
  subset.parent.line_count = lines.size();
  subset.scaling = Scaling::none;
  for (const auto& line : lines) subset.actual_bytes += line.size() + 1;
  subset.parent.total_bytes = subset.actual_bytes;
  subset.requested_bytes = subset.actual_bytes;
  subset.lines = std::move(lines);
  return subset;
}

std::filesystem::path fresh_temp_dir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "montok_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace montok::testing
