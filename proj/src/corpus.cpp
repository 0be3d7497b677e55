#include "montok/corpus.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "montok/byteops.hpp"
#include "montok/errors.hpp"

namespace montok {

const char* scaling_name(Scaling s) {
  return s == Scaling::none ? "none" : "byte_premium";
}

Scaling scaling_from_name(const std::string& name) {
  if (name == "none") return Scaling::none;
  if (name == "byte_premium") return Scaling::byte_premium;
  throw Error("unknown scaling: " + name);
}

bool language_tag_well_formed(const std::string& tag) {
  if (tag.size() != 8 || tag[3] != '_') return false;
  for (std::size_t i : {0u, 1u, 2u, 4u, 5u, 6u, 7u}) {
    if (tag[i] < 'a' || tag[i] > 'z') return false;
  }
  return true;
}

namespace {

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("missing corpus file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return std::move(buf).str();
}

std::string normalize_newlines(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

void split_lines(const std::string& text, std::vector<std::string>& out) {
  std::size_t begin = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      out.emplace_back(text, begin, i - begin);
      begin = i + 1;
    }
  }
  if (begin < text.size()) out.emplace_back(text, begin, text.size() - begin);
}

}  // namespace

CorpusHandle ingest_corpus(const std::vector<std::string>& paths,
                           const std::string& language_tag) {
  if (!language_tag_well_formed(language_tag)) {
    throw BadLanguageTag("language tag must match ^[a-z]{3}_[a-z]{4}$: " +
                         language_tag);
  }
  if (paths.empty()) throw MissingFile("no corpus files given");
  CorpusHandle handle;
  handle.language_tag = language_tag;
  handle.source_paths = paths;
  for (const std::string& path : paths) {
    std::string raw = read_file_bytes(path);
    std::size_t bad = 0;
    if (!byteops::utf8_valid(raw, &bad)) throw InvalidUtf8(path, bad);
    std::string text = normalize_newlines(raw);
    handle.total_bytes += text.size();
    split_lines(text, handle.lines);
  }
  handle.line_count = handle.lines.size();
  return handle;
}

ScaledSubset sample_bytes(const CorpusHandle& corpus, std::uint64_t requested_bytes,
                          Scaling scaling, double byte_premium, std::uint64_t seed) {
  if (corpus.line_count == 0) {
    throw EmptyCorpus("cannot sample from empty corpus: " + corpus.language_tag);
  }
  if (requested_bytes < 1) throw DomainError("requested_bytes must be >= 1");
  if (scaling == Scaling::byte_premium && !(byte_premium > 0.0)) {
    throw DomainError("byte_premium must be > 0 under byte_premium scaling");
  }
  ScaledSubset subset;
  subset.parent = corpus;
  subset.parent.lines.clear();
  subset.requested_bytes = requested_bytes;
  subset.scaling = scaling;
  subset.byte_premium_used = scaling == Scaling::byte_premium ? byte_premium : 1.0;
  subset.seed = seed;

  const double budget =
      static_cast<double>(requested_bytes) * subset.byte_premium_used;
  const std::uint64_t start = std::mt19937_64(seed)() % corpus.line_count;
  bool met = false;
  for (std::uint64_t i = 0; i < corpus.line_count; ++i) {
    const std::string& line = corpus.lines[(start + i) % corpus.line_count];
    subset.lines.push_back(line);
    subset.actual_bytes += line.size() + 1;  // content plus one separator
    if (static_cast<double>(subset.actual_bytes) >= budget) {
      met = true;
      break;
    }
  }
  subset.exhausted = !met;
  return subset;
}

ParallelPair make_parallel_pair(CorpusHandle lang_a, CorpusHandle lang_b) {
  if (lang_a.line_count != lang_b.line_count) {
    throw LengthMismatch("parallel sides disagree: " +
                         std::to_string(lang_a.line_count) + " vs " +
                         std::to_string(lang_b.line_count) + " lines");
  }
  ParallelPair pair;
  pair.sentence_count = lang_a.line_count;
  pair.lang_a = std::move(lang_a);
  pair.lang_b = std::move(lang_b);
  return pair;
}

namespace {

void side_totals(const CorpusHandle& side, std::uint64_t& bytes,
                 std::uint64_t& chars) {
  bytes = 0;
  chars = 0;
  for (const std::string& line : side.lines) {
    bytes += line.size();
    auto n = byteops::utf8_length(line);
    if (!n) throw InvalidUtf8(side.language_tag, 0);
    chars += *n;
  }
}

}  // namespace

EncodingRatios encoding_ratios(const ParallelPair& pair) {
  if (pair.sentence_count == 0) throw EmptyCorpus("parallel pair has no sentences");
  std::uint64_t bytes_a = 0, chars_a = 0, bytes_b = 0, chars_b = 0;
  side_totals(pair.lang_a, bytes_a, chars_a);
  side_totals(pair.lang_b, bytes_b, chars_b);
  if (bytes_b == 0) {
    throw ZeroReference("reference side has zero bytes: " + pair.lang_b.language_tag);
  }
  if (bytes_a == 0) {
    throw EmptyCorpus("language side has zero bytes: " + pair.lang_a.language_tag);
  }
  EncodingRatios r;
  r.byte_premium = static_cast<double>(bytes_a) / static_cast<double>(bytes_b);
  r.length_ratio = static_cast<double>(chars_a) / static_cast<double>(chars_b);
  r.byte_coefficient = r.byte_premium / r.length_ratio;
  return r;
}

namespace {

// Overlapping occurrence count of pattern inside text (KMP).
std::uint64_t count_occurrences(const std::vector<std::int32_t>& text,
                                const std::vector<std::int32_t>& pattern) {
  const std::size_t m = pattern.size();
  if (m == 0 || text.size() < m) return 0;
  std::vector<std::size_t> fail(m, 0);
  for (std::size_t i = 1; i < m; ++i) {
    std::size_t k = fail[i - 1];
    while (k > 0 && pattern[i] != pattern[k]) k = fail[k - 1];
    if (pattern[i] == pattern[k]) ++k;
    fail[i] = k;
  }
  std::uint64_t count = 0;
  std::size_t k = 0;
  for (std::int32_t id : text) {
    while (k > 0 && id != pattern[k]) k = fail[k - 1];
    if (id == pattern[k]) ++k;
    if (k == m) {
      ++count;
      k = fail[m - 1];
    }
  }
  return count;
}

}  // namespace

ContaminationReport contamination_scan(const CorpusHandle& train,
                                       const std::vector<std::string>& eval_examples,
                                       const TokenizerModel& model,
                                       std::uint64_t prefix_len) {
  if (prefix_len < 1) throw DomainError("prefix_len must be >= 1");
  Encoder encoder(model);
  std::vector<std::int32_t> stream;
  for (const std::string& line : train.lines) {
    std::vector<std::int32_t> ids = encoder.encode(line);
    stream.insert(stream.end(), ids.begin(), ids.end());
  }
  ContaminationReport report;
  report.language_tag = train.language_tag;
  report.eval_examples = eval_examples.size();
  report.prefix_len = prefix_len;
  for (const std::string& example : eval_examples) {
    std::vector<std::int32_t> ids = encoder.encode(example);
    if (ids.size() > prefix_len) ids.resize(prefix_len);
    if (ids.empty()) continue;
    std::uint64_t occurrences = count_occurrences(stream, ids);
    if (occurrences > 0) ++report.matched_examples;
    report.total_occurrences += occurrences;
  }
  return report;
}

}  // namespace montok
