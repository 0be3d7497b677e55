#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "montok/corpus.hpp"
#include "montok/model.hpp"
#include "montok/pretok.hpp"

namespace montok {

struct ManifestLanguage {
  std::string tag;
  std::vector<std::string> corpus_paths;
  std::string eval_path;
  std::optional<std::int64_t> phoneme_count;
};

// One experiment definition, loaded from a JSON manifest file.  Relative
// corpus/eval paths are resolved against the manifest's directory.
struct ExperimentManifest {
  std::vector<ManifestLanguage> languages;
  std::string reference_language = "eng_latn";
  std::uint64_t train_bytes = 0;
  std::vector<Scaling> scalings = {Scaling::none};
  std::vector<Algorithm> algorithms = {Algorithm::bpe};
  std::vector<std::int32_t> vocab_grid = {8192,  16384, 32768, 49152,  65536,
                                          81920, 98304, 114688, 131072, 262144};
  std::vector<double> transition_fractions = {0.9};
  std::vector<double> target_ctcs;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  pretok::PreTokenizerSpec pretokenizer{pretok::PretokMode::whitespace, false};
  bool retrain_planned = true;
  std::int32_t profile_vocab_size = 65536;
  std::size_t contamination_prefix_len = 10;
};

// Parses and validates a manifest.  The MONTOK_OUT environment variable, when
// set, overrides output_dir.  Throws ManifestError naming the offending field.
ExperimentManifest load_manifest(const std::filesystem::path& path);

// Stable identifier for one trained tokenizer; doubles as the model file stem.
std::string tokenizer_id(Algorithm algorithm, std::int32_t vocab_size, Scaling scaling,
                         double transition_fraction, const std::string& tag);

// Identifier for a tokenizer retrained at a planned vocabulary size.
std::string planned_tokenizer_id(Algorithm algorithm, double target_ctc,
                                 std::int32_t planned_vocab, Scaling scaling,
                                 double transition_fraction, const std::string& tag);

// Append-only job ledger persisted as JSON; makes runs resumable.  A job is
// skipped on resume only when it is marked done under the same input hash.
// Marking a job pending deletes its stale outputs first, so a pending job
// never has an output file on disk.
class RunLedger {
 public:
  explicit RunLedger(std::filesystem::path path);

  bool should_skip(const std::string& job, std::uint64_t input_hash) const;
  void mark_pending(const std::string& job, std::uint64_t input_hash,
                    const std::vector<std::filesystem::path>& stale_outputs);
  void mark_done(const std::string& job, double seconds);
  void mark_failed(const std::string& job, const std::string& reason);
  std::string status(const std::string& job) const;

 private:
  void save_locked() const;

  mutable std::mutex mu_;
  std::filesystem::path path_;
  std::map<std::string, std::map<std::string, std::string>> jobs_;
};

struct RunOptions {
  int jobs = 1;
  std::optional<std::uint64_t> seed = {};
  bool resume = false;
};

enum class Stage { train, evaluate, profile, fit, plan, validate, stats, report };

// Executes the requested stages in canonical order.  Training jobs run on a
// worker pool of options.jobs threads; a failed job is recorded in the ledger
// and does not abort the rest of the grid.  Stage outputs land in
// manifest.output_dir as CSV files plus one JSON model file per tokenizer.
void run_stages(const ExperimentManifest& manifest, const RunOptions& options,
                const std::set<Stage>& stages);

// Full pipeline: every stage in order.
void run_experiment(const ExperimentManifest& manifest, const RunOptions& options);

// Scans every language's training subset for verbatim eval contamination and
// writes contamination.csv.  Requires trained profile tokenizers on disk.
void run_contamination(const ExperimentManifest& manifest, const RunOptions& options);

}  // namespace montok
