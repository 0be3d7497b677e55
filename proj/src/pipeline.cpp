#include "montok/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <thread>
#include <utility>

#include "json.hpp"
#include "montok/bpe.hpp"
#include "montok/byteops.hpp"
#include "montok/csv.hpp"
#include "montok/curvefit.hpp"
#include "montok/errors.hpp"
#include "montok/metrics.hpp"
#include "montok/stats.hpp"
#include "montok/superbpe.hpp"
#include "montok/unigram.hpp"

namespace montok {
namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  static const char* const digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string fmt_fraction_tag(double fraction) {
  return "t" + std::to_string(std::llround(fraction * 100.0));
}

// Filesystem-safe rendering of a target CTC for tokenizer ids.
std::string fmt_target(double target) {
  const double r = std::round(target);
  if (std::abs(target - r) < 1e-9 && std::abs(target) < 9e15) {
    return std::to_string(static_cast<long long>(r));
  }
  std::string out;
  for (char c : csv::format_double(target)) {
    if (c == '.') out.push_back('p');
    else if (c == '-') out.push_back('m');
    else if (c != '+') out.push_back(c);
  }
  return out;
}

std::string family_label(Algorithm algorithm, double fraction) {
  std::string label = algorithm_name(algorithm);
  if (algorithm == Algorithm::superbpe) label += "-" + fmt_fraction_tag(fraction);
  return label;
}

json parse_json_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) throw MissingFile(path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
}

void check_known_keys(const json& j, const std::set<std::string>& known,
                      const std::string& where) {
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ManifestError(where + item.key() + ": unknown field");
    }
  }
}

}  // namespace

ExperimentManifest load_manifest(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  if (!j.is_object()) throw ManifestError("manifest root must be an object");
  check_known_keys(j,
                   {"languages", "reference_language", "train_bytes", "scalings", "scaling",
                    "algorithms", "vocab_grid", "transition_fractions", "target_ctcs", "seed",
                    "output_dir", "pretokenizer", "retrain_planned", "profile_vocab_size",
                    "contamination_prefix_len"},
                   "");

  ExperimentManifest m;
  const std::filesystem::path base =
      path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  auto resolve = [&base](const std::string& p) {
    const std::filesystem::path fp(p);
    return (fp.is_absolute() ? fp : base / fp).lexically_normal();
  };

  if (!j.contains("languages") || !j.at("languages").is_array() || j.at("languages").empty()) {
    throw ManifestError("languages: required non-empty array");
  }
  std::set<std::string> seen_tags;
  for (const auto& lj : j.at("languages")) {
    if (!lj.is_object()) throw ManifestError("languages: entries must be objects");
    check_known_keys(lj, {"tag", "corpus_paths", "eval_path", "phoneme_count"}, "languages.");
    ManifestLanguage lang;
    if (!lj.contains("tag") || !lj.at("tag").is_string()) {
      throw ManifestError("languages.tag: required string");
    }
    lang.tag = lj.at("tag").get<std::string>();
    if (!language_tag_well_formed(lang.tag)) {
      throw ManifestError("languages.tag: malformed tag: " + lang.tag);
    }
    if (!seen_tags.insert(lang.tag).second) {
      throw ManifestError("languages.tag: duplicate tag: " + lang.tag);
    }
    if (!lj.contains("corpus_paths") || !lj.at("corpus_paths").is_array() ||
        lj.at("corpus_paths").empty()) {
      throw ManifestError("languages.corpus_paths: required non-empty array (" + lang.tag + ")");
    }
    for (const auto& pj : lj.at("corpus_paths")) {
      if (!pj.is_string()) {
        throw ManifestError("languages.corpus_paths: entries must be strings (" + lang.tag + ")");
      }
      lang.corpus_paths.push_back(resolve(pj.get<std::string>()).string());
    }
    if (!lj.contains("eval_path") || !lj.at("eval_path").is_string()) {
      throw ManifestError("languages.eval_path: required string (" + lang.tag + ")");
    }
    lang.eval_path = resolve(lj.at("eval_path").get<std::string>()).string();
    if (lj.contains("phoneme_count")) {
      if (!lj.at("phoneme_count").is_number_integer() ||
          lj.at("phoneme_count").get<std::int64_t>() < 1) {
        throw ManifestError("languages.phoneme_count: must be a positive integer (" + lang.tag +
                            ")");
      }
      lang.phoneme_count = lj.at("phoneme_count").get<std::int64_t>();
    }
    m.languages.push_back(std::move(lang));
  }

  if (j.contains("reference_language")) {
    if (!j.at("reference_language").is_string()) {
      throw ManifestError("reference_language: must be a string");
    }
    m.reference_language = j.at("reference_language").get<std::string>();
  }
  if (!seen_tags.count(m.reference_language)) {
    throw ManifestError("reference_language: not among languages: " + m.reference_language);
  }

  if (!j.contains("train_bytes") || !j.at("train_bytes").is_number_integer() ||
      j.at("train_bytes").get<std::int64_t>() <= 0) {
    throw ManifestError("train_bytes: required positive integer");
  }
  m.train_bytes = j.at("train_bytes").get<std::uint64_t>();

  if (j.contains("scalings") && j.contains("scaling")) {
    throw ManifestError("scaling: give either scaling or scalings, not both");
  }
  const char* scaling_key =
      j.contains("scalings") ? "scalings" : (j.contains("scaling") ? "scaling" : nullptr);
  if (scaling_key) {
    const json& sj = j.at(scaling_key);
    if (!sj.is_array() || sj.empty()) {
      throw ManifestError(std::string(scaling_key) + ": must be a non-empty array");
    }
    m.scalings.clear();
    for (const auto& e : sj) {
      if (!e.is_string()) throw ManifestError(std::string(scaling_key) + ": entries must be strings");
      try {
        m.scalings.push_back(scaling_from_name(e.get<std::string>()));
      } catch (const Error&) {
        throw ManifestError(std::string(scaling_key) + ": unknown value: " + e.get<std::string>());
      }
    }
  }

  if (j.contains("algorithms")) {
    const json& aj = j.at("algorithms");
    if (!aj.is_array() || aj.empty()) throw ManifestError("algorithms: must be a non-empty array");
    m.algorithms.clear();
    for (const auto& e : aj) {
      if (!e.is_string()) throw ManifestError("algorithms: entries must be strings");
      Algorithm a;
      if (!algorithm_from_name(e.get<std::string>(), a)) {
        throw ManifestError("algorithms: unknown value: " + e.get<std::string>());
      }
      m.algorithms.push_back(a);
    }
  }

  if (j.contains("vocab_grid")) {
    const json& vj = j.at("vocab_grid");
    if (!vj.is_array() || vj.empty()) throw ManifestError("vocab_grid: must be a non-empty array");
    m.vocab_grid.clear();
    for (const auto& e : vj) {
      if (!e.is_number_integer() || e.get<std::int64_t>() <= 0) {
        throw ManifestError("vocab_grid: entries must be positive integers");
      }
      m.vocab_grid.push_back(static_cast<std::int32_t>(e.get<std::int64_t>()));
    }
  }
  for (std::int32_t v : m.vocab_grid) {
    if (v % 128 != 0) {
      throw ManifestError("vocab_grid: " + std::to_string(v) + " is not divisible by 128");
    }
  }
  std::sort(m.vocab_grid.begin(), m.vocab_grid.end());
  if (std::adjacent_find(m.vocab_grid.begin(), m.vocab_grid.end()) != m.vocab_grid.end()) {
    throw ManifestError("vocab_grid: duplicate entries");
  }

  if (j.contains("transition_fractions")) {
    const json& fj = j.at("transition_fractions");
    if (!fj.is_array() || fj.empty()) {
      throw ManifestError("transition_fractions: must be a non-empty array");
    }
    m.transition_fractions.clear();
    for (const auto& e : fj) {
      if (!e.is_number()) throw ManifestError("transition_fractions: entries must be numbers");
      m.transition_fractions.push_back(e.get<double>());
    }
  }
  for (double f : m.transition_fractions) {
    if (!(f > 0.0 && f < 1.0)) {
      throw ManifestError("transition_fractions: values must lie strictly between 0 and 1");
    }
  }

  if (j.contains("target_ctcs")) {
    const json& tj = j.at("target_ctcs");
    if (!tj.is_array()) throw ManifestError("target_ctcs: must be an array");
    for (const auto& e : tj) {
      if (!e.is_number()) throw ManifestError("target_ctcs: entries must be numbers");
      m.target_ctcs.push_back(e.get<double>());
    }
    for (std::size_t i = 0; i < m.target_ctcs.size(); ++i) {
      if (m.target_ctcs[i] <= 0.0) throw ManifestError("target_ctcs: values must be positive");
      if (i && m.target_ctcs[i] <= m.target_ctcs[i - 1]) {
        throw ManifestError("target_ctcs: values must be strictly increasing");
      }
    }
  }

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<std::int64_t>() < 0) {
      throw ManifestError("seed: must be a non-negative integer");
    }
    m.seed = j.at("seed").get<std::uint64_t>();
  }

  if (!j.contains("output_dir") || !j.at("output_dir").is_string() ||
      j.at("output_dir").get<std::string>().empty()) {
    throw ManifestError("output_dir: required non-empty string");
  }
  m.output_dir = resolve(j.at("output_dir").get<std::string>());
  if (const char* env_out = std::getenv("MONTOK_OUT"); env_out && *env_out) {
    m.output_dir = std::filesystem::path(env_out);
  }

  if (j.contains("pretokenizer")) {
    try {
      pretok::from_json(j.at("pretokenizer"), m.pretokenizer);
    } catch (const std::exception& e) {
      throw ManifestError(std::string("pretokenizer: ") + e.what());
    }
  }

  if (j.contains("retrain_planned")) {
    if (!j.at("retrain_planned").is_boolean()) {
      throw ManifestError("retrain_planned: must be a boolean");
    }
    m.retrain_planned = j.at("retrain_planned").get<bool>();
  }

  if (j.contains("profile_vocab_size")) {
    if (!j.at("profile_vocab_size").is_number_integer() ||
        j.at("profile_vocab_size").get<std::int64_t>() <= 0) {
      throw ManifestError("profile_vocab_size: must be a positive integer");
    }
    m.profile_vocab_size = static_cast<std::int32_t>(j.at("profile_vocab_size").get<std::int64_t>());
  }

  if (j.contains("contamination_prefix_len")) {
    if (!j.at("contamination_prefix_len").is_number_integer() ||
        j.at("contamination_prefix_len").get<std::int64_t>() < 1) {
      throw ManifestError("contamination_prefix_len: must be a positive integer");
    }
    m.contamination_prefix_len =
        static_cast<std::size_t>(j.at("contamination_prefix_len").get<std::int64_t>());
  }

  return m;
}

std::string tokenizer_id(Algorithm algorithm, std::int32_t vocab_size, Scaling scaling,
                         double transition_fraction, const std::string& tag) {
  return family_label(algorithm, transition_fraction) + "-v" + std::to_string(vocab_size) + "-" +
         scaling_name(scaling) + "-" + tag;
}

std::string planned_tokenizer_id(Algorithm algorithm, double target_ctc,
                                 std::int32_t planned_vocab, Scaling scaling,
                                 double transition_fraction, const std::string& tag) {
  return family_label(algorithm, transition_fraction) + "-opt" + fmt_target(target_ctc) + "-v" +
         std::to_string(planned_vocab) + "-" + scaling_name(scaling) + "-" + tag;
}

RunLedger::RunLedger(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (!std::filesystem::exists(path_, ec)) return;
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw IoError("cannot open ledger: " + path_.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("ledger parse failed: " + path_.string() + ": " + e.what());
  }
  const json jobs = j.value("jobs", json::object());
  for (const auto& item : jobs.items()) {
    std::map<std::string, std::string> fields;
    for (const auto& f : item.value().items()) {
      if (f.value().is_string()) fields[f.key()] = f.value().get<std::string>();
    }
    jobs_[item.key()] = std::move(fields);
  }
}

bool RunLedger::should_skip(const std::string& job, std::uint64_t input_hash) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = jobs_.find(job);
  if (it == jobs_.end()) return false;
  const auto status = it->second.find("status");
  const auto hash = it->second.find("hash");
  return status != it->second.end() && status->second == "done" && hash != it->second.end() &&
         hash->second == hex64(input_hash);
}

void RunLedger::mark_pending(const std::string& job, std::uint64_t input_hash,
                             const std::vector<std::filesystem::path>& stale_outputs) {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& p : stale_outputs) {
    std::error_code ec;
    std::filesystem::remove(p, ec);
  }
  jobs_[job] = {{"status", "pending"}, {"hash", hex64(input_hash)}};
  save_locked();
}

void RunLedger::mark_done(const std::string& job, double seconds) {
  std::lock_guard<std::mutex> lock(mu_);
  auto& fields = jobs_[job];
  fields["status"] = "done";
  fields["seconds"] = csv::format_double(seconds);
  fields.erase("reason");
  save_locked();
}

void RunLedger::mark_failed(const std::string& job, const std::string& reason) {
  std::lock_guard<std::mutex> lock(mu_);
  auto& fields = jobs_[job];
  fields["status"] = "failed";
  fields["reason"] = reason;
  save_locked();
}

std::string RunLedger::status(const std::string& job) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = jobs_.find(job);
  if (it == jobs_.end()) return "";
  const auto status = it->second.find("status");
  return status == it->second.end() ? "" : status->second;
}

void RunLedger::save_locked() const {
  json out;
  out["jobs"] = json::object();
  for (const auto& [job, fields] : jobs_) {
    json fj = json::object();
    for (const auto& [k, v] : fields) fj[k] = v;
    out["jobs"][job] = std::move(fj);
  }
  const std::filesystem::path tmp = path_.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for write: " + tmp.string());
    os << out.dump(2) << '\n';
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path_);
}

namespace {

struct LangData {
  const ManifestLanguage* manifest = nullptr;
  CorpusHandle train;
  CorpusHandle eval;
  EncodingRatios ratios{};  // vs the reference language's eval side
  std::uint64_t content_hash = 0;
};

struct GridConfig {
  Algorithm algorithm = Algorithm::bpe;
  double fraction = 0.0;  // superbpe only
  Scaling scaling = Scaling::none;
  std::int32_t vocab = 0;
};

struct Context {
  ExperimentManifest m;  // effective (seed override applied)
  RunOptions opt;
  std::filesystem::path out;
  std::filesystem::path models_dir;
  std::vector<LangData> langs;  // manifest order
  std::size_t ref_index = 0;
  std::map<std::pair<std::string, Scaling>, ScaledSubset> subsets;
};

std::vector<GridConfig> grid_configs(const ExperimentManifest& m) {
  std::vector<GridConfig> out;
  for (Algorithm a : m.algorithms) {
    const std::vector<double> fractions =
        a == Algorithm::superbpe ? m.transition_fractions : std::vector<double>{0.0};
    for (double f : fractions) {
      for (Scaling s : m.scalings) {
        for (std::int32_t v : m.vocab_grid) out.push_back({a, f, s, v});
      }
    }
  }
  return out;
}

// The single tokenizer configuration used for language profiling, stats and
// report groupings: BPE when trained, else the first algorithm; the grid
// vocabulary closest to profile_vocab_size; the first scaling.
GridConfig profile_config(const ExperimentManifest& m) {
  GridConfig cfg;
  cfg.algorithm = m.algorithms.front();
  for (Algorithm a : m.algorithms) {
    if (a == Algorithm::bpe) cfg.algorithm = a;
  }
  cfg.fraction =
      cfg.algorithm == Algorithm::superbpe ? m.transition_fractions.front() : 0.0;
  cfg.scaling = m.scalings.front();
  cfg.vocab = m.vocab_grid.front();
  for (std::int32_t v : m.vocab_grid) {
    const std::int64_t best = std::llabs(static_cast<std::int64_t>(cfg.vocab) - m.profile_vocab_size);
    const std::int64_t cand = std::llabs(static_cast<std::int64_t>(v) - m.profile_vocab_size);
    if (cand < best) cfg.vocab = v;
  }
  return cfg;
}

std::uint64_t subset_seed(const ExperimentManifest& m, const std::string& tag, Scaling scaling) {
  return byteops::fnv1a(std::to_string(m.seed) + ":" + tag + ":" + scaling_name(scaling));
}

Context build_context(const ExperimentManifest& manifest, const RunOptions& options) {
  Context ctx;
  ctx.m = manifest;
  ctx.opt = options;
  if (options.seed) ctx.m.seed = *options.seed;
  ctx.out = ctx.m.output_dir;
  ctx.models_dir = ctx.out / "models";
  std::filesystem::create_directories(ctx.models_dir);

  for (const auto& lang : ctx.m.languages) {
    LangData data;
    data.manifest = &lang;
    data.train = ingest_corpus(lang.corpus_paths, lang.tag);
    data.eval = ingest_corpus({lang.eval_path}, lang.tag);
    std::uint64_t h = byteops::fnv1a(lang.tag);
    for (const auto& line : data.train.lines) h = byteops::fnv1a("\n", byteops::fnv1a(line, h));
    h = byteops::fnv1a("|eval|", h);
    for (const auto& line : data.eval.lines) h = byteops::fnv1a("\n", byteops::fnv1a(line, h));
    data.content_hash = h;
    ctx.langs.push_back(std::move(data));
  }
  for (std::size_t i = 0; i < ctx.langs.size(); ++i) {
    if (ctx.langs[i].train.language_tag == ctx.m.reference_language) ctx.ref_index = i;
  }
  const LangData& ref = ctx.langs[ctx.ref_index];
  for (auto& lang : ctx.langs) {
    if (&lang == &ref) {
      lang.ratios = EncodingRatios{};
    } else {
      lang.ratios = encoding_ratios(make_parallel_pair(lang.eval, ref.eval));
    }
  }
  for (const auto& lang : ctx.langs) {
    const std::string& tag = lang.train.language_tag;
    for (Scaling s : ctx.m.scalings) {
      const double premium = s == Scaling::byte_premium ? lang.ratios.byte_premium : 1.0;
      ctx.subsets.emplace(std::make_pair(tag, s),
                          sample_bytes(lang.train, ctx.m.train_bytes, s, premium,
                                       subset_seed(ctx.m, tag, s)));
    }
  }
  return ctx;
}

void run_jobs(int jobs, std::vector<std::function<void()>>& tasks) {
  if (tasks.empty()) return;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), tasks.size());
  if (workers == 1) {
    for (auto& task : tasks) task();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) {
    pool.emplace_back([&next, &tasks] {
      for (;;) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= tasks.size()) return;
        tasks[idx]();
      }
    });
  }
  for (auto& t : pool) t.join();
}

std::uint64_t train_job_hash(const Context& ctx, const LangData& lang, const std::string& id) {
  json pj;
  pretok::to_json(pj, ctx.m.pretokenizer);
  return byteops::fnv1a(id + "|" + hex64(lang.content_hash) + "|" +
                        std::to_string(ctx.m.train_bytes) + "|" + std::to_string(ctx.m.seed) +
                        "|" + pj.dump());
}

TokenizerModel train_for(const Context& ctx, const ScaledSubset& subset, Algorithm algorithm,
                         std::int32_t vocab, double fraction) {
  switch (algorithm) {
    case Algorithm::bpe:
      return train_bpe(subset, static_cast<std::size_t>(vocab), ctx.m.pretokenizer);
    case Algorithm::unigram: {
      UnigramTrainConfig cfg;
      cfg.vocab_size = static_cast<std::size_t>(vocab);
      return train_unigram(subset, cfg, ctx.m.pretokenizer);
    }
    case Algorithm::superbpe: {
      SuperBpeConfig cfg;
      cfg.vocab_size = static_cast<std::size_t>(vocab);
      cfg.transition_fraction = fraction;
      cfg.base_pretok = ctx.m.pretokenizer;
      return train_superbpe(subset, cfg);
    }
  }
  throw DomainError("unknown algorithm");
}

// One ledger-tracked training job; failures are recorded, never propagated.
void train_one(const Context& ctx, RunLedger& ledger, const ScaledSubset& subset,
               Algorithm algorithm, std::int32_t vocab, double fraction, const std::string& id,
               std::uint64_t input_hash, const std::filesystem::path& model_path) {
  try {
    if (ctx.opt.resume && ledger.should_skip(id, input_hash)) return;
    ledger.mark_pending(id, input_hash, {model_path});
    const auto t0 = std::chrono::steady_clock::now();
    const TokenizerModel model = train_for(ctx, subset, algorithm, vocab, fraction);
    save_model(model, model_path);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    ledger.mark_done(id, dt.count());
  } catch (const std::exception& e) {
    ledger.mark_failed(id, e.what());
  }
}

void stage_train(const Context& ctx, RunLedger& ledger) {
  std::vector<std::function<void()>> tasks;
  for (const auto& lang : ctx.langs) {
    const std::string tag = lang.train.language_tag;
    for (const GridConfig cfg : grid_configs(ctx.m)) {
      const std::string id = tokenizer_id(cfg.algorithm, cfg.vocab, cfg.scaling, cfg.fraction, tag);
      const std::uint64_t h = train_job_hash(ctx, lang, id);
      const std::filesystem::path model_path = ctx.models_dir / (id + ".json");
      const ScaledSubset* subset = &ctx.subsets.at({tag, cfg.scaling});
      tasks.push_back([&ctx, &ledger, subset, cfg, id, h, model_path] {
        train_one(ctx, ledger, *subset, cfg.algorithm, cfg.vocab, cfg.fraction, id, h, model_path);
      });
    }
  }
  run_jobs(ctx.opt.jobs, tasks);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::filesystem::path& path, const std::string& needed_by) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw MissingStage(needed_by + " requires " + path.filename().string() +
                       "; run the producing stage first");
  }
  auto rows = csv::read_file(path);
  if (rows.empty()) throw MissingStage(path.filename().string() + " is empty");
  Table t;
  t.header = std::move(rows.front());
  rows.erase(rows.begin());
  t.rows = std::move(rows);
  return t;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == name) return i;
  }
  throw IoError("missing csv column: " + name);
}

void stage_evaluate(const Context& ctx) {
  const std::string& ref_tag = ctx.m.reference_language;
  bool any_model = false;
  std::vector<CompressionReport> reports;
  std::map<std::string, double> ws_cache;  // tag -> proportion_whitespace(eval)
  for (const GridConfig cfg : grid_configs(ctx.m)) {
    std::map<std::string, TokenizerModel> models;
    for (const auto& lang : ctx.langs) {
      const std::string& tag = lang.train.language_tag;
      const std::string id = tokenizer_id(cfg.algorithm, cfg.vocab, cfg.scaling, cfg.fraction, tag);
      const std::filesystem::path path = ctx.models_dir / (id + ".json");
      std::error_code ec;
      if (!std::filesystem::exists(path, ec)) continue;
      models.emplace(tag, load_model(path));
      any_model = true;
    }
    if (!models.count(ref_tag)) continue;  // premiums need the reference model
    std::uint64_t ref_ctc = 0;
    for (const auto& lang : ctx.langs) {
      if (lang.train.language_tag == ref_tag) {
        ref_ctc = corpus_token_count(models.at(ref_tag), lang.eval.lines);
      }
    }
    for (const auto& lang : ctx.langs) {
      const std::string& tag = lang.train.language_tag;
      const auto it = models.find(tag);
      if (it == models.end()) continue;
      const TokenizerModel& model = it->second;
      CompressionReport r;
      r.language_tag = tag;
      r.tokenizer_id = tokenizer_id(cfg.algorithm, cfg.vocab, cfg.scaling, cfg.fraction, tag);
      r.algorithm = cfg.algorithm;
      r.vocab_size = cfg.vocab;
      r.ctc = corpus_token_count(model, lang.eval.lines);
      r.token_premium = token_premium(r.ctc, ref_ctc);
      r.mean_token_len_vocab = mean_token_length(model, LengthScope::vocab);
      r.mean_token_len_corpus = mean_token_length(model, LengthScope::corpus, lang.eval.lines);
      r.data_sim =
          data_similarity(model, ctx.subsets.at({tag, cfg.scaling}).lines, lang.eval.lines);
      if (!ws_cache.count(tag)) ws_cache[tag] = proportion_whitespace(lang.eval.lines);
      r.proportion_whitespace = ws_cache[tag];
      reports.push_back(std::move(r));
    }
  }
  if (!any_model) {
    throw MissingStage("evaluate requires trained models under " + ctx.models_dir.string());
  }
  std::sort(reports.begin(), reports.end(), [](const CompressionReport& a, const CompressionReport& b) {
    return std::tie(a.language_tag, a.tokenizer_id) < std::tie(b.language_tag, b.tokenizer_id);
  });
  csv::Writer w({"language_tag", "tokenizer_id", "algorithm", "vocab_size", "ctc",
                 "token_premium", "mean_token_len_vocab", "mean_token_len_corpus", "data_sim",
                 "proportion_whitespace"});
  for (const auto& r : reports) {
    w.add_row({r.language_tag, r.tokenizer_id, algorithm_name(r.algorithm),
               std::to_string(r.vocab_size), std::to_string(r.ctc),
               csv::format_double(r.token_premium), csv::format_double(r.mean_token_len_vocab),
               csv::format_double(r.mean_token_len_corpus), csv::format_double(r.data_sim),
               csv::format_double(r.proportion_whitespace)});
  }
  w.write_file(ctx.out / "compression.csv");
}

void stage_profile(const Context& ctx) {
  const GridConfig pc = profile_config(ctx.m);
  std::vector<LanguageProfile> profiles;
  for (const auto& lang : ctx.langs) {
    const std::string& tag = lang.train.language_tag;
    const std::string id = tokenizer_id(pc.algorithm, pc.vocab, pc.scaling, pc.fraction, tag);
    const std::filesystem::path path = ctx.models_dir / (id + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
      throw MissingStage("profile requires trained model " + id);
    }
    const TokenizerModel model = load_model(path);
    const ScaledSubset& subset = ctx.subsets.at({tag, pc.scaling});
    const CharStats cs = char_stats(subset.lines, true);
    LanguageProfile p;
    p.language_tag = tag;
    p.n_phonemes = lang.manifest->phoneme_count;
    p.proportion_whitespace = proportion_whitespace(subset.lines);
    p.unigrams_unique = cs.unigrams_unique;
    p.bigrams_entropy_nospace = cs.bigram_entropy;
    p.unigrams_entropy_nospace = cs.unigram_entropy;
    p.char_coef = lang.ratios.length_ratio;
    p.byte_coef = lang.ratios.byte_coefficient;
    p.byte_premium = lang.ratios.byte_premium;
    p.vocab_mean_token_len = mean_token_length(model, LengthScope::vocab);
    p.flores_mean_token_len = mean_token_length(model, LengthScope::corpus, lang.eval.lines);
    p.data_sim = data_similarity(model, subset.lines, lang.eval.lines);
    p.script = script_group(tag);
    profiles.push_back(std::move(p));
  }
  std::sort(profiles.begin(), profiles.end(),
            [](const LanguageProfile& a, const LanguageProfile& b) {
              return a.language_tag < b.language_tag;
            });
  csv::Writer w({"language_tag", "n_phonemes", "proportion_whitespace", "unigrams_unique",
                 "bigrams_entropy_nospace", "unigrams_entropy_nospace", "char_coef", "byte_coef",
                 "byte_premium", "vocab_mean_token_len", "flores_mean_token_len", "data_sim",
                 "script"});
  for (const auto& p : profiles) {
    w.add_row({p.language_tag, p.n_phonemes ? std::to_string(*p.n_phonemes) : "",
               csv::format_double(p.proportion_whitespace), std::to_string(p.unigrams_unique),
               csv::format_double(p.bigrams_entropy_nospace),
               csv::format_double(p.unigrams_entropy_nospace), csv::format_double(p.char_coef),
               csv::format_double(p.byte_coef), csv::format_double(p.byte_premium),
               csv::format_double(p.vocab_mean_token_len),
               csv::format_double(p.flores_mean_token_len), csv::format_double(p.data_sim),
               script_group_name(p.script)});
  }
  w.write_file(ctx.out / "profiles.csv");
}

// (family label, fraction) pairs in manifest order.
std::vector<std::pair<std::string, GridConfig>> families(const ExperimentManifest& m) {
  std::vector<std::pair<std::string, GridConfig>> out;
  for (Algorithm a : m.algorithms) {
    const std::vector<double> fractions =
        a == Algorithm::superbpe ? m.transition_fractions : std::vector<double>{0.0};
    for (double f : fractions) {
      GridConfig cfg;
      cfg.algorithm = a;
      cfg.fraction = f;
      cfg.scaling = m.scalings.front();
      out.emplace_back(family_label(a, f), cfg);
    }
  }
  return out;
}

// Per-language (vocab -> ctc) observations for one family at the first
// scaling, matched by recomputing the expected tokenizer id.
std::map<std::string, std::map<std::int32_t, double>> observed_ctcs(const Table& comp,
                                                                     const GridConfig& family) {
  const std::size_t c_tag = column(comp, "language_tag");
  const std::size_t c_id = column(comp, "tokenizer_id");
  const std::size_t c_vocab = column(comp, "vocab_size");
  const std::size_t c_ctc = column(comp, "ctc");
  std::map<std::string, std::map<std::int32_t, double>> out;
  for (const auto& row : comp.rows) {
    const std::string& tag = row[c_tag];
    const std::int32_t vocab = static_cast<std::int32_t>(std::stoll(row[c_vocab]));
    const std::string expect =
        tokenizer_id(family.algorithm, vocab, family.scaling, family.fraction, tag);
    if (row[c_id] != expect) continue;
    out[tag][vocab] = std::stod(row[c_ctc]);
  }
  return out;
}

void stage_fit(const Context& ctx) {
  const Table comp = read_table(ctx.out / "compression.csv", "fit");
  for (const auto& [label, fam] : families(ctx.m)) {
    const auto observed = observed_ctcs(comp, fam);
    csv::Writer w({"language_tag", "a", "b", "c", "rmse_fit", "r2"});
    for (const auto& [tag, by_vocab] : observed) {
      std::vector<std::pair<std::int32_t, double>> points(by_vocab.begin(), by_vocab.end());
      try {
        const PowerLawFit fit = fit_power_law(std::move(points), tag);
        w.add_row({tag, csv::format_double(fit.a), csv::format_double(fit.b),
                   csv::format_double(fit.c), csv::format_double(fit.rmse_fit),
                   csv::format_double(fit.r2)});
      } catch (const Error&) {
        // Unfittable language (degenerate curve); leave it out of the table.
      }
    }
    w.write_file(ctx.out / ("fits-" + label + ".csv"));
  }
}

void stage_plan(const Context& ctx) {
  const Table comp = read_table(ctx.out / "compression.csv", "plan");
  for (const auto& [label, fam] : families(ctx.m)) {
    const Table fits = read_table(ctx.out / ("fits-" + label + ".csv"), "plan");
    const auto observed = observed_ctcs(comp, fam);
    const std::size_t c_tag = column(fits, "language_tag");
    const std::size_t c_a = column(fits, "a");
    const std::size_t c_b = column(fits, "b");
    const std::size_t c_c = column(fits, "c");
    csv::Writer w({"language_tag", "target_ctc", "planned_vocab", "predicted_ctc", "clamped"});
    for (const auto& row : fits.rows) {
      PowerLawFit fit;
      fit.language_tag = row[c_tag];
      fit.a = std::stod(row[c_a]);
      fit.b = std::stod(row[c_b]);
      fit.c = std::stod(row[c_c]);
      const auto obs_it = observed.find(fit.language_tag);
      if (obs_it == observed.end()) continue;
      for (double target : ctx.m.target_ctcs) {
        try {
          const OptimalVocabEntry e = invert_for_target(fit, target, obs_it->second);
          w.add_row({e.language_tag, csv::format_double(e.target_ctc),
                     std::to_string(e.planned_vocab), csv::format_double(e.predicted_ctc),
                     clamp_name(e.clamped)});
        } catch (const Error&) {
          // Missing endpoints for this language; skip its plan rows.
        }
      }
    }
    w.write_file(ctx.out / ("plan-" + label + ".csv"));
  }
}

Clamp clamp_from_name(const std::string& name) {
  for (Clamp c : {Clamp::none, Clamp::floor_8192, Clamp::ceil_262144}) {
    if (name == clamp_name(c)) return c;
  }
  throw IoError("unknown clamp value: " + name);
}

void stage_validate(const Context& ctx, RunLedger& ledger) {
  if (ctx.m.target_ctcs.empty() || !ctx.m.retrain_planned) return;
  const Table comp = read_table(ctx.out / "compression.csv", "validate");
  csv::Writer planned_csv(
      {"language_tag", "algorithm", "target_ctc", "planned_vocab", "clamped", "measured_ctc"});
  csv::Writer rmse_csv({"algorithm", "target_ctc", "rmse"});
  for (const auto& [label, fam] : families(ctx.m)) {
    const Table plan = read_table(ctx.out / ("plan-" + label + ".csv"), "validate");
    const auto observed = observed_ctcs(comp, fam);
    const std::size_t c_tag = column(plan, "language_tag");
    const std::size_t c_target = column(plan, "target_ctc");
    const std::size_t c_vocab = column(plan, "planned_vocab");
    const std::size_t c_pred = column(plan, "predicted_ctc");
    const std::size_t c_clamp = column(plan, "clamped");

    struct PlanRow {
      OptimalVocabEntry entry;
      std::string model_id;
    };
    std::vector<PlanRow> rows;
    for (const auto& row : plan.rows) {
      PlanRow pr;
      pr.entry.language_tag = row[c_tag];
      pr.entry.target_ctc = std::stod(row[c_target]);
      pr.entry.planned_vocab = static_cast<std::int32_t>(std::stoll(row[c_vocab]));
      pr.entry.predicted_ctc = std::stod(row[c_pred]);
      pr.entry.clamped = clamp_from_name(row[c_clamp]);
      pr.model_id = planned_tokenizer_id(fam.algorithm, pr.entry.target_ctc,
                                         pr.entry.planned_vocab, fam.scaling, fam.fraction,
                                         pr.entry.language_tag);
      rows.push_back(std::move(pr));
    }

    std::vector<std::function<void()>> tasks;
    for (const auto& pr : rows) {
      if (pr.entry.clamped != Clamp::none) continue;  // clamp reuses a grid endpoint
      const LangData* lang = nullptr;
      for (const auto& l : ctx.langs) {
        if (l.train.language_tag == pr.entry.language_tag) lang = &l;
      }
      if (!lang) continue;
      const std::uint64_t h = train_job_hash(ctx, *lang, pr.model_id);
      const std::filesystem::path model_path = ctx.models_dir / (pr.model_id + ".json");
      const ScaledSubset* subset = &ctx.subsets.at({pr.entry.language_tag, fam.scaling});
      const Algorithm algorithm = fam.algorithm;
      const double fraction = fam.fraction;
      const std::int32_t vocab = pr.entry.planned_vocab;
      const std::string id = pr.model_id;
      tasks.push_back([&ctx, &ledger, subset, algorithm, vocab, fraction, id, h, model_path] {
        train_one(ctx, ledger, *subset, algorithm, vocab, fraction, id, h, model_path);
      });
    }
    run_jobs(ctx.opt.jobs, tasks);

    std::map<std::pair<std::string, double>, double> measured;
    for (const auto& pr : rows) {
      const std::string& tag = pr.entry.language_tag;
      if (pr.entry.clamped != Clamp::none) {
        const auto obs_it = observed.find(tag);
        if (obs_it == observed.end()) continue;
        const auto v_it = obs_it->second.find(pr.entry.planned_vocab);
        if (v_it == obs_it->second.end()) continue;
        measured[{tag, pr.entry.target_ctc}] = v_it->second;
        continue;
      }
      const std::filesystem::path model_path = ctx.models_dir / (pr.model_id + ".json");
      std::error_code ec;
      if (!std::filesystem::exists(model_path, ec)) continue;  // retrain job failed
      const TokenizerModel model = load_model(model_path);
      const LangData* lang = nullptr;
      for (const auto& l : ctx.langs) {
        if (l.train.language_tag == tag) lang = &l;
      }
      if (!lang) continue;
      measured[{tag, pr.entry.target_ctc}] =
          static_cast<double>(corpus_token_count(model, lang->eval.lines));
    }

    std::vector<OptimalVocabEntry> entries;
    for (const auto& pr : rows) {
      const auto it = measured.find({pr.entry.language_tag, pr.entry.target_ctc});
      if (it == measured.end()) continue;
      entries.push_back(pr.entry);
      planned_csv.add_row({pr.entry.language_tag, label, csv::format_double(pr.entry.target_ctc),
                           std::to_string(pr.entry.planned_vocab), clamp_name(pr.entry.clamped),
                           csv::format_double(it->second)});
    }
    if (entries.empty()) continue;
    const PlanValidation v = validate_plan(entries, measured);
    for (const auto& [target, rmse] : v.per_target) {
      rmse_csv.add_row({label, csv::format_double(target), csv::format_double(rmse)});
    }
    rmse_csv.add_row({label, "overall", csv::format_double(v.overall)});
  }
  planned_csv.write_file(ctx.out / "planned.csv");
  rmse_csv.write_file(ctx.out / "validation_rmse.csv");
}

// Premium (and ctc) per language for one exact tokenizer configuration.
void config_measures(const Table& comp, const GridConfig& cfg,
                     std::map<std::string, double>* premium, std::map<std::string, double>* ctc) {
  const std::size_t c_tag = column(comp, "language_tag");
  const std::size_t c_id = column(comp, "tokenizer_id");
  const std::size_t c_ctc = column(comp, "ctc");
  const std::size_t c_premium = column(comp, "token_premium");
  for (const auto& row : comp.rows) {
    const std::string& tag = row[c_tag];
    if (row[c_id] != tokenizer_id(cfg.algorithm, cfg.vocab, cfg.scaling, cfg.fraction, tag)) {
      continue;
    }
    if (premium) (*premium)[tag] = std::stod(row[c_premium]);
    if (ctc) (*ctc)[tag] = std::stod(row[c_ctc]);
  }
}

void stage_stats(const Context& ctx) {
  const Table comp = read_table(ctx.out / "compression.csv", "stats");
  const Table prof = read_table(ctx.out / "profiles.csv", "stats");
  const GridConfig pc = profile_config(ctx.m);
  std::map<std::string, double> fixed_premium;
  config_measures(comp, pc, &fixed_premium, nullptr);
  const std::size_t p_tag = column(prof, "language_tag");
  const std::size_t p_script = column(prof, "script");

  std::vector<std::vector<std::string>> rows;

  // Pairwise rank tests of token premium between script groups, with a
  // Bonferroni family correction across the pairs.
  {
    static const char* const order[] = {"latin", "cyrillic", "arabic", "other"};
    std::map<std::string, std::vector<double>> groups;
    for (const auto& row : prof.rows) {
      const auto it = fixed_premium.find(row[p_tag]);
      if (it != fixed_premium.end()) groups[row[p_script]].push_back(it->second);
    }
    struct PairTest {
      std::string a, b;
      MWUResult r;
    };
    std::vector<PairTest> tests;
    std::vector<double> ps;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t k = i + 1; k < 4; ++k) {
        const auto ai = groups.find(order[i]);
        const auto bi = groups.find(order[k]);
        if (ai == groups.end() || bi == groups.end()) continue;
        try {
          PairTest t{order[i], order[k], mann_whitney_u(ai->second, bi->second)};
          ps.push_back(t.r.p_two_sided);
          tests.push_back(std::move(t));
        } catch (const Error&) {
        }
      }
    }
    const std::vector<double> adjusted = bonferroni(ps);
    for (std::size_t i = 0; i < tests.size(); ++i) {
      rows.push_back({"mwu_premium_script", tests[i].a, tests[i].b,
                      csv::format_double(tests[i].r.u_stat), "", "",
                      csv::format_double(tests[i].r.p_two_sided),
                      csv::format_double(adjusted[i])});
    }
  }

  // Planned-vocabulary tokenizers vs the fixed grid: variance-ratio tests on
  // CTC and a paired premium test at the profile vocabulary.
  std::error_code ec;
  if (std::filesystem::exists(ctx.out / "planned.csv", ec)) {
    const Table planned = read_table(ctx.out / "planned.csv", "stats");
    const std::size_t l_tag = column(planned, "language_tag");
    const std::size_t l_algo = column(planned, "algorithm");
    const std::size_t l_target = column(planned, "target_ctc");
    const std::size_t l_ctc = column(planned, "measured_ctc");
    for (const auto& [label, fam] : families(ctx.m)) {
      std::vector<double> planned_ctcs;
      std::map<double, std::map<std::string, double>> by_target;
      for (const auto& row : planned.rows) {
        if (row[l_algo] != label) continue;
        planned_ctcs.push_back(std::stod(row[l_ctc]));
        by_target[std::stod(row[l_target])][row[l_tag]] = std::stod(row[l_ctc]);
      }
      if (planned_ctcs.empty()) continue;
      const auto observed = observed_ctcs(comp, fam);
      for (std::int32_t v : ctx.m.vocab_grid) {
        std::vector<double> fixed_ctcs;
        for (const auto& [tag, by_vocab] : observed) {
          const auto it = by_vocab.find(v);
          if (it != by_vocab.end()) fixed_ctcs.push_back(it->second);
        }
        try {
          const FTestResult f = variance_ratio_test(planned_ctcs, fixed_ctcs);
          rows.push_back({"f_ctc_planned_vs_fixed", label + "-planned",
                          label + "-v" + std::to_string(v), csv::format_double(f.f_stat),
                          csv::format_double(f.df1), csv::format_double(f.df2),
                          csv::format_double(f.p_two_sided), ""});
        } catch (const Error&) {
        }
      }
      // Per-language planned premium (mean over targets) against the premium
      // at the profile vocabulary.
      std::map<std::string, std::pair<double, int>> premium_acc;
      for (const auto& [target, by_tag] : by_target) {
        const auto ref_it = by_tag.find(ctx.m.reference_language);
        if (ref_it == by_tag.end() || ref_it->second <= 0.0) continue;
        for (const auto& [tag, ctc] : by_tag) {
          auto& acc = premium_acc[tag];
          acc.first += ctc / ref_it->second;
          acc.second += 1;
        }
      }
      std::vector<double> planned_premiums, fixed_premiums;
      for (const auto& [tag, acc] : premium_acc) {
        const auto it = fixed_premium.find(tag);
        if (it == fixed_premium.end() || acc.second == 0) continue;
        planned_premiums.push_back(acc.first / acc.second);
        fixed_premiums.push_back(it->second);
      }
      try {
        const TTestResult t = paired_t_test(planned_premiums, fixed_premiums);
        rows.push_back({"t_premium_planned_vs_fixed", label + "-planned",
                        label + "-v" + std::to_string(pc.vocab), csv::format_double(t.t_stat),
                        csv::format_double(t.df), "", csv::format_double(t.p_two_sided), ""});
      } catch (const Error&) {
      }
    }
  }

  std::sort(rows.begin(), rows.end());
  csv::Writer w({"test", "group_a", "group_b", "statistic", "df1", "df2", "p", "p_adjusted"});
  for (auto& row : rows) w.add_row(std::move(row));
  w.write_file(ctx.out / "stats.csv");
}

double quantile_sorted(const std::vector<double>& xs, double p) {
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= xs.size()) return xs.back();
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[lo + 1] - xs[lo]);
}

void stage_report(const Context& ctx) {
  const Table comp = read_table(ctx.out / "compression.csv", "report");
  const Table prof = read_table(ctx.out / "profiles.csv", "report");
  const GridConfig pc = profile_config(ctx.m);
  GridConfig fam = pc;  // the family whose grid the report slices

  // Gaussian kernel density of per-language CTC, one series per grid vocab.
  {
    const auto observed = observed_ctcs(comp, fam);
    csv::Writer w({"vocab_size", "ctc", "density"});
    for (std::int32_t v : ctx.m.vocab_grid) {
      std::vector<double> vals;
      for (const auto& [tag, by_vocab] : observed) {
        const auto it = by_vocab.find(v);
        if (it != by_vocab.end()) vals.push_back(it->second);
      }
      const std::size_t n = vals.size();
      if (n < 2) continue;
      double mean = 0.0;
      for (double x : vals) mean += x;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double x : vals) var += (x - mean) * (x - mean);
      var /= static_cast<double>(n - 1);
      const double sd = std::sqrt(var);
      if (!(sd > 0.0)) continue;
      const double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
      const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
      const double lo = *mn - 2.0 * h;
      const double hi = *mx + 2.0 * h;
      const int points = 64;
      for (int i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        double density = 0.0;
        for (double xi : vals) {
          const double z = (x - xi) / h;
          density += std::exp(-0.5 * z * z);
        }
        density /= static_cast<double>(n) * h * std::sqrt(2.0 * std::numbers::pi);
        w.add_row({std::to_string(v), csv::format_double(x), csv::format_double(density)});
      }
    }
    w.write_file(ctx.out / "density-ctc.csv");
  }

  const std::size_t p_tag = column(prof, "language_tag");
  const std::size_t p_script = column(prof, "script");
  std::map<std::string, double> fixed_premium;
  config_measures(comp, pc, &fixed_premium, nullptr);

  // Box-plot summary of token premium per script group at the profile vocab.
  {
    static const char* const order[] = {"latin", "cyrillic", "arabic", "other"};
    std::map<std::string, std::vector<double>> groups;
    for (const auto& row : prof.rows) {
      const auto it = fixed_premium.find(row[p_tag]);
      if (it != fixed_premium.end()) groups[row[p_script]].push_back(it->second);
    }
    csv::Writer w({"script", "n", "min", "q1", "median", "q3", "max"});
    for (const char* script : order) {
      const auto it = groups.find(script);
      if (it == groups.end() || it->second.empty()) continue;
      std::vector<double> xs = it->second;
      std::sort(xs.begin(), xs.end());
      w.add_row({script, std::to_string(xs.size()), csv::format_double(xs.front()),
                 csv::format_double(quantile_sorted(xs, 0.25)),
                 csv::format_double(quantile_sorted(xs, 0.5)),
                 csv::format_double(quantile_sorted(xs, 0.75)), csv::format_double(xs.back())});
    }
    w.write_file(ctx.out / "box-script.csv");
  }

  // Single-predictor regressions of token premium on each profile feature,
  // one table per grid vocabulary.
  {
    static const char* const predictors[] = {
        "n_phonemes",     "proportion_whitespace",    "unigrams_unique",
        "bigrams_entropy_nospace", "unigrams_entropy_nospace", "char_coef",
        "byte_coef",      "byte_premium",             "vocab_mean_token_len",
        "flores_mean_token_len",   "data_sim"};
    std::map<std::string, std::map<std::string, double>> features;  // predictor -> tag -> x
    for (const char* name : predictors) {
      const std::size_t ci = column(prof, name);
      for (const auto& row : prof.rows) {
        if (row[ci].empty()) continue;
        features[name][row[p_tag]] = std::stod(row[ci]);
      }
    }
    for (std::int32_t v : ctx.m.vocab_grid) {
      GridConfig cfg = fam;
      cfg.vocab = v;
      std::map<std::string, double> premium;
      config_measures(comp, cfg, &premium, nullptr);
      if (premium.empty()) continue;
      csv::Writer w({"predictor", "p_value", "r2"});
      for (const char* name : predictors) {
        std::vector<double> xs, ys;
        for (const auto& [tag, y] : premium) {
          const auto fi = features.find(name);
          if (fi == features.end()) continue;
          const auto xi = fi->second.find(tag);
          if (xi == fi->second.end()) continue;
          xs.push_back(xi->second);
          ys.push_back(y);
        }
        try {
          const RegressionResult r = ols_simple(xs, ys);
          w.add_row({name, csv::format_double(r.p_slope), csv::format_double(r.r2)});
        } catch (const Error&) {
          // Not enough data or a constant predictor; omit the row.
        }
      }
      w.write_file(ctx.out / ("regressions-v" + std::to_string(v) + ".csv"));
    }
  }
}

}  // namespace

void run_stages(const ExperimentManifest& manifest, const RunOptions& options,
                const std::set<Stage>& stages) {
  Context ctx = build_context(manifest, options);
  RunLedger ledger(ctx.out / "ledger.json");
  if (stages.count(Stage::train)) stage_train(ctx, ledger);
  if (stages.count(Stage::evaluate)) stage_evaluate(ctx);
  if (stages.count(Stage::profile)) stage_profile(ctx);
  if (stages.count(Stage::fit)) stage_fit(ctx);
  if (stages.count(Stage::plan)) stage_plan(ctx);
  if (stages.count(Stage::validate)) stage_validate(ctx, ledger);
  if (stages.count(Stage::stats)) stage_stats(ctx);
  if (stages.count(Stage::report)) stage_report(ctx);
}

void run_experiment(const ExperimentManifest& manifest, const RunOptions& options) {
  run_stages(manifest, options,
             {Stage::train, Stage::evaluate, Stage::profile, Stage::fit, Stage::plan,
              Stage::validate, Stage::stats, Stage::report});
}

void run_contamination(const ExperimentManifest& manifest, const RunOptions& options) {
  const Context ctx = build_context(manifest, options);
  const GridConfig pc = profile_config(ctx.m);
  std::vector<ContaminationReport> reports;
  for (const auto& lang : ctx.langs) {
    const std::string& tag = lang.train.language_tag;
    const std::string id = tokenizer_id(pc.algorithm, pc.vocab, pc.scaling, pc.fraction, tag);
    const std::filesystem::path path = ctx.models_dir / (id + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
      throw MissingStage("contamination requires trained model " + id);
    }
    const TokenizerModel model = load_model(path);
    const ScaledSubset& subset = ctx.subsets.at({tag, pc.scaling});
    CorpusHandle train = lang.train;
    train.lines = subset.lines;
    train.line_count = subset.lines.size();
    reports.push_back(
        contamination_scan(train, lang.eval.lines, model, ctx.m.contamination_prefix_len));
  }
  std::sort(reports.begin(), reports.end(),
            [](const ContaminationReport& a, const ContaminationReport& b) {
              return a.language_tag < b.language_tag;
            });
  csv::Writer w({"language_tag", "eval_examples", "matched_examples", "total_occurrences",
                 "prefix_len"});
  for (const auto& r : reports) {
    w.add_row({r.language_tag, std::to_string(r.eval_examples),
               std::to_string(r.matched_examples), std::to_string(r.total_occurrences),
               std::to_string(r.prefix_len)});
  }
  w.write_file(ctx.out / "contamination.csv");
}

}  // namespace montok
