#include "montok/superbpe.hpp"

#include <cmath>
#include <string>

#include "montok/bpe.hpp"
#include "montok/errors.hpp"

namespace montok {

TokenizerModel train_superbpe(const ScaledSubset& subset, const SuperBpeConfig& cfg) {
  if (cfg.vocab_size < 257) {
    throw VocabTooSmall("vocab_size must be >= 257, got " +
                        std::to_string(cfg.vocab_size));
  }
  if (!(cfg.transition_fraction > 0.0 && cfg.transition_fraction < 1.0)) {
    throw DomainError("transition_fraction must lie in (0, 1)");
  }
  if (cfg.base_pretok.mode != pretok::PretokMode::whitespace) {
    throw DomainError("phase 1 requires whitespace pre-tokenization");
  }
  const auto transition = static_cast<std::size_t>(std::llround(
      cfg.transition_fraction * static_cast<double>(cfg.vocab_size)));
  if (transition < 257) {
    throw TransitionTooSmall("transition point must be >= 257, got " +
                             std::to_string(transition));
  }

  std::vector<bpe::Word> words = bpe::build_words(subset.lines, cfg.base_pretok);
  if (words.empty()) {
    throw EmptyCorpus("training subset has no pre-tokens: " +
                      subset.parent.language_tag);
  }

  const pretok::PreTokenizerSpec phase2{pretok::PretokMode::none, false};
  TokenizerModel model = make_byte_base_model(Algorithm::superbpe, phase2);

  // Phase 1: whitespace-bounded merges up to the transition point.
  bpe::extend_merges(model.vocab, model.merges, words, transition);
  model.transition_point = static_cast<std::int32_t>(model.vocab.size());

  // Phase 2: re-segment as whole lines, replay phase-1 merges, keep going.
  std::vector<bpe::Word> line_words = bpe::build_words(subset.lines, phase2);
  bpe::apply_merges(line_words, model.merges);
  bpe::extend_merges(model.vocab, model.merges, line_words, cfg.vocab_size);

  model.vocab_size = static_cast<std::int32_t>(model.vocab.size());
  model.provenance.language_tag = subset.parent.language_tag;
  model.provenance.training_bytes = static_cast<long long>(subset.actual_bytes);
  model.provenance.seed = static_cast<long long>(subset.seed);
  validate_model(model);
  return model;
}

}  // namespace montok
