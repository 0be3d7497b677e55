#pragma once

#include <cstdint>

#include "montok/corpus.hpp"
#include "montok/model.hpp"
#include "montok/pretok.hpp"

namespace montok {

struct SuperBpeConfig {
  std::size_t vocab_size = 0;
  // Share of the vocabulary learned under whitespace boundaries before
  // merging is allowed to cross words.
  double transition_fraction = 0.9;
  pretok::PreTokenizerSpec base_pretok{pretok::PretokMode::whitespace, false};
};

// Two-phase training: plain whitespace-bounded BPE up to the transition
// point, then continued merging over the same corpus re-segmented as whole
// lines (mode=none) so tokens may span several words. The model keeps all
// phase-1 merges, records the achieved transition point, and encodes with
// mode=none. Throws VocabTooSmall, TransitionTooSmall (rounded transition
// < 257), EmptyCorpus and DomainError (bad fraction or base mode).
TokenizerModel train_superbpe(const ScaledSubset& subset, const SuperBpeConfig& cfg);

}  // namespace montok
