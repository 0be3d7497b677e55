#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

// Pre-tokenization: splitting text into byte spans that merge learning may not
// cross. Mode "none" keeps the whole text as one span, which is what allows
// multi-word tokens.

namespace montok::pretok {

enum class PretokMode { whitespace, none };

struct PreTokenizerSpec {
  PretokMode mode = PretokMode::whitespace;
  // Whitespace mode only: keep a single leading whitespace character attached
  // to the word that follows it. Training configurations usually turn this
  // off so learned word tokens never contain whitespace bytes.
  bool attach_leading_space = true;

  bool operator==(const PreTokenizerSpec&) const = default;
};

// Splits text into spans whose concatenation reproduces the input exactly.
// Whitespace mode: every maximal run of Unicode whitespace starts a new span;
// with attachment on, the run's final whitespace character moves onto the
// following word span. None mode: one span covering the whole (non-empty)
// text. Returned views point into `text`.
std::vector<std::string_view> pretokenize(std::string_view text,
                                          const PreTokenizerSpec& spec);

void to_json(nlohmann::json& j, const PreTokenizerSpec& spec);
void from_json(const nlohmann::json& j, PreTokenizerSpec& spec);

}  // namespace montok::pretok
