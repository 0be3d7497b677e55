#include "montok/pretok.hpp"

#include "montok/byteops.hpp"
#include "montok/errors.hpp"

namespace montok::pretok {

namespace {

struct Run {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool ws = false;
  std::size_t last_cp_begin = 0;  // byte offset of the run's final character
};

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text,
                                          const PreTokenizerSpec& spec) {
  std::vector<std::string_view> spans;
  if (text.empty()) return spans;
  if (spec.mode == PretokMode::none) {
    spans.push_back(text);
    return spans;
  }

  // Collect maximal runs of whitespace / non-whitespace characters. Bytes
  // that fail to decode are treated as non-whitespace so the partition
  // property holds for arbitrary input.
  std::vector<Run> runs;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t cp_begin = pos;
    const auto cp = byteops::utf8_next(text, pos);
    bool ws = false;
    if (cp) {
      ws = byteops::is_unicode_whitespace(*cp);
    } else {
      ++pos;  // skip the undecodable byte
    }
    if (runs.empty() || runs.back().ws != ws) {
      runs.push_back({cp_begin, pos, ws, cp_begin});
    } else {
      runs.back().end = pos;
      runs.back().last_cp_begin = cp_begin;
    }
  }

  // Emit spans; with attachment on, the final whitespace character of a run
  // moves onto the following word span.
  std::size_t pending_begin = std::string_view::npos;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const Run& run = runs[k];
    if (run.ws) {
      if (spec.attach_leading_space && k + 1 < runs.size()) {
        if (run.last_cp_begin > run.begin) {
          spans.push_back(text.substr(run.begin, run.last_cp_begin - run.begin));
        }
        pending_begin = run.last_cp_begin;
      } else {
        spans.push_back(text.substr(run.begin, run.end - run.begin));
      }
    } else {
      const std::size_t begin =
          pending_begin == std::string_view::npos ? run.begin : pending_begin;
      spans.push_back(text.substr(begin, run.end - begin));
      pending_begin = std::string_view::npos;
    }
  }
  return spans;
}

void to_json(nlohmann::json& j, const PreTokenizerSpec& spec) {
  j = nlohmann::json{
      {"mode", spec.mode == PretokMode::whitespace ? "whitespace" : "none"},
      {"attach_leading_space", spec.attach_leading_space},
  };
}

void from_json(const nlohmann::json& j, PreTokenizerSpec& spec) {
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "whitespace") {
    spec.mode = PretokMode::whitespace;
  } else if (mode == "none") {
    spec.mode = PretokMode::none;
  } else {
    throw Error("unknown pretokenizer mode: " + mode);
  }
  spec.attach_leading_space = j.at("attach_leading_space").get<bool>();
}

}  // namespace montok::pretok
