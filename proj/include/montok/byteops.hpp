#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Low-level byte and UTF-8 helpers shared across the library. All tokenizer
// vocabularies are raw byte strings; these routines never assume printable or
// even valid UTF-8 content unless stated.

namespace montok::byteops {

// Lowercase hex round trip used by the model file format.
std::string to_hex(std::string_view bytes);
std::optional<std::string> from_hex(std::string_view hex);

// Strict UTF-8 validation (rejects overlong forms, surrogates, > U+10FFFF).
// On failure stores the byte offset of the first invalid sequence.
bool utf8_valid(std::string_view s, std::size_t* bad_offset = nullptr);

// Number of Unicode scalar values, or nullopt if the input is not valid UTF-8.
std::optional<std::size_t> utf8_length(std::string_view s);

// Decodes into scalar values; returns false (and leaves out untouched) on
// invalid input.
bool utf8_decode(std::string_view s, std::vector<std::uint32_t>& out);

// Appends the UTF-8 encoding of cp (must be a valid scalar value).
void utf8_append(std::string& s, std::uint32_t cp);

// Decodes one scalar value starting at s[pos]; advances pos past it. Returns
// nullopt on invalid input without advancing.
std::optional<std::uint32_t> utf8_next(std::string_view s, std::size_t& pos);

// Unicode White_Space property.
bool is_unicode_whitespace(std::uint32_t cp);

// FNV-1a, used for deterministic content hashing (ledger keys, seeds).
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace montok::byteops
