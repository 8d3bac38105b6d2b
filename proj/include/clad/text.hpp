#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clad {

// Whitespace-splitting, trimming and a small lowercase fold sufficient for
// the languages this toolkit targets. Everything is UTF-8 in, UTF-8 out.

std::vector<std::string> split_ws(std::string_view text);

std::string_view trim(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Decodes text into Unicode codepoints. Invalid bytes decode as U+FFFD and
// consume one byte, so iteration always terminates.
std::vector<char32_t> utf8_codepoints(std::string_view text);

std::string utf8_encode(char32_t cp);

// Lowercase fold over ASCII, the Latin-1 supplement and Greek (including
// the accented capitals). Other codepoints pass through unchanged.
char32_t fold_lower(char32_t cp);
std::string fold_lower(std::string_view text);

// True if the token carries lexical material: any ASCII alphanumeric or any
// non-ASCII codepoint. Pure-punctuation tokens return false.
bool has_lexical_char(std::string_view token);

}  // namespace clad
