#include "clad/text.hpp"

#include <cctype>

namespace clad {

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view text) {
  size_t b = 0;
  size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return text.substr(b, e - b);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<char32_t> utf8_codepoints(std::string_view text) {
  std::vector<char32_t> out;
  size_t i = 0;
  while (i < text.size()) {
    unsigned char b0 = static_cast<unsigned char>(text[i]);
    char32_t cp = 0xFFFD;
    size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 >> 5) == 0x6 && i + 1 < text.size()) {
      cp = (char32_t(b0 & 0x1F) << 6) | (text[i + 1] & 0x3F);
      len = 2;
    } else if ((b0 >> 4) == 0xE && i + 2 < text.size()) {
      cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(text[i + 1] & 0x3F) << 6) |
           (text[i + 2] & 0x3F);
      len = 3;
    } else if ((b0 >> 3) == 0x1E && i + 3 < text.size()) {
      cp = (char32_t(b0 & 0x07) << 18) | (char32_t(text[i + 1] & 0x3F) << 12) |
           (char32_t(text[i + 2] & 0x3F) << 6) | (text[i + 3] & 0x3F);
      len = 4;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

char32_t fold_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  // Latin-1 supplement capitals, skipping the multiplication sign.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  // Greek capital letters alpha..omega, 0x3A2 is unassigned.
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  switch (cp) {
    case 0x386: return 0x3AC;  // Ά
    case 0x388: return 0x3AD;  // Έ
    case 0x389: return 0x3AE;  // Ή
    case 0x38A: return 0x3AF;  // Ί
    case 0x38C: return 0x3CC;  // Ό
    case 0x38E: return 0x3CD;  // Ύ
    case 0x38F: return 0x3CE;  // Ώ
    case 0x3AA: return 0x3CA;  // Ϊ
    case 0x3AB: return 0x3CB;  // Ϋ
    default: return cp;
  }
}

std::string fold_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : utf8_codepoints(text)) out += utf8_encode(fold_lower(cp));
  return out;
}

bool has_lexical_char(std::string_view token) {
  for (unsigned char c : token) {
    if (c >= 0x80) return true;
    if (std::isalnum(c)) return true;
  }
  return false;
}

}  // namespace clad
