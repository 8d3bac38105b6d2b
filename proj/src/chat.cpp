#include "clad/chat.hpp"

#include <algorithm>
#include <istream>
#include <sstream>

#include "clad/error.hpp"
#include "clad/text.hpp"

namespace clad {

namespace {

constexpr char kBullet = '\x15';

bool is_pause_token(std::string_view tok) {
  // "(.)", "(..)", "(...)" and timed pauses like "(2.5)".
  if (tok.size() < 3 || tok.front() != '(' || tok.back() != ')') return false;
  std::string_view inner = tok.substr(1, tok.size() - 2);
  return !inner.empty() &&
         inner.find_first_not_of(".0123456789:") == std::string_view::npos;
}

bool is_lexical_cp(char32_t cp) {
  if (cp < 0x80)
    return (cp >= U'0' && cp <= U'9') || (cp >= U'A' && cp <= U'Z') ||
           (cp >= U'a' && cp <= U'z');
  if (cp < 0xC0) return false;                     // Latin-1 punctuation block
  if (cp == 0xD7 || cp == 0xF7) return false;      // multiplication, division
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  return true;
}

bool token_has_lexical(std::string_view tok) {
  for (char32_t cp : utf8_codepoints(tok))
    if (is_lexical_cp(cp)) return true;
  return false;
}

// Extracts "\x15start_end\x15" bullets, removing them from the text. With
// several bullets the interval spans from the first start to the last end.
std::optional<MediaInterval> take_bullets(std::string& text) {
  std::optional<MediaInterval> interval;
  std::string out;
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] != kBullet) {
      out += text[i++];
      continue;
    }
    size_t close = text.find(kBullet, i + 1);
    if (close == std::string::npos) {  // stray delimiter, drop it
      ++i;
      continue;
    }
    std::string body = text.substr(i + 1, close - i - 1);
    size_t us = body.find('_');
    if (us != std::string::npos) {
      try {
        std::int64_t start = std::stoll(body.substr(0, us));
        std::int64_t end = std::stoll(body.substr(us + 1));
        if (end > start && start >= 0) {
          if (!interval)
            interval = MediaInterval{start, end};
          else
            interval->end_ms = end;
        }
      } catch (const std::exception&) {
        // non-numeric bullet body: treat as annotation noise and drop
      }
    }
    i = close + 1;
  }
  text = std::string(trim(out));
  return interval;
}

struct TierAccumulator {
  enum class Kind { None, Header, Speaker, Dependent } kind = Kind::None;
  std::string code;  // speaker code or header key
  std::string text;
};

void parse_participants_value(const std::string& value,
                              std::vector<ParticipantInfo>& participants) {
  std::stringstream ss(value);
  std::string entry;
  while (std::getline(ss, entry, ',')) {
    auto parts = split_ws(entry);
    if (parts.empty()) continue;
    ParticipantInfo info;
    info.code = parts[0];
    if (parts.size() >= 2) info.role = parts.back();
    for (size_t i = 1; i + 1 < parts.size(); ++i) {
      if (!info.name.empty()) info.name += ' ';
      info.name += parts[i];
    }
    participants.push_back(std::move(info));
  }
}

}  // namespace

bool ChatDocument::has_participant(const std::string& code) const {
  return std::any_of(participants.begin(), participants.end(),
                     [&](const ParticipantInfo& p) { return p.code == code; });
}

const char* cohort_name(Cohort cohort) {
  return cohort == Cohort::Control ? "control" : "aphasia";
}

Cohort cohort_from_name(const std::string& name) {
  std::string lower = fold_lower(name);
  if (lower == "control") return Cohort::Control;
  if (lower == "aphasia") return Cohort::Aphasia;
  throw Error(ErrorCode::ConfigError, "unknown cohort label '" + name + "'");
}

ChatDocument parse_chat(std::istream& source) {
  ChatDocument doc;
  TierAccumulator current;

  auto flush = [&] {
    switch (current.kind) {
      case TierAccumulator::Kind::Header: {
        if (current.code == "Participants")
          parse_participants_value(current.text, doc.participants);
        doc.header_entries.emplace_back(current.code,
                                        std::string(trim(current.text)));
        break;
      }
      case TierAccumulator::Kind::Speaker: {
        RawUtterance utt;
        utt.speaker_code = current.code;
        utt.raw_text = current.text;
        utt.media = take_bullets(utt.raw_text);
        if (!utt.raw_text.empty()) doc.utterances.push_back(std::move(utt));
        break;
      }
      default:
        break;
    }
    current = TierAccumulator{};
  };

  std::string line;
  size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    if (line[0] == '\t' || line[0] == ' ') {
      // continuation of the previous tier, joined with a single space
      if (current.kind == TierAccumulator::Kind::None)
        throw Error(ErrorCode::MalformedTier,
                    "continuation line outside any tier at line " +
                        std::to_string(line_no));
      std::string_view cont = trim(line);
      if (!cont.empty()) {
        if (!current.text.empty()) current.text += ' ';
        current.text += cont;
      }
      continue;
    }

    flush();
    if (line[0] == '@') {
      size_t colon = line.find(':');
      current.kind = TierAccumulator::Kind::Header;
      if (colon == std::string::npos) {
        current.code = line.substr(1);
        current.text.clear();
      } else {
        current.code = line.substr(1, colon - 1);
        current.text = std::string(trim(line.substr(colon + 1)));
      }
    } else if (line[0] == '*' || line[0] == '%') {
      size_t colon = line.find(':');
      if (colon == std::string::npos)
        throw Error(ErrorCode::MalformedTier,
                    "tier line without ':' at line " + std::to_string(line_no) +
                        ": " + line);
      current.kind = line[0] == '*' ? TierAccumulator::Kind::Speaker
                                    : TierAccumulator::Kind::Dependent;
      current.code = line.substr(1, colon - 1);
      current.text = std::string(trim(line.substr(colon + 1)));
    } else {
      throw Error(ErrorCode::MalformedTier,
                  "unrecognized line start at line " + std::to_string(line_no) +
                      ": " + line);
    }
  }
  flush();

  if (doc.utterances.empty())
    throw Error(ErrorCode::EmptyDocument, "no utterance lines");

  for (const RawUtterance& utt : doc.utterances)
    if (!doc.has_participant(utt.speaker_code))
      doc.participants.push_back({utt.speaker_code, "", ""});

  return doc;
}

ChatDocument parse_chat_string(const std::string& text) {
  std::istringstream ss(text);
  return parse_chat(ss);
}

std::string write_chat(const ChatDocument& doc) {
  std::string out;
  for (const auto& [key, value] : doc.header_entries) {
    out += '@';
    out += key;
    if (!value.empty()) {
      out += ":\t";
      out += value;
    }
    out += '\n';
  }
  for (const RawUtterance& utt : doc.utterances) {
    out += '*';
    out += utt.speaker_code;
    out += ":\t";
    out += utt.raw_text;
    if (utt.media) {
      out += ' ';
      out += kBullet;
      out += std::to_string(utt.media->start_ms);
      out += '_';
      out += std::to_string(utt.media->end_ms);
      out += kBullet;
    }
    out += '\n';
  }
  return out;
}

CleanUtterance clean_utterance(const RawUtterance& raw,
                               const CleanOptions& options) {
  // Bracketed groups go first: error codes, "[: target]" replacements,
  // comments and retracing markers all vanish with their contents, leaving
  // the produced words in place. Angle brackets only scope those markers,
  // so the characters are dropped and the words kept.
  std::string text;
  text.reserve(raw.raw_text.size());
  int bracket_depth = 0;
  for (char c : raw.raw_text) {
    if (c == '[') {
      ++bracket_depth;
    } else if (c == ']') {
      if (bracket_depth > 0) --bracket_depth;
    } else if (bracket_depth == 0 && c != '<' && c != '>') {
      text += c;
    }
  }

  CleanUtterance clean;
  clean.media = raw.media;
  for (std::string tok : split_ws(text)) {
    if (is_pause_token(tok)) continue;
    if (tok[0] == '&') {
      if (!(options.keep_fillers && tok.rfind("&-", 0) == 0)) continue;
      tok = tok.substr(2);
    }
    if (tok == "xxx" || tok == "yyy" || tok == "www") continue;
    if (size_t at = tok.find('@'); at != std::string::npos)
      tok = tok.substr(0, at);
    std::erase(tok, '(');
    std::erase(tok, ')');
    if (!token_has_lexical(tok)) continue;
    clean.tokens.push_back(std::move(tok));
  }
  return clean;
}

SpeakerRecord assemble_record(const ChatDocument& doc,
                              const std::string& speaker_code,
                              const std::string& speaker_id,
                              const std::string& language, Cohort cohort,
                              const CleanOptions& options) {
  if (!doc.has_participant(speaker_code))
    throw Error(ErrorCode::UnknownSpeaker,
                "speaker '" + speaker_code + "' not present in document");

  SpeakerRecord record;
  record.speaker_id = speaker_id;
  record.language = language;
  record.cohort = cohort;

  std::int64_t duration = 0;
  bool any_interval = false;
  for (const RawUtterance& utt : doc.utterances) {
    if (utt.speaker_code != speaker_code) continue;
    CleanUtterance clean = clean_utterance(utt, options);
    if (clean.tokens.empty()) continue;  // fully non-lexical utterance
    if (clean.media) {
      duration += clean.media->end_ms - clean.media->start_ms;
      any_interval = true;
    }
    record.utterances.push_back(std::move(clean));
  }

  if (record.utterances.empty())
    throw Error(ErrorCode::NoUsableUtterances,
                "speaker '" + speaker_code + "' has no usable utterances");
  if (any_interval) record.total_duration_ms = duration;
  return record;
}

std::string write_clean_transcript(const SpeakerRecord& record) {
  std::string out;
  for (const CleanUtterance& utt : record.utterances) {
    out += join(utt.tokens, " ");
    out += '\n';
  }
  return out;
}

}  // namespace clad
