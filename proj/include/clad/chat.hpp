#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace clad {

// CHAT (.cha) transcript handling: parsing the tier structure, stripping
// annotation codes down to plain word tokens, and assembling per-speaker
// records with media timing.

struct MediaInterval {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  bool operator==(const MediaInterval&) const = default;
};

struct ParticipantInfo {
  std::string code;  // e.g. PAR, INV
  std::string name;
  std::string role;

  bool operator==(const ParticipantInfo&) const = default;
};

struct RawUtterance {
  std::string speaker_code;
  std::string raw_text;  // verbatim main-tier content, media bullet removed
  std::optional<MediaInterval> media;

  bool operator==(const RawUtterance&) const = default;
};

struct ChatDocument {
  std::vector<std::pair<std::string, std::string>> header_entries;  // file order
  std::vector<ParticipantInfo> participants;
  std::vector<RawUtterance> utterances;

  bool has_participant(const std::string& code) const;

  bool operator==(const ChatDocument&) const = default;
};

struct CleanUtterance {
  std::vector<std::string> tokens;
  std::optional<MediaInterval> media;

  bool operator==(const CleanUtterance&) const = default;
};

enum class Cohort { Control, Aphasia };

const char* cohort_name(Cohort cohort);  // "control" / "aphasia"
Cohort cohort_from_name(const std::string& name);

struct SpeakerRecord {
  std::string speaker_id;
  std::string language;  // ISO code
  Cohort cohort = Cohort::Control;
  std::vector<CleanUtterance> utterances;  // non-empty token lists only
  std::optional<std::int64_t> total_duration_ms;
};

struct CleanOptions {
  bool keep_fillers = false;  // retain "&-" filler tokens ("&-uh" -> "uh")
};

// Parses a CHAT stream. "@" lines are headers, "*" speaker tiers, "%"
// dependent tiers (skipped); tab-indented lines continue the previous tier.
// Media bullets (0x15-delimited "start_end") move into media intervals.
// Participants come from the @Participants header; speaker codes seen only
// on tiers are added with empty name/role so the document invariant holds.
ChatDocument parse_chat(std::istream& source);
ChatDocument parse_chat_string(const std::string& text);

// Canonical single-line-per-tier serialization; parse_chat of the output
// reproduces the document exactly.
std::string write_chat(const ChatDocument& doc);

CleanUtterance clean_utterance(const RawUtterance& raw,
                               const CleanOptions& options = {});

SpeakerRecord assemble_record(const ChatDocument& doc,
                              const std::string& speaker_code,
                              const std::string& speaker_id,
                              const std::string& language, Cohort cohort,
                              const CleanOptions& options = {});

// One utterance per line, tokens space-separated.
std::string write_clean_transcript(const SpeakerRecord& record);

}  // namespace clad
