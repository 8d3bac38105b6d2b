#pragma once

#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

#include "clad/chat.hpp"

namespace clad {

// Ingestion side of morphosyntactic annotation: CoNLL-U files produced by
// external taggers, plus plain word-list lexicons.

enum class Upos {
  ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM,
  PART, PRON, PROPN, PUNCT, SCONJ, SYM, VERB, X,
};

const char* upos_name(Upos upos);
// Throws MalformedRow for anything outside the UD tag set; "_" maps to X.
Upos upos_from_string(const std::string& tag);

struct AnnotatedToken {
  std::string form;
  std::string lemma;
  Upos upos = Upos::X;
  int head = 0;  // 0 = root, else 1-based index into the sentence
  std::string deprel;

  bool operator==(const AnnotatedToken&) const = default;
};

struct AnnotatedSentence {
  std::vector<AnnotatedToken> tokens;  // non-empty

  // 1-based index of the root token.
  int root_index() const;

  bool operator==(const AnnotatedSentence&) const = default;
};

struct AnnotatedRecord {
  SpeakerRecord record;
  std::vector<AnnotatedSentence> sentences;  // one per kept utterance
};

struct Lexicon {
  std::unordered_set<std::string> entries;  // lowercase forms
  std::string language;

  bool contains(const std::string& lowercased_form) const {
    return entries.count(lowercased_form) > 0;
  }
};

// 10-column CoNLL-U. Multiword-token ranges ("1-2") and empty nodes ("1.1")
// are skipped; ID/FORM/LEMMA/UPOS/HEAD/DEPREL populated, others ignored.
// Head links are validated to form a tree per sentence.
std::vector<AnnotatedSentence> parse_conllu(std::istream& source);
std::vector<AnnotatedSentence> parse_conllu_string(const std::string& text);
std::vector<AnnotatedSentence> load_conllu_file(const std::string& path);

std::string write_conllu(const std::vector<AnnotatedSentence>& sentences);

// Positional pairing; a count mismatch is an error, never a truncation.
AnnotatedRecord attach_annotations(SpeakerRecord record,
                                   std::vector<AnnotatedSentence> sentences);

Lexicon load_lexicon(std::istream& source, const std::string& language);
Lexicon load_lexicon_file(const std::string& path, const std::string& language);

}  // namespace clad
