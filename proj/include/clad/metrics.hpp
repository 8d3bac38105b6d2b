#pragma once

#include <map>
#include <string>
#include <vector>

#include "clad/chat.hpp"

namespace clad {

// Word- and character-error-rate scoring with pooled (corpus-level)
// aggregation per cohort.

struct ErrorRateReport {
  double total = 0;
  std::map<Cohort, double> per_cohort;
  std::map<std::string, double> per_speaker;
};

struct ScoredPair {
  std::string speaker_id;
  Cohort cohort = Cohort::Control;
  std::string reference;
  std::string hypothesis;
};

enum class ErrorUnit { Word, Char };

struct TextNormOptions {
  bool lowercase = true;
  bool strip_punctuation = true;  // ASCII punctuation characters removed
};

// Levenshtein distance with unit insert/delete/substitute costs.
// Sequences are whatever the caller tokenized into.
int edit_distance(const std::vector<std::string>& a,
                  const std::vector<std::string>& b);

// Character-unit tokenization: whitespace runs collapse to single spaces,
// then one token per UTF-8 codepoint. This is exactly what cer() scores.
std::vector<std::string> char_tokens(const std::string& text);

// Whitespace-token distance over reference token count.
double wer(const std::string& reference, const std::string& hypothesis);

// Codepoint distance with whitespace runs normalized to single spaces,
// over reference codepoint count.
double cer(const std::string& reference, const std::string& hypothesis);

std::string normalize_text(const std::string& text,
                           const TextNormOptions& options);

// Pooled rates: sum of edits over sum of reference lengths, overall and per
// cohort; per-speaker rates pool across that speaker's pairs.
ErrorRateReport aggregate(const std::vector<ScoredPair>& pairs, ErrorUnit unit);

// rows = {total, control, aphasia}, columns = {wer, cer}; percentages with
// 2 decimals ("47.14").
std::string write_error_rate_csv(const ErrorRateReport& word_report,
                                 const ErrorRateReport& char_report);

std::string format_percent(double rate);

}  // namespace clad
