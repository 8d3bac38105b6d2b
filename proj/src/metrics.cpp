#include "clad/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>

#include "clad/error.hpp"
#include "clad/text.hpp"

namespace clad {

std::vector<std::string> char_tokens(const std::string& text) {
  // whitespace runs collapse to a single space before charwise scoring
  std::string collapsed;
  bool pending_space = false;
  for (const std::string& word : split_ws(text)) {
    if (pending_space) collapsed += ' ';
    collapsed += word;
    pending_space = true;
  }
  std::vector<std::string> out;
  for (char32_t cp : utf8_codepoints(collapsed)) out.push_back(utf8_encode(cp));
  return out;
}

namespace {

long pooled_edits(const std::vector<const ScoredPair*>& pairs, ErrorUnit unit,
                  long& reference_length) {
  long edits = 0;
  reference_length = 0;
  for (const ScoredPair* pair : pairs) {
    std::vector<std::string> ref, hyp;
    if (unit == ErrorUnit::Word) {
      ref = split_ws(pair->reference);
      hyp = split_ws(pair->hypothesis);
    } else {
      ref = char_tokens(pair->reference);
      hyp = char_tokens(pair->hypothesis);
    }
    if (ref.empty())
      throw Error(ErrorCode::EmptyReference,
                  "speaker " + pair->speaker_id + " has an empty reference");
    edits += edit_distance(ref, hyp);
    reference_length += static_cast<long>(ref.size());
  }
  return edits;
}

}  // namespace

int edit_distance(const std::vector<std::string>& a,
                  const std::vector<std::string>& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double wer(const std::string& reference, const std::string& hypothesis) {
  std::vector<std::string> ref = split_ws(reference);
  if (ref.empty()) throw Error(ErrorCode::EmptyReference, "empty reference");
  std::vector<std::string> hyp = split_ws(hypothesis);
  return static_cast<double>(edit_distance(ref, hyp)) /
         static_cast<double>(ref.size());
}

double cer(const std::string& reference, const std::string& hypothesis) {
  std::vector<std::string> ref = char_tokens(reference);
  if (ref.empty()) throw Error(ErrorCode::EmptyReference, "empty reference");
  std::vector<std::string> hyp = char_tokens(hypothesis);
  return static_cast<double>(edit_distance(ref, hyp)) /
         static_cast<double>(ref.size());
}

std::string normalize_text(const std::string& text,
                           const TextNormOptions& options) {
  std::string kept;
  kept.reserve(text.size());
  for (char c : text) {
    if (options.strip_punctuation &&
        std::ispunct(static_cast<unsigned char>(c)))
      continue;
    kept += c;
  }
  if (options.lowercase) kept = fold_lower(kept);
  return join(split_ws(kept), " ");
}

ErrorRateReport aggregate(const std::vector<ScoredPair>& pairs, ErrorUnit unit) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no scored pairs");

  std::vector<const ScoredPair*> all;
  std::map<Cohort, std::vector<const ScoredPair*>> by_cohort;
  std::map<std::string, std::vector<const ScoredPair*>> by_speaker;
  for (const ScoredPair& pair : pairs) {
    all.push_back(&pair);
    by_cohort[pair.cohort].push_back(&pair);
    by_speaker[pair.speaker_id].push_back(&pair);
  }

  ErrorRateReport report;
  long ref_len = 0;
  long edits = pooled_edits(all, unit, ref_len);
  report.total = static_cast<double>(edits) / static_cast<double>(ref_len);
  for (const auto& [cohort, group] : by_cohort) {
    edits = pooled_edits(group, unit, ref_len);
    report.per_cohort[cohort] =
        static_cast<double>(edits) / static_cast<double>(ref_len);
  }
  for (const auto& [speaker, group] : by_speaker) {
    edits = pooled_edits(group, unit, ref_len);
    report.per_speaker[speaker] =
        static_cast<double>(edits) / static_cast<double>(ref_len);
  }
  return report;
}

std::string format_percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rate * 100.0);
  return buf;
}

std::string write_error_rate_csv(const ErrorRateReport& word_report,
                                 const ErrorRateReport& char_report) {
  auto cohort_rate = [](const ErrorRateReport& report, Cohort cohort) {
    auto it = report.per_cohort.find(cohort);
    return it == report.per_cohort.end() ? std::string("")
                                         : format_percent(it->second);
  };
  std::string out = "subset,wer,cer\n";
  out += "total," + format_percent(word_report.total) + "," +
         format_percent(char_report.total) + "\n";
  for (Cohort cohort : {Cohort::Control, Cohort::Aphasia}) {
    std::string w = cohort_rate(word_report, cohort);
    std::string c = cohort_rate(char_report, cohort);
    if (w.empty() && c.empty()) continue;  // cohort absent from the data
    out += std::string(cohort_name(cohort)) + "," + w + "," + c + "\n";
  }
  return out;
}

}  // namespace clad
