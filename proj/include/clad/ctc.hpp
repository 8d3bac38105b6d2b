#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "clad/lm.hpp"

namespace clad {

// CTC decoding over precomputed emission matrices: greedy collapse and
// prefix beam search with optional shallow n-gram LM fusion. All scores are
// natural log; the LM's log10 values are converted at the fusion point.

inline const std::string kBlankSymbol = "<blank>";
inline const std::string kWordDelimiter = "|";

struct EmissionMatrix {
  Eigen::MatrixXd frames;          // T x V natural-log probabilities
  std::vector<std::string> vocab;  // V symbols; vocab[0] == "<blank>"
  int blank_index = 0;
  std::string word_delimiter = kWordDelimiter;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int vocab_size() const { return static_cast<int>(frames.cols()); }
};

struct DecodeParams {
  int beam_width = 10;
  double lm_alpha = 0.5;
  double lm_beta = 1.5;
  double prune_log_threshold = -10.0;  // relative to each frame's max
};

struct DecodeResult {
  std::string transcript;
  double combined_score = 0.0;  // natural log, LM fusion included
  double acoustic_score = 0.0;  // natural log, emissions only
};

// Checks the EmissionMatrix invariants: every row sums to one within 1e-4
// after exponentiation (RowNotNormalized), vocab symbols unique and
// vocab[0] == "<blank>" (BadVocab), vocab size matches V (BadVocab).
void validate_emissions(const EmissionMatrix& em);

// EMAT1 container: magic "EMAT", u32 LE version=1, u32 T, u32 V, then
// T*V float32 LE natural-log probabilities in row-major order. The vocab
// travels in a sidecar UTF-8 text file, one symbol per line.
EmissionMatrix load_emissions(std::istream& data, std::istream& vocab);
EmissionMatrix load_emissions_file(const std::string& emat_path,
                                   const std::string& vocab_path);

void write_emissions(const EmissionMatrix& em, std::ostream& data,
                     std::ostream& vocab);
void write_emissions_file(const EmissionMatrix& em,
                          const std::string& emat_path,
                          const std::string& vocab_path);

// Per-frame argmax, collapse repeats, drop blanks, map the word delimiter
// to a space; acoustic_score is the sum of the chosen log-probabilities.
DecodeResult greedy_decode(const EmissionMatrix& em);

// Prefix beam search tracking per-prefix blank/non-blank path mass (summed
// over all CTC alignments mapping to that prefix). When an LM is supplied,
// each completed word w after context c adds
//   lm_alpha * ln(10) * log10 P(w | c)  +  lm_beta
// to the prefix score; a partial trailing word is scored once at the end.
// Equal-score prefixes order lexicographically by transcript.
DecodeResult beam_decode(const EmissionMatrix& em, const DecodeParams& params,
                         const NGramModel* lm = nullptr);

}  // namespace clad
