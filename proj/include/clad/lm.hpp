#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace clad {

// Kneser-Ney smoothed n-gram language models: counting, training, backoff
// queries and the ARPA interchange format. All stored values are log10;
// callers needing natural log convert at their fusion point.

inline const std::string kSentenceStart = "<s>";
inline const std::string kSentenceEnd = "</s>";
inline const std::string kUnknown = "<unk>";

using TokenSeq = std::vector<std::string>;

struct TokenSeqHash {
  std::size_t operator()(const TokenSeq& seq) const {
    std::size_t hash = 0xcbf29ce484222325ULL;
    for (const std::string& tok : seq) {
      for (unsigned char c : tok) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
      }
      hash ^= 0x1f;
      hash *= 0x100000001b3ULL;
    }
    return hash;
  }
};

template <typename T>
using TokenSeqMap = std::unordered_map<TokenSeq, T, TokenSeqHash>;

struct NGramCounts {
  int order = 0;
  // by_order[k-1]: k-gram -> occurrence count
  std::vector<TokenSeqMap<std::uint64_t>> by_order;

  std::uint64_t count(const TokenSeq& gram) const {
    if (gram.empty() || gram.size() > by_order.size()) return 0;
    const auto& level = by_order[gram.size() - 1];
    auto it = level.find(gram);
    return it == level.end() ? 0 : it->second;
  }
};

struct NGramModel {
  int order = 0;
  TokenSeqMap<double> prob;     // n-gram -> log10 probability
  TokenSeqMap<double> backoff;  // (k < order)-gram -> log10 backoff weight
  std::set<std::string> vocab;  // unigrams incl. <s>, </s>, <unk>

  bool in_vocab(const std::string& word) const { return vocab.count(word) > 0; }
};

// One sentence per line, whitespace-tokenized; each line is padded with
// (order-1) leading <s> and one trailing </s>, and every k-gram for
// k = 1..order is counted over the padded sequence.
NGramCounts count_ngrams(std::istream& corpus, int order);
NGramCounts count_ngrams_string(const std::string& corpus, int order);

// Interpolated Kneser-Ney with a single absolute discount. The highest
// order keeps raw counts; lower orders use continuation counts (raw for
// <s>-initial grams, which cannot be continued); the unigram level is
// interpolated with the uniform distribution over the vocabulary including
// <unk>. Every stored context distribution sums to one.
NGramModel train_kneser_ney(const NGramCounts& counts, double discount = 0.75);

// Standard ARPA backoff query; unknown words map to <unk>; contexts longer
// than order-1 are truncated.
double log_prob(const NGramModel& model, const std::string& word,
                const TokenSeq& context);

// Sum of word log-probabilities with <s> padding and a terminal </s>.
double score_sequence(const NGramModel& model, const TokenSeq& words);

void write_arpa(const NGramModel& model, std::ostream& out);
std::string write_arpa_string(const NGramModel& model);
void write_arpa_file(const NGramModel& model, const std::string& path);

NGramModel read_arpa(std::istream& source);
NGramModel read_arpa_string(const std::string& text);
NGramModel read_arpa_file(const std::string& path);

// Optional corpus preparation for train-lm: lowercase fold and/or strip
// ASCII punctuation, both off by default.
struct CorpusPrepOptions {
  bool lowercase = false;
  bool strip_punctuation = false;
};
std::string prepare_corpus_line(const std::string& line,
                                const CorpusPrepOptions& options);

}  // namespace clad
