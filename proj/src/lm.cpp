#include "clad/lm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "clad/error.hpp"
#include "clad/text.hpp"

namespace clad {

namespace {

constexpr double kContextOnlyLogProb = -99.0;  // entries never predicted

TokenSeq drop_front(const TokenSeq& seq) {
  return TokenSeq(seq.begin() + 1, seq.end());
}

TokenSeq context_of(const TokenSeq& gram) {
  return TokenSeq(gram.begin(), gram.end() - 1);
}

// Pseudo-counts for one level of the interpolated-KN recursion: raw counts
// at the highest order and for <s>-initial grams (which have no left
// extensions), continuation counts elsewhere.
TokenSeqMap<std::uint64_t> pseudo_counts(const NGramCounts& counts, int k) {
  const auto& raw = counts.by_order[k - 1];
  if (k == counts.order) return raw;

  TokenSeqMap<std::uint64_t> continuation;
  continuation.reserve(raw.size());
  for (const auto& [gram, c] : counts.by_order[k]) {
    (void)c;
    continuation[drop_front(gram)] += 1;
  }
  for (const auto& [gram, c] : raw)
    if (gram.front() == kSentenceStart) continuation[gram] = c;
  return continuation;
}

}  // namespace

NGramCounts count_ngrams(std::istream& corpus, int order) {
  if (order < 1) throw Error(ErrorCode::ConfigError, "order must be >= 1");
  NGramCounts counts;
  counts.order = order;
  counts.by_order.resize(order);

  std::string line;
  bool any = false;
  while (std::getline(corpus, line)) {
    std::vector<std::string> tokens = split_ws(line);
    if (tokens.empty()) continue;
    any = true;

    TokenSeq padded;
    padded.reserve(tokens.size() + order);
    for (int i = 0; i < order - 1; ++i) padded.push_back(kSentenceStart);
    for (std::string& tok : tokens) padded.push_back(std::move(tok));
    padded.push_back(kSentenceEnd);

    const int len = static_cast<int>(padded.size());
    for (int k = 1; k <= order; ++k)
      for (int i = 0; i + k <= len; ++i)
        counts.by_order[k - 1][TokenSeq(padded.begin() + i,
                                        padded.begin() + i + k)] += 1;
  }
  if (!any) throw Error(ErrorCode::EmptyCorpus, "no sentences in corpus");
  return counts;
}

NGramCounts count_ngrams_string(const std::string& corpus, int order) {
  std::istringstream ss(corpus);
  return count_ngrams(ss, order);
}

NGramModel train_kneser_ney(const NGramCounts& counts, double discount) {
  if (counts.order < 1 || counts.by_order.size() != size_t(counts.order))
    throw Error(ErrorCode::DegenerateCorpus, "invalid counts object");
  if (counts.by_order[counts.order - 1].empty())
    throw Error(ErrorCode::DegenerateCorpus,
                "no n-gram of order " + std::to_string(counts.order));
  if (!(discount > 0.0 && discount < 1.0))
    throw Error(ErrorCode::ConfigError, "discount must lie in (0,1)");

  const double d = discount;
  NGramModel model;
  model.order = counts.order;

  // Event space: observed types plus <unk>, never <s>.
  std::set<std::string> omega;
  for (const auto& [gram, c] : counts.by_order[0]) {
    (void)c;
    if (gram[0] != kSentenceStart) omega.insert(gram[0]);
  }
  omega.insert(kSentenceEnd);
  omega.insert(kUnknown);
  model.vocab = omega;
  model.vocab.insert(kSentenceStart);

  // Unigram level: continuation counts interpolated with the uniform
  // distribution over the event space.
  TokenSeqMap<std::uint64_t> unigram_counts = pseudo_counts(counts, 1);
  double c1_total = 0;
  long c1_types = 0;
  for (const std::string& w : omega) {
    auto it = unigram_counts.find({w});
    if (it != unigram_counts.end() && it->second > 0) {
      c1_total += static_cast<double>(it->second);
      ++c1_types;
    }
  }
  if (c1_total <= 0)
    throw Error(ErrorCode::DegenerateCorpus, "no unigram mass");
  const double gamma1 = d * static_cast<double>(c1_types) / c1_total;
  const double uniform = 1.0 / static_cast<double>(omega.size());
  for (const std::string& w : omega) {
    auto it = unigram_counts.find({w});
    double c = it == unigram_counts.end() ? 0.0
                                          : static_cast<double>(it->second);
    double p = std::max(c - d, 0.0) / c1_total + gamma1 * uniform;
    model.prob[{w}] = std::log10(p);
  }
  model.prob[{kSentenceStart}] = kContextOnlyLogProb;

  // Higher levels, bottom-up so the interpolation can query the levels
  // already in place through the normal backoff rule.
  for (int k = 2; k <= counts.order; ++k) {
    TokenSeqMap<std::uint64_t> level = pseudo_counts(counts, k);

    struct ContextStats {
      double total = 0;
      long types = 0;
    };
    TokenSeqMap<ContextStats> stats;
    for (const auto& [gram, c] : level) {
      if (c == 0 || gram.back() == kSentenceStart) continue;
      ContextStats& s = stats[context_of(gram)];
      s.total += static_cast<double>(c);
      s.types += 1;
    }

    for (const auto& [gram, c] : level) {
      if (c == 0) continue;
      if (gram.back() == kSentenceStart) {
        model.prob[gram] = kContextOnlyLogProb;
        continue;
      }
      TokenSeq ctx = context_of(gram);
      const ContextStats& s = stats.at(ctx);
      const double gamma = d * static_cast<double>(s.types) / s.total;
      double p = (static_cast<double>(c) - d) / s.total +
                 gamma * std::pow(10.0, log_prob(model, gram.back(),
                                                 drop_front(ctx)));
      model.prob[gram] = std::log10(p);
    }
    for (const auto& [ctx, s] : stats) {
      const double gamma = d * static_cast<double>(s.types) / s.total;
      model.backoff[ctx] = std::log10(gamma);
    }
  }
  return model;
}

double log_prob(const NGramModel& model, const std::string& word,
                const TokenSeq& context) {
  TokenSeq mapped;
  size_t start = context.size() > size_t(model.order - 1)
                     ? context.size() - size_t(model.order - 1)
                     : 0;
  for (size_t i = start; i < context.size(); ++i)
    mapped.push_back(model.in_vocab(context[i]) ? context[i] : kUnknown);
  const std::string& w = model.in_vocab(word) ? word : kUnknown;

  double accumulated = 0.0;
  while (true) {
    TokenSeq gram = mapped;
    gram.push_back(w);
    auto it = model.prob.find(gram);
    if (it != model.prob.end()) return accumulated + it->second;
    if (mapped.empty()) {
      // unigrams cover the whole event space; only an empty model misses
      auto uni = model.prob.find({kUnknown});
      return uni == model.prob.end() ? kContextOnlyLogProb
                                     : accumulated + uni->second;
    }
    auto bow = model.backoff.find(mapped);
    if (bow != model.backoff.end()) accumulated += bow->second;
    mapped.erase(mapped.begin());
  }
}

double score_sequence(const NGramModel& model, const TokenSeq& words) {
  if (words.empty())
    throw Error(ErrorCode::EmptyInput, "cannot score an empty sequence");
  TokenSeq context{kSentenceStart};
  double total = 0;
  for (const std::string& word : words) {
    total += log_prob(model, word, context);
    context.push_back(word);
  }
  total += log_prob(model, kSentenceEnd, context);
  return total;
}

void write_arpa(const NGramModel& model, std::ostream& out) {
  std::vector<std::map<TokenSeq, std::pair<double, const double*>>> levels(
      model.order);
  for (const auto& [gram, p] : model.prob) {
    auto bow = model.backoff.find(gram);
    levels[gram.size() - 1][gram] = {
        p, bow == model.backoff.end() ? nullptr : &bow->second};
  }

  char buf[64];
  out << "\\data\\\n";
  for (int k = 1; k <= model.order; ++k)
    out << "ngram " << k << "=" << levels[k - 1].size() << "\n";
  for (int k = 1; k <= model.order; ++k) {
    out << "\n\\" << k << "-grams:\n";
    for (const auto& [gram, entry] : levels[k - 1]) {
      std::snprintf(buf, sizeof buf, "%.7f", entry.first);
      out << buf << '\t' << join(gram, " ");
      if (entry.second != nullptr) {
        std::snprintf(buf, sizeof buf, "%.7f", *entry.second);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

std::string write_arpa_string(const NGramModel& model) {
  std::ostringstream ss;
  write_arpa(model, ss);
  return ss.str();
}

void write_arpa_file(const NGramModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_arpa(model, out);
}

NGramModel read_arpa(std::istream& source) {
  std::string line;
  auto next_line = [&](bool required) -> bool {
    while (std::getline(source, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string_view t = trim(line);
      if (!t.empty()) {
        line = std::string(t);
        return true;
      }
    }
    if (required) throw Error(ErrorCode::MalformedArpa, "unexpected end of file");
    return false;
  };

  // skip the preamble before the data section
  while (true) {
    if (!next_line(false))
      throw Error(ErrorCode::MalformedArpa, "missing \\data\\ section");
    if (line == "\\data\\") break;
  }

  std::vector<size_t> declared;
  while (true) {
    next_line(true);
    if (line.rfind("ngram ", 0) != 0) break;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::MalformedArpa, "bad count line: " + line);
    int k = std::stoi(line.substr(6, eq - 6));
    size_t n = std::stoul(line.substr(eq + 1));
    if (k != static_cast<int>(declared.size()) + 1)
      throw Error(ErrorCode::MalformedArpa, "non-sequential ngram orders");
    declared.push_back(n);
  }
  if (declared.empty())
    throw Error(ErrorCode::MalformedArpa, "no ngram count declarations");

  NGramModel model;
  model.order = static_cast<int>(declared.size());

  for (int k = 1; k <= model.order; ++k) {
    std::string expected = "\\" + std::to_string(k) + "-grams:";
    if (line != expected)
      throw Error(ErrorCode::MalformedArpa,
                  "expected " + expected + ", got '" + line + "'");
    size_t read_count = 0;
    while (true) {
      next_line(true);
      if (!line.empty() && line[0] == '\\') break;
      std::vector<std::string> parts = split_ws(line);
      // logprob, k tokens, optional backoff
      if (parts.size() != size_t(k) + 1 && parts.size() != size_t(k) + 2)
        throw Error(ErrorCode::MalformedArpa, "bad entry: " + line);
      double p;
      try {
        p = std::stod(parts[0]);
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedArpa, "bad probability: " + parts[0]);
      }
      TokenSeq gram(parts.begin() + 1, parts.begin() + 1 + k);
      model.prob[gram] = p;
      if (parts.size() == size_t(k) + 2) {
        try {
          model.backoff[gram] = std::stod(parts.back());
        } catch (const std::exception&) {
          throw Error(ErrorCode::MalformedArpa, "bad backoff: " + parts.back());
        }
      }
      ++read_count;
    }
    if (read_count != declared[k - 1])
      throw Error(ErrorCode::MalformedArpa,
                  "\\" + std::to_string(k) + "-grams: declared " +
                      std::to_string(declared[k - 1]) + " entries, found " +
                      std::to_string(read_count));
  }
  if (line != "\\end\\")
    throw Error(ErrorCode::MalformedArpa, "missing \\end\\");

  for (const auto& [gram, p] : model.prob) {
    (void)p;
    if (gram.size() == 1) model.vocab.insert(gram[0]);
  }
  return model;
}

NGramModel read_arpa_string(const std::string& text) {
  std::istringstream ss(text);
  return read_arpa(ss);
}

NGramModel read_arpa_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_arpa(in);
}

std::string prepare_corpus_line(const std::string& line,
                                const CorpusPrepOptions& options) {
  std::string kept;
  kept.reserve(line.size());
  for (char c : line) {
    if (options.strip_punctuation &&
        std::ispunct(static_cast<unsigned char>(c)))
      continue;
    kept += c;
  }
  if (options.lowercase) kept = fold_lower(kept);
  return join(split_ws(kept), " ");
}

}  // namespace clad
