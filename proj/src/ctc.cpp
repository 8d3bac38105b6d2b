#include "clad/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <vector>

#include "clad/error.hpp"
#include "clad/text.hpp"

namespace clad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLn10 = std::log(10.0);

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw Error(ErrorCode::ShapeMismatch, "truncated header");
  return std::uint32_t(bytes[0]) | std::uint32_t(bytes[1]) << 8 |
         std::uint32_t(bytes[2]) << 16 | std::uint32_t(bytes[3]) << 24;
}

void write_u32(std::ostream& out, std::uint32_t value) {
  unsigned char bytes[4] = {
      static_cast<unsigned char>(value & 0xff),
      static_cast<unsigned char>((value >> 8) & 0xff),
      static_cast<unsigned char>((value >> 16) & 0xff),
      static_cast<unsigned char>((value >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

float read_f32(std::istream& in, bool& ok) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) {
    ok = false;
    return 0.0f;
  }
  std::uint32_t bits = std::uint32_t(bytes[0]) | std::uint32_t(bytes[1]) << 8 |
                       std::uint32_t(bytes[2]) << 16 |
                       std::uint32_t(bytes[3]) << 24;
  float value;
  std::memcpy(&value, &bits, 4);
  ok = true;
  return value;
}

void write_f32(std::ostream& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  write_u32(out, bits);
}

std::string map_symbols(const std::vector<int>& prefix,
                        const EmissionMatrix& em, int delimiter_index) {
  std::string text;
  for (int idx : prefix) {
    if (idx == delimiter_index)
      text += ' ';
    else
      text += em.vocab[idx];
  }
  return text;
}

int find_delimiter(const EmissionMatrix& em) {
  for (size_t i = 0; i < em.vocab.size(); ++i)
    if (em.vocab[i] == em.word_delimiter) return static_cast<int>(i);
  return -1;
}

}  // namespace

void validate_emissions(const EmissionMatrix& em) {
  if (em.blank_index != 0)
    throw Error(ErrorCode::BadVocab, "blank index must be 0");
  if (em.vocab.size() != size_t(em.frames.cols()))
    throw Error(ErrorCode::BadVocab,
                "vocab has " + std::to_string(em.vocab.size()) +
                    " symbols but matrix has " +
                    std::to_string(em.frames.cols()) + " columns");
  if (em.vocab.empty() || em.vocab[0] != kBlankSymbol)
    throw Error(ErrorCode::BadVocab, "vocab line 0 must be " + kBlankSymbol);
  std::set<std::string> seen;
  for (const std::string& symbol : em.vocab)
    if (!seen.insert(symbol).second)
      throw Error(ErrorCode::BadVocab, "duplicate vocab symbol: " + symbol);
  for (int t = 0; t < em.num_frames(); ++t) {
    double sum = em.frames.row(t).array().exp().sum();
    if (std::abs(sum - 1.0) > 1e-4)
      throw Error(ErrorCode::RowNotNormalized,
                  "row " + std::to_string(t) + " sums to " +
                      std::to_string(sum));
  }
}

EmissionMatrix load_emissions(std::istream& data, std::istream& vocab) {
  char magic[4];
  data.read(magic, 4);
  if (!data || std::memcmp(magic, "EMAT", 4) != 0)
    throw Error(ErrorCode::BadMagic, "expected magic bytes 'EMAT'");
  std::uint32_t version = read_u32(data);
  if (version != 1)
    throw Error(ErrorCode::BadMagic,
                "unsupported EMAT version " + std::to_string(version));
  std::uint32_t rows = read_u32(data);
  std::uint32_t cols = read_u32(data);

  EmissionMatrix em;
  em.frames.resize(rows, cols);
  for (std::uint32_t t = 0; t < rows; ++t)
    for (std::uint32_t v = 0; v < cols; ++v) {
      bool ok = false;
      float value = read_f32(data, ok);
      if (!ok)
        throw Error(ErrorCode::ShapeMismatch,
                    "payload ended before " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " floats were read");
      em.frames(t, v) = value;
    }
  char extra;
  if (data.read(&extra, 1))
    throw Error(ErrorCode::ShapeMismatch, "payload longer than T*V floats");

  std::string line;
  while (std::getline(vocab, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && vocab.eof()) break;
    if (line.empty())
      throw Error(ErrorCode::BadVocab, "empty vocab line");
    em.vocab.push_back(line);
  }
  validate_emissions(em);
  return em;
}

EmissionMatrix load_emissions_file(const std::string& emat_path,
                                   const std::string& vocab_path) {
  std::ifstream data(emat_path, std::ios::binary);
  if (!data) throw Error(ErrorCode::IoError, "cannot open " + emat_path);
  std::ifstream vocab(vocab_path);
  if (!vocab) throw Error(ErrorCode::IoError, "cannot open " + vocab_path);
  return load_emissions(data, vocab);
}

void write_emissions(const EmissionMatrix& em, std::ostream& data,
                     std::ostream& vocab) {
  data.write("EMAT", 4);
  write_u32(data, 1);
  write_u32(data, static_cast<std::uint32_t>(em.frames.rows()));
  write_u32(data, static_cast<std::uint32_t>(em.frames.cols()));
  for (int t = 0; t < em.frames.rows(); ++t)
    for (int v = 0; v < em.frames.cols(); ++v)
      write_f32(data, static_cast<float>(em.frames(t, v)));
  for (const std::string& symbol : em.vocab) vocab << symbol << '\n';
}

void write_emissions_file(const EmissionMatrix& em,
                          const std::string& emat_path,
                          const std::string& vocab_path) {
  std::ofstream data(emat_path, std::ios::binary);
  if (!data) throw Error(ErrorCode::IoError, "cannot write " + emat_path);
  std::ofstream vocab(vocab_path);
  if (!vocab) throw Error(ErrorCode::IoError, "cannot write " + vocab_path);
  write_emissions(em, data, vocab);
}

DecodeResult greedy_decode(const EmissionMatrix& em) {
  const int delimiter_index = find_delimiter(em);
  DecodeResult result;
  std::vector<int> collapsed;
  int previous = em.blank_index;
  for (int t = 0; t < em.num_frames(); ++t) {
    int best = 0;
    em.frames.row(t).maxCoeff(&best);
    result.acoustic_score += em.frames(t, best);
    if (best != em.blank_index && best != previous) collapsed.push_back(best);
    previous = best;
  }
  result.transcript = map_symbols(collapsed, em, delimiter_index);
  result.combined_score = result.acoustic_score;
  return result;
}

namespace {

struct PrefixState {
  double log_blank = kNegInf;     // mass of alignments ending in blank
  double log_nonblank = kNegInf;  // mass of alignments ending in the symbol
  double lm_bonus = 0.0;          // fused LM score of completed words
  std::vector<std::string> words; // completed words (LM context)
  std::string pending;            // partial word after the last delimiter

  double acoustic() const { return log_add(log_blank, log_nonblank); }
};

struct VecHash {
  std::size_t operator()(const std::vector<int>& prefix) const {
    std::size_t hash = 0xcbf29ce484222325ULL;
    for (int value : prefix) {
      hash ^= static_cast<std::size_t>(value) + 0x9e3779b9;
      hash *= 0x100000001b3ULL;
    }
    return hash;
  }
};

using BeamMap = std::unordered_map<std::vector<int>, PrefixState, VecHash>;

double word_bonus(const NGramModel* lm, const DecodeParams& params,
                  const std::vector<std::string>& context,
                  const std::string& word) {
  TokenSeq ctx{kSentenceStart};
  ctx.insert(ctx.end(), context.begin(), context.end());
  return params.lm_alpha * kLn10 * log_prob(*lm, word, ctx) + params.lm_beta;
}

}  // namespace

DecodeResult beam_decode(const EmissionMatrix& em, const DecodeParams& params,
                         const NGramModel* lm) {
  if (params.beam_width < 1)
    throw Error(ErrorCode::ConfigError, "beam_width must be >= 1");
  const int delimiter_index = find_delimiter(em);
  const int V = em.vocab_size();

  BeamMap beams;
  beams[{}].log_blank = 0.0;

  std::vector<std::pair<std::vector<int>, const PrefixState*>> ranked;
  for (int t = 0; t < em.num_frames(); ++t) {
    const double frame_max = em.frames.row(t).maxCoeff();
    BeamMap next;
    for (const auto& [prefix, state] : beams) {
      const double total = state.acoustic();
      for (int v = 0; v < V; ++v) {
        const double lp = em.frames(t, v);
        if (lp - frame_max < params.prune_log_threshold) continue;

        if (v == em.blank_index) {
          PrefixState& target = next[prefix];
          if (target.log_blank == kNegInf && target.log_nonblank == kNegInf) {
            target.lm_bonus = state.lm_bonus;
            target.words = state.words;
            target.pending = state.pending;
          }
          target.log_blank = log_add(target.log_blank, total + lp);
          continue;
        }

        if (!prefix.empty() && v == prefix.back()) {
          // repeated symbol without a separating blank stays the same prefix
          PrefixState& same = next[prefix];
          if (same.log_blank == kNegInf && same.log_nonblank == kNegInf) {
            same.lm_bonus = state.lm_bonus;
            same.words = state.words;
            same.pending = state.pending;
          }
          same.log_nonblank =
              log_add(same.log_nonblank, state.log_nonblank + lp);
        }

        std::vector<int> extended = prefix;
        extended.push_back(v);
        // a blank (or a different symbol) must precede a genuine extension
        const double mass = (!prefix.empty() && v == prefix.back())
                                ? state.log_blank
                                : total;
        if (mass == kNegInf) continue;
        PrefixState& target = next[extended];
        if (target.log_blank == kNegInf && target.log_nonblank == kNegInf) {
          target.lm_bonus = state.lm_bonus;
          target.words = state.words;
          target.pending = state.pending;
          if (v == delimiter_index) {
            if (lm != nullptr && !target.pending.empty())
              target.lm_bonus +=
                  word_bonus(lm, params, target.words, target.pending);
            if (!target.pending.empty()) {
              target.words.push_back(target.pending);
              target.pending.clear();
            }
          } else {
            target.pending += em.vocab[v];
          }
        }
        target.log_nonblank = log_add(target.log_nonblank, mass + lp);
      }
    }

    // keep the top beam_width prefixes by fused score, ties lexicographic
    ranked.clear();
    ranked.reserve(next.size());
    for (const auto& [prefix, state] : next)
      ranked.emplace_back(prefix, &state);
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      double sa = a.second->acoustic() + a.second->lm_bonus;
      double sb = b.second->acoustic() + b.second->lm_bonus;
      if (sa != sb) return sa > sb;
      return map_symbols(a.first, em, delimiter_index) <
             map_symbols(b.first, em, delimiter_index);
    });
    BeamMap pruned;
    const size_t keep = std::min(ranked.size(), size_t(params.beam_width));
    for (size_t i = 0; i < keep; ++i)
      pruned.emplace(ranked[i].first, *ranked[i].second);
    beams = std::move(pruned);
  }

  // final scores add the LM term for a trailing partial word
  const std::vector<int>* best_prefix = nullptr;
  const PrefixState* best_state = nullptr;
  double best_score = kNegInf;
  double best_final_bonus = 0.0;
  std::string best_text;
  for (const auto& [prefix, state] : beams) {
    double final_bonus = state.lm_bonus;
    if (lm != nullptr && !state.pending.empty())
      final_bonus += word_bonus(lm, params, state.words, state.pending);
    const double score = state.acoustic() + final_bonus;
    std::string text = map_symbols(prefix, em, delimiter_index);
    if (best_prefix == nullptr || score > best_score ||
        (score == best_score && text < best_text)) {
      best_prefix = &prefix;
      best_state = &state;
      best_score = score;
      best_final_bonus = final_bonus;
      best_text = std::move(text);
    }
  }

  DecodeResult result;
  if (best_prefix == nullptr) return result;  // zero frames decode to ""
  result.transcript = best_text;
  result.acoustic_score = best_state->acoustic();
  result.combined_score = result.acoustic_score + best_final_bonus;
  return result;
}

}  // namespace clad
