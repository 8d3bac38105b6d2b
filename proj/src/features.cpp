#include "clad/features.hpp"

#include <algorithm>
#include <unordered_set>

#include "clad/error.hpp"
#include "clad/text.hpp"

namespace clad {

namespace {

bool is_word_upos(Upos upos) {
  return upos != Upos::PUNCT && upos != Upos::SYM && upos != Upos::X;
}

std::string_view base_deprel(std::string_view deprel) {
  size_t colon = deprel.find(':');
  return colon == std::string_view::npos ? deprel : deprel.substr(0, colon);
}

bool is_dependent_clause_rel(std::string_view deprel) {
  std::string_view base = base_deprel(deprel);
  return base == "csubj" || base == "ccomp" || base == "xcomp" ||
         base == "advcl" || base == "acl";
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t hash) {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names = {
      "Mean Length of Utterance",
      "Verb/Word Ratio",
      "Noun/Word Ratio",
      "Adjective/Word Ratio",
      "Adverb/Word Ratio",
      "Preposition/Word Ratio",
      "Propositional density",
      "Words per Minute",
      "Verbs per Utterance",
      "Noun Verb Ratio",
      "Open-closed class words",
      "Conjunction/Word Ratio",
      "Mean Clauses per utterance",
      "Mean dependent clauses",
      "Mean independent clauses",
      "Dependent to all clauses ratio",
      "Mean Tree height",
      "Max Tree depth",
      "Number of independent clauses",
      "Number of dependent clauses",
      "Lemma/Token Ratio",
      "Words in Vocabulary per Words",
      "Unique words in vocabulary per Words",
      "Number of words",
  };
  return names;
}

std::uint64_t feature_schema_fingerprint() {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::string_view name : feature_names()) {
    hash = fnv1a(name, hash);
    hash = fnv1a("\x1f", hash);
  }
  return hash;
}

std::vector<const AnnotatedToken*> word_tokens(const AnnotatedSentence& sentence) {
  std::vector<const AnnotatedToken*> out;
  for (const AnnotatedToken& tok : sentence.tokens)
    if (is_word_upos(tok.upos)) out.push_back(&tok);
  return out;
}

ClauseCounts clause_counts(const AnnotatedSentence& sentence) {
  if (word_tokens(sentence).empty())
    throw Error(ErrorCode::EmptySentence, "no word tokens");

  const int root = sentence.root_index();
  ClauseCounts counts;
  counts.independent = 1;  // the root clause
  for (const AnnotatedToken& tok : sentence.tokens) {
    if (is_dependent_clause_rel(tok.deprel)) ++counts.dependent;
    if (base_deprel(tok.deprel) == "conj" && tok.head == root &&
        (tok.upos == Upos::VERB || tok.upos == Upos::AUX))
      ++counts.independent;
  }
  return counts;
}

int tree_depth(const AnnotatedSentence& sentence) {
  const int n = static_cast<int>(sentence.tokens.size());
  int max_depth = 0;
  for (int i = 1; i <= n; ++i) {
    int depth = 1;
    int cur = sentence.tokens[i - 1].head;
    while (cur != 0) {
      ++depth;
      cur = sentence.tokens[cur - 1].head;
    }
    max_depth = std::max(max_depth, depth);
  }
  return max_depth;
}

FeatureVector extract_features(const AnnotatedRecord& annotated,
                               const Lexicon& lexicon) {
  const auto& sentences = annotated.sentences;
  const double utterance_count = static_cast<double>(sentences.size());

  long words = 0;
  long nouns = 0, verbs = 0, adjectives = 0, adverbs = 0, prepositions = 0;
  long conjunctions = 0, open_class = 0, closed_class = 0;
  long independent_total = 0, dependent_total = 0;
  long in_vocab = 0;
  double depth_sum = 0;
  int depth_max = 0;
  std::unordered_set<std::string> unique_lemmas;
  std::unordered_set<std::string> unique_in_vocab;

  for (const AnnotatedSentence& sentence : sentences) {
    auto sentence_words = word_tokens(sentence);
    words += static_cast<long>(sentence_words.size());
    for (const AnnotatedToken* tok : sentence_words) {
      switch (tok->upos) {
        case Upos::NOUN:
        case Upos::PROPN: ++nouns; break;
        case Upos::VERB: ++verbs; break;
        case Upos::ADJ: ++adjectives; break;
        case Upos::ADV: ++adverbs; break;
        case Upos::ADP: ++prepositions; break;
        case Upos::CCONJ:
        case Upos::SCONJ: ++conjunctions; break;
        default: break;
      }
      switch (tok->upos) {
        case Upos::NOUN:
        case Upos::PROPN:
        case Upos::VERB:
        case Upos::ADJ:
        case Upos::ADV:
        case Upos::INTJ: ++open_class; break;
        case Upos::ADP:
        case Upos::AUX:
        case Upos::CCONJ:
        case Upos::SCONJ:
        case Upos::DET:
        case Upos::NUM:
        case Upos::PART:
        case Upos::PRON: ++closed_class; break;
        default: break;
      }
      unique_lemmas.insert(fold_lower(tok->lemma));
      std::string form = fold_lower(tok->form);
      if (lexicon.contains(form)) {
        ++in_vocab;
        unique_in_vocab.insert(std::move(form));
      }
    }

    // All-punctuation sentences carry no clause material.
    if (!sentence_words.empty()) {
      ClauseCounts counts = clause_counts(sentence);
      independent_total += counts.independent;
      dependent_total += counts.dependent;
    }

    int depth = tree_depth(sentence);
    depth_sum += depth;
    depth_max = std::max(depth_max, depth);
  }

  if (words == 0) throw Error(ErrorCode::NoWordTokens, "record has no word tokens");
  if (!annotated.record.total_duration_ms)
    throw Error(ErrorCode::MissingDuration,
                "words-per-minute needs utterance media intervals");

  const double W = static_cast<double>(words);
  const double U = utterance_count;
  const double minutes =
      static_cast<double>(*annotated.record.total_duration_ms) / 60000.0;
  const double clauses_total =
      static_cast<double>(independent_total + dependent_total);
  // Proposition proxy: verbs, adjectives, adverbs, prepositions and both
  // conjunction classes per word.
  const double propositions = static_cast<double>(
      verbs + adjectives + adverbs + prepositions + conjunctions);

  FeatureVector v;
  v[0] = W / U;                                            // MLU
  v[1] = verbs / W;                                        // Verb/Word
  v[2] = nouns / W;                                        // Noun/Word
  v[3] = adjectives / W;                                   // Adjective/Word
  v[4] = adverbs / W;                                      // Adverb/Word
  v[5] = prepositions / W;                                 // Preposition/Word
  v[6] = propositions / W;                                 // Propositional density
  v[7] = W / minutes;                                      // Words per Minute
  v[8] = verbs / U;                                        // Verbs per Utterance
  v[9] = nouns / std::max<double>(verbs, 1.0);             // Noun Verb Ratio
  v[10] = open_class / std::max<double>(closed_class, 1.0);
  v[11] = conjunctions / W;                                // Conjunction/Word
  v[12] = clauses_total / U;                               // Mean Clauses per utt
  v[13] = dependent_total / U;                             // Mean dependent
  v[14] = independent_total / U;                           // Mean independent
  v[15] = dependent_total / std::max(clauses_total, 1.0);  // Dependent-to-all
  v[16] = depth_sum / U;                                   // Mean Tree height
  v[17] = depth_max;                                       // Max Tree depth
  v[18] = independent_total;                               // # independent
  v[19] = dependent_total;                                 // # dependent
  v[20] = unique_lemmas.size() / W;                        // Lemma/Token
  v[21] = in_vocab / W;                                    // Words in Vocabulary
  v[22] = unique_in_vocab.size() / W;                      // Unique in vocabulary
  v[23] = W;                                               // Number of words

  if (!v.allFinite())
    throw Error(ErrorCode::NonFiniteFeature, "non-finite feature value");
  return v;
}

}  // namespace clad
