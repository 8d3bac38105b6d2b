#pragma once

#include <Eigen/Dense>
#include <array>
#include <string_view>
#include <vector>

#include "clad/conllu.hpp"

namespace clad {

// The 24 language-agnostic linguistic features, computed per speaker across
// 6 language-ability categories. The schema order is fixed; every consumer
// (CSV export, datasets, model fingerprints) relies on it.

inline constexpr int kFeatureCount = 24;

using FeatureVector = Eigen::Matrix<double, kFeatureCount, 1>;

const std::array<std::string_view, kFeatureCount>& feature_names();

// Stable fingerprint of the schema; trained models refuse vectors whose
// fingerprint differs.
std::uint64_t feature_schema_fingerprint();

struct ClauseCounts {
  int independent = 0;
  int dependent = 0;

  bool operator==(const ClauseCounts&) const = default;
};

// Tokens that count as words for every ratio: upos not in {PUNCT, SYM, X}.
std::vector<const AnnotatedToken*> word_tokens(const AnnotatedSentence& sentence);

// dependent = tokens whose base deprel is csubj/ccomp/xcomp/advcl/acl
// (subtypes like acl:relcl included); independent = 1 (the root clause)
// + verbal conj tokens hanging off the root.
ClauseCounts clause_counts(const AnnotatedSentence& sentence);

// Depth of the deepest token; the root token has depth 1.
int tree_depth(const AnnotatedSentence& sentence);

FeatureVector extract_features(const AnnotatedRecord& annotated,
                               const Lexicon& lexicon);

}  // namespace clad
