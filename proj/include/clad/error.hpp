#pragma once

#include <stdexcept>
#include <string>

namespace clad {

enum class ErrorCode {
  // chat
  MalformedTier,
  EmptyDocument,
  UnknownSpeaker,
  NoUsableUtterances,
  // conllu / lexicon
  MalformedRow,
  CyclicTree,
  MultipleRoots,
  LengthMismatch,
  EmptyLexicon,
  // features
  MissingDuration,
  NoWordTokens,
  EmptySentence,
  // lm
  EmptyCorpus,
  DegenerateCorpus,
  MalformedArpa,
  // ctc
  BadMagic,
  ShapeMismatch,
  RowNotNormalized,
  BadVocab,
  // metrics
  EmptyReference,
  EmptyInput,
  // ml
  TooFewRows,
  SingleClass,
  NonFiniteFeature,
  SchemaMismatch,
  TooFewSpeakers,
  // cli / io
  ConfigError,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace clad
