#include "clad/error.hpp"

namespace clad {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedTier: return "MalformedTier";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::UnknownSpeaker: return "UnknownSpeaker";
    case ErrorCode::NoUsableUtterances: return "NoUsableUtterances";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::CyclicTree: return "CyclicTree";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyLexicon: return "EmptyLexicon";
    case ErrorCode::MissingDuration: return "MissingDuration";
    case ErrorCode::NoWordTokens: return "NoWordTokens";
    case ErrorCode::EmptySentence: return "EmptySentence";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DegenerateCorpus: return "DegenerateCorpus";
    case ErrorCode::MalformedArpa: return "MalformedArpa";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::RowNotNormalized: return "RowNotNormalized";
    case ErrorCode::BadVocab: return "BadVocab";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::TooFewSpeakers: return "TooFewSpeakers";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace clad
