#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "clad/chat.hpp"
#include "clad/ctc.hpp"
#include "clad/metrics.hpp"
#include "clad/ml.hpp"

namespace clad {

// Manifest + config loading, validation, and the staged pipeline:
// parse -> decode -> features -> evaluate -> report. Every stage persists
// its outputs under the run directory; the report is always regenerated
// from those persisted intermediates, so each published number can be
// recomputed from the bundle alone.

enum class SpeakerRole { TrainSource, EvalTarget };

const char* speaker_role_name(SpeakerRole role);
SpeakerRole speaker_role_from_name(const std::string& name);

enum class TranscriptSource { Oracle, Asr, AsrWithLm };

const char* transcript_source_name(TranscriptSource source);
TranscriptSource transcript_source_from_name(const std::string& name);

struct ManifestEntry {
  std::string speaker_id;
  std::string language;
  Cohort cohort = Cohort::Control;
  SpeakerRole role = SpeakerRole::TrainSource;
  std::string participant = "PAR";  // speaker tier code inside the CHAT file
  std::string chat_path;
  std::string conllu_path;
  std::string emissions_dir;             // optional: per-utterance EMAT files
  std::string conllu_asr_path;           // optional: annotations of the
  std::string conllu_asr_with_lm_path;   //   decoded transcripts
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string base_dir;  // paths resolve relative to the manifest file
};

Manifest load_manifest(const std::string& path);

struct EvaluationPlan {
  bool monolingual = true;
  bool zero_shot = true;
  // (source language, target language)
  std::vector<std::pair<std::string, std::string>> pairs;
  // transcript regimes for the monolingual (LOSO) table columns
  std::vector<TranscriptSource> monolingual_sources;
  // (train-side regime, eval-side regime) rows of the transfer table
  std::vector<std::pair<TranscriptSource, TranscriptSource>>
      transfer_pairings;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  bool keep_fillers = false;
  bool wer_table = true;
  std::vector<std::string> languages;
  std::map<std::string, std::string> lexicon_paths;  // language -> path
  int lm_order = 3;
  double lm_discount = 0.75;
  std::map<std::string, std::string> arpa_paths;  // language -> path
  DecodeParams decode;
  std::string classifier_kind = "gradient_boosting";
  std::vector<std::pair<std::string, std::string>> classifier_hyperparameters;
  std::vector<std::string> classifiers_compared;
  // default pairing when the evaluation plan does not enumerate any
  std::pair<TranscriptSource, TranscriptSource> transcript_source = {
      TranscriptSource::Oracle, TranscriptSource::Oracle};
  EvaluationPlan evaluation;
  TextNormOptions metrics_norm;
  std::string base_dir;  // paths resolve relative to the config file
};

PipelineConfig load_config(const std::string& path);

// Returns every problem found (missing files, duplicate speakers, regimes
// requested without the inputs they need, ...), not only the first.
std::vector<std::string> validate(const PipelineConfig& config,
                                  const Manifest& manifest);

enum class Stage { Parse, Decode, Features, Evaluate };

struct RunOptions {
  std::string out_dir;
  Stage up_to = Stage::Evaluate;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  bool quiet = false;
};

// Runs stages in order up to `up_to`, persisting intermediates under
// out_dir and (after Evaluate) regenerating the report tables. Throws on
// validation problems; stage errors carry speaker context and leave a
// FAILED marker file behind.
void run_pipeline(const PipelineConfig& config, const Manifest& manifest,
                  const RunOptions& options);

// Rebuilds report/ tables purely from the persisted intermediates in an
// existing run directory (accuracy from prediction CSVs, error rates from
// per-speaker edit counts).
void regenerate_report(const std::string& out_dir);

// train-lm entry point shared by the CLI: reads a plain-text corpus, trains
// an interpolated Kneser-Ney model, writes ARPA.
void train_lm_command(const std::string& corpus_path, int order,
                      double discount, const CorpusPrepOptions& prep,
                      const std::string& arpa_out);

}  // namespace clad
