#include "clad/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "clad/conllu.hpp"
#include "clad/error.hpp"
#include "clad/features.hpp"
#include "clad/lm.hpp"
#include "clad/text.hpp"

namespace clad {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string full_precision(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

fs::path resolve(const std::string& base, const std::string& relative) {
  fs::path p(relative);
  if (p.is_absolute() || base.empty()) return p;
  return fs::path(base) / p;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

// ---------------------------------------------------------------- naming

const std::vector<std::string>& canonical_kinds() {
  static const std::vector<std::string> kinds = {
      "linear_svm", "decision_tree", "gradient_boosting", "random_forest"};
  return kinds;
}

std::string kind_display(const std::string& kind) {
  if (kind == "linear_svm") return "SVM";
  if (kind == "decision_tree") return "Decision Tree";
  if (kind == "gradient_boosting") return "Gradient Boosting";
  if (kind == "random_forest") return "Random Forest";
  return kind;
}

int kind_rank(const std::string& kind) {
  const auto& kinds = canonical_kinds();
  for (size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] == kind) return static_cast<int>(i);
  return static_cast<int>(kinds.size());
}

std::string source_display(TranscriptSource source) {
  switch (source) {
    case TranscriptSource::Oracle: return "Oracle";
    case TranscriptSource::Asr: return "ASR";
    case TranscriptSource::AsrWithLm: return "ASR with LM";
  }
  return "?";
}

int source_rank(const std::string& name) {
  if (name == "oracle") return 0;
  if (name == "asr") return 1;
  if (name == "asr_with_lm") return 2;
  return 3;
}

}  // namespace

const char* speaker_role_name(SpeakerRole role) {
  return role == SpeakerRole::TrainSource ? "train_source" : "eval_target";
}

SpeakerRole speaker_role_from_name(const std::string& name) {
  if (name == "train_source") return SpeakerRole::TrainSource;
  if (name == "eval_target") return SpeakerRole::EvalTarget;
  throw Error(ErrorCode::ConfigError, "unknown split_role: " + name);
}

const char* transcript_source_name(TranscriptSource source) {
  switch (source) {
    case TranscriptSource::Oracle: return "oracle";
    case TranscriptSource::Asr: return "asr";
    case TranscriptSource::AsrWithLm: return "asr_with_lm";
  }
  return "?";
}

TranscriptSource transcript_source_from_name(const std::string& name) {
  if (name == "oracle") return TranscriptSource::Oracle;
  if (name == "asr") return TranscriptSource::Asr;
  if (name == "asr_with_lm") return TranscriptSource::AsrWithLm;
  throw Error(ErrorCode::ConfigError, "unknown transcript source: " + name);
}

// ------------------------------------------------------------- manifest

Manifest load_manifest(const std::string& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError,
                "manifest " + path + ": " + e.what());
  }
  Manifest manifest;
  manifest.base_dir = fs::path(path).parent_path().string();
  if (!doc.is_object() || !doc.contains("entries") ||
      !doc["entries"].is_array())
    throw Error(ErrorCode::ConfigError,
                "manifest must be an object with an 'entries' array");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "entries")
      throw Error(ErrorCode::ConfigError, "manifest: unknown key '" + key + "'");
  }

  static const std::set<std::string> known = {
      "speaker_id", "language", "cohort", "split_role", "chat_path",
      "conllu_path", "emissions_dir", "conllu_asr_path",
      "conllu_asr_with_lm_path", "participant"};
  for (const auto& item : doc["entries"]) {
    if (!item.is_object())
      throw Error(ErrorCode::ConfigError, "manifest entry must be an object");
    for (const auto& [key, value] : item.items()) {
      (void)value;
      if (!known.count(key))
        throw Error(ErrorCode::ConfigError,
                    "manifest entry: unknown key '" + key + "'");
    }
    ManifestEntry entry;
    try {
      entry.speaker_id = item.at("speaker_id").get<std::string>();
      entry.language = item.at("language").get<std::string>();
      entry.cohort = cohort_from_name(item.at("cohort").get<std::string>());
      entry.role =
          speaker_role_from_name(item.at("split_role").get<std::string>());
      entry.chat_path = item.at("chat_path").get<std::string>();
      entry.conllu_path = item.at("conllu_path").get<std::string>();
      if (item.contains("emissions_dir"))
        entry.emissions_dir = item["emissions_dir"].get<std::string>();
      if (item.contains("conllu_asr_path"))
        entry.conllu_asr_path = item["conllu_asr_path"].get<std::string>();
      if (item.contains("conllu_asr_with_lm_path"))
        entry.conllu_asr_with_lm_path =
            item["conllu_asr_with_lm_path"].get<std::string>();
      if (item.contains("participant"))
        entry.participant = item["participant"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError,
                  std::string("manifest entry: ") + e.what());
    }
    manifest.entries.push_back(std::move(entry));
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) {
              return a.speaker_id < b.speaker_id;
            });
  return manifest;
}

// --------------------------------------------------------------- config

namespace {

void reject_unknown(const ordered_json& object, const std::string& where,
                    const std::set<std::string>& known) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (!known.count(key))
      throw Error(ErrorCode::ConfigError,
                  where + ": unknown key '" + key + "'");
  }
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, "config " + path + ": " + e.what());
  }
  if (!doc.is_object())
    throw Error(ErrorCode::ConfigError, "config must be a JSON object");

  PipelineConfig config;
  config.base_dir = fs::path(path).parent_path().string();
  reject_unknown(doc, "config",
                 {"seed", "keep_fillers", "wer_table", "languages",
                  "lexicons", "lm", "decode", "classifier",
                  "classifiers_compared", "transcript_source", "evaluation",
                  "metrics"});
  try {
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("keep_fillers"))
      config.keep_fillers = doc["keep_fillers"].get<bool>();
    if (doc.contains("wer_table"))
      config.wer_table = doc["wer_table"].get<bool>();
    if (doc.contains("languages"))
      for (const auto& lang : doc["languages"])
        config.languages.push_back(lang.get<std::string>());
    if (doc.contains("lexicons"))
      for (const auto& [lang, p] : doc["lexicons"].items())
        config.lexicon_paths[lang] = p.get<std::string>();
    if (doc.contains("lm")) {
      reject_unknown(doc["lm"], "config.lm", {"order", "discount", "arpa"});
      if (doc["lm"].contains("order"))
        config.lm_order = doc["lm"]["order"].get<int>();
      if (doc["lm"].contains("discount"))
        config.lm_discount = doc["lm"]["discount"].get<double>();
      if (doc["lm"].contains("arpa"))
        for (const auto& [lang, p] : doc["lm"]["arpa"].items())
          config.arpa_paths[lang] = p.get<std::string>();
    }
    if (doc.contains("decode")) {
      reject_unknown(
          doc["decode"], "config.decode",
          {"beam_width", "lm_alpha", "lm_beta", "prune_log_threshold"});
      if (doc["decode"].contains("beam_width"))
        config.decode.beam_width = doc["decode"]["beam_width"].get<int>();
      if (doc["decode"].contains("lm_alpha"))
        config.decode.lm_alpha = doc["decode"]["lm_alpha"].get<double>();
      if (doc["decode"].contains("lm_beta"))
        config.decode.lm_beta = doc["decode"]["lm_beta"].get<double>();
      if (doc["decode"].contains("prune_log_threshold"))
        config.decode.prune_log_threshold =
            doc["decode"]["prune_log_threshold"].get<double>();
    }
    if (doc.contains("classifier")) {
      reject_unknown(doc["classifier"], "config.classifier",
                     {"kind", "hyperparameters"});
      if (doc["classifier"].contains("kind"))
        config.classifier_kind = doc["classifier"]["kind"].get<std::string>();
      if (doc["classifier"].contains("hyperparameters"))
        for (const auto& [key, value] :
             doc["classifier"]["hyperparameters"].items())
          config.classifier_hyperparameters.emplace_back(
              key, value.is_string() ? value.get<std::string>()
                                     : value.dump());
    }
    if (doc.contains("classifiers_compared"))
      for (const auto& kind : doc["classifiers_compared"])
        config.classifiers_compared.push_back(kind.get<std::string>());
    if (doc.contains("transcript_source")) {
      reject_unknown(doc["transcript_source"], "config.transcript_source",
                     {"train_source", "eval_target"});
      if (doc["transcript_source"].contains("train_source"))
        config.transcript_source.first = transcript_source_from_name(
            doc["transcript_source"]["train_source"].get<std::string>());
      if (doc["transcript_source"].contains("eval_target"))
        config.transcript_source.second = transcript_source_from_name(
            doc["transcript_source"]["eval_target"].get<std::string>());
    }
    if (doc.contains("evaluation")) {
      const auto& eval = doc["evaluation"];
      reject_unknown(eval, "config.evaluation",
                     {"monolingual", "zero_shot", "pairs",
                      "monolingual_sources", "transfer_pairings"});
      if (eval.contains("monolingual"))
        config.evaluation.monolingual = eval["monolingual"].get<bool>();
      if (eval.contains("zero_shot"))
        config.evaluation.zero_shot = eval["zero_shot"].get<bool>();
      if (eval.contains("pairs"))
        for (const auto& pair : eval["pairs"]) {
          reject_unknown(pair, "config.evaluation.pairs[]",
                         {"source", "target"});
          config.evaluation.pairs.emplace_back(
              pair.at("source").get<std::string>(),
              pair.at("target").get<std::string>());
        }
      if (eval.contains("monolingual_sources"))
        for (const auto& name : eval["monolingual_sources"])
          config.evaluation.monolingual_sources.push_back(
              transcript_source_from_name(name.get<std::string>()));
      if (eval.contains("transfer_pairings"))
        for (const auto& pairing : eval["transfer_pairings"]) {
          if (!pairing.is_array() || pairing.size() != 2)
            throw Error(ErrorCode::ConfigError,
                        "transfer_pairings entries must be [train, eval]");
          config.evaluation.transfer_pairings.emplace_back(
              transcript_source_from_name(pairing[0].get<std::string>()),
              transcript_source_from_name(pairing[1].get<std::string>()));
        }
    }
    if (doc.contains("metrics")) {
      reject_unknown(doc["metrics"], "config.metrics",
                     {"lowercase", "strip_punctuation"});
      if (doc["metrics"].contains("lowercase"))
        config.metrics_norm.lowercase = doc["metrics"]["lowercase"].get<bool>();
      if (doc["metrics"].contains("strip_punctuation"))
        config.metrics_norm.strip_punctuation =
            doc["metrics"]["strip_punctuation"].get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }

  if (config.classifiers_compared.empty())
    config.classifiers_compared = canonical_kinds();
  if (config.evaluation.monolingual_sources.empty())
    config.evaluation.monolingual_sources = {TranscriptSource::Oracle};
  return config;
}

namespace {

ordered_json config_to_json(const PipelineConfig& config) {
  ordered_json doc;
  doc["seed"] = config.seed;
  doc["keep_fillers"] = config.keep_fillers;
  doc["wer_table"] = config.wer_table;
  doc["languages"] = config.languages;
  ordered_json lexicons = ordered_json::object();
  for (const auto& [lang, path] : config.lexicon_paths) lexicons[lang] = path;
  doc["lexicons"] = lexicons;
  ordered_json arpa = ordered_json::object();
  for (const auto& [lang, path] : config.arpa_paths) arpa[lang] = path;
  doc["lm"] = {{"order", config.lm_order},
               {"discount", config.lm_discount},
               {"arpa", arpa}};
  doc["decode"] = {{"beam_width", config.decode.beam_width},
                   {"lm_alpha", config.decode.lm_alpha},
                   {"lm_beta", config.decode.lm_beta},
                   {"prune_log_threshold", config.decode.prune_log_threshold}};
  ordered_json hyper = ordered_json::object();
  for (const auto& [key, value] : config.classifier_hyperparameters)
    hyper[key] = value;
  doc["classifier"] = {{"kind", config.classifier_kind},
                       {"hyperparameters", hyper}};
  doc["classifiers_compared"] = config.classifiers_compared;
  doc["transcript_source"] = {
      {"train_source", transcript_source_name(config.transcript_source.first)},
      {"eval_target",
       transcript_source_name(config.transcript_source.second)}};
  ordered_json pairs = ordered_json::array();
  for (const auto& [src, tgt] : config.evaluation.pairs)
    pairs.push_back({{"source", src}, {"target", tgt}});
  ordered_json sources = ordered_json::array();
  for (TranscriptSource source : config.evaluation.monolingual_sources)
    sources.push_back(transcript_source_name(source));
  ordered_json pairings = ordered_json::array();
  for (const auto& [a, b] : config.evaluation.transfer_pairings)
    pairings.push_back(
        {transcript_source_name(a), transcript_source_name(b)});
  doc["evaluation"] = {{"monolingual", config.evaluation.monolingual},
                       {"zero_shot", config.evaluation.zero_shot},
                       {"pairs", pairs},
                       {"monolingual_sources", sources},
                       {"transfer_pairings", pairings}};
  doc["metrics"] = {{"lowercase", config.metrics_norm.lowercase},
                    {"strip_punctuation", config.metrics_norm.strip_punctuation}};
  return doc;
}

// ----------------------------------------------------------- regime plan

std::vector<std::pair<TranscriptSource, TranscriptSource>> effective_pairings(
    const PipelineConfig& config) {
  if (!config.evaluation.transfer_pairings.empty())
    return config.evaluation.transfer_pairings;
  return {config.transcript_source};
}

struct RegimePlan {
  std::set<TranscriptSource> train_side;  // feature regimes, train speakers
  std::set<TranscriptSource> eval_side;   // feature regimes, eval speakers
};

RegimePlan regime_plan(const PipelineConfig& config) {
  RegimePlan plan;
  if (config.evaluation.monolingual)
    for (TranscriptSource source : config.evaluation.monolingual_sources)
      plan.train_side.insert(source);
  if (config.evaluation.zero_shot) {
    plan.train_side.insert(TranscriptSource::Oracle);
    plan.eval_side.insert(TranscriptSource::Oracle);
    for (const auto& [train, eval] : effective_pairings(config)) {
      plan.train_side.insert(train);
      plan.eval_side.insert(eval);
    }
  }
  return plan;
}

// decode regimes a particular speaker needs
std::set<TranscriptSource> decode_regimes(const PipelineConfig& config,
                                          const RegimePlan& plan,
                                          const ManifestEntry& entry) {
  std::set<TranscriptSource> regimes;
  const auto& side = entry.role == SpeakerRole::TrainSource ? plan.train_side
                                                            : plan.eval_side;
  for (TranscriptSource source : side)
    if (source != TranscriptSource::Oracle) regimes.insert(source);
  if (config.wer_table && !entry.emissions_dir.empty()) {
    regimes.insert(TranscriptSource::Asr);
    if (config.arpa_paths.count(entry.language))
      regimes.insert(TranscriptSource::AsrWithLm);
  }
  return regimes;
}

std::set<TranscriptSource> feature_regimes(const RegimePlan& plan,
                                           const ManifestEntry& entry) {
  return entry.role == SpeakerRole::TrainSource ? plan.train_side
                                                : plan.eval_side;
}

const std::string& conllu_for(const ManifestEntry& entry,
                              TranscriptSource source) {
  switch (source) {
    case TranscriptSource::Oracle: return entry.conllu_path;
    case TranscriptSource::Asr: return entry.conllu_asr_path;
    case TranscriptSource::AsrWithLm: return entry.conllu_asr_with_lm_path;
  }
  return entry.conllu_path;
}

}  // namespace

// ------------------------------------------------------------- validate

std::vector<std::string> validate(const PipelineConfig& config,
                                  const Manifest& manifest) {
  std::vector<std::string> problems;
  auto problem = [&](const std::string& text) { problems.push_back(text); };

  if (manifest.entries.empty()) problem("manifest has no entries");
  std::set<std::string> ids;
  std::map<std::string, int> train_count, eval_count;
  std::map<std::string, std::set<Cohort>> train_cohorts;
  for (const ManifestEntry& entry : manifest.entries) {
    if (!ids.insert(entry.speaker_id).second)
      problem("duplicate speaker_id: " + entry.speaker_id);
    if (std::find(config.languages.begin(), config.languages.end(),
                  entry.language) == config.languages.end())
      problem("speaker " + entry.speaker_id + ": language '" +
              entry.language + "' is not listed in config.languages");
    if (!fs::exists(resolve(manifest.base_dir, entry.chat_path)))
      problem("speaker " + entry.speaker_id + ": chat_path not found: " +
              entry.chat_path);
    if (!fs::exists(resolve(manifest.base_dir, entry.conllu_path)))
      problem("speaker " + entry.speaker_id + ": conllu_path not found: " +
              entry.conllu_path);
    if (entry.role == SpeakerRole::TrainSource) {
      train_count[entry.language]++;
      train_cohorts[entry.language].insert(entry.cohort);
    } else {
      eval_count[entry.language]++;
    }
  }

  if (config.languages.empty()) problem("config.languages is empty");
  for (const std::string& lang : config.languages) {
    auto it = config.lexicon_paths.find(lang);
    if (it == config.lexicon_paths.end())
      problem("language '" + lang + "' has no lexicon configured");
    else if (!fs::exists(resolve(config.base_dir, it->second)))
      problem("language '" + lang + "' lexicon not found: " + it->second);
    if (train_count[lang] + eval_count[lang] == 0)
      problem("language '" + lang + "' has no manifest entries");
  }
  for (const auto& [lang, path] : config.arpa_paths)
    if (!fs::exists(resolve(config.base_dir, path)))
      problem("language '" + lang + "' ARPA file not found: " + path);

  if (config.lm_order < 1 || config.lm_order > 5)
    problem("lm.order must be between 1 and 5");
  if (!(config.lm_discount > 0.0 && config.lm_discount < 1.0))
    problem("lm.discount must lie in (0, 1)");
  if (config.decode.beam_width < 1) problem("decode.beam_width must be >= 1");
  if (config.decode.lm_alpha < 0.0) problem("decode.lm_alpha must be >= 0");

  try {
    make_classifier_spec(config.classifier_kind,
                         config.classifier_hyperparameters, config.seed);
  } catch (const Error& e) {
    problem(std::string("classifier: ") + e.what());
  }
  for (const std::string& kind : config.classifiers_compared) {
    try {
      classifier_kind_from_name(kind);
    } catch (const Error&) {
      problem("classifiers_compared: unknown kind '" + kind + "'");
    }
  }

  RegimePlan plan = regime_plan(config);
  for (const ManifestEntry& entry : manifest.entries) {
    std::set<TranscriptSource> decodes =
        decode_regimes(config, plan, entry);
    std::set<TranscriptSource> features = feature_regimes(plan, entry);
    std::set<TranscriptSource> asr_like;
    for (TranscriptSource s : decodes) asr_like.insert(s);
    for (TranscriptSource s : features)
      if (s != TranscriptSource::Oracle) asr_like.insert(s);

    if (!asr_like.empty() && entry.emissions_dir.empty()) {
      // decode regimes forced by wer_table only apply when emissions exist,
      // so reaching here means an evaluation regime demands them
      bool eval_demand = false;
      for (TranscriptSource s : features)
        if (s != TranscriptSource::Oracle) eval_demand = true;
      if (eval_demand)
        problem("speaker " + entry.speaker_id +
                ": ASR transcripts requested but no emissions_dir given");
    }
    if (!entry.emissions_dir.empty()) {
      fs::path dir = resolve(manifest.base_dir, entry.emissions_dir);
      if (!fs::is_directory(dir)) {
        problem("speaker " + entry.speaker_id + ": emissions_dir not found: " +
                entry.emissions_dir);
      } else {
        if (!fs::exists(dir / "vocab.txt"))
          problem("speaker " + entry.speaker_id +
                  ": emissions_dir has no vocab.txt");
        bool any = false;
        for (const auto& item : fs::directory_iterator(dir))
          if (item.path().extension() == ".emat") any = true;
        if (!any)
          problem("speaker " + entry.speaker_id +
                  ": emissions_dir has no .emat files");
      }
    }
    for (TranscriptSource source : features) {
      if (source == TranscriptSource::Oracle) continue;
      const std::string& conllu = conllu_for(entry, source);
      if (conllu.empty())
        problem("speaker " + entry.speaker_id + ": regime '" +
                transcript_source_name(source) +
                "' requested but no conllu_" +
                transcript_source_name(source) + "_path given");
      else if (!fs::exists(resolve(manifest.base_dir, conllu)))
        problem("speaker " + entry.speaker_id + ": conllu_" +
                transcript_source_name(source) + "_path not found: " + conllu);
    }
    bool wants_lm =
        decodes.count(TranscriptSource::AsrWithLm) > 0 ||
        features.count(TranscriptSource::AsrWithLm) > 0;
    if (wants_lm && !config.arpa_paths.count(entry.language))
      problem("speaker " + entry.speaker_id +
              ": asr_with_lm requested but language '" + entry.language +
              "' has no ARPA path configured");
  }

  if (config.evaluation.zero_shot) {
    if (config.evaluation.pairs.empty())
      problem("zero-shot evaluation enabled but evaluation.pairs is empty");
    for (const auto& [src, tgt] : config.evaluation.pairs) {
      if (std::find(config.languages.begin(), config.languages.end(), src) ==
          config.languages.end())
        problem("evaluation pair source '" + src + "' not in languages");
      if (std::find(config.languages.begin(), config.languages.end(), tgt) ==
          config.languages.end())
        problem("evaluation pair target '" + tgt + "' not in languages");
      if (train_count[src] < 2 || train_cohorts[src].size() < 2)
        problem("evaluation pair source '" + src +
                "' needs train_source speakers of both cohorts");
      if (eval_count[tgt] < 1)
        problem("evaluation pair target '" + tgt +
                "' has no eval_target speakers");
    }
  }
  if (config.evaluation.monolingual) {
    bool any = false;
    for (const std::string& lang : config.languages) {
      if (train_count[lang] >= 3 && train_cohorts[lang].size() == 2)
        any = true;
    }
    if (!any)
      problem(
          "monolingual evaluation enabled but no language has >= 3 "
          "train_source speakers of both cohorts");
  }
  return problems;
}

// ------------------------------------------------------------- pipeline

namespace {

struct SpeakerState {
  const ManifestEntry* entry = nullptr;
  SpeakerRecord record;  // oracle cleaned transcript
  std::map<TranscriptSource, std::vector<std::string>> decoded;
  std::map<TranscriptSource, FeatureVector> features;
};

struct PipelineState {
  const PipelineConfig& config;
  const Manifest& manifest;
  fs::path out;
  RegimePlan plan;
  std::vector<SpeakerState> speakers;
  std::map<std::string, Lexicon> lexicons;
  std::map<std::string, NGramModel> lms;
  std::vector<std::string> warnings;
  ordered_json stage_log = ordered_json::array();
  bool quiet = false;

  PipelineState(const PipelineConfig& c, const Manifest& m)
      : config(c), manifest(m), plan(regime_plan(c)) {}

  fs::path intermediate(const std::string& leaf) const {
    return out / "intermediate" / leaf;
  }
};

void note(PipelineState& state, const std::string& message) {
  if (!state.quiet) std::cout << message << "\n";
}

const NGramModel& language_model(PipelineState& state,
                                 const std::string& language) {
  auto it = state.lms.find(language);
  if (it != state.lms.end()) return it->second;
  auto path_it = state.config.arpa_paths.find(language);
  if (path_it == state.config.arpa_paths.end())
    throw Error(ErrorCode::ConfigError,
                "no ARPA path configured for language " + language);
  NGramModel model = read_arpa_file(
      resolve(state.config.base_dir, path_it->second).string());
  return state.lms.emplace(language, std::move(model)).first->second;
}

// -------------------------------------------------------------- stages

void stage_parse(PipelineState& state) {
  fs::create_directories(state.intermediate("clean"));
  CleanOptions clean_options;
  clean_options.keep_fillers = state.config.keep_fillers;

  std::ostringstream speakers_csv;
  speakers_csv << "speaker_id,language,cohort,split_role,duration_seconds,"
                  "utterances\n";
  for (const ManifestEntry& entry : state.manifest.entries) {
    try {
      std::ifstream chat(resolve(state.manifest.base_dir, entry.chat_path));
      if (!chat)
        throw Error(ErrorCode::IoError, "cannot open " + entry.chat_path);
      ChatDocument doc = parse_chat(chat);
      SpeakerState speaker;
      speaker.entry = &entry;
      speaker.record =
          assemble_record(doc, entry.participant, entry.speaker_id,
                          entry.language, entry.cohort, clean_options);
      write_file(state.intermediate("clean") / (entry.speaker_id + ".txt"),
                 write_clean_transcript(speaker.record));
      speakers_csv << entry.speaker_id << ',' << entry.language << ','
                   << cohort_name(entry.cohort) << ','
                   << speaker_role_name(entry.role) << ','
                   << (speaker.record.total_duration_ms
                           ? full_precision(
                                 double(*speaker.record.total_duration_ms) /
                                 1000.0)
                           : std::string(""))
                   << ',' << speaker.record.utterances.size() << "\n";
      state.speakers.push_back(std::move(speaker));
    } catch (const Error& e) {
      throw Error(e.code(),
                  "speaker " + entry.speaker_id + ": " + e.what());
    }
  }
  write_file(state.intermediate("speakers.csv"), speakers_csv.str());
  note(state, "parse: " + std::to_string(state.speakers.size()) +
                  " speakers cleaned");
}

std::vector<fs::path> emission_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& item : fs::directory_iterator(dir))
    if (item.path().extension() == ".emat") files.push_back(item.path());
  std::sort(files.begin(), files.end());
  return files;
}

void stage_decode(PipelineState& state) {
  fs::create_directories(state.intermediate("decoded/asr"));
  fs::create_directories(state.intermediate("decoded/asr_with_lm"));
  int decoded = 0, reused = 0;

  for (SpeakerState& speaker : state.speakers) {
    const ManifestEntry& entry = *speaker.entry;
    std::set<TranscriptSource> regimes =
        decode_regimes(state.config, state.plan, entry);
    if (regimes.empty() || entry.emissions_dir.empty()) continue;
    try {
      fs::path dir = resolve(state.manifest.base_dir, entry.emissions_dir);
      std::vector<fs::path> utterances = emission_files(dir);
      std::string vocab_bytes = read_file(dir / "vocab.txt");

      for (TranscriptSource regime : regimes) {
        const char* leaf = transcript_source_name(regime);
        fs::path txt = state.intermediate(std::string("decoded/") + leaf) /
                       (entry.speaker_id + ".txt");
        fs::path hash_file = txt;
        hash_file += ".hash";

        std::uint64_t hash = 0xcbf29ce484222325ULL;
        for (const fs::path& utt : utterances)
          hash = fnv1a(read_file(utt), hash);
        hash = fnv1a(vocab_bytes, hash);
        char params[160];
        std::snprintf(params, sizeof params, "%s|%d|%.17g|%.17g|%.17g", leaf,
                      state.config.decode.beam_width,
                      state.config.decode.lm_alpha,
                      state.config.decode.lm_beta,
                      state.config.decode.prune_log_threshold);
        hash = fnv1a(params, hash);
        if (regime == TranscriptSource::AsrWithLm)
          hash = fnv1a(read_file(resolve(state.config.base_dir,
                                         state.config.arpa_paths.at(
                                             entry.language))),
                       hash);
        char hash_hex[32];
        std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                      static_cast<unsigned long long>(hash));

        if (fs::exists(txt) && fs::exists(hash_file) &&
            read_file(hash_file) == hash_hex) {
          speaker.decoded[regime] = read_lines(txt);
          ++reused;
          continue;
        }

        const NGramModel* lm = regime == TranscriptSource::AsrWithLm
                                   ? &language_model(state, entry.language)
                                   : nullptr;
        std::vector<std::string> lines;
        for (const fs::path& utt : utterances) {
          EmissionMatrix em =
              load_emissions_file(utt.string(), (dir / "vocab.txt").string());
          DecodeResult result =
              regime == TranscriptSource::Asr
                  ? greedy_decode(em)
                  : beam_decode(em, state.config.decode, lm);
          lines.push_back(result.transcript);
        }
        std::string joined;
        for (const std::string& line : lines) joined += line + "\n";
        write_file(txt, joined);
        write_file(hash_file, hash_hex);
        speaker.decoded[regime] = std::move(lines);
        ++decoded;
      }
    } catch (const Error& e) {
      throw Error(e.code(), "speaker " + entry.speaker_id + ": " + e.what());
    }
  }
  note(state, "decode: " + std::to_string(decoded) + " decoded, " +
                  std::to_string(reused) + " reused");
}

const Lexicon& lexicon_for(PipelineState& state, const std::string& language) {
  auto it = state.lexicons.find(language);
  if (it != state.lexicons.end()) return it->second;
  Lexicon lexicon = load_lexicon_file(
      resolve(state.config.base_dir, state.config.lexicon_paths.at(language))
          .string(),
      language);
  return state.lexicons.emplace(language, std::move(lexicon)).first->second;
}

SpeakerRecord asr_record(const SpeakerState& speaker,
                         const std::vector<std::string>& decoded_lines) {
  SpeakerRecord record;
  record.speaker_id = speaker.record.speaker_id;
  record.language = speaker.record.language;
  record.cohort = speaker.record.cohort;
  record.total_duration_ms = speaker.record.total_duration_ms;
  for (const std::string& line : decoded_lines) {
    CleanUtterance utterance;
    utterance.tokens = split_ws(line);
    if (!utterance.tokens.empty())
      record.utterances.push_back(std::move(utterance));
  }
  if (record.utterances.empty())
    throw Error(ErrorCode::NoUsableUtterances,
                "decoded transcript has no words");
  return record;
}

void stage_features(PipelineState& state) {
  fs::create_directories(state.intermediate("features"));

  // per (language, regime) CSV, speakers sorted by id within
  std::map<std::pair<std::string, std::string>, std::ostringstream> csvs;
  for (SpeakerState& speaker : state.speakers) {
    const ManifestEntry& entry = *speaker.entry;
    try {
      const Lexicon& lexicon = lexicon_for(state, entry.language);
      for (TranscriptSource regime : feature_regimes(state.plan, entry)) {
        AnnotatedRecord annotated;
        if (regime == TranscriptSource::Oracle) {
          annotated = attach_annotations(
              speaker.record,
              load_conllu_file(
                  resolve(state.manifest.base_dir, entry.conllu_path)
                      .string()));
        } else {
          auto decoded_it = speaker.decoded.find(regime);
          if (decoded_it == speaker.decoded.end())
            throw Error(ErrorCode::ConfigError,
                        std::string("no decoded transcript for regime ") +
                            transcript_source_name(regime));
          annotated = attach_annotations(
              asr_record(speaker, decoded_it->second),
              load_conllu_file(
                  resolve(state.manifest.base_dir, conllu_for(entry, regime))
                      .string()));
        }
        FeatureVector features = extract_features(annotated, lexicon);
        speaker.features[regime] = features;

        auto key = std::make_pair(entry.language,
                                  std::string(transcript_source_name(regime)));
        std::ostringstream& csv = csvs[key];
        if (csv.tellp() == 0) {
          csv << "speaker_id,language,cohort,split_role";
          for (std::string_view name : feature_names()) csv << ',' << name;
          csv << "\n";
        }
        csv << entry.speaker_id << ',' << entry.language << ','
            << cohort_name(entry.cohort) << ',' << speaker_role_name(entry.role);
        for (int i = 0; i < kFeatureCount; ++i)
          csv << ',' << full_precision(features(i));
        csv << "\n";
      }
    } catch (const Error& e) {
      throw Error(e.code(), "speaker " + entry.speaker_id + ": " + e.what());
    }
  }
  for (const auto& [key, csv] : csvs)
    write_file(state.intermediate("features") /
                   ("features__" + key.first + "__" + key.second + ".csv"),
               csv.str());
  note(state,
       "features: " + std::to_string(csvs.size()) + " feature tables");
}

Dataset make_dataset(const PipelineState& state, const std::string& language,
                     TranscriptSource regime, SpeakerRole role) {
  Dataset data;
  data.language = language;
  std::vector<const SpeakerState*> rows;
  for (const SpeakerState& speaker : state.speakers) {
    if (speaker.entry->language != language || speaker.entry->role != role)
      continue;
    if (!speaker.features.count(regime))
      throw Error(ErrorCode::ConfigError,
                  "speaker " + speaker.entry->speaker_id +
                      " has no features for regime " +
                      transcript_source_name(regime));
    rows.push_back(&speaker);
  }
  data.X.resize(static_cast<int>(rows.size()), kFeatureCount);
  for (size_t i = 0; i < rows.size(); ++i) {
    data.X.row(static_cast<int>(i)) = rows[i]->features.at(regime).transpose();
    data.y.push_back(rows[i]->entry->cohort == Cohort::Aphasia ? 1 : 0);
    data.speaker_ids.push_back(rows[i]->entry->speaker_id);
  }
  return data;
}

void write_predictions(const PipelineState& state, const std::string& name,
                       const std::vector<SpeakerOutcome>& outcomes) {
  std::ostringstream csv;
  csv << "speaker_id,truth,predicted\n";
  for (const SpeakerOutcome& outcome : outcomes)
    csv << outcome.speaker_id << ',' << outcome.truth << ','
        << outcome.predicted << "\n";
  write_file(state.intermediate("predictions") / (name + ".csv"), csv.str());
}

ClassifierSpec spec_for(const PipelineState& state, const std::string& kind) {
  if (kind == state.config.classifier_kind)
    return make_classifier_spec(kind, state.config.classifier_hyperparameters,
                                state.config.seed);
  return make_classifier_spec(kind, {}, state.config.seed);
}

void warn_constant_columns(PipelineState& state, const Dataset& data,
                           const std::string& where) {
  if (data.rows() < 2) return;
  Scaler scaler = fit_scaler(data.X);
  if (scaler.constant_columns.empty()) return;
  std::string names;
  for (int c : scaler.constant_columns) {
    if (!names.empty()) names += "; ";
    names += feature_names()[c];
  }
  std::string warning = where + ": constant feature columns pass through "
                                "scaling unchanged: " + names;
  if (std::find(state.warnings.begin(), state.warnings.end(), warning) ==
      state.warnings.end()) {
    state.warnings.push_back(warning);
    if (!state.quiet) std::cerr << "warning: " << warning << "\n";
  }
}

void stage_evaluate(PipelineState& state) {
  fs::create_directories(state.intermediate("predictions"));
  fs::create_directories(state.intermediate("wer"));

  // ---- monolingual LOSO (per language with enough train speakers)
  if (state.config.evaluation.monolingual) {
    for (const std::string& lang : state.config.languages) {
      int train_speakers = 0;
      std::set<Cohort> cohorts;
      for (const SpeakerState& speaker : state.speakers)
        if (speaker.entry->language == lang &&
            speaker.entry->role == SpeakerRole::TrainSource) {
          ++train_speakers;
          cohorts.insert(speaker.entry->cohort);
        }
      if (train_speakers < 3 || cohorts.size() < 2) continue;
      for (TranscriptSource regime :
           state.config.evaluation.monolingual_sources) {
        Dataset data =
            make_dataset(state, lang, regime, SpeakerRole::TrainSource);
        warn_constant_columns(state, data,
                              "monolingual " + lang + " " +
                                  transcript_source_name(regime));
        for (const std::string& kind : state.config.classifiers_compared) {
          LosoResult result = loso_cv(spec_for(state, kind), data);
          write_predictions(state,
                            "mono__" + lang + "__" +
                                transcript_source_name(regime) + "__" + kind,
                            result.outcomes);
        }
      }
    }
  }

  // ---- zero-shot evaluation
  if (state.config.evaluation.zero_shot) {
    for (const auto& [src, tgt] : state.config.evaluation.pairs) {
      // classifier comparison on oracle transcripts
      Dataset source_oracle = make_dataset(state, src, TranscriptSource::Oracle,
                                           SpeakerRole::TrainSource);
      Dataset target_oracle = make_dataset(state, tgt, TranscriptSource::Oracle,
                                           SpeakerRole::EvalTarget);
      warn_constant_columns(state, source_oracle, "zero-shot source " + src);
      for (const std::string& kind : state.config.classifiers_compared) {
        TransferResult result =
            zero_shot_eval(spec_for(state, kind), source_oracle, target_oracle);
        write_predictions(
            state, "zs__" + src + "__" + tgt + "__oracle__" + kind,
            result.outcomes);
      }
      // transcript-pairing grid with the primary classifier
      ClassifierSpec primary = spec_for(state, state.config.classifier_kind);
      for (const auto& [train_regime, eval_regime] :
           effective_pairings(state.config)) {
        Dataset source =
            make_dataset(state, src, train_regime, SpeakerRole::TrainSource);
        Dataset target =
            make_dataset(state, tgt, eval_regime, SpeakerRole::EvalTarget);
        TransferResult result = zero_shot_eval(primary, source, target);
        write_predictions(state,
                          "tr__" + src + "__" + tgt + "__" +
                              transcript_source_name(train_regime) + "__" +
                              transcript_source_name(eval_regime) + "__" +
                              state.config.classifier_kind,
                          result.outcomes);
      }
    }
  }

  // ---- ASR error rates per language and regime
  if (state.config.wer_table) {
    std::map<std::pair<std::string, TranscriptSource>,
             std::vector<const SpeakerState*>>
        groups;
    for (const SpeakerState& speaker : state.speakers)
      for (const auto& [regime, lines] : speaker.decoded) {
        (void)lines;
        groups[{speaker.entry->language, regime}].push_back(&speaker);
      }
    for (const auto& [key, members] : groups) {
      const auto& [lang, regime] = key;
      std::vector<ScoredPair> pairs;
      std::ostringstream per_speaker;
      per_speaker << "speaker_id,cohort,word_edits,word_ref_length,"
                     "char_edits,char_ref_length\n";
      for (const SpeakerState* speaker : members) {
        ScoredPair pair;
        pair.speaker_id = speaker->entry->speaker_id;
        pair.cohort = speaker->entry->cohort;
        pair.reference = normalize_text(
            join(split_ws(write_clean_transcript(speaker->record)), " "),
            state.config.metrics_norm);
        pair.hypothesis = normalize_text(
            join(speaker->decoded.at(regime), " "), state.config.metrics_norm);
        std::vector<std::string> ref_words = split_ws(pair.reference);
        std::vector<std::string> hyp_words = split_ws(pair.hypothesis);
        std::vector<std::string> ref_chars = char_tokens(pair.reference);
        std::vector<std::string> hyp_chars = char_tokens(pair.hypothesis);
        per_speaker << pair.speaker_id << ','
                    << cohort_name(pair.cohort) << ','
                    << edit_distance(ref_words, hyp_words) << ','
                    << ref_words.size() << ','
                    << edit_distance(ref_chars, hyp_chars) << ','
                    << ref_chars.size() << "\n";
        pairs.push_back(std::move(pair));
      }
      ErrorRateReport words = aggregate(pairs, ErrorUnit::Word);
      ErrorRateReport chars = aggregate(pairs, ErrorUnit::Char);
      std::string stem =
          "wer__" + lang + "__" + transcript_source_name(regime);
      write_file(state.intermediate("wer") / (stem + "__per_speaker.csv"),
                 per_speaker.str());
      write_file(state.intermediate("wer") / (stem + "__rates.csv"),
                 write_error_rate_csv(words, chars));
    }
  }
  note(state, "evaluate: predictions and error rates written");
}

}  // namespace

// --------------------------------------------------------------- report

namespace {

struct TableRows {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const TableRows& table) {
  std::ostringstream out;
  out << join(table.header, ",") << "\n";
  for (const auto& row : table.rows) out << join(row, ",") << "\n";
  return out.str();
}

std::string to_markdown(const std::string& title, const TableRows& table) {
  std::ostringstream out;
  out << "## " << title << "\n\n";
  out << "| " << join(table.header, " | ") << " |\n|";
  for (size_t i = 0; i < table.header.size(); ++i) out << " --- |";
  out << "\n";
  for (const auto& row : table.rows) out << "| " << join(row, " | ") << " |\n";
  return out.str();
}

double accuracy_from_predictions(const fs::path& csv) {
  std::vector<std::string> lines = read_lines(csv);
  int correct = 0, total = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> cells = split_csv_row(lines[i]);
    if (cells.size() != 3)
      throw Error(ErrorCode::IoError,
                  "malformed prediction row in " + csv.string());
    ++total;
    if (cells[1] == cells[2]) ++correct;
  }
  if (total == 0)
    throw Error(ErrorCode::EmptyInput, "no predictions in " + csv.string());
  return double(correct) / double(total);
}

struct PooledRates {
  long total_edits = 0, total_ref = 0;
  std::map<std::string, long> cohort_edits, cohort_ref;
};

// columns: word_edits=2, word_ref=3 (char columns unused by the WER table)
PooledRates pooled_word_rates(const fs::path& csv) {
  PooledRates rates;
  std::vector<std::string> lines = read_lines(csv);
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> cells = split_csv_row(lines[i]);
    if (cells.size() != 6)
      throw Error(ErrorCode::IoError,
                  "malformed per-speaker row in " + csv.string());
    long edits = std::stol(cells[2]);
    long ref = std::stol(cells[3]);
    rates.total_edits += edits;
    rates.total_ref += ref;
    rates.cohort_edits[cells[1]] += edits;
    rates.cohort_ref[cells[1]] += ref;
  }
  return rates;
}

std::string rate_cell(long edits, long ref) {
  if (ref == 0) return "";
  return format_percent(double(edits) / double(ref));
}

// filename stem fields split on "__"
std::vector<std::string> stem_fields(const fs::path& path) {
  std::string stem = path.stem().string();
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t pos = stem.find("__", start);
    if (pos == std::string::npos) {
      fields.push_back(stem.substr(start));
      break;
    }
    fields.push_back(stem.substr(start, pos - start));
    start = pos + 2;
  }
  return fields;
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& item : fs::directory_iterator(dir))
    if (item.path().extension() == ".csv") files.push_back(item.path());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

void regenerate_report(const std::string& out_dir) {
  fs::path out(out_dir);
  fs::path report = out / "report";
  fs::create_directories(report);

  // ---- table 3: ASR word error rates (rows lang-no-lm / lang-with-lm)
  {
    TableRows table;
    table.header = {"Language", "Total", "Control", "Aphasia"};
    struct Entry {
      std::string lang;
      int regime_rank;
      std::vector<std::string> row;
    };
    std::vector<Entry> entries;
    for (const fs::path& csv : sorted_files(out / "intermediate" / "wer")) {
      std::vector<std::string> fields = stem_fields(csv);
      if (fields.size() != 4 || fields[0] != "wer" ||
          fields[3] != "per_speaker")
        continue;
      const std::string& lang = fields[1];
      const std::string& regime = fields[2];
      PooledRates rates = pooled_word_rates(csv);
      Entry entry;
      entry.lang = lang;
      entry.regime_rank = source_rank(regime);
      entry.row = {
          lang + (regime == "asr" ? "-no-lm" : "-with-lm"),
          rate_cell(rates.total_edits, rates.total_ref),
          rate_cell(rates.cohort_edits["control"], rates.cohort_ref["control"]),
          rate_cell(rates.cohort_edits["aphasia"],
                    rates.cohort_ref["aphasia"])};
      entries.push_back(std::move(entry));
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a,
                                                 const Entry& b) {
      if (a.lang != b.lang) return a.lang < b.lang;
      return a.regime_rank < b.regime_rank;
    });
    for (Entry& entry : entries) table.rows.push_back(std::move(entry.row));
    write_file(report / "table3_asr_wer.csv", to_csv(table));
    write_file(report / "table3_asr_wer.md",
               to_markdown("ASR word error rates (%)", table));
  }

  const fs::path predictions = out / "intermediate" / "predictions";

  // ---- table 4: monolingual LOSO accuracy per language
  {
    // language -> (kind -> (regime -> accuracy))
    std::map<std::string, std::map<std::string, std::map<std::string, double>>>
        cells;
    std::map<std::string, std::set<std::string>> regimes_present;
    for (const fs::path& csv : sorted_files(predictions)) {
      std::vector<std::string> fields = stem_fields(csv);
      if (fields.size() != 4 || fields[0] != "mono") continue;
      cells[fields[1]][fields[3]][fields[2]] = accuracy_from_predictions(csv);
      regimes_present[fields[1]].insert(fields[2]);
    }
    for (const auto& [lang, kinds] : cells) {
      std::vector<std::string> regimes(regimes_present[lang].begin(),
                                       regimes_present[lang].end());
      std::sort(regimes.begin(), regimes.end(),
                [](const std::string& a, const std::string& b) {
                  return source_rank(a) < source_rank(b);
                });
      TableRows table;
      table.header = {"Model"};
      for (const std::string& regime : regimes)
        table.header.push_back(
            source_display(transcript_source_from_name(regime)));
      std::vector<std::string> kind_order;
      for (const auto& [kind, value] : kinds) {
        (void)value;
        kind_order.push_back(kind);
      }
      std::sort(kind_order.begin(), kind_order.end(),
                [](const std::string& a, const std::string& b) {
                  return kind_rank(a) < kind_rank(b);
                });
      for (const std::string& kind : kind_order) {
        std::vector<std::string> row = {kind_display(kind)};
        for (const std::string& regime : regimes) {
          auto it = kinds.at(kind).find(regime);
          row.push_back(it == kinds.at(kind).end()
                            ? std::string("")
                            : format_percent(it->second));
        }
        table.rows.push_back(std::move(row));
      }
      write_file(report / ("table4_monolingual_" + lang + ".csv"),
                 to_csv(table));
      write_file(report / ("table4_monolingual_" + lang + ".md"),
                 to_markdown("Monolingual accuracy (%), " + lang +
                                 ", leave-one-subject-out",
                             table));
    }
  }

  // ---- table 5: zero-shot classifier comparison on oracle transcripts
  {
    std::map<std::string, std::map<std::string, double>> cells;  // pair->kind
    std::set<std::string> kinds_present;
    for (const fs::path& csv : sorted_files(predictions)) {
      std::vector<std::string> fields = stem_fields(csv);
      if (fields.size() != 5 || fields[0] != "zs") continue;
      std::string pair = fields[1] + " -> " + fields[2];
      cells[pair][fields[4]] = accuracy_from_predictions(csv);
      kinds_present.insert(fields[4]);
    }
    std::vector<std::string> kind_order(kinds_present.begin(),
                                        kinds_present.end());
    std::sort(kind_order.begin(), kind_order.end(),
              [](const std::string& a, const std::string& b) {
                return kind_rank(a) < kind_rank(b);
              });
    TableRows table;
    table.header = {"Experiment"};
    for (const std::string& kind : kind_order)
      table.header.push_back(kind_display(kind));
    for (const auto& [pair, kinds] : cells) {
      std::vector<std::string> row = {pair};
      for (const std::string& kind : kind_order) {
        auto it = kinds.find(kind);
        row.push_back(it == kinds.end() ? std::string("")
                                        : format_percent(it->second));
      }
      table.rows.push_back(std::move(row));
    }
    write_file(report / "table5_zero_shot_classifiers.csv", to_csv(table));
    write_file(report / "table5_zero_shot_classifiers.md",
               to_markdown("Zero-shot accuracy (%), oracle transcripts", table));
  }

  // ---- table 6: transcript-pairing transfer grid, primary classifier
  {
    struct Entry {
      std::string pair;
      int train_rank, eval_rank;
      std::vector<std::string> row;
    };
    std::vector<Entry> entries;
    for (const fs::path& csv : sorted_files(predictions)) {
      std::vector<std::string> fields = stem_fields(csv);
      if (fields.size() != 6 || fields[0] != "tr") continue;
      Entry entry;
      entry.pair = fields[1] + " -> " + fields[2];
      entry.train_rank = source_rank(fields[3]);
      entry.eval_rank = source_rank(fields[4]);
      entry.row = {
          entry.pair,
          source_display(transcript_source_from_name(fields[3])) + " -> " +
              source_display(transcript_source_from_name(fields[4])),
          format_percent(accuracy_from_predictions(csv))};
      entries.push_back(std::move(entry));
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) {
                if (a.pair != b.pair) return a.pair < b.pair;
                if (a.train_rank != b.train_rank)
                  return a.train_rank < b.train_rank;
                return a.eval_rank < b.eval_rank;
              });
    TableRows table;
    table.header = {"Experiment", "Transcriptions", "Accuracy"};
    for (Entry& entry : entries) table.rows.push_back(std::move(entry.row));
    write_file(report / "table6_zero_shot_transfer.csv", to_csv(table));
    write_file(report / "table6_zero_shot_transfer.md",
               to_markdown("Zero-shot transfer accuracy (%)", table));
  }
}

// ------------------------------------------------------------------ run

void run_pipeline(const PipelineConfig& config, const Manifest& manifest,
                  const RunOptions& options) {
  PipelineConfig effective = config;
  if (options.has_seed_override) effective.seed = options.seed_override;

  std::vector<std::string> problems = validate(effective, manifest);
  if (!problems.empty()) {
    std::string joined;
    for (const std::string& problem : problems)
      joined += "\n  - " + problem;
    throw Error(ErrorCode::ConfigError,
                "validation found " + std::to_string(problems.size()) +
                    " problem(s):" + joined);
  }

  PipelineState state(effective, manifest);
  state.out = fs::path(options.out_dir);
  state.quiet = options.quiet;
  fs::create_directories(state.out);
  fs::path failed_marker = state.out / "FAILED";
  if (fs::exists(failed_marker)) fs::remove(failed_marker);

  auto run_stage = [&](const char* name, Stage stage, auto&& body) {
    if (static_cast<int>(stage) > static_cast<int>(options.up_to)) return;
    auto start = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      write_file(failed_marker,
                 std::string("stage=") + name + ": " + e.what() + "\n");
      throw;
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    state.stage_log.push_back({{"name", name}, {"seconds", seconds}});
  };

  run_stage("parse", Stage::Parse, [&] { stage_parse(state); });
  run_stage("decode", Stage::Decode, [&] { stage_decode(state); });
  run_stage("features", Stage::Features, [&] { stage_features(state); });
  run_stage("evaluate", Stage::Evaluate, [&] { stage_evaluate(state); });
  run_stage("report", Stage::Evaluate,
            [&] { regenerate_report(options.out_dir); });

  if (options.up_to == Stage::Evaluate) {
    ordered_json log;
    log["seed"] = effective.seed;
    log["config"] = config_to_json(effective);
    log["stages"] = state.stage_log;
    log["warnings"] = state.warnings;
    write_file(state.out / "report" / "run_log.json", log.dump(2) + "\n");
  }
  note(state, "done: outputs under " + options.out_dir);
}

void train_lm_command(const std::string& corpus_path, int order,
                      double discount, const CorpusPrepOptions& prep,
                      const std::string& arpa_out) {
  if (order < 1 || order > 5)
    throw Error(ErrorCode::ConfigError, "order must be between 1 and 5");
  std::ifstream in(corpus_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + corpus_path);
  std::ostringstream prepared;
  std::string line;
  while (std::getline(in, line))
    prepared << prepare_corpus_line(line, prep) << "\n";
  NGramCounts counts = count_ngrams_string(prepared.str(), order);
  NGramModel model = train_kneser_ney(counts, discount);
  write_arpa_file(model, arpa_out);
}

}  // namespace clad
