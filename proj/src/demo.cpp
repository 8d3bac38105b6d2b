#include "clad/demo.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "clad/chat.hpp"
#include "clad/conllu.hpp"
#include "clad/ctc.hpp"
#include "clad/error.hpp"
#include "clad/lm.hpp"
#include "clad/rng.hpp"
#include "clad/text.hpp"

namespace clad {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
}

// --------------------------------------------------------- language data

struct LanguageSpec {
  std::string code;            // manifest/config language id
  std::string chat_code;       // @Languages header value
  std::map<Upos, std::vector<std::string>> bank;
  std::vector<std::string> nonwords;  // produced by aphasia speakers,
                                      // deliberately absent from the lexicon
  std::vector<std::string> letters;   // CTC symbol inventory (from words)
  std::map<std::string, Upos> upos_of;
};

std::vector<std::string> word_letters(const std::string& word) {
  std::vector<std::string> letters;
  for (char32_t cp : utf8_codepoints(word)) letters.push_back(utf8_encode(cp));
  return letters;
}

LanguageSpec finish(LanguageSpec spec) {
  std::set<std::string> letters;
  for (const auto& [upos, words] : spec.bank) {
    for (const std::string& word : words) {
      spec.upos_of[word] = upos;
      for (const std::string& letter : word_letters(word))
        letters.insert(letter);
    }
  }
  for (const std::string& word : spec.nonwords)
    for (const std::string& letter : word_letters(word)) letters.insert(letter);
  spec.letters.assign(letters.begin(), letters.end());
  return spec;
}

LanguageSpec english() {
  LanguageSpec spec;
  spec.code = "en";
  spec.chat_code = "eng";
  spec.bank[Upos::DET] = {"the", "a"};
  spec.bank[Upos::PRON] = {"she", "he", "it", "we"};
  spec.bank[Upos::NOUN] = {"dog",   "cat",  "garden", "ball",
                           "house", "water", "boy",   "girl"};
  spec.bank[Upos::VERB] = {"runs", "sees", "throws", "wants", "falls", "goes"};
  spec.bank[Upos::AUX] = {"is", "was"};
  spec.bank[Upos::ADJ] = {"big", "red", "happy"};
  spec.bank[Upos::ADV] = {"quickly", "here"};
  spec.bank[Upos::ADP] = {"in", "on", "with"};
  spec.bank[Upos::CCONJ] = {"and", "but"};
  spec.bank[Upos::SCONJ] = {"because"};
  spec.bank[Upos::INTJ] = {"uh", "um"};
  spec.nonwords = {"flom", "dak", "pimo"};
  return finish(std::move(spec));
}

LanguageSpec french() {
  LanguageSpec spec;
  spec.code = "fr";
  spec.chat_code = "fra";
  spec.bank[Upos::DET] = {"le", "la", "un"};
  spec.bank[Upos::PRON] = {"elle", "il", "on"};
  spec.bank[Upos::NOUN] = {"chien",  "chat", "jardin", "balle",
                           "maison", "eau",  "garçon", "fille"};
  spec.bank[Upos::VERB] = {"court", "voit", "lance", "veut", "tombe", "va"};
  spec.bank[Upos::AUX] = {"est", "était"};
  spec.bank[Upos::ADJ] = {"grand", "rouge", "content"};
  spec.bank[Upos::ADV] = {"vite", "ici"};
  spec.bank[Upos::ADP] = {"dans", "sur", "avec"};
  spec.bank[Upos::CCONJ] = {"et", "mais"};
  spec.bank[Upos::SCONJ] = {"quand"};
  spec.bank[Upos::INTJ] = {"euh", "ben"};
  spec.nonwords = {"plof", "talu", "mido"};
  return finish(std::move(spec));
}

// ------------------------------------------------------------- templates

struct Slot {
  enum Kind { Bank, Nonword, RepeatPrevious } kind = Bank;
  Upos upos = Upos::NOUN;
  int head = 0;  // 1-based within the sentence, 0 = root
  const char* deprel = "dep";
};

using Template = std::vector<Slot>;

Slot bank(Upos upos, int head, const char* deprel) {
  return {Slot::Bank, upos, head, deprel};
}

const std::vector<Template>& control_templates() {
  static const std::vector<Template> templates = {
      // she sees the dog
      {bank(Upos::PRON, 2, "nsubj"), bank(Upos::VERB, 0, "root"),
       bank(Upos::DET, 4, "det"), bank(Upos::NOUN, 2, "obj")},
      // the dog runs quickly
      {bank(Upos::DET, 2, "det"), bank(Upos::NOUN, 3, "nsubj"),
       bank(Upos::VERB, 0, "root"), bank(Upos::ADV, 3, "advmod")},
      // she sees the ball and he throws the ball
      {bank(Upos::PRON, 2, "nsubj"), bank(Upos::VERB, 0, "root"),
       bank(Upos::DET, 4, "det"), bank(Upos::NOUN, 2, "obj"),
       bank(Upos::CCONJ, 7, "cc"), bank(Upos::PRON, 7, "nsubj"),
       bank(Upos::VERB, 2, "conj"), bank(Upos::DET, 9, "det"),
       bank(Upos::NOUN, 7, "obj")},
      // she runs because he falls
      {bank(Upos::PRON, 2, "nsubj"), bank(Upos::VERB, 0, "root"),
       bank(Upos::SCONJ, 5, "mark"), bank(Upos::PRON, 5, "nsubj"),
       bank(Upos::VERB, 2, "advcl")},
      // the dog is big
      {bank(Upos::DET, 2, "det"), bank(Upos::NOUN, 4, "nsubj"),
       bank(Upos::AUX, 4, "cop"), bank(Upos::ADJ, 0, "root")},
      // he goes in the garden
      {bank(Upos::PRON, 2, "nsubj"), bank(Upos::VERB, 0, "root"),
       bank(Upos::ADP, 5, "case"), bank(Upos::DET, 5, "det"),
       bank(Upos::NOUN, 2, "obl")},
      // she sees the red ball
      {bank(Upos::PRON, 2, "nsubj"), bank(Upos::VERB, 0, "root"),
       bank(Upos::DET, 5, "det"), bank(Upos::ADJ, 5, "amod"),
       bank(Upos::NOUN, 2, "obj")},
  };
  return templates;
}

const std::vector<Template>& aphasia_templates() {
  static const std::vector<Template> templates = {
      // ball
      {bank(Upos::NOUN, 0, "root")},
      // uh dog
      {bank(Upos::INTJ, 2, "discourse"), bank(Upos::NOUN, 0, "root")},
      // water water
      {bank(Upos::NOUN, 0, "root"),
       {Slot::RepeatPrevious, Upos::NOUN, 1, "dep"}},
      // she runs
      {bank(Upos::PRON, 2, "nsubj"), bank(Upos::VERB, 0, "root")},
      // flom ball
      {{Slot::Nonword, Upos::NOUN, 0, "root"}, bank(Upos::NOUN, 1, "dep")},
      // wants the water
      {bank(Upos::VERB, 0, "root"), bank(Upos::DET, 3, "det"),
       bank(Upos::NOUN, 1, "obj")},
      // uh wants water
      {bank(Upos::INTJ, 2, "discourse"), bank(Upos::VERB, 0, "root"),
       bank(Upos::NOUN, 2, "obj")},
  };
  return templates;
}

struct Utterance {
  std::vector<std::string> forms;
  std::vector<Upos> upos;
  std::vector<int> heads;
  std::vector<std::string> deprels;
};

Utterance realize(const Template& tmpl, const LanguageSpec& lang, Rng& rng) {
  Utterance utt;
  for (const Slot& slot : tmpl) {
    std::string form;
    switch (slot.kind) {
      case Slot::Bank: {
        const auto& words = lang.bank.at(slot.upos);
        form = words[rng.below(static_cast<int>(words.size()))];
        break;
      }
      case Slot::Nonword:
        form = lang.nonwords[rng.below(static_cast<int>(lang.nonwords.size()))];
        break;
      case Slot::RepeatPrevious:
        form = utt.forms.back();
        break;
    }
    utt.forms.push_back(std::move(form));
    utt.upos.push_back(slot.upos);
    utt.heads.push_back(slot.head);
    utt.deprels.push_back(slot.deprel);
  }
  return utt;
}

AnnotatedSentence to_sentence(const Utterance& utt) {
  AnnotatedSentence sentence;
  for (size_t i = 0; i < utt.forms.size(); ++i) {
    AnnotatedToken token;
    token.form = utt.forms[i];
    token.lemma = fold_lower(utt.forms[i]);
    token.upos = utt.upos[i];
    token.head = utt.heads[i];
    token.deprel = utt.deprels[i];
    sentence.tokens.push_back(std::move(token));
  }
  return sentence;
}

// chain-tree annotation for decoded transcripts: known words keep their
// bank part of speech, anything else is tagged as a noun (the usual
// open-class fallback of a tagger meeting an unknown form)
AnnotatedSentence tag_decoded(const std::vector<std::string>& words,
                              const LanguageSpec& lang) {
  AnnotatedSentence sentence;
  for (size_t i = 0; i < words.size(); ++i) {
    AnnotatedToken token;
    token.form = words[i];
    token.lemma = fold_lower(words[i]);
    auto it = lang.upos_of.find(fold_lower(words[i]));
    token.upos = it == lang.upos_of.end() ? Upos::NOUN : it->second;
    token.head = static_cast<int>(i);  // 0 for the first token = root
    token.deprel = i == 0 ? "root" : "dep";
    sentence.tokens.push_back(std::move(token));
  }
  return sentence;
}

// -------------------------------------------------------------- emissions

struct EmissionNoise {
  double mild = 0.06;      // acoustically close confusion, LM-recoverable
  double severe = 0.02;    // hard substitution
  double deletion = 0.01;  // symbol swallowed by blank
};

std::vector<double> base_row(int v) { return std::vector<double>(v, 0.004); }

void push_row(std::vector<double>& flat, std::vector<double> row) {
  double sum = 0;
  for (double p : row) sum += p;
  for (double p : row) flat.push_back(p / sum);
}

// builds the T x V emission matrix for one utterance
EmissionMatrix make_emissions(const std::vector<std::string>& words,
                              const std::vector<std::string>& vocab,
                              const std::map<std::string, int>& index,
                              const EmissionNoise& noise, Rng& rng) {
  const int v = static_cast<int>(vocab.size());
  const int delimiter = index.at(kWordDelimiter);
  std::vector<int> symbols;
  for (size_t w = 0; w < words.size(); ++w) {
    if (w > 0) symbols.push_back(delimiter);
    for (const std::string& letter : word_letters(words[w]))
      symbols.push_back(index.at(letter));
  }

  std::vector<double> flat;
  auto blank_frame = [&] {
    std::vector<double> row = base_row(v);
    row[0] += 0.9;
    push_row(flat, row);
  };

  blank_frame();
  for (int symbol : symbols) {
    std::vector<double> row = base_row(v);
    if (symbol == delimiter) {
      row[symbol] += 0.9;
    } else {
      double r = rng.uniform();
      if (r < noise.severe) {
        int wrong = symbol;
        while (wrong == symbol || wrong == delimiter || wrong == 0)
          wrong = rng.below(v);
        row[wrong] += 0.80;
        row[symbol] += 0.02;
      } else if (r < noise.severe + noise.deletion) {
        row[0] += 0.85;
      } else if (r < noise.severe + noise.deletion + noise.mild) {
        int wrong = symbol;
        while (wrong == symbol || wrong == delimiter || wrong == 0)
          wrong = rng.below(v);
        row[wrong] += 0.42;
        row[symbol] += 0.34;
      } else {
        row[symbol] += 0.55 + 0.35 * rng.uniform();
      }
    }
    // two frames per symbol, then a blank separator so repeated letters
    // survive CTC collapsing
    std::vector<double> copy = row;
    push_row(flat, std::move(row));
    push_row(flat, std::move(copy));
    blank_frame();
  }

  EmissionMatrix em;
  em.vocab = vocab;
  em.word_delimiter = kWordDelimiter;
  const int t = static_cast<int>(flat.size()) / v;
  em.frames.resize(t, v);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < v; ++j)
      em.frames(i, j) = std::log(flat[size_t(i) * v + j]);
  return em;
}

// --------------------------------------------------------------- speakers

struct SpeakerPlan {
  std::string id;
  Cohort cohort = Cohort::Control;
  bool train_source = true;
};

std::string two_digits(int n) {
  std::string s = std::to_string(n);
  return s.size() < 2 ? "0" + s : s;
}

std::string three_digits(int n) {
  std::string s = std::to_string(n);
  while (s.size() < 3) s = "0" + s;
  return s;
}

}  // namespace

void generate_demo_corpus(const std::string& root_dir, std::uint64_t seed) {
  const fs::path root(root_dir);
  const std::vector<LanguageSpec> languages = {english(), french()};

  // ---- lexicons (real words only; nonwords deliberately absent)
  for (const LanguageSpec& lang : languages) {
    std::set<std::string> entries;
    for (const auto& [upos, words] : lang.bank) {
      (void)upos;
      for (const std::string& word : words) entries.insert(fold_lower(word));
    }
    std::string text;
    for (const std::string& word : entries) text += word + "\n";
    write_file(root / "lexicons" / (lang.code + ".txt"), text);
  }

  // ---- LM corpora and trained ARPA models
  std::map<std::string, NGramModel> lms;
  for (size_t li = 0; li < languages.size(); ++li) {
    const LanguageSpec& lang = languages[li];
    Rng rng(Rng::mix(seed, 1000 + li));
    std::string corpus;
    const auto& templates = control_templates();
    for (int line = 0; line < 400; ++line) {
      Template tmpl = templates[rng.below(static_cast<int>(templates.size()))];
      corpus += join(realize(tmpl, lang, rng).forms, " ") + "\n";
    }
    fs::path corpus_path = root / "lm" / (lang.code + "_corpus.txt");
    fs::path arpa_path = root / "lm" / (lang.code + ".arpa");
    write_file(corpus_path, corpus);
    NGramModel model = train_kneser_ney(count_ngrams_string(corpus, 3), 0.75);
    write_arpa_file(model, arpa_path.string());
    // decode with the model as read back, exactly as the pipeline will
    lms.emplace(lang.code, read_arpa_file(arpa_path.string()));
  }

  // ---- decode parameters shared with the generated config
  DecodeParams decode;
  decode.beam_width = 16;
  decode.lm_alpha = 0.5;
  decode.lm_beta = 1.5;

  // ---- speakers
  ordered_json manifest_entries = ordered_json::array();
  std::uint64_t speaker_stream = 0;

  for (const LanguageSpec& lang : languages) {
    const bool is_en = lang.code == "en";
    std::vector<SpeakerPlan> plans;
    const int per_cohort = is_en ? 6 : 4;
    for (int i = 1; i <= per_cohort; ++i)
      plans.push_back({lang.code + "-con-" + two_digits(i), Cohort::Control,
                       is_en});
    for (int i = 1; i <= per_cohort; ++i)
      plans.push_back({lang.code + "-aph-" + two_digits(i), Cohort::Aphasia,
                       is_en});

    // shared CTC vocabulary for the language
    std::vector<std::string> vocab = {kBlankSymbol, kWordDelimiter};
    vocab.insert(vocab.end(), lang.letters.begin(), lang.letters.end());
    std::map<std::string, int> index;
    for (size_t i = 0; i < vocab.size(); ++i)
      index[vocab[i]] = static_cast<int>(i);
    std::string vocab_text;
    for (const std::string& symbol : vocab) vocab_text += symbol + "\n";

    for (const SpeakerPlan& plan : plans) {
      Rng rng(Rng::mix(seed, 2000 + speaker_stream++));
      const bool aphasic = plan.cohort == Cohort::Aphasia;
      // the first speaker of each cohort sits near the cohort boundary:
      // a mild aphasia case and a taciturn control
      const bool borderline = plan.id.ends_with("-01");

      // -- plan the utterances
      const int n_utts = aphasic ? (borderline ? 7 + rng.below(3)
                                               : 6 + rng.below(4))
                                 : 8 + rng.below(5);
      const double borrow_rate =
          aphasic ? (borderline ? 0.60 : 0.20) : (borderline ? 0.50 : 0.15);
      std::vector<Utterance> utterances;
      for (int u = 0; u < n_utts; ++u) {
        const auto& own =
            aphasic ? aphasia_templates() : control_templates();
        const auto& other =
            aphasic ? control_templates() : aphasia_templates();
        bool borrow = rng.uniform() < borrow_rate;
        const Template& tmpl =
            borrow ? other[aphasic ? rng.below(2)  // only the simple ones
                                   : 3]            // "she runs"
                   : own[rng.below(static_cast<int>(own.size()))];
        utterances.push_back(realize(tmpl, lang, rng));
      }

      // -- CHAT file
      std::string cha;
      cha += "@UTF8\n@Begin\n";
      cha += "@Languages:\t" + lang.chat_code + "\n";
      cha += "@Participants:\tPAR Participant, INV Investigator\n";
      cha += "@ID:\t" + lang.chat_code + "|demo|PAR||" +
             (aphasic ? "aphasia" : "control") + "|||Participant|||\n";
      cha += "@Media:\t" + plan.id + ", audio\n";
      std::int64_t clock_ms = 0;
      const int ms_per_token =
          aphasic ? (borderline ? 1100 + rng.below(300)
                                : 1800 + rng.below(700))
                  : (borderline ? 1000 + rng.below(250)
                                : 850 + rng.below(350));
      for (size_t u = 0; u < utterances.size(); ++u) {
        if (u > 0 && u % 3 == 0)
          cha += std::string("*INV:\t") +
                 (rng.uniform() < 0.5 ? "mhm ." : "tell me more .") + "\n";
        std::vector<std::string> tokens = utterances[u].forms;
        // decorations that the cleaner removes entirely
        if (rng.uniform() < (aphasic ? 0.5 : 0.0))
          tokens.insert(tokens.begin() + rng.below(int(tokens.size()) + 1),
                        "&-uh");
        if (rng.uniform() < (aphasic ? 0.4 : 0.2))
          tokens.insert(tokens.begin() + rng.below(int(tokens.size()) + 1),
                        "(.)");
        std::int64_t duration =
            ms_per_token * std::int64_t(utterances[u].forms.size()) +
            rng.below(400);
        cha += "*PAR:\t" + join(tokens, " ") + " . \x15" +
               std::to_string(clock_ms) + "_" +
               std::to_string(clock_ms + duration) + "\x15\n";
        clock_ms += duration + 500 + rng.below(1500);
      }
      cha += "@End\n";
      write_file(root / "chat" / (plan.id + ".cha"), cha);

      // -- oracle annotations, one sentence per utterance
      std::vector<AnnotatedSentence> oracle;
      for (const Utterance& utt : utterances) oracle.push_back(to_sentence(utt));
      write_file(root / "conllu" / (plan.id + ".conllu"),
                 write_conllu(oracle));

      // -- emissions, written then re-read so decoding sees the float32
      //    values exactly as the pipeline will
      EmissionNoise noise;
      if (aphasic) noise = {0.10, 0.05, 0.03};
      fs::path em_dir = root / "emissions" / plan.id;
      write_file(em_dir / "vocab.txt", vocab_text);
      std::vector<AnnotatedSentence> asr_sentences, asr_lm_sentences;
      for (size_t u = 0; u < utterances.size(); ++u) {
        EmissionMatrix em = make_emissions(utterances[u].forms, vocab, index,
                                           noise, rng);
        fs::path em_path = em_dir / ("utt_" + three_digits(int(u)) + ".emat");
        write_emissions_file(em, em_path.string(),
                             (em_dir / "vocab.txt").string());
        EmissionMatrix loaded = load_emissions_file(
            em_path.string(), (em_dir / "vocab.txt").string());
        std::vector<std::string> greedy =
            split_ws(greedy_decode(loaded).transcript);
        std::vector<std::string> fused = split_ws(
            beam_decode(loaded, decode, &lms.at(lang.code)).transcript);
        if (!greedy.empty()) asr_sentences.push_back(tag_decoded(greedy, lang));
        if (!fused.empty())
          asr_lm_sentences.push_back(tag_decoded(fused, lang));
      }
      write_file(root / "conllu" / (plan.id + ".asr.conllu"),
                 write_conllu(asr_sentences));
      write_file(root / "conllu" / (plan.id + ".asr_with_lm.conllu"),
                 write_conllu(asr_lm_sentences));

      manifest_entries.push_back(
          {{"speaker_id", plan.id},
           {"language", lang.code},
           {"cohort", aphasic ? "aphasia" : "control"},
           {"split_role", plan.train_source ? "train_source" : "eval_target"},
           {"participant", "PAR"},
           {"chat_path", "chat/" + plan.id + ".cha"},
           {"conllu_path", "conllu/" + plan.id + ".conllu"},
           {"emissions_dir", "emissions/" + plan.id},
           {"conllu_asr_path", "conllu/" + plan.id + ".asr.conllu"},
           {"conllu_asr_with_lm_path",
            "conllu/" + plan.id + ".asr_with_lm.conllu"}});
    }
  }

  // ---- manifest + config
  ordered_json manifest;
  manifest["entries"] = manifest_entries;
  write_file(root / "manifest.json", manifest.dump(2) + "\n");

  ordered_json config;
  config["seed"] = 7;
  config["keep_fillers"] = false;
  config["wer_table"] = true;
  config["languages"] = {"en", "fr"};
  config["lexicons"] = {{"en", "lexicons/en.txt"}, {"fr", "lexicons/fr.txt"}};
  config["lm"] = {{"order", 3},
                  {"discount", 0.75},
                  {"arpa", {{"en", "lm/en.arpa"}, {"fr", "lm/fr.arpa"}}}};
  config["decode"] = {{"beam_width", decode.beam_width},
                      {"lm_alpha", decode.lm_alpha},
                      {"lm_beta", decode.lm_beta},
                      {"prune_log_threshold", decode.prune_log_threshold}};
  config["classifier"] = {{"kind", "gradient_boosting"},
                          {"hyperparameters", ordered_json::object()}};
  config["classifiers_compared"] = {"linear_svm", "decision_tree",
                                    "gradient_boosting", "random_forest"};
  ordered_json pairings = ordered_json::array();
  for (const char* train : {"asr", "asr_with_lm"})
    for (const char* eval : {"oracle", "asr", "asr_with_lm"})
      pairings.push_back(ordered_json::array({train, eval}));
  config["evaluation"] = {
      {"monolingual", true},
      {"zero_shot", true},
      {"pairs", {{{"source", "en"}, {"target", "fr"}}}},
      {"monolingual_sources", {"oracle", "asr", "asr_with_lm"}},
      {"transfer_pairings", pairings}};
  config["metrics"] = {{"lowercase", true}, {"strip_punctuation", true}};
  write_file(root / "config.json", config.dump(2) + "\n");
}

}  // namespace clad
