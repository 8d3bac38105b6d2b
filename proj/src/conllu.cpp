#include "clad/conllu.hpp"

#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "clad/error.hpp"
#include "clad/text.hpp"

namespace clad {

namespace {

const std::unordered_map<std::string, Upos>& upos_table() {
  static const std::unordered_map<std::string, Upos> table = {
      {"ADJ", Upos::ADJ},     {"ADP", Upos::ADP},   {"ADV", Upos::ADV},
      {"AUX", Upos::AUX},     {"CCONJ", Upos::CCONJ}, {"DET", Upos::DET},
      {"INTJ", Upos::INTJ},   {"NOUN", Upos::NOUN}, {"NUM", Upos::NUM},
      {"PART", Upos::PART},   {"PRON", Upos::PRON}, {"PROPN", Upos::PROPN},
      {"PUNCT", Upos::PUNCT}, {"SCONJ", Upos::SCONJ}, {"SYM", Upos::SYM},
      {"VERB", Upos::VERB},   {"X", Upos::X},
  };
  return table;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

// Walks every parent chain; revisiting a node within one chain is a cycle.
void validate_tree(const AnnotatedSentence& sentence) {
  const int n = static_cast<int>(sentence.tokens.size());
  int roots = 0;
  for (const AnnotatedToken& tok : sentence.tokens) {
    if (tok.head < 0 || tok.head > n)
      throw Error(ErrorCode::MalformedRow,
                  "head index " + std::to_string(tok.head) + " out of range");
    if (tok.head == 0) ++roots;
  }
  if (roots > 1) throw Error(ErrorCode::MultipleRoots,
                             std::to_string(roots) + " root tokens");
  for (int i = 1; i <= n; ++i) {
    std::vector<bool> seen(n + 1, false);
    int cur = i;
    while (cur != 0) {
      if (seen[cur])
        throw Error(ErrorCode::CyclicTree,
                    "cycle through token " + std::to_string(cur));
      seen[cur] = true;
      cur = sentence.tokens[cur - 1].head;
    }
  }
  if (roots == 0) throw Error(ErrorCode::CyclicTree, "no root token");
}

void finish_sentence(std::vector<std::string>& ids,
                     AnnotatedSentence& sentence,
                     std::vector<AnnotatedSentence>& out) {
  if (sentence.tokens.empty()) return;
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != std::to_string(i + 1))
      throw Error(ErrorCode::MalformedRow,
                  "non-sequential token id '" + ids[i] + "'");
  validate_tree(sentence);
  out.push_back(std::move(sentence));
  sentence = AnnotatedSentence{};
  ids.clear();
}

}  // namespace

const char* upos_name(Upos upos) {
  switch (upos) {
    case Upos::ADJ: return "ADJ";
    case Upos::ADP: return "ADP";
    case Upos::ADV: return "ADV";
    case Upos::AUX: return "AUX";
    case Upos::CCONJ: return "CCONJ";
    case Upos::DET: return "DET";
    case Upos::INTJ: return "INTJ";
    case Upos::NOUN: return "NOUN";
    case Upos::NUM: return "NUM";
    case Upos::PART: return "PART";
    case Upos::PRON: return "PRON";
    case Upos::PROPN: return "PROPN";
    case Upos::PUNCT: return "PUNCT";
    case Upos::SCONJ: return "SCONJ";
    case Upos::SYM: return "SYM";
    case Upos::VERB: return "VERB";
    case Upos::X: return "X";
  }
  return "X";
}

Upos upos_from_string(const std::string& tag) {
  if (tag == "_") return Upos::X;  // unannotated column
  auto it = upos_table().find(tag);
  if (it == upos_table().end())
    throw Error(ErrorCode::MalformedRow, "unknown UPOS tag '" + tag + "'");
  return it->second;
}

int AnnotatedSentence::root_index() const {
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i].head == 0) return static_cast<int>(i) + 1;
  return 0;
}

std::vector<AnnotatedSentence> parse_conllu(std::istream& source) {
  std::vector<AnnotatedSentence> out;
  AnnotatedSentence sentence;
  std::vector<std::string> ids;

  std::string line;
  size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish_sentence(ids, sentence, out);
      continue;
    }
    if (line[0] == '#') continue;

    std::vector<std::string> cols = split_tabs(line);
    if (cols.size() != 10)
      throw Error(ErrorCode::MalformedRow,
                  "expected 10 columns, got " + std::to_string(cols.size()) +
                      " at line " + std::to_string(line_no));

    const std::string& id = cols[0];
    if (id.find('-') != std::string::npos ||
        id.find('.') != std::string::npos)
      continue;  // multiword-token range or empty node

    AnnotatedToken tok;
    tok.form = cols[1];
    tok.lemma = cols[2];
    tok.upos = upos_from_string(cols[3]);
    try {
      tok.head = std::stoi(cols[6]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedRow,
                  "non-integer HEAD '" + cols[6] + "' at line " +
                      std::to_string(line_no));
    }
    tok.deprel = cols[7];
    ids.push_back(id);
    sentence.tokens.push_back(std::move(tok));
  }
  finish_sentence(ids, sentence, out);
  return out;
}

std::vector<AnnotatedSentence> parse_conllu_string(const std::string& text) {
  std::istringstream ss(text);
  return parse_conllu(ss);
}

std::vector<AnnotatedSentence> load_conllu_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_conllu(in);
}

std::string write_conllu(const std::vector<AnnotatedSentence>& sentences) {
  std::string out;
  for (const AnnotatedSentence& sentence : sentences) {
    for (size_t i = 0; i < sentence.tokens.size(); ++i) {
      const AnnotatedToken& tok = sentence.tokens[i];
      out += std::to_string(i + 1);
      out += '\t';
      out += tok.form;
      out += '\t';
      out += tok.lemma;
      out += '\t';
      out += upos_name(tok.upos);
      out += "\t_\t_\t";
      out += std::to_string(tok.head);
      out += '\t';
      out += tok.deprel;
      out += "\t_\t_\n";
    }
    out += '\n';
  }
  return out;
}

AnnotatedRecord attach_annotations(SpeakerRecord record,
                                   std::vector<AnnotatedSentence> sentences) {
  if (record.utterances.size() != sentences.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(record.utterances.size()) + " utterances vs " +
                    std::to_string(sentences.size()) + " annotated sentences");
  return AnnotatedRecord{std::move(record), std::move(sentences)};
}

Lexicon load_lexicon(std::istream& source, const std::string& language) {
  Lexicon lexicon;
  lexicon.language = language;
  std::string line;
  while (std::getline(source, line)) {
    // one word per line; stray extra tokens become entries of their own
    for (const std::string& word : split_ws(line))
      lexicon.entries.insert(fold_lower(word));
  }
  if (lexicon.entries.empty())
    throw Error(ErrorCode::EmptyLexicon, "no entries for " + language);
  return lexicon;
}

Lexicon load_lexicon_file(const std::string& path, const std::string& language) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return load_lexicon(in, language);
}

}  // namespace clad
