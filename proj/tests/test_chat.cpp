#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clad/chat.hpp"
#include "clad/error.hpp"
#include "clad/text.hpp"

using namespace clad;

namespace {

std::string fixture_path(const std::string& name) {
  return std::string(CLAD_TEST_DATA_DIR) + "/" + name;
}

ChatDocument parse_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  REQUIRE(in.good());
  return parse_chat(in);
}

std::vector<std::string> cleaned(const std::string& raw_text,
                                 bool keep_fillers = false) {
  RawUtterance raw;
  raw.speaker_code = "PAR";
  raw.raw_text = raw_text;
  CleanOptions options;
  options.keep_fillers = keep_fillers;
  return clean_utterance(raw, options).tokens;
}

using Tokens = std::vector<std::string>;

}  // namespace

TEST_CASE("single tier with media bullet") {
  std::string text = "*PAR:\tthe dog barked . \x15" "12300_15800\x15\n";
  ChatDocument doc = parse_chat_string(text);
  REQUIRE(doc.utterances.size() == 1);
  CHECK(doc.utterances[0].speaker_code == "PAR");
  REQUIRE(doc.utterances[0].media.has_value());
  CHECK(doc.utterances[0].media->start_ms == 12300);
  CHECK(doc.utterances[0].media->end_ms == 15800);
  CHECK(doc.utterances[0].raw_text == "the dog barked .");
}

TEST_CASE("dependent tiers are skipped") {
  std::string text =
      "*PAR:\tshe went home .\n"
      "%mor:\tpro|she v|go&PAST adv|home .\n"
      "%gra:\t1|2|SUBJ 2|0|ROOT\n";
  ChatDocument doc = parse_chat_string(text);
  CHECK(doc.utterances.size() == 1);
  CHECK(doc.utterances[0].raw_text == "she went home .");
}

TEST_CASE("continuation lines join with a single space") {
  std::string text = "*PAR:\tand then\n\tshe left .\n";
  ChatDocument doc = parse_chat_string(text);
  REQUIRE(doc.utterances.size() == 1);
  CHECK(doc.utterances[0].raw_text == "and then she left .");
}

TEST_CASE("speaker codes seen only on tiers become participants") {
  ChatDocument doc = parse_chat_string("*XYZ:\thello there .\n");
  CHECK(doc.has_participant("XYZ"));
}

TEST_CASE("tier without separator is malformed") {
  CHECK_THROWS_AS(parse_chat_string("*PAR no colon here\n"), Error);
  try {
    parse_chat_string("*PAR no colon here\n");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedTier);
  }
}

TEST_CASE("document with no utterances is empty") {
  try {
    parse_chat_string("@UTF8\n@Begin\n@End\n");
    FAIL("expected EmptyDocument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDocument);
  }
}

TEST_CASE("cleaning: retracing marker dropped, both word instances kept") {
  CHECK(cleaned("the dog [/] dog ran .") == Tokens{"the", "dog", "dog", "ran"});
}

TEST_CASE("cleaning: event, unintelligible and pause all dropped") {
  CHECK(cleaned("&=laughs xxx (.) yes") == Tokens{"yes"});
}

TEST_CASE("cleaning: produced form kept, target annotation dropped") {
  CHECK(cleaned("ball [: doll] .") == Tokens{"ball"});
}

TEST_CASE("cleaning: omitted material is expanded") {
  CHECK(cleaned("(be)cause he said so .") == Tokens{"because", "he", "said", "so"});
}

TEST_CASE("cleaning: special-form suffixes are stripped") {
  CHECK(cleaned("hello@u world@o .") == Tokens{"hello", "world"});
}

TEST_CASE("cleaning: fillers kept only with the flag") {
  CHECK(cleaned("&-uh the ball .") == Tokens{"the", "ball"});
  CHECK(cleaned("&-uh the ball .", true) == Tokens{"uh", "the", "ball"});
  // events and fragments stay dropped even with the flag
  CHECK(cleaned("&=laughs &+fr ball .", true) == Tokens{"ball"});
}

TEST_CASE("cleaning is idempotent on its own output") {
  const char* samples[] = {
      "the dog [/] dog ran .", "&=laughs xxx (.) yes",
      "<went> [//] goed@n to school .", "go(ing) home (.) now .",
      "+//. broke off [% comment] there ."};
  for (const char* sample : samples) {
    Tokens first = cleaned(sample);
    Tokens second = cleaned(join(first, " "));
    CHECK(first == second);
  }
}

TEST_CASE("assemble_record drops empty-token utterances") {
  std::string text =
      "@Participants:\tPAR Participant\n"
      "*PAR:\tthe dog ran .\n"
      "*PAR:\t&=laughs .\n"
      "*PAR:\tgood dog .\n";
  ChatDocument doc = parse_chat_string(text);
  SpeakerRecord record =
      assemble_record(doc, "PAR", "s1", "en", Cohort::Control);
  CHECK(record.utterances.size() == 2);
  CHECK_FALSE(record.total_duration_ms.has_value());
}

TEST_CASE("assemble_record sums media intervals") {
  std::string text =
      "*PAR:\tone . \x15" "0_1000\x15\n"
      "*PAR:\ttwo . \x15" "2000_3500\x15\n";
  ChatDocument doc = parse_chat_string(text);
  SpeakerRecord record =
      assemble_record(doc, "PAR", "s1", "en", Cohort::Control);
  REQUIRE(record.total_duration_ms.has_value());
  CHECK(*record.total_duration_ms == 2500);
}

TEST_CASE("assemble_record rejects unknown speakers") {
  ChatDocument doc = parse_chat_string("*PAR:\thello .\n");
  try {
    assemble_record(doc, "XXX", "s1", "en", Cohort::Control);
    FAIL("expected UnknownSpeaker");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownSpeaker);
  }
}

TEST_CASE("assemble_record with only non-lexical utterances fails") {
  ChatDocument doc = parse_chat_string("*PAR:\t&=laughs .\n");
  try {
    assemble_record(doc, "PAR", "s1", "en", Cohort::Control);
    FAIL("expected NoUsableUtterances");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoUsableUtterances);
  }
}

// The fixture file covers every cleaning rule; the expected transcript was
// derived by applying the documented ruleset by hand, line by line.
TEST_CASE("adversarial fixture cleans to the hand-derived transcript") {
  ChatDocument doc = parse_fixture("adversarial.cha");
  SpeakerRecord record =
      assemble_record(doc, "PAR", "adv", "en", Cohort::Aphasia);

  const char* expected =
      "the dog dog ran\n"
      "yes\n"
      "ball\n"
      "and then she left\n"
      "I want want the ball\n"
      "the boy runs\n"
      "the big the little dog\n"
      "because he said so\n"
      "hello world\n"
      "trailing off\n"
      "the cat meowed\n"
      "no way\n"
      "she is is happy\n"
      "café au lait\n"
      "um hm\n"
      "I really I really mean it\n"
      "dunno it\n"
      "wait here\n"
      "going home now\n"
      "broke off there\n"
      "the the the ball\n"
      "a baby cried\n"
      "this stays\n"
      "καλημέρα κόσμε\n"
      "one two three\n"
      "went goed to school\n"
      "it is a a dog\n"
      "look over there\n"
      "the boy's ball\n"
      "I I I know\n"
      "that that that one\n"
      "deep breath\n"
      "up up and away\n"
      "tired very tired\n"
      "all of them all of them fell\n"
      "nine 9 lives\n"
      "snake\n"
      "water please\n"
      "mixed line\n"
      "she runs quickly\n"
      "end of story\n"
      "he said no way\n"
      "dog cat\n"
      "last but not least\n"
      "goodbye then\n";
  CHECK(write_clean_transcript(record) == expected);

  // 50 utterances in the file; 5 clean to nothing and are dropped
  CHECK(record.utterances.size() == 45);

  // duration: brute-force sum over the kept utterances' intervals
  std::int64_t sum = 0;
  for (const CleanUtterance& utt : record.utterances)
    if (utt.media) sum += utt.media->end_ms - utt.media->start_ms;
  REQUIRE(record.total_duration_ms.has_value());
  CHECK(*record.total_duration_ms == sum);
  CHECK(sum == 9450);
}

TEST_CASE("no output token ever matches a dropped-material pattern") {
  ChatDocument doc = parse_fixture("adversarial.cha");
  for (const RawUtterance& raw : doc.utterances) {
    for (bool keep : {false, true}) {
      CleanOptions options;
      options.keep_fillers = keep;
      for (const std::string& tok : clean_utterance(raw, options).tokens) {
        CAPTURE(raw.raw_text);
        CAPTURE(tok);
        CHECK_FALSE(tok.empty());
        CHECK(tok.find('[') == std::string::npos);
        CHECK(tok.find(']') == std::string::npos);
        CHECK(tok.find('<') == std::string::npos);
        CHECK(tok.find('>') == std::string::npos);
        CHECK(tok.find('(') == std::string::npos);
        CHECK(tok.find(')') == std::string::npos);
        CHECK(tok.find('@') == std::string::npos);
        CHECK(tok.find('\x15') == std::string::npos);
        CHECK(tok[0] != '&');
        CHECK(tok != "xxx");
        CHECK(tok != "yyy");
        CHECK(tok != "www");
        CHECK(has_lexical_char(tok));
      }
    }
  }
}

TEST_CASE("parse-serialize-parse is a fixpoint") {
  ChatDocument doc = parse_fixture("adversarial.cha");
  std::string canonical = write_chat(doc);
  ChatDocument again = parse_chat_string(canonical);
  CHECK(doc == again);
  CHECK(write_chat(again) == canonical);
}

TEST_CASE("several bullets span first start to last end") {
  std::string text = "*PAR:\tone \x15" "0_500\x15 two \x15" "700_900\x15\n";
  ChatDocument doc = parse_chat_string(text);
  REQUIRE(doc.utterances[0].media.has_value());
  CHECK(doc.utterances[0].media->start_ms == 0);
  CHECK(doc.utterances[0].media->end_ms == 900);
  CHECK(doc.utterances[0].raw_text == "one  two");
}
