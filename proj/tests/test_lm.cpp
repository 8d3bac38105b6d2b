#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clad/error.hpp"
#include "clad/lm.hpp"
#include "clad/rng.hpp"
#include "clad/text.hpp"

using namespace clad;

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) < tol; }

double p10(double log10_value) { return std::pow(10.0, log10_value); }

// Event space of a trained model: every word the model can predict.
std::vector<std::string> event_space(const NGramModel& model) {
  std::vector<std::string> words;
  for (const std::string& w : model.vocab)
    if (w != kSentenceStart) words.push_back(w);
  return words;
}

double context_mass(const NGramModel& model, const TokenSeq& context) {
  double sum = 0;
  for (const std::string& w : event_space(model))
    sum += p10(log_prob(model, w, context));
  return sum;
}

// Independent recursive backoff evaluation straight off the model maps.
double oracle_log_prob(const NGramModel& model, const std::string& word,
                       TokenSeq context) {
  // Clamp to order-1 and map OOV items, as the query contract states.
  while (context.size() > size_t(model.order - 1))
    context.erase(context.begin());
  for (auto& tok : context)
    if (!model.in_vocab(tok)) tok = kUnknown;
  const std::string w = model.in_vocab(word) ? word : kUnknown;

  std::function<double(TokenSeq)> eval = [&](TokenSeq ctx) -> double {
    TokenSeq gram = ctx;
    gram.push_back(w);
    auto hit = model.prob.find(gram);
    if (hit != model.prob.end()) return hit->second;
    if (ctx.empty()) return model.prob.at({kUnknown});
    auto bow = model.backoff.find(ctx);
    const double weight = bow == model.backoff.end() ? 0.0 : bow->second;
    return weight + eval(TokenSeq(ctx.begin() + 1, ctx.end()));
  };
  return eval(context);
}

std::string random_corpus(Rng& rng, int max_sentences, int vocab_size) {
  std::vector<std::string> lines;
  const int n = 1 + rng.below(max_sentences);
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> toks;
    const int len = 1 + rng.below(8);
    for (int k = 0; k < len; ++k)
      toks.push_back(std::string(1, static_cast<char>('a' + rng.below(vocab_size))));
    lines.push_back(join(toks, " "));
  }
  return join(lines, "\n");
}

std::string data_path(const char* name) {
  return std::string(CLAD_TEST_DATA_DIR) + "/" + name;
}

}  // namespace

// ---------------------------------------------------------------------------
// Counting.
// ---------------------------------------------------------------------------

TEST_CASE("count_ngrams pads and counts every order") {
  NGramCounts counts = count_ngrams_string("a b", 2);
  CHECK_EQ(counts.order, 2);
  CHECK_EQ(counts.count({kSentenceStart, "a"}), 1);
  CHECK_EQ(counts.count({"a", "b"}), 1);
  CHECK_EQ(counts.count({"b", kSentenceEnd}), 1);
  CHECK_EQ(counts.count({"a"}), 1);
  CHECK_EQ(counts.count({"b"}), 1);
  CHECK_EQ(counts.count({kSentenceEnd}), 1);
  CHECK_EQ(counts.count({"a", "a"}), 0);
  CHECK_EQ(counts.count({}), 0);
}

TEST_CASE("count_ngrams order 1 has no start padding") {
  NGramCounts counts = count_ngrams_string("a a a", 1);
  CHECK_EQ(counts.count({"a"}), 3);
  CHECK_EQ(counts.count({kSentenceEnd}), 1);
  CHECK_EQ(counts.count({kSentenceStart}), 0);
}

TEST_CASE("count_ngrams is additive across identical lines") {
  NGramCounts one = count_ngrams_string("x y", 2);
  NGramCounts two = count_ngrams_string("x y\nx y", 2);
  for (const auto& level : one.by_order)
    for (const auto& [gram, c] : level) {
      CAPTURE(join(gram, " "));
      CHECK_EQ(two.count(gram), 2 * c);
    }
}

TEST_CASE("count_ngrams skips blank lines and rejects empty corpora") {
  NGramCounts counts = count_ngrams_string("\n  \na b\n\n", 2);
  CHECK_EQ(counts.count({"a", "b"}), 1);

  for (const char* corpus : {"", "\n\n", "   \n\t\n"}) {
    CAPTURE(corpus);
    try {
      count_ngrams_string(corpus, 2);
      FAIL("expected EmptyCorpus");
    } catch (const Error& e) {
      CHECK_EQ(e.code(), ErrorCode::EmptyCorpus);
    }
  }
  CHECK_THROWS_AS(count_ngrams_string("a", 0), Error);
}

TEST_CASE("adding a sentence never decreases any count") {
  Rng rng(808);
  for (int trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    const std::string base = random_corpus(rng, 10, 4);
    const std::string extra = random_corpus(rng, 1, 4);
    NGramCounts before = count_ngrams_string(base, 3);
    NGramCounts after = count_ngrams_string(base + "\n" + extra, 3);
    for (const auto& level : before.by_order)
      for (const auto& [gram, c] : level) CHECK_GE(after.count(gram), c);
  }
}

// ---------------------------------------------------------------------------
// Kneser-Ney training: the hand-evaluated 5-token corpus.
//
// Corpus "a b a b a", order 2, d = 0.75. Padded: <s> a b a b a </s>.
// Bigrams: (<s>,a):1 (a,b):2 (b,a):2 (a,</s>):1.
// Continuation counts: a continued by {<s>,b} -> 2; b by {a} -> 1;
// </s> by {a} -> 1; total 4, 3 continued types; event space {a,b,</s>,<unk>}.
//   gamma_uni = 0.75*3/4 = 0.5625, uniform = 1/4
//   P1(a)     = (2-0.75)/4 + 0.5625/4 = 0.453125
//   P1(b)     = (1-0.75)/4 + 0.5625/4 = 0.203125
//   P1(</s>)  = 0.203125
//   P1(<unk>) = 0.140625                      (sums to 1)
// Context a: total 3, 2 follower types, gamma(a) = 0.75*2/3 = 0.5
//   P(b|a)    = (2-0.75)/3 + 0.5*0.203125 = 199/384 = 0.518229166...
//   P(</s>|a) = (1-0.75)/3 + 0.5*0.203125 = 0.184895833...
// Context <s>: total 1, 1 type, gamma(<s>) = 0.75
//   P(a|<s>)  = (1-0.75)/1 + 0.75*0.453125 = 0.58984375
// ---------------------------------------------------------------------------

TEST_CASE("train_kneser_ney matches the hand-evaluated toy corpus") {
  NGramModel model = train_kneser_ney(count_ngrams_string("a b a b a", 2), 0.75);

  CHECK(near(p10(log_prob(model, "a", {})), 0.453125, 1e-9));
  CHECK(near(p10(log_prob(model, "b", {})), 0.203125, 1e-9));
  CHECK(near(p10(log_prob(model, kSentenceEnd, {})), 0.203125, 1e-9));
  CHECK(near(p10(log_prob(model, kUnknown, {})), 0.140625, 1e-9));

  CHECK(near(p10(log_prob(model, "b", {"a"})), 199.0 / 384.0, 1e-9));
  CHECK(near(p10(log_prob(model, kSentenceEnd, {"a"})), 71.0 / 384.0, 1e-9));
  CHECK(near(p10(log_prob(model, "a", {kSentenceStart})), 0.58984375, 1e-9));

  // gamma(a) = 0.5 is the stored backoff weight.
  CHECK(near(p10(model.backoff.at({"a"})), 0.5, 1e-9));

  // Unseen continuations keep positive mass.
  CHECK_GT(p10(log_prob(model, kUnknown, {"a"})), 0.0);
  CHECK_GT(p10(log_prob(model, "a", {"a"})), 0.0);

  // The whole context-a distribution sums to one.
  CHECK(near(context_mass(model, {"a"}), 1.0, 1e-9));
}

TEST_CASE("training errors") {
  try {
    train_kneser_ney(count_ngrams_string("a b", 2), 1.0);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), ErrorCode::ConfigError);
  }
  CHECK_THROWS_AS(train_kneser_ney(count_ngrams_string("a b", 2), 0.0), Error);
  CHECK_THROWS_AS(train_kneser_ney(count_ngrams_string("a b", 2), -0.5), Error);

  NGramCounts empty;  // never produced by count_ngrams
  try {
    train_kneser_ney(empty, 0.75);
    FAIL("expected DegenerateCorpus");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), ErrorCode::DegenerateCorpus);
  }
}

TEST_CASE("every observed context distribution sums to one") {
  Rng rng(20240311);
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    const int order = 1 + rng.below(4);
    const double discount = 0.1 + 0.8 * rng.uniform();
    const std::string corpus = random_corpus(rng, 50, 1 + rng.below(20));
    NGramCounts counts = count_ngrams_string(corpus, order);
    NGramModel model = train_kneser_ney(counts, discount);

    // Empty context plus every gram short enough to serve as a context.
    std::vector<TokenSeq> contexts = {{}};
    for (int k = 1; k < order; ++k)
      for (const auto& [gram, c] : counts.by_order[k - 1]) {
        (void)c;
        contexts.push_back(gram);
      }
    // A context the corpus cannot contain.
    contexts.push_back({"unseen-context-token"});

    for (const TokenSeq& ctx : contexts) {
      CAPTURE(join(ctx, " "));
      CHECK(near(context_mass(model, ctx), 1.0, 1e-9));
    }

    // All stored probabilities are genuine log-probabilities.
    for (const auto& [gram, lp] : model.prob) {
      CAPTURE(join(gram, " "));
      CHECK_LE(lp, 0.0);
    }
  }
}

TEST_CASE("log_prob agrees with an independent recursive backoff oracle") {
  Rng rng(6161);
  for (int trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    const int order = 2 + rng.below(3);
    NGramModel model = train_kneser_ney(
        count_ngrams_string(random_corpus(rng, 6, 5), order), 0.75);

    const std::vector<std::string> pool = {"a",  "b",     "c",          "d",
                                           "e",  "zzz",   kSentenceEnd, kUnknown,
                                           "qq", "other"};
    for (int q = 0; q < 50; ++q) {
      TokenSeq ctx;
      const int len = rng.below(order + 1);  // sometimes longer than order-1
      for (int i = 0; i < len; ++i)
        ctx.push_back(pool[static_cast<size_t>(rng.below(10))]);
      const std::string& word = pool[static_cast<size_t>(rng.below(10))];
      CAPTURE(join(ctx, " "));
      CAPTURE(word);
      CHECK(near(log_prob(model, word, ctx), oracle_log_prob(model, word, ctx),
                 1e-12));
    }
  }
}

TEST_CASE("score_sequence composes per-word queries") {
  NGramModel model = train_kneser_ney(count_ngrams_string("a b a b a", 2), 0.75);
  const double expected = log_prob(model, "a", {kSentenceStart}) +
                          log_prob(model, "b", {kSentenceStart, "a"}) +
                          log_prob(model, kSentenceEnd, {kSentenceStart, "a", "b"});
  CHECK(near(score_sequence(model, {"a", "b"}), expected, 1e-12));
  CHECK_THROWS_AS(score_sequence(model, {}), Error);

  // Lower scores for word salad than for corpus-like text.
  CHECK_GT(score_sequence(model, {"a", "b", "a"}),
           score_sequence(model, {"b", "b", "b"}));
}

// ---------------------------------------------------------------------------
// ARPA I/O.
// ---------------------------------------------------------------------------

TEST_CASE("ARPA round-trip is lossless within 1e-6 on 100 random models") {
  Rng rng(909090);
  for (int trial = 0; trial < 100; ++trial) {
    CAPTURE(trial);
    const int order = 1 + rng.below(4);
    const double discount = 0.1 + 0.8 * rng.uniform();
    NGramModel model = train_kneser_ney(
        count_ngrams_string(random_corpus(rng, 12, 6), order), discount);

    NGramModel reloaded = read_arpa_string(write_arpa_string(model));
    CHECK_EQ(reloaded.order, model.order);
    CHECK_EQ(reloaded.vocab, model.vocab);
    REQUIRE_EQ(reloaded.prob.size(), model.prob.size());
    REQUIRE_EQ(reloaded.backoff.size(), model.backoff.size());
    for (const auto& [gram, lp] : model.prob) {
      CAPTURE(join(gram, " "));
      CHECK(near(reloaded.prob.at(gram), lp, 1e-6));
    }
    for (const auto& [gram, bow] : model.backoff) {
      CAPTURE(join(gram, " "));
      CHECK(near(reloaded.backoff.at(gram), bow, 1e-6));
    }

    // Queries agree too, including out-of-vocabulary ones.
    for (int q = 0; q < 10; ++q) {
      TokenSeq ctx;
      for (int i = 0; i < rng.below(3); ++i)
        ctx.push_back(std::string(1, static_cast<char>('a' + rng.below(8))));
      const std::string word(1, static_cast<char>('a' + rng.below(8)));
      CHECK(near(log_prob(reloaded, word, ctx), log_prob(model, word, ctx),
                 1e-6));
    }
  }
}

TEST_CASE("the pinned external ARPA fixture answers hand-read queries") {
  NGramModel model = read_arpa_file(data_path("tiny.arpa"));
  CHECK_EQ(model.order, 2);
  CHECK_EQ(model.vocab.size(), 5);

  // Stored bigram.
  CHECK(near(log_prob(model, "b", {"a"}), -0.4259687, 1e-9));
  // Backed-off: bo(b) + P1(</s>) read straight from the file.
  CHECK(near(log_prob(model, kSentenceEnd, {"b"}), -1.2218487, 1e-6));
  // Out-of-vocabulary word: bo(a) + P1(<unk>).
  CHECK(near(log_prob(model, "zzz", {"a"}), -1.6020600, 1e-6));
  // Stored sentence-initial bigram.
  CHECK(near(log_prob(model, "a", {kSentenceStart}), -0.2218487, 1e-9));
  // Unknown context word maps to <unk>, which has no backoff entry.
  CHECK(near(log_prob(model, "b", {"zzz"}), -0.5228787, 1e-9));
  // Context longer than order-1 is truncated to the last word.
  CHECK(near(log_prob(model, "b", {"b", "a"}), -0.4259687, 1e-9));
  // Composition over a two-word sequence.
  CHECK(near(score_sequence(model, {"a", "b"}), -1.8696662, 1e-6));
}

TEST_CASE("read_arpa rejects malformed inputs") {
  auto expect_malformed = [](const std::string& text, const char* needle) {
    CAPTURE(text);
    try {
      read_arpa_string(text);
      FAIL_CHECK("expected MalformedArpa for: " << needle);
    } catch (const Error& e) {
      CHECK_EQ(e.code(), ErrorCode::MalformedArpa);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  // Declared two bigrams, listed one.
  expect_malformed(
      "\\data\\\n"
      "ngram 1=2\n"
      "ngram 2=2\n"
      "\\1-grams:\n"
      "-0.5\ta\t-0.3\n"
      "-0.5\tb\n"
      "\\2-grams:\n"
      "-0.2\ta b\n"
      "\\end\\\n",
      "declared 2 entries, found 1");

  expect_malformed("no header at all\n", "missing \\data\\ section");

  expect_malformed(
      "\\data\\\n"
      "ngram 1=1\n"
      "\\1-grams:\n"
      "-0.5\ta\n",
      "unexpected end of file");

  expect_malformed(
      "\\data\\\n"
      "ngram 1=1\n"
      "ngram 3=1\n",
      "non-sequential");

  expect_malformed(
      "\\data\\\n"
      "\\1-grams:\n",
      "no ngram count declarations");

  expect_malformed(
      "\\data\\\n"
      "ngram 1=1\n"
      "\\1-grams:\n"
      "oops\ta\n"
      "\\end\\\n",
      "bad probability");

  expect_malformed(
      "\\data\\\n"
      "ngram 1=1\n"
      "\\2-grams:\n"
      "-0.5\ta b\n"
      "\\end\\\n",
      "expected \\1-grams:");

  expect_malformed(
      "\\data\\\n"
      "ngram 1=1\n"
      "\\1-grams:\n"
      "-0.5\ta\t-0.1\textra\n"
      "\\end\\\n",
      "bad entry");
}

TEST_CASE("read_arpa tolerates comments, blank lines and CRLF") {
  NGramModel model = read_arpa_string(
      "header chatter to ignore\r\n"
      "\r\n"
      "\\data\\\r\n"
      "ngram 1=3\r\n"
      "\r\n"
      "\\1-grams:\r\n"
      "-0.30103\ta\r\n"
      "-0.60206\tb\r\n"
      "-0.60206\t<unk>\r\n"
      "\r\n"
      "\\end\\\r\n");
  CHECK_EQ(model.order, 1);
  CHECK(near(log_prob(model, "a", {}), -0.30103, 1e-9));
  CHECK(near(log_prob(model, "never-seen", {}), -0.60206, 1e-9));
}

// ---------------------------------------------------------------------------
// Corpus preparation.
// ---------------------------------------------------------------------------

TEST_CASE("prepare_corpus_line applies the requested normalizations") {
  CorpusPrepOptions off;
  CHECK_EQ(prepare_corpus_line("The  CAT, sat!", off), "The CAT, sat!");

  CorpusPrepOptions lower;
  lower.lowercase = true;
  CHECK_EQ(prepare_corpus_line("The CAT", lower), "the cat");

  CorpusPrepOptions strip;
  strip.strip_punctuation = true;
  CHECK_EQ(prepare_corpus_line("The CAT, sat!", strip), "The CAT sat");

  CorpusPrepOptions both;
  both.lowercase = true;
  both.strip_punctuation = true;
  CHECK_EQ(prepare_corpus_line("  The CAT, sat!  ", both), "the cat sat");
  CHECK_EQ(prepare_corpus_line("...", both), "");
}
