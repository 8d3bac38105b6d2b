#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "clad/ctc.hpp"
#include "clad/error.hpp"
#include "clad/lm.hpp"
#include "clad/rng.hpp"

using namespace clad;

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) < tol; }

// Build a matrix from per-frame probabilities (not logs).
EmissionMatrix make_em(const std::vector<std::vector<double>>& rows,
                       std::vector<std::string> vocab) {
  EmissionMatrix em;
  em.vocab = std::move(vocab);
  em.frames.resize(static_cast<Eigen::Index>(rows.size()),
                   static_cast<Eigen::Index>(em.vocab.size()));
  for (size_t t = 0; t < rows.size(); ++t) {
    REQUIRE_EQ(rows[t].size(), em.vocab.size());
    for (size_t v = 0; v < rows[t].size(); ++v)
      em.frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(v)) =
          std::log(rows[t][v]);
  }
  validate_emissions(em);
  return em;
}

// Random matrix with bounded probability ratios, so the default pruning
// threshold can never fire (min/max prob ratio stays far above e^-10).
EmissionMatrix random_em(Rng& rng, int max_frames, bool with_delimiter) {
  std::vector<std::string> vocab = {kBlankSymbol};
  const int extra = 1 + rng.below(3);
  const std::vector<std::string> pool =
      with_delimiter ? std::vector<std::string>{"A", "|", "B"}
                     : std::vector<std::string>{"A", "B", "C"};
  for (int i = 0; i < extra; ++i) vocab.push_back(pool[static_cast<size_t>(i)]);

  const int T = 1 + rng.below(max_frames);
  std::vector<std::vector<double>> rows;
  for (int t = 0; t < T; ++t) {
    std::vector<double> row;
    double sum = 0;
    for (size_t v = 0; v < vocab.size(); ++v) {
      row.push_back(0.01 + rng.uniform());
      sum += row.back();
    }
    for (double& p : row) p /= sum;
    rows.push_back(std::move(row));
  }
  return make_em(rows, std::move(vocab));
}

// Exhaustive alignment-marginalized labeling distribution: walk all V^T
// paths, collapse each (merge adjacent repeats, drop blanks, delimiter
// becomes a space) and accumulate path probabilities per labeling.
std::map<std::string, double> exhaustive_masses(const EmissionMatrix& em) {
  const int T = em.num_frames();
  const int V = em.vocab_size();
  std::map<std::string, double> masses;
  std::vector<int> path(static_cast<size_t>(T), 0);
  while (true) {
    double prob = 1.0;
    for (int t = 0; t < T; ++t)
      prob *= std::exp(em.frames(t, path[static_cast<size_t>(t)]));

    std::string label;
    int prev = -1;
    for (int t = 0; t < T; ++t) {
      const int v = path[static_cast<size_t>(t)];
      if (v != prev && v != em.blank_index) {
        if (em.vocab[static_cast<size_t>(v)] == em.word_delimiter)
          label += ' ';
        else
          label += em.vocab[static_cast<size_t>(v)];
      }
      prev = v;
    }
    masses[label] += prob;

    int pos = T - 1;
    while (pos >= 0 && path[static_cast<size_t>(pos)] == V - 1) {
      path[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++path[static_cast<size_t>(pos)];
  }
  return masses;
}

std::string best_labeling(const std::map<std::string, double>& masses) {
  std::string best;
  double best_mass = -1;
  for (const auto& [label, mass] : masses)
    if (mass > best_mass) {
      best = label;
      best_mass = mass;
    }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Greedy decoding.
// ---------------------------------------------------------------------------

TEST_CASE("greedy collapse rules") {
  const std::vector<std::string> vocab = {kBlankSymbol, "A"};

  // argmaxes [A, A, blank] -> repeats collapse
  auto r1 = greedy_decode(make_em(
      {{0.2, 0.8}, {0.3, 0.7}, {0.9, 0.1}}, vocab));
  CHECK_EQ(r1.transcript, "A");
  CHECK(near(r1.acoustic_score, std::log(0.8) + std::log(0.7) + std::log(0.9),
             1e-12));
  CHECK_EQ(r1.combined_score, r1.acoustic_score);

  // argmaxes [A, blank, A] -> the blank separates genuine repeats
  auto r2 = greedy_decode(make_em(
      {{0.2, 0.8}, {0.9, 0.1}, {0.3, 0.7}}, vocab));
  CHECK_EQ(r2.transcript, "AA");
}

TEST_CASE("greedy maps the word delimiter to a space") {
  const std::vector<std::string> vocab = {kBlankSymbol, "C", "A", "T",
                                          "|",          "D", "O", "G"};
  auto dominant = [&](int idx) {
    std::vector<double> row(vocab.size(), 0.3 / 7.0);
    row[static_cast<size_t>(idx)] = 0.7;
    return row;
  };
  auto result = greedy_decode(make_em(
      {dominant(1), dominant(2), dominant(3), dominant(4), dominant(5),
       dominant(6), dominant(7)},
      vocab));
  CHECK_EQ(result.transcript, "CAT DOG");
}

TEST_CASE("greedy is invariant to trailing certain-blank padding") {
  Rng rng(112);
  for (int trial = 0; trial < 100; ++trial) {
    CAPTURE(trial);
    EmissionMatrix em = random_em(rng, 6, trial % 2 == 0);
    const DecodeResult base = greedy_decode(em);

    EmissionMatrix padded = em;
    padded.frames.conservativeResize(em.num_frames() + 1, em.vocab_size());
    for (int v = 0; v < em.vocab_size(); ++v)
      padded.frames(em.num_frames(), v) = v == 0 ? 0.0 : -745.0;
    const DecodeResult after = greedy_decode(padded);

    CHECK_EQ(after.transcript, base.transcript);
    CHECK_EQ(after.acoustic_score, base.acoustic_score);
  }
}

// ---------------------------------------------------------------------------
// Beam search versus hand-enumerated and exhaustive oracles.
// ---------------------------------------------------------------------------

TEST_CASE("two-frame blank/A matrix: beam sums alignments where greedy cannot") {
  // Each frame: P(blank) = 0.6, P(A) = 0.4. The four paths:
  //   (b,b) -> ""  0.36
  //   (b,A), (A,b), (A,A) -> "A"  0.24 + 0.24 + 0.16 = 0.64
  EmissionMatrix em =
      make_em({{0.6, 0.4}, {0.6, 0.4}}, {kBlankSymbol, "A"});

  const DecodeResult greedy = greedy_decode(em);
  CHECK_EQ(greedy.transcript, "");
  CHECK(near(greedy.acoustic_score, 2 * std::log(0.6), 1e-12));

  DecodeParams params;
  params.beam_width = 4;
  const DecodeResult beam = beam_decode(em, params);
  CHECK_EQ(beam.transcript, "A");
  CHECK(near(beam.acoustic_score, std::log(0.64), 1e-12));
  CHECK_EQ(beam.combined_score, beam.acoustic_score);
}

TEST_CASE("one-frame matrix decodes its dominant symbol") {
  EmissionMatrix em = make_em({{0.1, 0.9}}, {kBlankSymbol, "A"});
  DecodeParams params;
  const DecodeResult result = beam_decode(em, params);
  CHECK_EQ(result.transcript, "A");
  CHECK(near(result.acoustic_score, std::log(0.9), 1e-12));
}

TEST_CASE("zero-frame matrix decodes to the empty transcript") {
  EmissionMatrix em;
  em.vocab = {kBlankSymbol, "A"};
  em.frames.resize(0, 2);
  validate_emissions(em);
  CHECK_EQ(greedy_decode(em).transcript, "");
  CHECK_EQ(beam_decode(em, DecodeParams{}).transcript, "");
}

TEST_CASE("beam equals the exhaustive alignment-marginalized argmax") {
  Rng rng(20240404);
  DecodeParams params;
  params.beam_width = 256;
  for (int trial = 0; trial < 200; ++trial) {
    CAPTURE(trial);
    EmissionMatrix em = random_em(rng, 4, trial % 3 == 0);
    const auto masses = exhaustive_masses(em);
    const std::string best = best_labeling(masses);
    const double best_mass = masses.at(best);

    const DecodeResult result = beam_decode(em, params);
    REQUIRE(masses.count(result.transcript));
    // The decoded labeling carries the maximal marginalized mass (up to
    // floating-point ties) and the reported score is that mass.
    CHECK(near(masses.at(result.transcript), best_mass,
               1e-9 * std::abs(best_mass)));
    CHECK(near(result.acoustic_score, std::log(masses.at(result.transcript)),
               1e-9));
    CHECK_EQ(result.combined_score, result.acoustic_score);
  }
}

TEST_CASE("combined score is non-decreasing in beam width") {
  Rng rng(5150);
  for (int trial = 0; trial < 60; ++trial) {
    CAPTURE(trial);
    EmissionMatrix em = random_em(rng, 4, trial % 2 == 0);
    double prev = -1e300;
    for (int width : {1, 2, 4, 8, 256}) {
      CAPTURE(width);
      DecodeParams params;
      params.beam_width = width;
      const double score = beam_decode(em, params).combined_score;
      CHECK_GE(score, prev - 1e-12);
      prev = std::max(prev, score);
    }
  }
}

TEST_CASE("beam rejects a non-positive beam width") {
  EmissionMatrix em = make_em({{0.5, 0.5}}, {kBlankSymbol, "A"});
  DecodeParams params;
  params.beam_width = 0;
  try {
    beam_decode(em, params);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), ErrorCode::ConfigError);
  }
}

// ---------------------------------------------------------------------------
// LM fusion.
// ---------------------------------------------------------------------------

TEST_CASE("zeroed fusion weights reproduce the no-LM result exactly") {
  NGramModel lm =
      train_kneser_ney(count_ngrams_string("CAT\nCAT\nCAP", 2), 0.75);
  Rng rng(31415);
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    EmissionMatrix em = random_em(rng, 5, true);
    DecodeParams neutral;
    neutral.lm_alpha = 0.0;
    neutral.lm_beta = 0.0;
    const DecodeResult with_lm = beam_decode(em, neutral, &lm);
    const DecodeResult without = beam_decode(em, neutral, nullptr);
    CHECK_EQ(with_lm.transcript, without.transcript);
    CHECK_EQ(with_lm.combined_score, without.combined_score);
    CHECK_EQ(with_lm.acoustic_score, without.acoustic_score);
  }
}

TEST_CASE("without an LM the combined score is the acoustic score") {
  Rng rng(2718);
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    EmissionMatrix em = random_em(rng, 5, true);
    DecodeParams params;  // lm_beta = 1.5, but no LM to trigger it
    const DecodeResult result = beam_decode(em, params);
    CHECK_EQ(result.combined_score, result.acoustic_score);
  }
}

TEST_CASE("the LM resolves an acoustic tie; without it the tie is lexicographic") {
  // Frames spell C, A, then an exact T/P tie, so "CAT" and "CAP" carry
  // identical acoustic mass.
  const std::vector<std::string> vocab = {kBlankSymbol, "C", "A", "T", "P"};
  EmissionMatrix em = make_em(
      {{0.01, 0.96, 0.01, 0.01, 0.01},
       {0.01, 0.01, 0.96, 0.01, 0.01},
       {0.05, 0.025, 0.025, 0.45, 0.45}},
      vocab);

  NGramModel lm =
      train_kneser_ney(count_ngrams_string("CAT\nCAT\nCAP", 2), 0.75);

  DecodeParams fused;  // defaults: alpha 0.5, beta 1.5
  CHECK_EQ(beam_decode(em, fused, &lm).transcript, "CAT");

  // Alpha 0 with beta 0 keeps the tie; lexicographic order prefers "CAP".
  DecodeParams neutral;
  neutral.lm_alpha = 0.0;
  neutral.lm_beta = 0.0;
  CHECK_EQ(beam_decode(em, neutral, &lm).transcript, "CAP");
  CHECK_EQ(beam_decode(em, neutral, nullptr).transcript, "CAP");
}

TEST_CASE("LM fusion adds alpha*ln10*log10P + beta per completed word") {
  // One word "A" spelled by a single confident frame; the trailing partial
  // word is scored once at the end of decoding.
  EmissionMatrix em = make_em({{0.1, 0.9}}, {kBlankSymbol, "A"});
  NGramModel lm = train_kneser_ney(count_ngrams_string("A\nA B", 2), 0.75);

  DecodeParams params;
  params.lm_alpha = 0.7;
  params.lm_beta = 1.25;
  const DecodeResult result = beam_decode(em, params, &lm);
  CHECK_EQ(result.transcript, "A");
  const double expected_bonus =
      0.7 * std::log(10.0) * log_prob(lm, "A", {kSentenceStart}) + 1.25;
  CHECK(near(result.combined_score - result.acoustic_score, expected_bonus,
             1e-12));
}

// ---------------------------------------------------------------------------
// EMAT1 container I/O.
// ---------------------------------------------------------------------------

TEST_CASE("emissions round-trip through the binary container") {
  Rng rng(858585);
  for (int trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    EmissionMatrix em = random_em(rng, 6, trial % 2 == 0);

    std::ostringstream data, vocab;
    write_emissions(em, data, vocab);
    std::istringstream data_in(data.str()), vocab_in(vocab.str());
    EmissionMatrix back = load_emissions(data_in, vocab_in);

    CHECK_EQ(back.vocab, em.vocab);
    REQUIRE_EQ(back.num_frames(), em.num_frames());
    REQUIRE_EQ(back.vocab_size(), em.vocab_size());
    for (int t = 0; t < em.num_frames(); ++t)
      for (int v = 0; v < em.vocab_size(); ++v)
        CHECK(near(back.frames(t, v), em.frames(t, v), 1e-6));

    DecodeParams params;
    params.beam_width = 16;
    CHECK_EQ(beam_decode(back, params).transcript,
             beam_decode(em, params).transcript);
  }
}

TEST_CASE("the container header is sixteen bytes plus float32 payload") {
  EmissionMatrix em = make_em({{0.6, 0.4}}, {kBlankSymbol, "A"});
  std::ostringstream data, vocab;
  write_emissions(em, data, vocab);
  const std::string bytes = data.str();
  REQUIRE_EQ(bytes.size(), 16 + 1 * 2 * 4);
  CHECK_EQ(bytes.substr(0, 4), "EMAT");
  // version, T, V as little-endian u32
  auto u32_at = [&](size_t off) {
    return static_cast<unsigned>(static_cast<unsigned char>(bytes[off])) |
           static_cast<unsigned>(static_cast<unsigned char>(bytes[off + 1])) << 8 |
           static_cast<unsigned>(static_cast<unsigned char>(bytes[off + 2])) << 16 |
           static_cast<unsigned>(static_cast<unsigned char>(bytes[off + 3])) << 24;
  };
  CHECK_EQ(u32_at(4), 1);
  CHECK_EQ(u32_at(8), 1);
  CHECK_EQ(u32_at(12), 2);
  CHECK_EQ(vocab.str(), "<blank>\nA\n");
}

TEST_CASE("container loading rejects corrupted inputs") {
  EmissionMatrix em =
      make_em({{0.6, 0.4}, {0.5, 0.5}}, {kBlankSymbol, "A"});
  std::ostringstream data, vocab;
  write_emissions(em, data, vocab);
  const std::string good = data.str();
  const std::string good_vocab = vocab.str();

  auto expect_error = [&](std::string bytes, std::string vocab_text,
                          ErrorCode code) {
    std::istringstream data_in(bytes), vocab_in(vocab_text);
    try {
      load_emissions(data_in, vocab_in);
      FAIL_CHECK("expected error " << static_cast<int>(code));
    } catch (const Error& e) {
      CHECK_EQ(e.code(), code);
    }
  };

  // Wrong magic.
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  expect_error(bad_magic, good_vocab, ErrorCode::BadMagic);

  // Unsupported version.
  std::string bad_version = good;
  bad_version[4] = 2;
  expect_error(bad_version, good_vocab, ErrorCode::BadMagic);

  // Truncated header.
  expect_error(good.substr(0, 10), good_vocab, ErrorCode::ShapeMismatch);

  // Payload shorter and longer than T*V floats.
  expect_error(good.substr(0, good.size() - 4), good_vocab,
               ErrorCode::ShapeMismatch);
  expect_error(good + std::string(4, '\0'), good_vocab,
               ErrorCode::ShapeMismatch);

  // Vocab problems: wrong first line, duplicate symbol, wrong count.
  expect_error(good, "A\n<blank>\n", ErrorCode::BadVocab);
  expect_error(good, "<blank>\nA\nA\n", ErrorCode::BadVocab);
  expect_error(good, "<blank>\n", ErrorCode::BadVocab);
  expect_error(good, "<blank>\nA\nB\n", ErrorCode::BadVocab);
}

TEST_CASE("validate_emissions enforces row normalization and vocab shape") {
  EmissionMatrix em = make_em({{0.6, 0.4}}, {kBlankSymbol, "A"});

  EmissionMatrix bad_rows = em;
  bad_rows.frames(0, 0) = std::log(0.4);  // row now sums to 0.8
  try {
    validate_emissions(bad_rows);
    FAIL("expected RowNotNormalized");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), ErrorCode::RowNotNormalized);
  }

  EmissionMatrix bad_blank = em;
  bad_blank.blank_index = 1;
  CHECK_THROWS_AS(validate_emissions(bad_blank), Error);

  EmissionMatrix bad_vocab = em;
  bad_vocab.vocab = {"A", "B"};  // first symbol must be the blank
  CHECK_THROWS_AS(validate_emissions(bad_vocab), Error);

  // Small normalization slack is within contract.
  EmissionMatrix slack = em;
  slack.frames(0, 0) = std::log(0.6 + 5e-5);
  validate_emissions(slack);  // must not throw
}
