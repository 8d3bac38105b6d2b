#pragma once

#include <cstdint>
#include <string>

namespace clad {

// Generates a small self-contained synthetic corpus under root_dir:
// CHAT transcripts, oracle CoNLL-U annotations, lexicons, LM corpora with
// trained ARPA files, per-utterance emission matrices, CoNLL-U for both
// decoded transcript regimes, and a manifest + config ready for the
// pipeline. Two "languages" (en: 12 training speakers, fr: 8 evaluation
// speakers), both with control and aphasia cohorts. Fully deterministic in
// the seed.
void generate_demo_corpus(const std::string& root_dir, std::uint64_t seed);

}  // namespace clad
