#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "clad/chat.hpp"
#include "clad/ctc.hpp"
#include "clad/error.hpp"
#include "clad/lm.hpp"
#include "clad/pipeline.hpp"

namespace {

struct PipelineArgs {
  std::string config_path;
  std::string manifest_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool has_seed = false;
  bool quiet = false;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config (JSON)")
      ->required();
  cmd->add_option("--manifest", args.manifest_path, "speaker manifest (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.has_seed = true; });
  cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

int run_stages(const PipelineArgs& args, clad::Stage up_to) {
  clad::PipelineConfig config = clad::load_config(args.config_path);
  clad::Manifest manifest = clad::load_manifest(args.manifest_path);
  clad::RunOptions options;
  options.out_dir = args.out_dir;
  options.up_to = up_to;
  options.seed_override = args.seed;
  options.has_seed_override = args.has_seed;
  options.quiet = args.quiet;
  clad::run_pipeline(config, manifest, options);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "clad: cross-lingual aphasia detection from clinical transcripts"};
  app.require_subcommand(1);

  // ---- parse: clean one CHAT transcript
  auto* parse_cmd =
      app.add_subcommand("parse", "clean a CHAT transcript to plain text");
  std::string chat_path, participant = "PAR", parse_out;
  bool keep_fillers = false;
  parse_cmd->add_option("--chat", chat_path, "CHAT (.cha) file")->required();
  parse_cmd->add_option("--participant", participant,
                        "speaker tier to extract (default PAR)");
  parse_cmd->add_option("--out", parse_out,
                        "output file (stdout when omitted)");
  parse_cmd->add_flag("--keep-fillers", keep_fillers,
                      "retain \"&-\" filler words");

  // ---- decode: one emission matrix
  auto* decode_cmd =
      app.add_subcommand("decode", "decode one CTC emission matrix");
  std::string emat_path, vocab_path, arpa_path;
  bool greedy = false;
  clad::DecodeParams decode_params;
  decode_cmd->add_option("--emissions", emat_path, "EMAT1 file")->required();
  decode_cmd->add_option("--vocab", vocab_path, "sidecar vocabulary file")
      ->required();
  decode_cmd->add_option("--arpa", arpa_path,
                         "ARPA model for shallow fusion (beam mode)");
  decode_cmd->add_flag("--greedy", greedy, "greedy decode instead of beam");
  decode_cmd->add_option("--beam-width", decode_params.beam_width);
  decode_cmd->add_option("--lm-alpha", decode_params.lm_alpha);
  decode_cmd->add_option("--lm-beta", decode_params.lm_beta);
  decode_cmd->add_option("--prune-log-threshold",
                         decode_params.prune_log_threshold);

  // ---- train-lm
  auto* lm_cmd = app.add_subcommand(
      "train-lm", "train an interpolated Kneser-Ney model, write ARPA");
  std::string corpus_path, arpa_out;
  int order = 3;
  double discount = 0.75;
  bool keep_case = false, keep_punct = false;
  lm_cmd->add_option("--corpus", corpus_path, "text corpus, one sentence/line")
      ->required();
  lm_cmd->add_option("--out", arpa_out, "ARPA output path")->required();
  lm_cmd->add_option("--order", order, "n-gram order (1-5)");
  lm_cmd->add_option("--discount", discount, "absolute discount in (0,1)");
  lm_cmd->add_flag("--keep-case", keep_case, "skip lowercasing");
  lm_cmd->add_flag("--keep-punctuation", keep_punct,
                   "skip ASCII punctuation stripping");

  // ---- pipeline stages
  PipelineArgs features_args, evaluate_args;
  auto* features_cmd = app.add_subcommand(
      "features", "run the pipeline up to feature extraction");
  add_pipeline_options(features_cmd, features_args);
  auto* evaluate_cmd = app.add_subcommand(
      "evaluate", "run the full pipeline and write report tables");
  add_pipeline_options(evaluate_cmd, evaluate_args);

  // ---- report: regenerate tables from persisted intermediates
  auto* report_cmd = app.add_subcommand(
      "report", "rebuild report tables from an existing run directory");
  std::string report_out;
  report_cmd->add_option("--out", report_out, "run directory")->required();

  // ---- validate
  auto* validate_cmd = app.add_subcommand(
      "validate", "check config and manifest, print every problem");
  std::string v_config, v_manifest;
  validate_cmd->add_option("--config", v_config, "pipeline config (JSON)")
      ->required();
  validate_cmd->add_option("--manifest", v_manifest, "speaker manifest (JSON)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse_cmd->parsed()) {
      std::ifstream in(chat_path);
      if (!in) throw clad::Error(clad::ErrorCode::IoError,
                                 "cannot open " + chat_path);
      clad::ChatDocument doc = clad::parse_chat(in);
      clad::CleanOptions options;
      options.keep_fillers = keep_fillers;
      clad::SpeakerRecord record = clad::assemble_record(
          doc, participant, participant, "", clad::Cohort::Control, options);
      std::string text = clad::write_clean_transcript(record);
      if (parse_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(parse_out, std::ios::binary);
        if (!out) throw clad::Error(clad::ErrorCode::IoError,
                                    "cannot write " + parse_out);
        out << text;
      }
    } else if (decode_cmd->parsed()) {
      clad::EmissionMatrix em =
          clad::load_emissions_file(emat_path, vocab_path);
      clad::NGramModel lm;
      const clad::NGramModel* lm_ptr = nullptr;
      if (!arpa_path.empty()) {
        lm = clad::read_arpa_file(arpa_path);
        lm_ptr = &lm;
      }
      clad::DecodeResult result =
          greedy ? clad::greedy_decode(em)
                 : clad::beam_decode(em, decode_params, lm_ptr);
      std::cout << result.transcript << "\n";
      std::fprintf(stderr, "acoustic %.6f combined %.6f\n",
                   result.acoustic_score, result.combined_score);
    } else if (lm_cmd->parsed()) {
      clad::CorpusPrepOptions prep;
      prep.lowercase = !keep_case;
      prep.strip_punctuation = !keep_punct;
      clad::train_lm_command(corpus_path, order, discount, prep, arpa_out);
    } else if (features_cmd->parsed()) {
      return run_stages(features_args, clad::Stage::Features);
    } else if (evaluate_cmd->parsed()) {
      return run_stages(evaluate_args, clad::Stage::Evaluate);
    } else if (report_cmd->parsed()) {
      clad::regenerate_report(report_out);
    } else if (validate_cmd->parsed()) {
      clad::PipelineConfig config = clad::load_config(v_config);
      clad::Manifest manifest = clad::load_manifest(v_manifest);
      std::vector<std::string> problems = clad::validate(config, manifest);
      for (const std::string& problem : problems)
        std::cout << "problem: " << problem << "\n";
      if (!problems.empty()) {
        std::cout << problems.size() << " problem(s) found\n";
        return 1;
      }
      std::cout << "ok\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
