// Command-line front end for the full pipeline: synthetic data, preprocessing,
// VAE / diffusion training, DDIM fine-tuning, generation, evaluation and
// latent export. Every subcommand is deterministic given (config, seed); the
// resolved configuration is persisted next to each artifact.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <torch/torch.h>

#include "ink/config.hpp"
#include "ink/corpus_io.hpp"
#include "ink/ctc.hpp"
#include "ink/error.hpp"
#include "ink/eval.hpp"
#include "ink/generate.hpp"
#include "ink/metrics.hpp"
#include "ink/preprocess.hpp"
#include "ink/rng.hpp"
#include "ink/svg.hpp"
#include "ink/synth.hpp"
#include "ink/train.hpp"
#include "ink/utf8.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CliContext {
  ink::RunConfig config;
  fs::path run_dir;
};

struct CommonArgs {
  std::string config_path;
  std::string run_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Config file (INI)")->check(CLI::ExistingFile);
  cmd->add_option("--run-dir", args.run_dir, "Run directory (default: $INK_RUN_ROOT/default or ./runs/default)");
  cmd->add_option("--set", args.overrides, "Override a config key, e.g. --set vae.lr=1e-4");
}

CliContext make_context(const CommonArgs& args, const std::string& command_name) {
  CliContext ctx;
  if (!args.config_path.empty()) ctx.config = ink::load_config(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ink::UserError("--set expects key=value, got '" + kv + "'");
    ink::apply_override(ctx.config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.run_dir.empty()) {
    ctx.run_dir = args.run_dir;
  } else if (const char* root = std::getenv("INK_RUN_ROOT")) {
    ctx.run_dir = fs::path(root) / "default";
  } else {
    ctx.run_dir = fs::path("runs") / "default";
  }
  fs::create_directories(ctx.run_dir);
  if (ctx.config.threads > 0) torch::set_num_threads(ctx.config.threads);

  std::ofstream resolved(ctx.run_dir / (command_name + ".resolved.ini"));
  resolved << ink::serialize_config(ctx.config);
  return ctx;
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw ink::UserError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

ordered_json char_freq_json(const ink::Corpus& corpus) {
  ordered_json freq = ordered_json::object();
  for (const auto& [c, n] : corpus.char_freq) freq[ink::utf8_encode(c)] = n;
  return freq;
}

// ---------------------------------------------------------------------------
// synth-data

int cmd_synth_data(const CommonArgs& args) {
  const auto ctx = make_context(args, "synth-data");
  const auto& d = ctx.config.data;

  ink::SynthConfig synth_cfg;
  synth_cfg.n_writers = d.n_writers;
  synth_cfg.glyph_set_size = d.glyph_set_size;
  synth_cfg.lines_per_writer = d.lines_per_writer;
  synth_cfg.line_len_min = d.line_len_min;
  synth_cfg.line_len_max = d.line_len_max;
  synth_cfg.zipf_exponent = d.zipf_exponent;
  synth_cfg.seed = ctx.config.seed;
  const auto corpus = ink::synth_corpus(synth_cfg);

  // Per-writer held-out split of the real lines.
  std::map<int, std::vector<std::size_t>> by_writer;
  for (std::size_t i = 0; i < corpus.lines.size(); ++i) by_writer[corpus.lines[i].writer_id].push_back(i);
  std::vector<bool> is_test(corpus.lines.size(), false);
  for (auto& [writer, idx] : by_writer) {
    ink::Rng rng(ink::mix_seed(ctx.config.seed, 0x5E17, static_cast<std::uint64_t>(writer)));
    rng.shuffle(idx);
    const auto n_test = static_cast<std::size_t>(std::llround(d.test_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < n_test && k < idx.size(); ++k) is_test[idx[k]] = true;
  }
  ink::Corpus train, test;
  for (std::size_t i = 0; i < corpus.lines.size(); ++i)
    (is_test[i] ? test : train).lines.push_back(corpus.lines[i]);
  train.rebuild_index();
  test.rebuild_index();

  std::size_t augmented = 0;
  if (d.augment_lines > 0) {
    const auto bank = ink::build_char_bank(train);
    train = ink::freq_augment(train, bank, d.augment_lines, ink::mix_seed(ctx.config.seed, 0xA96));
    augmented = static_cast<std::size_t>(d.augment_lines);
  }

  ink::serialize_corpus(train, (ctx.run_dir / "train.jsonl").string());
  ink::serialize_corpus(test, (ctx.run_dir / "test.jsonl").string());

  ordered_json manifest;
  manifest["seed"] = ctx.config.seed;
  manifest["config_hash"] = ink::config_hash(ctx.config);
  manifest["writer_count"] = corpus.writer_count;
  manifest["vocab"] = ink::utf8_encode(std::u32string(corpus.vocab.begin(), corpus.vocab.end()));
  manifest["train_lines"] = train.lines.size();
  manifest["test_lines"] = test.lines.size();
  manifest["augmented_lines"] = augmented;
  manifest["train_char_freq"] = char_freq_json(train);
  manifest["files"] = {"train.jsonl", "test.jsonl"};
  write_json(ctx.run_dir / "manifest.json", manifest);

  std::cout << "synth-data: " << train.lines.size() << " train lines (" << augmented << " augmented), "
            << test.lines.size() << " test lines, vocab " << corpus.vocab.size() << ", writers "
            << corpus.writer_count << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// preprocess

int cmd_preprocess(const CommonArgs& args) {
  const auto ctx = make_context(args, "preprocess");
  const auto pre_cfg = ctx.config.preprocess_config();
  ordered_json stats_json;
  for (const std::string split : {"train", "test"}) {
    const auto in_path = ctx.run_dir / (split + ".jsonl");
    if (!fs::exists(in_path)) throw ink::UserError("preprocess: missing " + in_path.string() + " (run synth-data)");
    const auto corpus = ink::parse_corpus(in_path.string());
    ink::PreprocessStats stats;
    const auto pre = ink::preprocess_corpus(corpus, pre_cfg, &stats);
    if (pre.lines.empty()) throw ink::UserError("preprocess: no line survived preprocessing in " + split);
    ink::serialize_corpus(pre, (ctx.run_dir / (split + ".pre.jsonl")).string());
    stats_json[split] = {{"kept", stats.kept},
                         {"dropped_short", stats.dropped_short},
                         {"dropped_overlong", stats.dropped_overlong}};
    std::cout << "preprocess " << split << ": kept " << stats.kept << ", dropped_short " << stats.dropped_short
              << ", dropped_overlong " << stats.dropped_overlong << "\n";
  }
  write_json(ctx.run_dir / "preprocess.json", stats_json);
  return 0;
}

// ---------------------------------------------------------------------------
// train-vae

int cmd_train_vae(const CommonArgs& args, bool no_ocr, bool no_style, bool resume, const std::string& out_name) {
  const auto ctx = make_context(args, "train-vae");
  const auto corpus = ink::parse_corpus((ctx.run_dir / "train.pre.jsonl").string());

  auto options = ink::VaeTrainOptions::from(ctx.config);
  if (no_ocr) options.weights.ocr = 0.0;
  if (no_style) options.weights.sty = 0.0;

  ink::VaeTrainer trainer(corpus, ink::vae_config_for(corpus, ctx.config), options);
  const auto ckpt_path = ctx.run_dir / out_name;
  if (resume) {
    if (!fs::exists(ckpt_path)) throw ink::UserError("--resume: no checkpoint at " + ckpt_path.string());
    trainer.resume_from(ckpt_path.string());
    std::cout << "resumed from step " << trainer.current_step() << "\n";
  }

  std::ofstream log(ctx.run_dir / (out_name + ".log.jsonl"), resume ? std::ios::app : std::ios::trunc);
  const auto log_every = ctx.config.vae.log_every;
  const auto ckpt_every = ctx.config.vae.ckpt_every;
  trainer.run(options.total_steps, [&](std::int64_t step, double lr, const ink::VaeLossReport& r) {
    if (step % log_every == 0 || step == options.total_steps) {
      ordered_json j{{"step", step},         {"lr", lr},
                     {"gmm_nll", r.gmm_nll}, {"pen_focal", r.pen_focal},
                     {"kl", r.kl},           {"ocr_ctc", r.ocr_ctc},
                     {"style_ce", r.style_ce}, {"total", r.total}};
      log << j.dump() << '\n';
      log.flush();
      std::cout << "vae step " << step << " total " << r.total << " gmm " << r.gmm_nll << " pen " << r.pen_focal
                << " ocr " << r.ocr_ctc << " sty " << r.style_ce << "\n";
    }
    if (ckpt_every > 0 && step % ckpt_every == 0) trainer.save(ckpt_path.string());
  });
  trainer.save(ckpt_path.string());
  std::cout << "saved " << ckpt_path.string() << " at step " << trainer.current_step() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train-dit / ddim-finetune

int cmd_train_dit(const CommonArgs& args, std::string vae_ckpt, bool resume, const std::string& out_name) {
  const auto ctx = make_context(args, "train-dit");
  const auto corpus = ink::parse_corpus((ctx.run_dir / "train.pre.jsonl").string());
  if (vae_ckpt.empty()) vae_ckpt = (ctx.run_dir / "vae.ckpt").string();
  auto vae = ink::load_vae_checkpoint(vae_ckpt);

  for (char32_t c : corpus.vocab)
    if (!vae.vocab.index(c))
      throw ink::UserError("train-dit: corpus character '" + ink::utf8_encode(c) + "' missing from VAE vocabulary");

  torch::manual_seed(ink::mix_seed(ctx.config.seed, 0xD17));
  ink::DitModel model(ink::dit_config_from(ctx.config), vae.vocab.size());
  auto schedule = ink::build_schedule(ctx.config.dit.timesteps, ctx.config.dit.schedule_offset);
  auto options = ink::DitTrainOptions::from(ctx.config);
  ink::DitTrainer trainer(corpus, vae.model, model, schedule, options, vae.vocab, vae.writers);
  const auto ckpt_path = ctx.run_dir / out_name;
  if (resume) {
    if (!fs::exists(ckpt_path)) throw ink::UserError("--resume: no checkpoint at " + ckpt_path.string());
    trainer.resume_from(ckpt_path.string());
  }

  std::ofstream log(ctx.run_dir / (out_name + ".log.jsonl"), resume ? std::ios::app : std::ios::trunc);
  trainer.run(options.total_steps, [&](std::int64_t step, double lr, double loss) {
    if (step % ctx.config.dit.log_every == 0 || step == options.total_steps) {
      log << ordered_json{{"step", step}, {"lr", lr}, {"loss", loss}}.dump() << '\n';
      log.flush();
      std::cout << "dit step " << step << " loss " << loss << "\n";
    }
    if (ctx.config.dit.ckpt_every > 0 && step % ctx.config.dit.ckpt_every == 0) trainer.save(ckpt_path.string());
  });
  trainer.save(ckpt_path.string());
  std::cout << "saved " << ckpt_path.string() << " at step " << trainer.current_step() << "\n";
  return 0;
}

int cmd_ddim_finetune(const CommonArgs& args, std::string vae_ckpt, std::string dit_ckpt,
                      const std::string& out_name) {
  const auto ctx = make_context(args, "ddim-finetune");
  const auto corpus = ink::parse_corpus((ctx.run_dir / "train.pre.jsonl").string());
  if (vae_ckpt.empty()) vae_ckpt = (ctx.run_dir / "vae.ckpt").string();
  if (dit_ckpt.empty()) dit_ckpt = (ctx.run_dir / "dit.ckpt").string();
  auto vae = ink::load_vae_checkpoint(vae_ckpt);
  auto dit = ink::load_dit_checkpoint(dit_ckpt);

  auto schedule = ink::build_schedule(ctx.config.dit.timesteps, ctx.config.dit.schedule_offset);
  auto options = ink::DitTrainOptions::from(ctx.config, /*finetune_mode=*/true);
  ink::DitTrainer trainer(corpus, vae.model, dit.model, schedule, options, dit.vocab, dit.writers);

  const auto ckpt_path = ctx.run_dir / out_name;
  std::ofstream log(ctx.run_dir / (out_name + ".log.jsonl"), std::ios::trunc);
  trainer.run(options.total_steps, [&](std::int64_t step, double lr, double loss) {
    if (step % ctx.config.dit.log_every == 0 || step == options.total_steps) {
      log << ordered_json{{"step", step}, {"lr", lr}, {"loss", loss}}.dump() << '\n';
      log.flush();
      std::cout << "ddim-finetune step " << step << " loss " << loss << "\n";
    }
  });
  trainer.save(ckpt_path.string());
  std::cout << "saved " << ckpt_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// generate

std::string default_dit_ckpt(const fs::path& run_dir) {
  const auto ft = run_dir / "dit_ft.ckpt";
  if (fs::exists(ft)) return ft.string();
  return (run_dir / "dit.ckpt").string();
}

int cmd_generate(const CommonArgs& args, const std::string& text, std::optional<std::int64_t> ref_line_id,
                 std::string ref_file, std::string vae_ckpt, std::string dit_ckpt, std::string out_path,
                 std::string svg_path, std::optional<std::uint64_t> seed_flag) {
  const auto ctx = make_context(args, "generate");
  if (vae_ckpt.empty()) vae_ckpt = (ctx.run_dir / "vae.ckpt").string();
  if (dit_ckpt.empty()) dit_ckpt = default_dit_ckpt(ctx.run_dir);
  auto vae = ink::load_vae_checkpoint(vae_ckpt);
  auto dit = ink::load_dit_checkpoint(dit_ckpt);

  if (ref_file.empty()) ref_file = (ctx.run_dir / "test.pre.jsonl").string();
  const auto ref_corpus = ink::parse_corpus(ref_file);
  const auto idx = ref_line_id.value_or(0);
  if (idx < 0 || idx >= static_cast<std::int64_t>(ref_corpus.lines.size()))
    throw ink::UserError("generate: --ref-line-id " + std::to_string(idx) + " out of range (file has " +
                         std::to_string(ref_corpus.lines.size()) + " lines)");
  // Preprocessing is idempotent, so already-preprocessed references pass
  // through unchanged while raw references get normalized.
  const auto ref_line = ink::preprocess_line(ref_corpus.lines[static_cast<std::size_t>(idx)],
                                             ctx.config.preprocess_config());

  ink::GenerateOptions options;
  options.ddim_steps = ctx.config.dit.ddim_steps;
  options.max_line_points = ctx.config.data.max_line_points;
  options.seed = seed_flag.value_or(ctx.config.seed);
  options.keep_trace = true;

  auto schedule = ink::build_schedule(ctx.config.dit.timesteps, ctx.config.dit.schedule_offset);
  const auto result = ink::generate_line(ref_line.text, ink::utf8_decode(text), ref_line, vae.model, dit.model,
                                         schedule, dit.vocab, options);

  if (out_path.empty()) out_path = (ctx.run_dir / "generated.jsonl").string();
  {
    std::ofstream out(out_path);
    if (!out) throw ink::UserError("generate: cannot open " + out_path + " for writing");
    out << ink::line_to_json(result.generated) << '\n';
  }
  {
    std::ofstream trace(out_path + ".trace.jsonl");
    for (const auto& e : result.trace)
      trace << ordered_json{{"step", e.step}, {"t", e.t}, {"x0_norm", e.x0_norm}}.dump() << '\n';
  }
  if (!svg_path.empty()) ink::write_svg({ref_line, result.full_line, result.generated}, svg_path);

  std::cout << "generate: " << result.generated.points.size() << " points for \"" << text << "\" -> " << out_path
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const CommonArgs& args, std::string vae_ckpt, std::string dit_ckpt, bool oracle,
                 std::int64_t limit) {
  const auto ctx = make_context(args, "evaluate");
  const auto train_corpus = ink::parse_corpus((ctx.run_dir / "train.pre.jsonl").string());
  const auto test_corpus = ink::parse_corpus((ctx.run_dir / "test.pre.jsonl").string());

  ink::EvalModelOptions model_options;
  model_options.train_steps = ctx.config.eval.train_steps;
  model_options.batch_size = ctx.config.eval.batch_size;
  model_options.lr = ctx.config.eval.lr;
  model_options.seed = ink::mix_seed(ctx.config.seed, 0xE7A);
  model_options.max_line_points = ctx.config.data.max_line_points;

  const auto cfg_hash = ink::config_hash(ctx.config);
  const auto ocr_path = ctx.run_dir / "eval_ocr.ckpt";
  ink::TrainedEvalOcr eval_ocr;
  if (fs::exists(ocr_path) && ink::load_checkpoint(ocr_path.string()).header.config_hash == cfg_hash) {
    eval_ocr = ink::load_eval_ocr(ocr_path.string());
    std::cout << "loaded cached eval-OCR (held-out AR " << eval_ocr.holdout_ar << "%)\n";
  } else {
    model_options.gate = ctx.config.eval.ocr_gate;
    eval_ocr = ink::train_eval_ocr(train_corpus, test_corpus, model_options);
    ink::save_eval_ocr(eval_ocr, ocr_path.string(), cfg_hash);
    std::cout << "trained eval-OCR: held-out AR " << eval_ocr.holdout_ar << "% CR " << eval_ocr.holdout_cr
              << "% in " << eval_ocr.steps_run << " steps\n";
  }
  if (eval_ocr.holdout_ar < ctx.config.eval.ocr_gate)
    std::cout << "warning: eval-OCR below gate, evaluation would be unreliable\n";

  const auto style_path = ctx.run_dir / "eval_style.ckpt";
  ink::TrainedEvalStyle eval_style;
  if (fs::exists(style_path) && ink::load_checkpoint(style_path.string()).header.config_hash == cfg_hash) {
    eval_style = ink::load_eval_style(style_path.string());
    std::cout << "loaded cached eval-style (held-out acc " << eval_style.holdout_acc << "%)\n";
  } else {
    model_options.gate = ctx.config.eval.style_gate;
    eval_style = ink::train_eval_style(train_corpus, test_corpus, model_options);
    ink::save_eval_style(eval_style, style_path.string(), cfg_hash);
    std::cout << "trained eval-style: held-out accuracy " << eval_style.holdout_acc << "% in "
              << eval_style.steps_run << " steps\n";
  }
  if (eval_style.holdout_acc < ctx.config.eval.style_gate)
    std::cout << "warning: eval-style below gate, evaluation would be unreliable\n";

  ink::GeneratorFn generator;
  std::optional<ink::LoadedVae> vae;
  std::optional<ink::LoadedDit> dit;
  ink::NoiseSchedule schedule;
  if (oracle) {
    generator = [](const ink::InkLine& gt, std::size_t ref_chars, std::uint64_t) {
      ink::InkLine region;
      region.text.assign(gt.text.begin() + static_cast<std::ptrdiff_t>(ref_chars), gt.text.end());
      region.writer_id = gt.writer_id;
      const auto start = gt.char_boundaries[ref_chars - 1] + 1;
      region.points.assign(gt.points.begin() + static_cast<std::ptrdiff_t>(start), gt.points.end());
      region.rebuild_boundaries();
      return region;
    };
  } else {
    if (vae_ckpt.empty()) vae_ckpt = (ctx.run_dir / "vae.ckpt").string();
    if (dit_ckpt.empty()) dit_ckpt = default_dit_ckpt(ctx.run_dir);
    vae = ink::load_vae_checkpoint(vae_ckpt);
    dit = ink::load_dit_checkpoint(dit_ckpt);
    schedule = ink::build_schedule(ctx.config.dit.timesteps, ctx.config.dit.schedule_offset);
    ink::GenerateOptions gen_options;
    gen_options.ddim_steps = ctx.config.dit.ddim_steps;
    gen_options.max_line_points = ctx.config.data.max_line_points;
    generator = [&vae, &dit, &schedule, gen_options](const ink::InkLine& gt, std::size_t ref_chars,
                                                     std::uint64_t seed) {
      ink::InkLine ref;
      ref.text.assign(gt.text.begin(), gt.text.begin() + static_cast<std::ptrdiff_t>(ref_chars));
      ref.writer_id = gt.writer_id;
      ref.points.assign(gt.points.begin(),
                        gt.points.begin() + static_cast<std::ptrdiff_t>(gt.char_boundaries[ref_chars - 1] + 1));
      ref.rebuild_boundaries();
      std::u32string text_gen(gt.text.begin() + static_cast<std::ptrdiff_t>(ref_chars), gt.text.end());
      auto options = gen_options;
      options.seed = seed;
      return ink::generate_line(ref.text, text_gen, ref, vae->model, dit->model, schedule, dit->vocab, options)
          .generated;
    };
  }

  ink::EvaluateOptions eval_options;
  eval_options.ref_fraction = ctx.config.eval.ref_fraction;
  eval_options.seed = ctx.config.seed;
  eval_options.max_lines = limit > 0 ? limit : ctx.config.eval.max_lines;
  eval_options.ocr_gate = ctx.config.eval.ocr_gate;
  eval_options.style_gate = ctx.config.eval.style_gate;
  eval_options.max_line_points = ctx.config.data.max_line_points;

  const auto report = ink::evaluate(generator, test_corpus, eval_ocr, eval_style, eval_options);

  // Deterministic metrics and wall-clock throughput go to separate files so
  // the primary report is byte-stable across reruns.
  ordered_json metrics{{"ar", report.ar},
                       {"cr", report.cr},
                       {"style_acc", report.style_acc},
                       {"norm_dtw", report.norm_dtw},
                       {"lines_evaluated", report.lines_evaluated}};
  write_json(ctx.run_dir / "eval_report.json", metrics);
  write_json(ctx.run_dir / "throughput.json", ordered_json{{"chars_per_sec", report.chars_per_sec}});

  std::cout << "AR " << report.ar << "%  CR " << report.cr << "%  style " << report.style_acc << "%  norm-DTW "
            << report.norm_dtw << "  chars/s " << report.chars_per_sec << "  (" << report.lines_evaluated
            << " lines)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// export-latents

int cmd_export_latents(const CommonArgs& args, std::string vae_ckpt, const std::string& granularity,
                       const std::string& split, std::string out_path) {
  const auto ctx = make_context(args, "export-latents");
  if (vae_ckpt.empty()) vae_ckpt = (ctx.run_dir / "vae.ckpt").string();
  auto vae = ink::load_vae_checkpoint(vae_ckpt);
  const auto corpus = ink::parse_corpus((ctx.run_dir / (split + ".pre.jsonl")).string());
  const auto gran = granularity == "char" ? ink::ExportGranularity::Char : ink::ExportGranularity::Line;
  if (out_path.empty()) out_path = (ctx.run_dir / ("latents_" + granularity + ".jsonl")).string();
  ink::export_latents(corpus, vae.model, out_path, gran, ctx.config.data.max_line_points);
  std::cout << "export-latents: wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-to-online-handwriting pipeline (latent diffusion over a regularized sequential VAE)"};
  app.require_subcommand(1);

  CommonArgs synth_args;
  auto* synth = app.add_subcommand("synth-data", "Generate the synthetic corpus and train/test split");
  add_common(synth, synth_args);

  CommonArgs pre_args;
  auto* pre = app.add_subcommand("preprocess", "Normalize, simplify and filter the corpus");
  add_common(pre, pre_args);

  CommonArgs vae_args;
  bool no_ocr = false, no_style = false, vae_resume = false;
  std::string vae_out = "vae.ckpt";
  auto* tv = app.add_subcommand("train-vae", "Train the trajectory VAE");
  add_common(tv, vae_args);
  tv->add_flag("--no-ocr-loss", no_ocr, "Disable the OCR latent regularizer");
  tv->add_flag("--no-style-loss", no_style, "Disable the style latent regularizer");
  tv->add_flag("--resume", vae_resume, "Resume from the output checkpoint");
  tv->add_option("--out", vae_out, "Checkpoint file name inside the run dir");

  CommonArgs dit_args;
  std::string dit_vae_ckpt, dit_out = "dit.ckpt";
  bool dit_resume = false;
  auto* td = app.add_subcommand("train-dit", "Train the latent diffusion transformer");
  add_common(td, dit_args);
  td->add_option("--vae-ckpt", dit_vae_ckpt, "VAE checkpoint (default: <run-dir>/vae.ckpt)");
  td->add_flag("--resume", dit_resume, "Resume from the output checkpoint");
  td->add_option("--out", dit_out, "Checkpoint file name inside the run dir");

  CommonArgs ft_args;
  std::string ft_vae_ckpt, ft_dit_ckpt, ft_out = "dit_ft.ckpt";
  auto* ft = app.add_subcommand("ddim-finetune", "Fine-tune the denoiser through unrolled DDIM steps");
  add_common(ft, ft_args);
  ft->add_option("--vae-ckpt", ft_vae_ckpt, "VAE checkpoint");
  ft->add_option("--dit-ckpt", ft_dit_ckpt, "Denoiser checkpoint to fine-tune");
  ft->add_option("--out", ft_out, "Checkpoint file name inside the run dir");

  CommonArgs gen_args;
  std::string gen_text, gen_ref_file, gen_vae, gen_dit, gen_out, gen_svg;
  std::optional<std::int64_t> gen_ref_id;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("generate", "Generate handwriting for text, conditioned on a reference line");
  add_common(gen, gen_args);
  gen->add_option("--text", gen_text, "Text to render")->required();
  gen->add_option("--ref-line-id", gen_ref_id, "Reference line index (into --ref-file or the test split)");
  gen->add_option("--ref-file", gen_ref_file, "Corpus file holding the reference line");
  gen->add_option("--vae-ckpt", gen_vae, "VAE checkpoint");
  gen->add_option("--dit-ckpt", gen_dit, "Denoiser checkpoint");
  gen->add_option("--seed", gen_seed, "Generation seed (default: run seed)");
  gen->add_option("--out", gen_out, "Output trajectory file");
  gen->add_option("--svg", gen_svg, "Optional debug SVG path");

  CommonArgs eval_args;
  std::string ev_vae, ev_dit;
  bool ev_oracle = false;
  std::int64_t ev_limit = 0;
  auto* ev = app.add_subcommand("evaluate", "Run the evaluation protocol against the test split");
  add_common(ev, eval_args);
  ev->add_option("--vae-ckpt", ev_vae, "VAE checkpoint");
  ev->add_option("--dit-ckpt", ev_dit, "Denoiser checkpoint");
  ev->add_flag("--oracle", ev_oracle, "Score the ground-truth copy generator instead of the model");
  ev->add_option("--limit", ev_limit, "Evaluate at most this many lines");

  CommonArgs exp_args;
  std::string exp_vae, exp_gran = "line", exp_split = "test", exp_out;
  auto* exp = app.add_subcommand("export-latents", "Export pooled latents for cluster analysis");
  add_common(exp, exp_args);
  exp->add_option("--vae-ckpt", exp_vae, "VAE checkpoint");
  exp->add_option("--granularity", exp_gran, "line or char")->check(CLI::IsMember({"line", "char"}));
  exp->add_option("--split", exp_split, "train or test")->check(CLI::IsMember({"train", "test"}));
  exp->add_option("--out", exp_out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // bad usage is a user error
  }

  try {
    if (synth->parsed()) return cmd_synth_data(synth_args);
    if (pre->parsed()) return cmd_preprocess(pre_args);
    if (tv->parsed()) return cmd_train_vae(vae_args, no_ocr, no_style, vae_resume, vae_out);
    if (td->parsed()) return cmd_train_dit(dit_args, dit_vae_ckpt, dit_resume, dit_out);
    if (ft->parsed()) return cmd_ddim_finetune(ft_args, ft_vae_ckpt, ft_dit_ckpt, ft_out);
    if (gen->parsed())
      return cmd_generate(gen_args, gen_text, gen_ref_id, gen_ref_file, gen_vae, gen_dit, gen_out, gen_svg,
                          gen_seed);
    if (ev->parsed()) return cmd_evaluate(eval_args, ev_vae, ev_dit, ev_oracle, ev_limit);
    if (exp->parsed()) return cmd_export_latents(exp_args, exp_vae, exp_gran, exp_split, exp_out);
  } catch (const ink::UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ink::GateError& e) {
    std::cerr << "gate failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
