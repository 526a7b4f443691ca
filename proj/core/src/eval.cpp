#include "ink/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ink/ctc.hpp"
#include "ink/error.hpp"
#include "ink/metrics.hpp"
#include "ink/optim.hpp"
#include "ink/preprocess.hpp"
#include "ink/rng.hpp"
#include "ink/sampling.hpp"
#include "ink/utf8.hpp"

namespace ink {

EvalOcrImpl::EvalOcrImpl(const VaeConfig& cfg) : config(cfg) {
  encoder = register_module("encoder", InkVaeEncoder(config));
  head = register_module("head", OcrHead(config));
}

std::pair<torch::Tensor, torch::Tensor> EvalOcrImpl::forward(const torch::Tensor& points,
                                                             const torch::Tensor& valid_lengths) {
  const auto posterior = encoder(points);
  const auto lens = (valid_lengths + 7).floor_divide(8);
  const auto mask = mask_from_lens(lens, posterior.mu.size(1));
  return {head(posterior.mu, mask), lens};
}

EvalStyleImpl::EvalStyleImpl(const VaeConfig& cfg) : config(cfg) {
  encoder = register_module("encoder", InkVaeEncoder(config));
  head = register_module("head", StyleHead(config));
}

torch::Tensor EvalStyleImpl::forward(const torch::Tensor& points, const torch::Tensor& valid_lengths) {
  const auto posterior = encoder(points);
  const auto lens = (valid_lengths + 7).floor_divide(8);
  const auto mask = mask_from_lens(lens, posterior.mu.size(1));
  return head(posterior.mu, mask);
}

namespace {

/// Region trajectories start mid-line; shifting x back to 0 keeps the eval
/// models in the input distribution they were trained on (full lines start
/// at x = 0). y is untouched, it carries style.
InkLine shift_x_to_origin(const InkLine& line) {
  if (line.points.empty()) return line;
  double min_x = line.points.front().x;
  for (const auto& p : line.points) min_x = std::min(min_x, p.x);
  InkLine out = line;
  for (auto& p : out.points) p.x -= min_x;
  return out;
}

PaddedBatch single_line_batch(const InkLine& line, std::int64_t max_line_points) {
  std::vector<const InkLine*> one{&line};
  const auto target = batch_target_len(one, max_line_points);
  return pad_batch(one, target);
}

struct EvalBatches {
  std::vector<std::vector<std::size_t>> batches;
};

}  // namespace

TrainedEvalOcr train_eval_ocr(const Corpus& train, const Corpus& holdout, const EvalModelOptions& options) {
  if (train.lines.empty()) throw UserError("train_eval_ocr: empty training corpus");
  TrainedEvalOcr out;
  out.vocab = Vocab::from_corpus(train);
  VaeConfig cfg;
  cfg.vocab_size = out.vocab.size();
  cfg.writer_count = std::max<std::int64_t>(1, WriterIndex::from_corpus(train).size());
  torch::manual_seed(mix_seed(options.seed, 0x0C6));
  out.model = EvalOcr(cfg);

  std::vector<torch::Tensor> params;
  for (auto& p : out.model->parameters()) params.push_back(p);
  auto optimizer = make_adamw(params, options.lr, {0.9, 0.99}, options.weight_decay);

  std::vector<std::vector<std::int64_t>> labels;
  labels.reserve(train.lines.size());
  for (const auto& line : train.lines) labels.push_back(out.vocab.encode(line.text));

  std::vector<std::vector<std::size_t>> batches;
  std::uint64_t batches_epoch = UINT64_MAX;
  const std::uint64_t steps_per_epoch =
      std::max<std::uint64_t>(1, (train.lines.size() + options.batch_size - 1) / options.batch_size);

  for (std::int64_t step = 0; step < options.train_steps; ++step) {
    const std::uint64_t epoch = static_cast<std::uint64_t>(step) / steps_per_epoch;
    if (epoch != batches_epoch) {
      batches = make_epoch_batches(train, static_cast<std::size_t>(options.batch_size),
                                   mix_seed(options.seed, 0x0C61), epoch);
      batches_epoch = epoch;
    }
    const auto& idx = batches[static_cast<std::size_t>(step) % batches.size()];
    std::vector<const InkLine*> lines;
    lines.reserve(idx.size());
    std::vector<std::vector<std::int64_t>> batch_labels;
    for (const auto i : idx) {
      lines.push_back(&train.lines[i]);
      batch_labels.push_back(labels[i]);
    }
    const auto batch = pad_batch(lines, batch_target_len(lines, options.max_line_points));
    out.model->train();
    auto [logits, lens] = out.model->forward(batch.points, batch.valid_lengths);
    std::vector<std::int64_t> frames(lens.const_data_ptr<std::int64_t>(),
                                     lens.const_data_ptr<std::int64_t>() + lens.numel());
    const auto loss = ctc_loss(logits, batch_labels, frames).loss;
    optimizer->zero_grad();
    loss.backward();
    torch::nn::utils::clip_grad_norm_(out.model->parameters(), options.clip_norm);
    set_lr(*optimizer, warmup_cosine_lr(step, options.train_steps, options.lr, options.warmup_frac));
    optimizer->step();
    out.steps_run = step + 1;

    if ((step + 1) % options.eval_every == 0 || step + 1 == options.train_steps) {
      const auto [ar, cr] = eval_ocr_accuracy(out.model, out.vocab, holdout, options.max_line_points);
      out.holdout_ar = ar;
      out.holdout_cr = cr;
      if (ar >= options.gate) break;
    }
  }
  return out;
}

TrainedEvalStyle train_eval_style(const Corpus& train, const Corpus& holdout, const EvalModelOptions& options) {
  if (train.lines.empty()) throw UserError("train_eval_style: empty training corpus");
  TrainedEvalStyle out;
  out.writers = WriterIndex::from_corpus(train);
  VaeConfig cfg;
  cfg.vocab_size = std::max<std::int64_t>(1, static_cast<std::int64_t>(train.vocab.size()));
  cfg.writer_count = out.writers.size();
  torch::manual_seed(mix_seed(options.seed, 0x57E));
  out.model = EvalStyle(cfg);

  std::vector<torch::Tensor> params;
  for (auto& p : out.model->parameters()) params.push_back(p);
  auto optimizer = make_adamw(params, options.lr, {0.9, 0.99}, options.weight_decay);

  std::vector<std::int64_t> classes;
  classes.reserve(train.lines.size());
  for (const auto& line : train.lines) classes.push_back(*out.writers.index(line.writer_id));

  std::vector<std::vector<std::size_t>> batches;
  std::uint64_t batches_epoch = UINT64_MAX;
  const std::uint64_t steps_per_epoch =
      std::max<std::uint64_t>(1, (train.lines.size() + options.batch_size - 1) / options.batch_size);

  for (std::int64_t step = 0; step < options.train_steps; ++step) {
    const std::uint64_t epoch = static_cast<std::uint64_t>(step) / steps_per_epoch;
    if (epoch != batches_epoch) {
      batches = make_epoch_batches(train, static_cast<std::size_t>(options.batch_size),
                                   mix_seed(options.seed, 0x57E1), epoch);
      batches_epoch = epoch;
    }
    const auto& idx = batches[static_cast<std::size_t>(step) % batches.size()];
    std::vector<const InkLine*> lines;
    lines.reserve(idx.size());
    auto targets = torch::empty({static_cast<std::int64_t>(idx.size())}, torch::kInt64);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      lines.push_back(&train.lines[idx[i]]);
      targets[static_cast<std::int64_t>(i)] = classes[idx[i]];
    }
    const auto batch = pad_batch(lines, batch_target_len(lines, options.max_line_points));
    out.model->train();
    const auto logits = out.model->forward(batch.points, batch.valid_lengths);
    const auto loss = ink::cross_entropy_loss(logits, targets);
    optimizer->zero_grad();
    loss.backward();
    torch::nn::utils::clip_grad_norm_(out.model->parameters(), options.clip_norm);
    set_lr(*optimizer, warmup_cosine_lr(step, options.train_steps, options.lr, options.warmup_frac));
    optimizer->step();
    out.steps_run = step + 1;

    if ((step + 1) % options.eval_every == 0 || step + 1 == options.train_steps) {
      out.holdout_acc = eval_style_accuracy(out.model, out.writers, holdout, options.max_line_points);
      if (out.holdout_acc >= options.gate) break;
    }
  }
  return out;
}

std::u32string recognize_line(EvalOcr& model, const Vocab& vocab, const InkLine& line,
                              std::int64_t max_line_points) {
  torch::NoGradGuard ng;
  model->eval();
  const auto batch = single_line_batch(line, max_line_points);
  auto [logits, lens] = model->forward(batch.points, batch.valid_lengths);
  const auto decoded = ctc_greedy_decode(logits[0], lens[0].item<std::int64_t>());
  return vocab.decode(decoded);
}

std::int64_t classify_line(EvalStyle& model, const InkLine& line, std::int64_t max_line_points) {
  torch::NoGradGuard ng;
  model->eval();
  const auto batch = single_line_batch(line, max_line_points);
  const auto logits = model->forward(batch.points, batch.valid_lengths);
  return logits[0].argmax(-1).item<std::int64_t>();
}

std::pair<double, double> eval_ocr_accuracy(EvalOcr& model, const Vocab& vocab, const Corpus& corpus,
                                            std::int64_t max_line_points) {
  if (corpus.lines.empty()) throw UserError("eval_ocr_accuracy: empty corpus");
  std::vector<EditOps> ops;
  ops.reserve(corpus.lines.size());
  for (const auto& line : corpus.lines) {
    const auto pred = recognize_line(model, vocab, line, max_line_points);
    ops.push_back(edit_ops(line.text, pred));
  }
  return ar_cr(ops);
}

double eval_style_accuracy(EvalStyle& model, const WriterIndex& writers, const Corpus& corpus,
                           std::int64_t max_line_points) {
  if (corpus.lines.empty()) throw UserError("eval_style_accuracy: empty corpus");
  std::int64_t correct = 0;
  for (const auto& line : corpus.lines) {
    const auto cls = classify_line(model, line, max_line_points);
    const auto want = writers.index(line.writer_id);
    if (want && cls == *want) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(corpus.lines.size());
}

namespace {

nlohmann::json eval_cfg_json(const VaeConfig& c) {
  nlohmann::json j;
  j["latent_dim"] = c.latent_dim;
  j["gmm_components"] = c.gmm_components;
  j["dec_tf_layers"] = c.dec_tf_layers;
  j["dec_tf_dim"] = c.dec_tf_dim;
  j["dec_tf_heads"] = c.dec_tf_heads;
  j["ocr_layers"] = c.ocr_layers;
  j["ocr_heads"] = c.ocr_heads;
  j["style_hidden"] = c.style_hidden;
  return j;
}

VaeConfig eval_cfg_from_json(const nlohmann::json& j) {
  VaeConfig c;
  c.latent_dim = j.at("latent_dim").get<std::int64_t>();
  c.gmm_components = j.at("gmm_components").get<std::int64_t>();
  c.dec_tf_layers = j.at("dec_tf_layers").get<std::int64_t>();
  c.dec_tf_dim = j.at("dec_tf_dim").get<std::int64_t>();
  c.dec_tf_heads = j.at("dec_tf_heads").get<std::int64_t>();
  c.ocr_layers = j.at("ocr_layers").get<std::int64_t>();
  c.ocr_heads = j.at("ocr_heads").get<std::int64_t>();
  c.style_hidden = j.at("style_hidden").get<std::int64_t>();
  return c;
}

}  // namespace

void save_eval_ocr(const TrainedEvalOcr& trained, const std::string& path, std::uint64_t cfg_hash) {
  CheckpointHeader header;
  header.kind = "eval_ocr";
  header.step = trained.steps_run;
  header.config_hash = cfg_hash;
  header.metrics = {{"holdout_ar", trained.holdout_ar}, {"holdout_cr", trained.holdout_cr}};
  auto extra = eval_cfg_json(trained.model->config);
  extra["vocab"] = utf8_encode(trained.vocab.chars);
  extra["writer_count"] = trained.model->config.writer_count;
  header.extra = extra.dump();
  save_checkpoint(path, header, named_state(*trained.model));
}

TrainedEvalOcr load_eval_ocr(const std::string& path) {
  const auto ckpt = load_checkpoint(path);
  if (ckpt.header.kind != "eval_ocr") throw UserError("load_eval_ocr: wrong checkpoint kind");
  const auto extra = nlohmann::json::parse(ckpt.header.extra);
  TrainedEvalOcr out;
  out.vocab.chars = utf8_decode(extra.at("vocab").get<std::string>());
  auto cfg = eval_cfg_from_json(extra);
  cfg.vocab_size = out.vocab.size();
  cfg.writer_count = extra.at("writer_count").get<std::int64_t>();
  torch::manual_seed(0);
  out.model = EvalOcr(cfg);
  load_state(*out.model, ckpt.arrays);
  out.model->eval();
  out.holdout_ar = ckpt.header.metrics.at("holdout_ar");
  out.holdout_cr = ckpt.header.metrics.at("holdout_cr");
  out.steps_run = ckpt.header.step;
  return out;
}

void save_eval_style(const TrainedEvalStyle& trained, const std::string& path, std::uint64_t cfg_hash) {
  CheckpointHeader header;
  header.kind = "eval_style";
  header.step = trained.steps_run;
  header.config_hash = cfg_hash;
  header.metrics = {{"holdout_acc", trained.holdout_acc}};
  auto extra = eval_cfg_json(trained.model->config);
  extra["vocab_size"] = trained.model->config.vocab_size;
  extra["writer_ids"] = trained.writers.ids;
  header.extra = extra.dump();
  save_checkpoint(path, header, named_state(*trained.model));
}

TrainedEvalStyle load_eval_style(const std::string& path) {
  const auto ckpt = load_checkpoint(path);
  if (ckpt.header.kind != "eval_style") throw UserError("load_eval_style: wrong checkpoint kind");
  const auto extra = nlohmann::json::parse(ckpt.header.extra);
  TrainedEvalStyle out;
  out.writers.ids = extra.at("writer_ids").get<std::vector<int>>();
  auto cfg = eval_cfg_from_json(extra);
  cfg.vocab_size = extra.at("vocab_size").get<std::int64_t>();
  cfg.writer_count = static_cast<std::int64_t>(out.writers.ids.size());
  torch::manual_seed(0);
  out.model = EvalStyle(cfg);
  load_state(*out.model, ckpt.arrays);
  out.model->eval();
  out.holdout_acc = ckpt.header.metrics.at("holdout_acc");
  out.steps_run = ckpt.header.step;
  return out;
}

EvalReport evaluate(const GeneratorFn& generator, const Corpus& test, const TrainedEvalOcr& ocr,
                    const TrainedEvalStyle& style, const EvaluateOptions& options) {
  if (test.lines.empty()) throw UserError("evaluate: empty test corpus");
  if (ocr.holdout_ar < options.ocr_gate)
    throw GateError("evaluate: eval-OCR held-out AR " + std::to_string(ocr.holdout_ar) + "% is below the gate " +
                    std::to_string(options.ocr_gate) + "%");
  if (style.holdout_acc < options.style_gate)
    throw GateError("evaluate: eval-style held-out accuracy " + std::to_string(style.holdout_acc) +
                    "% is below the gate " + std::to_string(options.style_gate) + "%");

  auto ocr_model = ocr.model;
  auto style_model = style.model;

  std::vector<EditOps> ops;
  std::int64_t style_correct = 0;
  double dtw_sum = 0.0;
  std::int64_t n_eval = 0;
  std::size_t gen_chars = 0;
  double gen_seconds = 0.0;

  const std::int64_t limit = options.max_lines > 0
                                 ? std::min<std::int64_t>(options.max_lines,
                                                          static_cast<std::int64_t>(test.lines.size()))
                                 : static_cast<std::int64_t>(test.lines.size());
  for (std::int64_t li = 0; li < limit; ++li) {
    const auto& line = test.lines[static_cast<std::size_t>(li)];
    const auto m = static_cast<std::int64_t>(line.char_count());
    if (m < 2) continue;
    const auto r_chars = std::clamp<std::int64_t>(std::llround(options.ref_fraction * static_cast<double>(m)), 1,
                                                  m - 1);
    const auto t0 = std::chrono::steady_clock::now();
    const auto gen = generator(line, static_cast<std::size_t>(r_chars),
                               mix_seed(options.seed, 0xE7A1, static_cast<std::uint64_t>(li)));
    gen_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    gen_chars += gen.text.size();

    const std::u32string gt_text(line.text.begin() + r_chars, line.text.end());
    const auto region_start = line.char_boundaries[static_cast<std::size_t>(r_chars - 1)] + 1;
    const std::vector<PenPoint> gt_region(line.points.begin() + static_cast<std::ptrdiff_t>(region_start),
                                          line.points.end());
    if (gen.points.empty() || gt_region.empty()) {
      // Degenerate generation still counts as fully wrong content.
      ops.push_back(edit_ops(gt_text, std::u32string()));
      ++n_eval;
      continue;
    }

    const auto shifted = shift_x_to_origin(gen);
    const auto pred_text = recognize_line(ocr_model, ocr.vocab, shifted, options.max_line_points);
    ops.push_back(edit_ops(gt_text, pred_text));

    const auto cls = classify_line(style_model, shifted, options.max_line_points);
    const auto want = style.writers.index(line.writer_id);
    if (want && cls == *want) ++style_correct;

    dtw_sum += norm_dtw(gt_region, gen.points);
    ++n_eval;
  }
  if (n_eval == 0) throw UserError("evaluate: no line was long enough to split");

  EvalReport report;
  const auto [ar, cr] = ar_cr(ops);
  report.ar = ar;
  report.cr = cr;
  report.style_acc = 100.0 * static_cast<double>(style_correct) / static_cast<double>(n_eval);
  report.norm_dtw = dtw_sum / static_cast<double>(n_eval);
  report.chars_per_sec = gen_seconds > 0.0 ? static_cast<double>(gen_chars) / gen_seconds : 0.0;
  report.lines_evaluated = n_eval;
  return report;
}

double reconstruction_norm_dtw(InkVae& vae, const Corpus& corpus, std::int64_t max_line_points,
                               std::int64_t max_lines) {
  if (corpus.lines.empty()) throw UserError("reconstruction_norm_dtw: empty corpus");
  torch::NoGradGuard ng;
  vae->eval();
  double sum = 0.0;
  std::int64_t n = 0;
  const std::int64_t limit = max_lines > 0 ? std::min<std::int64_t>(max_lines,
                                                                    static_cast<std::int64_t>(corpus.lines.size()))
                                           : static_cast<std::int64_t>(corpus.lines.size());
  for (std::int64_t li = 0; li < limit; ++li) {
    const auto& line = corpus.lines[static_cast<std::size_t>(li)];
    if (line.points.size() < 2) continue;
    const auto batch = single_line_batch(line, max_line_points);
    auto [posterior, latent] = vae->encode(batch.points, batch.valid_lengths, /*deterministic=*/true);
    const auto params = vae->decode(posterior.mu);
    const auto traj = sample_trajectory(params, SampleMode::Greedy, 1.0, 0,
                                        static_cast<std::int64_t>(line.char_count()), batch.points.size(1));
    if (traj.empty()) continue;
    sum += norm_dtw(line.points, traj);
    ++n;
  }
  if (n == 0) throw UserError("reconstruction_norm_dtw: nothing reconstructed");
  return sum / static_cast<double>(n);
}

void export_latents(const Corpus& corpus, InkVae& vae, const std::string& path, ExportGranularity granularity,
                    std::int64_t max_line_points) {
  std::ofstream out(path);
  if (!out) throw UserError("export_latents: cannot open " + path + " for writing");
  torch::NoGradGuard ng;
  vae->eval();
  for (const auto& line : corpus.lines) {
    if (line.points.size() < 2) continue;
    const auto batch = single_line_batch(line, max_line_points);
    auto [posterior, latent] = vae->encode(batch.points, batch.valid_lengths, /*deterministic=*/true);
    const auto mu = posterior.mu[0];  // [l, d]
    const auto valid = latent.valid_lens[0].item<std::int64_t>();
    const auto write_record = [&](int label, const torch::Tensor& vec) {
      nlohmann::ordered_json j;
      j["label"] = label;
      auto v = vec.to(torch::kFloat32).contiguous();
      std::vector<float> values(v.const_data_ptr<float>(), v.const_data_ptr<float>() + v.numel());
      j["vector"] = values;
      out << j.dump() << '\n';
    };
    if (granularity == ExportGranularity::Line) {
      write_record(line.writer_id, mu.slice(0, 0, valid).mean(0));
    } else {
      for (std::size_t c = 0; c < line.char_count(); ++c) {
        const auto [first, last] = line.char_span(c);
        const auto s0 = std::min<std::int64_t>(static_cast<std::int64_t>(first) / 8, valid - 1);
        const auto s1 = std::min<std::int64_t>(static_cast<std::int64_t>(last) / 8 + 1, valid);
        write_record(static_cast<int>(line.text[c]), mu.slice(0, s0, std::max(s1, s0 + 1)).mean(0));
      }
    }
  }
}

std::pair<std::vector<std::vector<float>>, std::vector<int>> read_latent_export(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("read_latent_export: cannot open " + path);
  std::vector<std::vector<float>> vectors;
  std::vector<int> labels;
  std::string text;
  while (std::getline(in, text)) {
    if (text.empty()) continue;
    const auto j = nlohmann::json::parse(text);
    labels.push_back(j.at("label").get<int>());
    vectors.push_back(j.at("vector").get<std::vector<float>>());
  }
  return {std::move(vectors), std::move(labels)};
}

double measure_throughput(const std::function<std::size_t()>& generate_chunk, std::size_t n_chars) {
  std::size_t total = 0;
  const auto t0 = std::chrono::steady_clock::now();
  while (total < n_chars) total += generate_chunk();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (seconds <= 0.0) return 0.0;
  return static_cast<double>(total) / seconds;
}

}  // namespace ink
