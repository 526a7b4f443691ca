#include "ink/train.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ink/ctc.hpp"
#include "ink/error.hpp"
#include "ink/optim.hpp"
#include "ink/preprocess.hpp"
#include "ink/rng.hpp"
#include "ink/tensor_util.hpp"
#include "ink/utf8.hpp"

namespace ink {

WriterIndex WriterIndex::from_corpus(const Corpus& corpus) {
  WriterIndex w;
  for (const auto& line : corpus.lines) w.ids.push_back(line.writer_id);
  std::sort(w.ids.begin(), w.ids.end());
  w.ids.erase(std::unique(w.ids.begin(), w.ids.end()), w.ids.end());
  return w;
}

std::optional<std::int64_t> WriterIndex::index(int writer_id) const {
  const auto it = std::lower_bound(ids.begin(), ids.end(), writer_id);
  if (it == ids.end() || *it != writer_id) return std::nullopt;
  return static_cast<std::int64_t>(it - ids.begin());
}

DitModelImpl::DitModelImpl(const DitConfig& cfg, std::int64_t vocab) : config(cfg), vocab_size(vocab) {
  codebook = register_module("codebook", Codebook(vocab_size, config.content_dim));
  content = register_module("content", ContentEncoder(config));
  dit = register_module("dit", InkDit(config));
}

VaeTrainOptions VaeTrainOptions::from(const RunConfig& config) {
  VaeTrainOptions o;
  o.lr = config.vae.lr;
  o.batch_size = config.vae.batch_size;
  o.total_steps = config.vae.steps;
  o.clip_norm = config.vae.clip_norm;
  o.beta1 = config.vae.beta1;
  o.beta2 = config.vae.beta2;
  o.weight_decay = config.vae.weight_decay;
  o.warmup_frac = config.vae.warmup_frac;
  o.weights = {config.vae.lambda_gmm, config.vae.lambda_pen, config.vae.lambda_ocr, config.vae.lambda_sty,
               config.vae.lambda_kl};
  o.focal_gamma = config.vae.focal_gamma;
  o.seed = config.seed;
  o.max_line_points = config.data.max_line_points;
  o.config_hash = ink::config_hash(config);
  return o;
}

DitTrainOptions DitTrainOptions::from(const RunConfig& config, bool finetune_mode) {
  DitTrainOptions o;
  o.lr = finetune_mode ? config.dit.lr * config.dit.finetune_lr_scale : config.dit.lr;
  o.batch_size = config.dit.batch_size;
  o.total_steps = finetune_mode ? config.dit.finetune_steps : config.dit.steps;
  o.clip_norm = config.dit.clip_norm;
  o.beta1 = config.dit.beta1;
  o.beta2 = config.dit.beta2;
  o.weight_decay = config.dit.weight_decay;
  o.warmup_frac = config.dit.warmup_frac;
  o.ref_frac_min = config.dit.ref_frac_min;
  o.ref_frac_max = config.dit.ref_frac_max;
  o.invert_loss_mask = config.dit.invert_loss_mask;
  o.seed = finetune_mode ? mix_seed(config.seed, 0xF17E) : config.seed;
  o.max_line_points = config.data.max_line_points;
  o.config_hash = ink::config_hash(config);
  o.finetune = finetune_mode;
  o.finetune_unroll = config.dit.finetune_unroll;
  o.ddim_steps = config.dit.ddim_steps;
  return o;
}

VaeConfig vae_config_for(const Corpus& corpus, const RunConfig& config) {
  VaeConfig c;
  c.vocab_size = static_cast<std::int64_t>(corpus.vocab.size());
  c.writer_count = WriterIndex::from_corpus(corpus).size();
  return c;
}

DitConfig dit_config_from(const RunConfig& config) {
  DitConfig c;
  c.layers = config.dit.layers;
  c.joint_dim = config.dit.joint_dim;
  c.latent_dim = config.dit.latent_dim;
  c.content_dim = config.dit.content_dim;
  c.heads = config.dit.heads;
  c.timestep_embed_dim = config.dit.timestep_embed_dim;
  c.convnext_blocks = config.dit.convnext_blocks;
  c.convnext_kernel = config.dit.convnext_kernel;
  c.invert_loss_mask = config.dit.invert_loss_mask;
  return c;
}

namespace {

torch::Tensor compute_pen_alpha(const Corpus& corpus) {
  // Inverse pen-state frequency, renormalized to mean 1. Padding is counted
  // as EndOfChar at the per-line ceil-to-8 granularity, matching what batches
  // actually present to the loss.
  double counts[3] = {0.0, 0.0, 0.0};
  for (const auto& line : corpus.lines) {
    for (const auto& p : line.points) counts[static_cast<int>(p.pen)] += 1.0;
    const auto n = static_cast<std::int64_t>(line.points.size());
    counts[static_cast<int>(Pen::EndOfChar)] += static_cast<double>(round_up_multiple(n, 8) - n);
  }
  double inv[3];
  for (int k = 0; k < 3; ++k) inv[k] = counts[k] > 0.0 ? 1.0 / counts[k] : 0.0;
  double mean = (inv[0] + inv[1] + inv[2]) / 3.0;
  if (mean <= 0.0) return torch::ones({3});
  return torch::tensor({inv[0] / mean, inv[1] / mean, inv[2] / mean}, torch::kFloat32);
}

std::vector<std::vector<std::int64_t>> encode_labels(const Corpus& corpus, const Vocab& vocab) {
  std::vector<std::vector<std::int64_t>> labels;
  labels.reserve(corpus.lines.size());
  for (const auto& line : corpus.lines) labels.push_back(vocab.encode(line.text));
  return labels;
}

nlohmann::json vae_extra_json(const VaeConfig& c, const Vocab& vocab, const WriterIndex& writers) {
  nlohmann::json j;
  j["vocab"] = utf8_encode(vocab.chars);
  j["writer_ids"] = writers.ids;
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

}  // namespace

VaeTrainer::VaeTrainer(Corpus corpus, VaeConfig model_config, VaeTrainOptions options)
    : corpus_(std::move(corpus)), model_config_(model_config), options_(options) {
  if (corpus_.lines.empty()) throw UserError("VaeTrainer: empty corpus");
  vocab_ = Vocab::from_corpus(corpus_);
  writers_ = WriterIndex::from_corpus(corpus_);
  model_config_.vocab_size = vocab_.size();
  model_config_.writer_count = writers_.size();
  torch::manual_seed(options_.seed);
  model_ = InkVae(model_config_);
  named_params_ = named_state(*model_);
  std::vector<torch::Tensor> params;
  for (auto& p : model_->parameters()) params.push_back(p);
  optimizer_ = make_adamw(params, options_.lr, {options_.beta1, options_.beta2}, options_.weight_decay);
  pen_alpha_ = compute_pen_alpha(corpus_);
  labels_ = encode_labels(corpus_, vocab_);
  writer_class_.reserve(corpus_.lines.size());
  for (const auto& line : corpus_.lines) writer_class_.push_back(*writers_.index(line.writer_id));
}

std::vector<const InkLine*> VaeTrainer::batch_lines(const std::vector<std::size_t>& idx) const {
  std::vector<const InkLine*> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(&corpus_.lines[i]);
  return out;
}

void VaeTrainer::ensure_epoch_batches(std::uint64_t epoch) {
  if (batches_epoch_ == epoch) return;
  batches_ = make_epoch_batches(corpus_, static_cast<std::size_t>(options_.batch_size), options_.seed, epoch);
  batches_epoch_ = epoch;
}

VaeLossReport VaeTrainer::step() {
  model_->train();
  const std::uint64_t steps_per_epoch = std::max<std::uint64_t>(
      1, (corpus_.lines.size() + options_.batch_size - 1) / options_.batch_size);
  const std::uint64_t epoch = static_cast<std::uint64_t>(step_) / steps_per_epoch;
  ensure_epoch_batches(epoch);
  const auto& idx = batches_[static_cast<std::size_t>(step_) % batches_.size()];
  const auto lines = batch_lines(idx);
  const auto target = batch_target_len(lines, options_.max_line_points);
  const auto batch = pad_batch(lines, target);

  auto [posterior, latent] = model_->encode(batch.points, batch.valid_lengths, /*deterministic=*/false,
                                            mix_seed(options_.seed, 0xE6C, static_cast<std::uint64_t>(step_)));
  const auto latent_mask = latent.valid_mask();
  const auto params = model_->decode(latent.values);

  const auto gmm = gmm_nll(params, batch.coord_targets, batch.valid_mask);
  const auto pen_onehot = torch::one_hot(batch.pen_targets, 3).to(torch::kFloat32);
  const auto pen = pen_focal_loss(params.pen_logits, pen_onehot, options_.focal_gamma, pen_alpha_);
  const auto kl = kl_loss(posterior.mu, posterior.logvar, latent_mask);

  torch::Tensor ocr = torch::zeros({}, torch::kFloat32);
  if (options_.weights.ocr > 0.0) {
    const auto logits = model_->ocr_head(latent.values, latent_mask);
    std::vector<std::vector<std::int64_t>> batch_labels;
    std::vector<std::int64_t> frames;
    batch_labels.reserve(idx.size());
    for (const auto i : idx) batch_labels.push_back(labels_[i]);
    auto lens = latent.valid_lens.contiguous();
    frames.assign(lens.const_data_ptr<std::int64_t>(), lens.const_data_ptr<std::int64_t>() + lens.numel());
    ocr = ctc_loss(logits, batch_labels, frames).loss;
  }

  torch::Tensor sty = torch::zeros({}, torch::kFloat32);
  if (options_.weights.sty > 0.0) {
    const auto logits = model_->style_head(latent.values, latent_mask);
    auto targets = torch::empty({static_cast<std::int64_t>(idx.size())}, torch::kInt64);
    for (std::size_t i = 0; i < idx.size(); ++i) targets[static_cast<std::int64_t>(i)] = writer_class_[idx[i]];
    sty = ink::cross_entropy_loss(logits, targets);
  }

  auto [total, report] = vae_total_loss(gmm, pen, kl, ocr, sty, options_.weights);
  if (!report.finite) {
    if (++nan_streak_ >= 3)
      throw TrainingDiverged("VAE training diverged: non-finite loss for 3 consecutive steps at step " +
                             std::to_string(step_));
    ++step_;
    last_report_ = report;
    return report;
  }
  nan_streak_ = 0;

  optimizer_->zero_grad();
  total.backward();
  torch::nn::utils::clip_grad_norm_(model_->parameters(), options_.clip_norm);
  set_lr(*optimizer_, warmup_cosine_lr(step_, options_.total_steps, options_.lr, options_.warmup_frac));
  optimizer_->step();
  ++step_;
  last_report_ = report;
  return report;
}

void VaeTrainer::run(std::int64_t until_step, const TrainLogFn& log) {
  while (step_ < until_step) {
    const auto lr = warmup_cosine_lr(step_, options_.total_steps, options_.lr, options_.warmup_frac);
    const auto report = step();
    if (log) log(step_, lr, report);
  }
}

void VaeTrainer::save(const std::string& path) const {
  auto arrays = named_state(*model_);
  auto opt_arrays = optimizer_state_arrays(*optimizer_, named_params_);
  arrays.insert(arrays.end(), opt_arrays.begin(), opt_arrays.end());
  CheckpointHeader header;
  header.kind = "vae";
  header.step = step_;
  header.seed = options_.seed;
  header.config_hash = options_.config_hash;
  header.metrics = {{"gmm_nll", last_report_.gmm_nll}, {"pen_focal", last_report_.pen_focal},
                    {"kl", last_report_.kl},           {"ocr_ctc", last_report_.ocr_ctc},
                    {"style_ce", last_report_.style_ce}, {"total", last_report_.total}};
  header.extra = vae_extra_json(model_config_, vocab_, writers_).dump();
  save_checkpoint(path, header, arrays);
}

void VaeTrainer::resume_from(const std::string& path) {
  const auto ckpt = load_checkpoint(path);
  if (ckpt.header.kind != "vae") throw UserError("resume_from: checkpoint kind is '" + ckpt.header.kind + "'");
  load_state(*model_, ckpt.arrays);
  load_optimizer_state(*optimizer_, named_params_, ckpt.arrays);
  step_ = ckpt.header.step;
}

DitTrainer::DitTrainer(Corpus corpus, InkVae frozen_vae, DitModel model, NoiseSchedule schedule,
                       DitTrainOptions options, Vocab vocab, WriterIndex writers)
    : corpus_(std::move(corpus)),
      vae_(std::move(frozen_vae)),
      model_(std::move(model)),
      schedule_(std::move(schedule)),
      options_(options),
      vocab_(std::move(vocab)),
      writers_(std::move(writers)) {
  if (corpus_.lines.empty()) throw UserError("DitTrainer: empty corpus");
  vae_->eval();
  for (auto& p : vae_->parameters()) p.set_requires_grad(false);
  named_params_ = named_state(*model_);
  std::vector<torch::Tensor> params;
  for (auto& p : model_->parameters()) params.push_back(p);
  optimizer_ = make_adamw(params, options_.lr, {options_.beta1, options_.beta2}, options_.weight_decay);
  labels_ = encode_labels(corpus_, vocab_);
}

void DitTrainer::ensure_epoch_batches(std::uint64_t epoch) {
  if (batches_epoch_ == epoch) return;
  batches_ = make_epoch_batches(corpus_, static_cast<std::size_t>(options_.batch_size),
                                mix_seed(options_.seed, 0xD17), epoch);
  batches_epoch_ = epoch;
}

double DitTrainer::step() {
  model_->train();
  const std::uint64_t steps_per_epoch = std::max<std::uint64_t>(
      1, (corpus_.lines.size() + options_.batch_size - 1) / options_.batch_size);
  ensure_epoch_batches(static_cast<std::uint64_t>(step_) / steps_per_epoch);
  const auto& idx = batches_[static_cast<std::size_t>(step_) % batches_.size()];

  std::vector<const InkLine*> lines;
  lines.reserve(idx.size());
  for (const auto i : idx) lines.push_back(&corpus_.lines[i]);
  const auto target = batch_target_len(lines, options_.max_line_points);
  const auto batch = pad_batch(lines, target);

  torch::Tensor x0;
  torch::Tensor latent_lens;
  {
    torch::NoGradGuard ng;
    auto [posterior, latent] = vae_->encode(batch.points, batch.valid_lengths, /*deterministic=*/true);
    x0 = posterior.mu.detach();
    latent_lens = latent.valid_lens;
  }
  const std::int64_t b = x0.size(0);
  const std::int64_t l = x0.size(1);

  // Reference prefix per example: uniform fraction of the valid latent length.
  Rng ref_rng(mix_seed(options_.seed, 0x4EF, static_cast<std::uint64_t>(step_)));
  auto ref_lens = torch::empty({b}, torch::kInt64);
  auto lens_acc = latent_lens.accessor<std::int64_t, 1>();
  for (std::int64_t i = 0; i < b; ++i) {
    const double frac = ref_rng.uniform(options_.ref_frac_min, options_.ref_frac_max);
    const std::int64_t li = lens_acc[i];
    ref_lens[i] = std::clamp<std::int64_t>(std::llround(frac * static_cast<double>(li)), 1,
                                           std::max<std::int64_t>(1, li - 1));
  }
  const auto ref_mask = mask_from_lens(ref_lens, l);
  const auto x_ref = x0 * ref_mask.unsqueeze(-1).to(x0.dtype());

  std::vector<std::vector<std::int64_t>> texts;
  texts.reserve(idx.size());
  for (const auto i : idx) texts.push_back(labels_[i]);
  const auto z = model_->content(model_->codebook->embed_batch(texts, l));

  const auto loss_mask = options_.invert_loss_mask ? ~ref_mask : ref_mask;

  torch::Tensor loss;
  if (!options_.finetune) {
    Rng t_rng(mix_seed(options_.seed, 0x71e, static_cast<std::uint64_t>(step_)));
    auto t = torch::empty({b}, torch::kInt64);
    for (std::int64_t i = 0; i < b; ++i) t[i] = t_rng.uniform_int(1, schedule_.timesteps);
    const auto eps = seeded_randn(x0.sizes(), mix_seed(options_.seed, 0xE45, static_cast<std::uint64_t>(step_)),
                                  x0.options());
    const auto x_t = forward_noise(x0, t, eps, schedule_);
    const auto x0_hat = model_->dit->denoise(x_t, x_ref, z, t);
    loss = masked_mse(x0_hat, x0, loss_mask);
  } else {
    Rng g_rng(mix_seed(options_.seed, 0x6F1d, static_cast<std::uint64_t>(step_)));
    const std::int64_t max_start = std::max<std::int64_t>(0, options_.ddim_steps - options_.finetune_unroll);
    const std::int64_t grid_index = g_rng.uniform_int(0, max_start);
    const auto eps = seeded_randn(x0.sizes(), mix_seed(options_.seed, 0xE46, static_cast<std::uint64_t>(step_)),
                                  x0.options());
    const auto x0_hat = ddim_unroll(model_->dit, x0, x_ref, z, schedule_, options_.ddim_steps, grid_index,
                                    options_.finetune_unroll, eps);
    loss = masked_mse(x0_hat, x0, loss_mask);
  }

  const double loss_value = loss.item<double>();
  if (!std::isfinite(loss_value)) {
    if (++nan_streak_ >= 3)
      throw TrainingDiverged("DiT training diverged: non-finite loss for 3 consecutive steps at step " +
                             std::to_string(step_));
    ++step_;
    last_loss_ = loss_value;
    return loss_value;
  }
  nan_streak_ = 0;

  optimizer_->zero_grad();
  loss.backward();
  torch::nn::utils::clip_grad_norm_(model_->parameters(), options_.clip_norm);
  set_lr(*optimizer_, warmup_cosine_lr(step_, options_.total_steps, options_.lr, options_.warmup_frac));
  optimizer_->step();
  ++step_;
  last_loss_ = loss_value;
  return loss_value;
}

void DitTrainer::run(std::int64_t until_step, const std::function<void(std::int64_t, double, double)>& log) {
  while (step_ < until_step) {
    const auto lr = warmup_cosine_lr(step_, options_.total_steps, options_.lr, options_.warmup_frac);
    const auto loss = step();
    if (log) log(step_, lr, loss);
  }
}

void DitTrainer::save(const std::string& path) const {
  auto arrays = named_state(*model_);
  auto opt_arrays = optimizer_state_arrays(*optimizer_, named_params_);
  arrays.insert(arrays.end(), opt_arrays.begin(), opt_arrays.end());
  CheckpointHeader header;
  header.kind = "dit";
  header.step = step_;
  header.seed = options_.seed;
  header.config_hash = options_.config_hash;
  header.metrics = {{"loss", last_loss_}};
  nlohmann::json extra;
  extra["vocab"] = utf8_encode(vocab_.chars);
  extra["writer_ids"] = writers_.ids;
  const auto& c = model_->config;
  extra["layers"] = c.layers;
  extra["joint_dim"] = c.joint_dim;
  extra["latent_dim"] = c.latent_dim;
  extra["content_dim"] = c.content_dim;
  extra["heads"] = c.heads;
  extra["timestep_embed_dim"] = c.timestep_embed_dim;
  extra["convnext_blocks"] = c.convnext_blocks;
  extra["convnext_kernel"] = c.convnext_kernel;
  extra["timesteps"] = schedule_.timesteps;
  extra["schedule_offset"] = schedule_.offset;
  header.extra = extra.dump();
  save_checkpoint(path, header, arrays);
}

void DitTrainer::resume_from(const std::string& path) {
  const auto ckpt = load_checkpoint(path);
  if (ckpt.header.kind != "dit") throw UserError("resume_from: checkpoint kind is '" + ckpt.header.kind + "'");
  load_state(*model_, ckpt.arrays);
  load_optimizer_state(*optimizer_, named_params_, ckpt.arrays);
  step_ = ckpt.header.step;
}

LoadedVae load_vae_checkpoint(const std::string& path) {
  const auto ckpt = load_checkpoint(path);
  if (ckpt.header.kind != "vae" && ckpt.header.kind != "eval_ocr" && ckpt.header.kind != "eval_style")
    throw UserError("load_vae_checkpoint: unexpected checkpoint kind '" + ckpt.header.kind + "'");
  const auto extra = nlohmann::json::parse(ckpt.header.extra);
  LoadedVae out;
  out.vocab.chars = utf8_decode(extra.at("vocab").get<std::string>());
  out.writers.ids = extra.at("writer_ids").get<std::vector<int>>();
  out.config.latent_dim = extra.at("latent_dim").get<std::int64_t>();
  out.config.gmm_components = extra.at("gmm_components").get<std::int64_t>();
  out.config.dec_tf_layers = extra.at("dec_tf_layers").get<std::int64_t>();
  out.config.dec_tf_dim = extra.at("dec_tf_dim").get<std::int64_t>();
  out.config.dec_tf_heads = extra.at("dec_tf_heads").get<std::int64_t>();
  out.config.ocr_layers = extra.at("ocr_layers").get<std::int64_t>();
  out.config.ocr_heads = extra.at("ocr_heads").get<std::int64_t>();
  out.config.style_hidden = extra.at("style_hidden").get<std::int64_t>();
  out.config.vocab_size = out.vocab.size();
  out.config.writer_count = static_cast<std::int64_t>(out.writers.ids.size());
  torch::manual_seed(0);
  out.model = InkVae(out.config);
  load_state(*out.model, ckpt.arrays);
  out.model->eval();
  out.header = ckpt.header;
  return out;
}

LoadedDit load_dit_checkpoint(const std::string& path) {
  const auto ckpt = load_checkpoint(path);
  if (ckpt.header.kind != "dit") throw UserError("load_dit_checkpoint: unexpected kind '" + ckpt.header.kind + "'");
  const auto extra = nlohmann::json::parse(ckpt.header.extra);
  LoadedDit out;
  out.vocab.chars = utf8_decode(extra.at("vocab").get<std::string>());
  out.writers.ids = extra.at("writer_ids").get<std::vector<int>>();
  out.config.layers = extra.at("layers").get<std::int64_t>();
  out.config.joint_dim = extra.at("joint_dim").get<std::int64_t>();
  out.config.latent_dim = extra.at("latent_dim").get<std::int64_t>();
  out.config.content_dim = extra.at("content_dim").get<std::int64_t>();
  out.config.heads = extra.at("heads").get<std::int64_t>();
  out.config.timestep_embed_dim = extra.at("timestep_embed_dim").get<std::int64_t>();
  out.config.convnext_blocks = extra.at("convnext_blocks").get<std::int64_t>();
  out.config.convnext_kernel = extra.at("convnext_kernel").get<std::int64_t>();
  torch::manual_seed(0);
  out.model = DitModel(out.config, out.vocab.size());
  load_state(*out.model, ckpt.arrays);
  out.model->eval();
  out.header = ckpt.header;
  return out;
}

}  // namespace ink
