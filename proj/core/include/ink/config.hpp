#pragma once

#include <cstdint>
#include <string>

#include "ink/types.hpp"

namespace ink {

/// Sections mirror the pipeline stages. Defaults follow the published
/// hyperparameters where one exists (learning rates 5e-4 / 7.5e-5, gradient
/// clip 5.0 / 1.0, loss weights, T = 1000, 5 DDIM steps, batch sizes
/// 128 / 256); scale knobs are meant to be overridden by small configs for
/// desk-size runs.
struct DataSection {
  // synthesis
  int n_writers = 8;
  int glyph_set_size = 20;
  int lines_per_writer = 250;
  int line_len_min = 5;
  int line_len_max = 15;
  double zipf_exponent = 1.1;
  int augment_lines = 0;
  double test_fraction = 0.1;
  // preprocessing
  double rdp_epsilon = 0.4;
  bool normalize = true;
  int max_line_points = 512;
};

struct VaeSection {
  double lr = 5e-4;
  int batch_size = 128;
  std::int64_t steps = 20000;
  double clip_norm = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 1e-4;
  double warmup_frac = 0.05;
  double lambda_gmm = 1.0;
  double lambda_pen = 2.0;
  double lambda_ocr = 1.0;
  double lambda_sty = 0.5;
  double lambda_kl = 1e-6;
  double focal_gamma = 2.0;
  std::int64_t log_every = 50;
  std::int64_t ckpt_every = 1000;
};

struct DitSection {
  // architecture
  std::int64_t layers = 16;
  std::int64_t joint_dim = 896;
  std::int64_t latent_dim = 384;
  std::int64_t content_dim = 512;
  std::int64_t heads = 8;
  std::int64_t timestep_embed_dim = 256;
  std::int64_t convnext_blocks = 3;
  std::int64_t convnext_kernel = 7;
  // diffusion
  std::int64_t timesteps = 1000;
  double schedule_offset = 0.008;
  std::int64_t ddim_steps = 5;
  bool invert_loss_mask = false;
  double ref_frac_min = 0.10;
  double ref_frac_max = 0.40;
  // optimization
  double lr = 7.5e-5;
  int batch_size = 256;
  std::int64_t steps = 200000;
  double clip_norm = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 1e-4;
  double warmup_frac = 0.05;
  std::int64_t log_every = 50;
  std::int64_t ckpt_every = 1000;
  // DDIM fine-tuning
  std::int64_t finetune_unroll = 2;
  double finetune_lr_scale = 0.1;
  std::int64_t finetune_steps = 500;
};

struct EvalSection {
  double ocr_gate = 97.0;
  double style_gate = 97.0;
  double ref_fraction = 0.3;
  std::int64_t throughput_chars = 2000;
  std::int64_t train_steps = 6000;   // eval-model training budget
  int batch_size = 16;
  double lr = 1e-3;
  std::int64_t max_lines = 0;  // 0 = evaluate every test line
};

struct RunConfig {
  std::uint64_t seed = 7;
  int threads = 0;  // 0 = leave the torch default
  DataSection data;
  VaeSection vae;
  DitSection dit;
  EvalSection eval;

  PreprocessConfig preprocess_config() const {
    return PreprocessConfig{data.rdp_epsilon, data.normalize, data.max_line_points};
  }
};

/// INI-style text: [section] headers, key = value lines, # comments.
/// Unknown sections or keys are errors.
RunConfig parse_config_text(const std::string& text, const RunConfig& base = {});
RunConfig load_config(const std::string& path, const RunConfig& base = {});
void apply_override(RunConfig& config, const std::string& dotted_key, const std::string& value);

/// Deterministic resolved form; feeding it back through parse_config_text
/// reproduces the config exactly.
std::string serialize_config(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

}  // namespace ink
