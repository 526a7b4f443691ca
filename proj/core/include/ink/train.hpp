#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "ink/checkpoint.hpp"
#include "ink/config.hpp"
#include "ink/ddim.hpp"
#include "ink/dit.hpp"
#include "ink/losses.hpp"
#include "ink/schedule.hpp"
#include "ink/types.hpp"
#include "ink/vae.hpp"
#include "ink/vocab.hpp"

namespace ink {

/// Sorted writer-label index (writer ids may be arbitrary ints).
struct WriterIndex {
  std::vector<int> ids;

  static WriterIndex from_corpus(const Corpus& corpus);
  std::int64_t size() const { return static_cast<std::int64_t>(ids.size()); }
  std::optional<std::int64_t> index(int writer_id) const;
};

/// Codebook + content encoder + denoiser; trained and checkpointed together.
struct DitModelImpl : torch::nn::Module {
  DitModelImpl(const DitConfig& cfg, std::int64_t vocab_size);

  DitConfig config;
  std::int64_t vocab_size = 0;
  Codebook codebook{nullptr};
  ContentEncoder content{nullptr};
  InkDit dit{nullptr};
};
TORCH_MODULE(DitModel);

using TrainLogFn = std::function<void(std::int64_t step, double lr, const VaeLossReport&)>;

struct VaeTrainOptions {
  double lr = 5e-4;
  std::int64_t batch_size = 128;
  std::int64_t total_steps = 20000;
  double clip_norm = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 1e-4;
  double warmup_frac = 0.05;
  VaeLossWeights weights;
  double focal_gamma = 2.0;
  std::uint64_t seed = 7;
  std::int64_t max_line_points = 512;
  std::uint64_t config_hash = 0;

  static VaeTrainOptions from(const RunConfig& config);
};

class VaeTrainer {
 public:
  VaeTrainer(Corpus corpus, VaeConfig model_config, VaeTrainOptions options);

  VaeLossReport step();
  void run(std::int64_t until_step, const TrainLogFn& log = {});
  std::int64_t current_step() const { return step_; }
  InkVae& model() { return model_; }
  const Vocab& vocab() const { return vocab_; }
  const WriterIndex& writers() const { return writers_; }
  const torch::Tensor& pen_alpha() const { return pen_alpha_; }

  void save(const std::string& path) const;
  void resume_from(const std::string& path);

 private:
  std::vector<const InkLine*> batch_lines(const std::vector<std::size_t>& idx) const;
  void ensure_epoch_batches(std::uint64_t epoch);

  Corpus corpus_;
  VaeConfig model_config_;
  VaeTrainOptions options_;
  Vocab vocab_;
  WriterIndex writers_;
  InkVae model_{nullptr};
  std::unique_ptr<torch::optim::AdamW> optimizer_;
  std::vector<std::pair<std::string, torch::Tensor>> named_params_;
  torch::Tensor pen_alpha_;
  std::vector<std::vector<std::int64_t>> labels_;
  std::vector<std::int64_t> writer_class_;
  std::vector<std::vector<std::size_t>> batches_;
  std::uint64_t batches_epoch_ = UINT64_MAX;
  std::int64_t step_ = 0;
  int nan_streak_ = 0;
  VaeLossReport last_report_;
};

struct DitTrainOptions {
  double lr = 7.5e-5;
  std::int64_t batch_size = 256;
  std::int64_t total_steps = 200000;
  double clip_norm = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 1e-4;
  double warmup_frac = 0.05;
  double ref_frac_min = 0.10;
  double ref_frac_max = 0.40;
  bool invert_loss_mask = false;
  std::uint64_t seed = 7;
  std::int64_t max_line_points = 512;
  std::uint64_t config_hash = 0;
  // DDIM fine-tuning mode: unroll a few sampler iterations differentiably.
  bool finetune = false;
  std::int64_t finetune_unroll = 2;
  std::int64_t ddim_steps = 5;

  static DitTrainOptions from(const RunConfig& config, bool finetune_mode = false);
};

class DitTrainer {
 public:
  DitTrainer(Corpus corpus, InkVae frozen_vae, DitModel model, NoiseSchedule schedule, DitTrainOptions options,
             Vocab vocab, WriterIndex writers);

  double step();  // returns the masked-MSE loss
  void run(std::int64_t until_step, const std::function<void(std::int64_t, double lr, double loss)>& log = {});
  std::int64_t current_step() const { return step_; }
  DitModel& model() { return model_; }
  const NoiseSchedule& schedule() const { return schedule_; }

  void save(const std::string& path) const;
  void resume_from(const std::string& path);

 private:
  void ensure_epoch_batches(std::uint64_t epoch);

  Corpus corpus_;
  InkVae vae_{nullptr};
  DitModel model_{nullptr};
  NoiseSchedule schedule_;
  DitTrainOptions options_;
  Vocab vocab_;
  WriterIndex writers_;
  std::unique_ptr<torch::optim::AdamW> optimizer_;
  std::vector<std::pair<std::string, torch::Tensor>> named_params_;
  std::vector<std::vector<std::int64_t>> labels_;
  std::vector<std::vector<std::size_t>> batches_;
  std::uint64_t batches_epoch_ = UINT64_MAX;
  std::int64_t step_ = 0;
  int nan_streak_ = 0;
  double last_loss_ = 0.0;
};

VaeConfig vae_config_for(const Corpus& corpus, const RunConfig& config);
DitConfig dit_config_from(const RunConfig& config);

struct LoadedVae {
  InkVae model{nullptr};
  VaeConfig config;
  Vocab vocab;
  WriterIndex writers;
  CheckpointHeader header;
};
LoadedVae load_vae_checkpoint(const std::string& path);

struct LoadedDit {
  DitModel model{nullptr};
  DitConfig config;
  Vocab vocab;
  WriterIndex writers;
  CheckpointHeader header;
};
LoadedDit load_dit_checkpoint(const std::string& path);

}  // namespace ink
