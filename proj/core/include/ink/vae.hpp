#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "ink/attention.hpp"
#include "ink/losses.hpp"

namespace ink {

struct VaeConfig {
  std::int64_t latent_dim = 384;       // fixed by the 8x-compressed latent contract
  std::int64_t gmm_components = 20;    // decoder output width 6*20 + 3 = 123
  std::int64_t dec_tf_layers = 3;      // trajectory-decoder refinement block
  std::int64_t dec_tf_dim = 256;
  std::int64_t dec_tf_heads = 4;
  std::int64_t ocr_layers = 2;
  std::int64_t ocr_heads = 4;
  std::int64_t style_hidden = 256;
  std::int64_t vocab_size = 0;   // K; OCR classes = K + 1 (last is the CTC blank)
  std::int64_t writer_count = 0; // W
};

/// Variational parameters of the latent sequence.
struct LatentPosterior {
  torch::Tensor mu;      // [B, l, d]
  torch::Tensor logvar;  // [B, l, d]

  torch::Tensor sample(std::uint64_t seed) const;  // mu + exp(logvar/2) * eps
};

/// A latent sequence plus per-row valid lengths (ceil(N/8)).
struct LatentSeq {
  torch::Tensor values;      // [B, l, d]
  torch::Tensor valid_lens;  // [B] int64

  torch::Tensor valid_mask() const;  // [B, l] bool
};

torch::Tensor mask_from_lens(const torch::Tensor& lens, std::int64_t l);

struct ResConvBlock1dImpl : torch::nn::Module {
  explicit ResConvBlock1dImpl(std::int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);  // [B, C, L]

  torch::nn::Conv1d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(ResConvBlock1d);

/// Three stride-2 residual conv stages: [B, N, 5] -> [B, N/8, 384], then
/// linear mu / logvar heads.
struct InkVaeEncoderImpl : torch::nn::Module {
  explicit InkVaeEncoderImpl(const VaeConfig& config);
  LatentPosterior forward(const torch::Tensor& points);  // requires N % 8 == 0

  torch::nn::Conv1d down1{nullptr}, down2{nullptr}, down3{nullptr};
  ResConvBlock1d res1{nullptr}, res2{nullptr}, res3{nullptr};
  torch::nn::Linear mu_head{nullptr}, logvar_head{nullptr};
};
TORCH_MODULE(InkVaeEncoder);

/// Mirrored upsampling (l*8 = N) to width 256, a 3-layer self-attention
/// refinement block, then the 123-wide mixture/pen projection.
struct InkVaeDecoderImpl : torch::nn::Module {
  explicit InkVaeDecoderImpl(const VaeConfig& config);
  torch::Tensor forward(const torch::Tensor& latent);  // [B, l, d] -> [B, N, 6p+3]

  torch::nn::ConvTranspose1d up1{nullptr}, up2{nullptr}, up3{nullptr};
  ResConvBlock1d res1{nullptr}, res2{nullptr}, res3{nullptr};
  torch::nn::ModuleList blocks;
  torch::nn::LayerNorm out_norm{nullptr};
  torch::nn::Linear out_proj{nullptr};
};
TORCH_MODULE(InkVaeDecoder);

/// Self-attention recognition head over latent steps; last class is the CTC
/// blank.
struct OcrHeadImpl : torch::nn::Module {
  explicit OcrHeadImpl(const VaeConfig& config);
  torch::Tensor forward(const torch::Tensor& latent, const torch::Tensor& valid_mask = {});

  torch::nn::ModuleList blocks;
  torch::nn::LayerNorm out_norm{nullptr};
  torch::nn::Linear out_proj{nullptr};
};
TORCH_MODULE(OcrHead);

/// LSTM summarization with attention pooling and a writer classification
/// layer.
struct StyleHeadImpl : torch::nn::Module {
  explicit StyleHeadImpl(const VaeConfig& config);
  torch::Tensor forward(const torch::Tensor& latent, const torch::Tensor& valid_mask = {});

  torch::nn::LSTM lstm{nullptr};
  torch::nn::Linear attn_hidden{nullptr}, attn_score{nullptr}, out_proj{nullptr};
};
TORCH_MODULE(StyleHead);

struct InkVaeImpl : torch::nn::Module {
  explicit InkVaeImpl(const VaeConfig& config);

  /// deterministic=true returns mu as the sample.
  std::pair<LatentPosterior, LatentSeq> encode(const torch::Tensor& points, const torch::Tensor& valid_lengths,
                                               bool deterministic, std::uint64_t seed = 0);
  GmmParams decode(const torch::Tensor& latent_values);

  VaeConfig config;
  InkVaeEncoder encoder{nullptr};
  InkVaeDecoder decoder{nullptr};
  OcrHead ocr_head{nullptr};
  StyleHead style_head{nullptr};
};
TORCH_MODULE(InkVae);

}  // namespace ink
