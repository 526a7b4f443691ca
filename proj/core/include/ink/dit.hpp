#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "ink/attention.hpp"

namespace ink {

struct DitConfig {
  std::int64_t layers = 16;
  std::int64_t joint_dim = 896;
  std::int64_t latent_dim = 384;
  std::int64_t content_dim = 512;
  std::int64_t heads = 8;
  std::int64_t timestep_embed_dim = 256;
  std::int64_t convnext_blocks = 3;
  std::int64_t convnext_kernel = 7;
  bool invert_loss_mask = false;  // alternative mask reading: supervise reference positions
};

/// Learnable character embeddings [K, d_text] plus one shared pad embedding.
/// Stored as a single [K+1, d_text] parameter; row K is the pad row.
struct CodebookImpl : torch::nn::Module {
  CodebookImpl(std::int64_t vocab_size, std::int64_t dim);

  /// Rows 0..m-1 are the character embeddings in order, rows m..l-1 the pad
  /// embedding. Requires m <= l; unknown indices raise a vocab error.
  torch::Tensor embed(const std::vector<std::int64_t>& chars, std::int64_t l);
  torch::Tensor embed_batch(const std::vector<std::vector<std::int64_t>>& texts, std::int64_t l);

  torch::Tensor char_embeddings() const;  // [K, dim] view
  torch::Tensor pad_embedding() const;    // [dim] view

  torch::Tensor weight;  // [K+1, dim]
  std::int64_t vocab_size_;
};
TORCH_MODULE(Codebook);

/// Global response normalization over the sequence dimension
/// (ConvNeXt-V2 style); gamma/beta start at zero so the layer is the identity
/// at initialization.
struct GrnImpl : torch::nn::Module {
  explicit GrnImpl(std::int64_t dim);
  torch::Tensor forward(const torch::Tensor& x);  // [B, L, C]

  torch::Tensor gamma, beta;
};
TORCH_MODULE(Grn);

/// Depthwise 1-D conv (kernel 7) -> LayerNorm -> pointwise MLP with GELU and
/// GRN -> zero-initialized projection, with a residual connection. Identity
/// at initialization.
struct ConvNeXtBlock1dImpl : torch::nn::Module {
  ConvNeXtBlock1dImpl(std::int64_t dim, std::int64_t kernel);
  torch::Tensor forward(const torch::Tensor& x);  // [B, L, C]

  torch::nn::Conv1d dwconv{nullptr};
  torch::nn::LayerNorm norm{nullptr};
  torch::nn::Linear pw1{nullptr}, pw2{nullptr};
  Grn grn{nullptr};
};
TORCH_MODULE(ConvNeXtBlock1d);

/// Stacked ConvNeXt blocks; shape-preserving [B, l, d_text].
struct ContentEncoderImpl : torch::nn::Module {
  explicit ContentEncoderImpl(const DitConfig& config);
  torch::Tensor forward(const torch::Tensor& embedded);

  torch::nn::ModuleList blocks;
};
TORCH_MODULE(ContentEncoder);

/// Transformer block with timestep-modulated adaptive normalization and gated
/// residuals. Modulation layers are zero-initialized so every block starts as
/// the identity.
struct DitBlockImpl : torch::nn::Module {
  DitBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t t_dim);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& t_emb);

  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  SelfAttention attn{nullptr};
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
  torch::nn::Linear modulation{nullptr};
};
TORCH_MODULE(DitBlock);

/// The x0-predicting denoiser: channel concat [x_t, x_ref, Z] -> linear to
/// the joint width -> timestep-modulated blocks -> zero-initialized output
/// projection back to the latent width (so x0_hat = 0 at initialization).
struct InkDitImpl : torch::nn::Module {
  explicit InkDitImpl(const DitConfig& config);

  /// t: int64 [B] (or scalar) diffusion timesteps.
  torch::Tensor denoise(const torch::Tensor& x_t, const torch::Tensor& x_ref, const torch::Tensor& z,
                        const torch::Tensor& t);

  DitConfig config;
  torch::nn::Linear in_proj{nullptr};
  torch::nn::Linear t_fc1{nullptr}, t_fc2{nullptr};
  torch::nn::ModuleList blocks;
  torch::nn::LayerNorm final_norm{nullptr};
  torch::nn::Linear final_modulation{nullptr};
  torch::nn::Linear out_proj{nullptr};
};
TORCH_MODULE(InkDit);

/// Mean squared error over positions where ref_mask is false (all channels).
/// Throws when the mask leaves nothing to supervise.
torch::Tensor masked_mse(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& ref_mask);

}  // namespace ink
