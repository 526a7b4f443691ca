#pragma once

#include <torch/torch.h>

namespace ink {

/// Fixed sinusoidal positional encoding, [len, dim].
torch::Tensor sinusoidal_positions(std::int64_t len, std::int64_t dim, torch::TensorOptions opts);

/// Sinusoidal features of diffusion timesteps t [B] -> [B, dim].
torch::Tensor timestep_features(const torch::Tensor& t, std::int64_t dim, torch::TensorOptions opts);

/// Multi-head self-attention over [B, L, D]. An optional key_valid mask
/// [B, L] (true = real position) excludes padded keys.
struct SelfAttentionImpl : torch::nn::Module {
  SelfAttentionImpl(std::int64_t dim, std::int64_t heads);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& key_valid = {});

  torch::nn::Linear qkv{nullptr}, proj{nullptr};
  std::int64_t heads_;
};
TORCH_MODULE(SelfAttention);

/// Pre-norm transformer block: x + attn(LN(x)), x + mlp(LN(x)).
struct TransformerBlockImpl : torch::nn::Module {
  TransformerBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t mlp_ratio = 4);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& key_valid = {});

  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  SelfAttention attn{nullptr};
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(TransformerBlock);

}  // namespace ink
