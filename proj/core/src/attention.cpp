#include "ink/attention.hpp"

#include <cmath>

#include "ink/error.hpp"

namespace ink {

torch::Tensor sinusoidal_positions(std::int64_t len, std::int64_t dim, torch::TensorOptions opts) {
  auto pos = torch::arange(len, opts).unsqueeze(1);                       // [L, 1]
  auto idx = torch::arange(0, dim, 2, opts);                              // [D/2]
  auto div = torch::exp(idx * (-std::log(10000.0) / static_cast<double>(dim)));
  auto pe = torch::zeros({len, dim}, opts);
  pe.index_put_({torch::indexing::Slice(), torch::indexing::Slice(0, torch::indexing::None, 2)},
                torch::sin(pos * div));
  pe.index_put_({torch::indexing::Slice(), torch::indexing::Slice(1, torch::indexing::None, 2)},
                torch::cos(pos * div));
  return pe;
}

torch::Tensor timestep_features(const torch::Tensor& t, std::int64_t dim, torch::TensorOptions opts) {
  const std::int64_t half = dim / 2;
  auto idx = torch::arange(half, opts);
  auto freqs = torch::exp(idx * (-std::log(10000.0) / static_cast<double>(half)));
  auto args = t.to(opts.dtype()).unsqueeze(-1) * freqs;  // [B, half]
  auto feats = torch::cat({torch::cos(args), torch::sin(args)}, -1);
  if (dim % 2 == 1) feats = torch::nn::functional::pad(feats, torch::nn::functional::PadFuncOptions({0, 1}));
  return feats;
}

SelfAttentionImpl::SelfAttentionImpl(std::int64_t dim, std::int64_t heads) : heads_(heads) {
  if (dim % heads != 0) throw ShapeError("SelfAttention: dim must divide heads");
  qkv = register_module("qkv", torch::nn::Linear(dim, 3 * dim));
  proj = register_module("proj", torch::nn::Linear(dim, dim));
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor& x, const torch::Tensor& key_valid) {
  const auto b = x.size(0), l = x.size(1), d = x.size(2);
  const auto hd = d / heads_;
  auto qkv_out = qkv(x).reshape({b, l, 3, heads_, hd}).permute({2, 0, 3, 1, 4});  // [3, B, H, L, hd]
  auto q = qkv_out[0], k = qkv_out[1], v = qkv_out[2];
  auto scores = torch::matmul(q, k.transpose(-2, -1)) / std::sqrt(static_cast<double>(hd));  // [B, H, L, L]
  if (key_valid.defined()) {
    auto mask = key_valid.unsqueeze(1).unsqueeze(1);  // [B, 1, 1, L]
    scores = scores.masked_fill(~mask, -1e9);
  }
  auto attn = torch::softmax(scores, -1);
  auto out = torch::matmul(attn, v);                                 // [B, H, L, hd]
  out = out.transpose(1, 2).reshape({b, l, d});
  return proj(out);
}

TransformerBlockImpl::TransformerBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t mlp_ratio) {
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  attn = register_module("attn", SelfAttention(dim, heads));
  fc1 = register_module("fc1", torch::nn::Linear(dim, dim * mlp_ratio));
  fc2 = register_module("fc2", torch::nn::Linear(dim * mlp_ratio, dim));
}

torch::Tensor TransformerBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& key_valid) {
  auto h = x + attn(norm1(x), key_valid);
  h = h + fc2(torch::gelu(fc1(norm2(h))));
  return h;
}

}  // namespace ink
