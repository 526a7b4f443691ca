#include "ink/dit.hpp"

#include "ink/error.hpp"

namespace ink {

CodebookImpl::CodebookImpl(std::int64_t vocab_size, std::int64_t dim) : vocab_size_(vocab_size) {
  if (vocab_size < 1) throw UserError("Codebook: vocab_size must be >= 1");
  weight = register_parameter("weight", torch::randn({vocab_size + 1, dim}) * 0.02);
}

torch::Tensor CodebookImpl::char_embeddings() const { return weight.slice(0, 0, vocab_size_); }
torch::Tensor CodebookImpl::pad_embedding() const { return weight[vocab_size_]; }

torch::Tensor CodebookImpl::embed(const std::vector<std::int64_t>& chars, std::int64_t l) {
  const std::int64_t m = static_cast<std::int64_t>(chars.size());
  if (m > l)
    throw UserError("Codebook::embed: text length " + std::to_string(m) + " exceeds latent length " +
                    std::to_string(l));
  auto idx = torch::full({l}, vocab_size_, torch::kInt64);  // pad rows
  for (std::int64_t i = 0; i < m; ++i) {
    if (chars[static_cast<std::size_t>(i)] < 0 || chars[static_cast<std::size_t>(i)] >= vocab_size_)
      throw UserError("Codebook::embed: character index " + std::to_string(chars[static_cast<std::size_t>(i)]) +
                      " outside vocabulary of " + std::to_string(vocab_size_));
    idx[i] = chars[static_cast<std::size_t>(i)];
  }
  return weight.index_select(0, idx);
}

torch::Tensor CodebookImpl::embed_batch(const std::vector<std::vector<std::int64_t>>& texts, std::int64_t l) {
  std::vector<torch::Tensor> rows;
  rows.reserve(texts.size());
  for (const auto& t : texts) rows.push_back(embed(t, l));
  return torch::stack(rows);
}

GrnImpl::GrnImpl(std::int64_t dim) {
  gamma = register_parameter("gamma", torch::zeros({dim}));
  beta = register_parameter("beta", torch::zeros({dim}));
}

torch::Tensor GrnImpl::forward(const torch::Tensor& x) {
  const auto gx = torch::norm(x, 2, /*dim=*/1, /*keepdim=*/true);            // [B, 1, C]
  const auto nx = gx / (gx.mean(-1, /*keepdim=*/true) + 1e-6);               // [B, 1, C]
  return gamma * (x * nx) + beta + x;
}

ConvNeXtBlock1dImpl::ConvNeXtBlock1dImpl(std::int64_t dim, std::int64_t kernel) {
  dwconv = register_module("dwconv", torch::nn::Conv1d(torch::nn::Conv1dOptions(dim, dim, kernel)
                                                           .padding(kernel / 2)
                                                           .groups(dim)));
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  pw1 = register_module("pw1", torch::nn::Linear(dim, 4 * dim));
  pw2 = register_module("pw2", torch::nn::Linear(4 * dim, dim));
  grn = register_module("grn", Grn(4 * dim));
  torch::NoGradGuard ng;
  pw2->weight.zero_();
  pw2->bias.zero_();
}

torch::Tensor ConvNeXtBlock1dImpl::forward(const torch::Tensor& x) {
  auto h = dwconv(x.transpose(1, 2)).transpose(1, 2);  // [B, L, C]
  h = norm(h);
  h = pw1(h);
  h = torch::gelu(h);
  h = grn(h);
  h = pw2(h);
  return x + h;
}

ContentEncoderImpl::ContentEncoderImpl(const DitConfig& config) {
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < config.convnext_blocks; ++i)
    blocks->push_back(ConvNeXtBlock1d(config.content_dim, config.convnext_kernel));
}

torch::Tensor ContentEncoderImpl::forward(const torch::Tensor& embedded) {
  if (embedded.dim() != 3) throw ShapeError("ContentEncoder: input must be [B, l, d_text]");
  auto h = embedded;
  for (auto& block : *blocks) h = block->as<ConvNeXtBlock1dImpl>()->forward(h);
  return h;
}

DitBlockImpl::DitBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t t_dim) {
  norm1 = register_module("norm1",
                          torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim}).elementwise_affine(false)));
  norm2 = register_module("norm2",
                          torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim}).elementwise_affine(false)));
  attn = register_module("attn", SelfAttention(dim, heads));
  fc1 = register_module("fc1", torch::nn::Linear(dim, 4 * dim));
  fc2 = register_module("fc2", torch::nn::Linear(4 * dim, dim));
  modulation = register_module("modulation", torch::nn::Linear(t_dim, 6 * dim));
  torch::NoGradGuard ng;
  modulation->weight.zero_();
  modulation->bias.zero_();
}

namespace {
torch::Tensor modulate(const torch::Tensor& h, const torch::Tensor& shift, const torch::Tensor& scale) {
  return h * (1.0 + scale) + shift;
}
}  // namespace

torch::Tensor DitBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& t_emb) {
  const auto mods = modulation(torch::silu(t_emb)).unsqueeze(1).chunk(6, -1);  // each [B, 1, dim]
  auto h = x + mods[2] * attn(modulate(norm1(x), mods[0], mods[1]));
  h = h + mods[5] * fc2(torch::gelu(fc1(modulate(norm2(h), mods[3], mods[4]))));
  return h;
}

InkDitImpl::InkDitImpl(const DitConfig& cfg) : config(cfg) {
  const auto in_dim = config.latent_dim * 2 + config.content_dim;
  in_proj = register_module("in_proj", torch::nn::Linear(in_dim, config.joint_dim));
  t_fc1 = register_module("t_fc1", torch::nn::Linear(config.timestep_embed_dim, config.timestep_embed_dim));
  t_fc2 = register_module("t_fc2", torch::nn::Linear(config.timestep_embed_dim, config.timestep_embed_dim));
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < config.layers; ++i)
    blocks->push_back(DitBlock(config.joint_dim, config.heads, config.timestep_embed_dim));
  final_norm = register_module(
      "final_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({config.joint_dim}).elementwise_affine(false)));
  final_modulation = register_module("final_modulation",
                                     torch::nn::Linear(config.timestep_embed_dim, 2 * config.joint_dim));
  out_proj = register_module("out_proj", torch::nn::Linear(config.joint_dim, config.latent_dim));
  torch::NoGradGuard ng;
  final_modulation->weight.zero_();
  final_modulation->bias.zero_();
  out_proj->weight.zero_();
  out_proj->bias.zero_();
}

torch::Tensor InkDitImpl::denoise(const torch::Tensor& x_t, const torch::Tensor& x_ref, const torch::Tensor& z,
                                  const torch::Tensor& t) {
  if (x_t.sizes() != x_ref.sizes()) throw ShapeError("denoise: x_t/x_ref shape mismatch");
  if (z.size(0) != x_t.size(0) || z.size(1) != x_t.size(1))
    throw ShapeError("denoise: content condition length mismatch");
  auto t_idx = t.dim() == 0 ? t.expand({x_t.size(0)}) : t;
  if (t_idx.size(0) != x_t.size(0)) throw ShapeError("denoise: timestep batch mismatch");

  auto h = in_proj(torch::cat({x_t, x_ref, z}, -1));
  h = h + sinusoidal_positions(h.size(1), h.size(2), h.options()).unsqueeze(0);
  const auto t_feat = timestep_features(t_idx, config.timestep_embed_dim, h.options());
  const auto t_emb = t_fc2(torch::silu(t_fc1(t_feat)));
  for (auto& block : *blocks) h = block->as<DitBlockImpl>()->forward(h, t_emb);

  const auto mods = final_modulation(torch::silu(t_emb)).unsqueeze(1).chunk(2, -1);
  h = modulate(final_norm(h), mods[0], mods[1]);
  return out_proj(h);
}

torch::Tensor masked_mse(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& ref_mask) {
  if (pred.sizes() != target.sizes()) throw ShapeError("masked_mse: shape mismatch");
  if (ref_mask.dim() != 2 || ref_mask.size(0) != pred.size(0) || ref_mask.size(1) != pred.size(1))
    throw ShapeError("masked_mse: mask must be [B, l]");
  const auto keep = (~ref_mask).to(pred.dtype()).unsqueeze(-1);  // weight 1 on generation positions
  const auto denom = keep.sum() * static_cast<double>(pred.size(2));
  if (denom.item<double>() <= 0.0) throw UserError("masked_mse: mask leaves no position to supervise");
  return ((pred - target).square() * keep).sum() / denom;
}

}  // namespace ink
