#include "ink/vae.hpp"

#include "ink/error.hpp"
#include "ink/preprocess.hpp"
#include "ink/tensor_util.hpp"

namespace ink {

torch::Tensor LatentPosterior::sample(std::uint64_t seed) const {
  const auto eps = seeded_randn(mu.sizes(), seed, mu.options());
  return mu + torch::exp(0.5 * logvar) * eps;
}

torch::Tensor mask_from_lens(const torch::Tensor& lens, std::int64_t l) {
  const auto steps = torch::arange(l, torch::kInt64);
  return steps.unsqueeze(0) < lens.unsqueeze(1);
}

torch::Tensor LatentSeq::valid_mask() const { return mask_from_lens(valid_lens, values.size(1)); }

ResConvBlock1dImpl::ResConvBlock1dImpl(std::int64_t channels) {
  conv1 = register_module("conv1", torch::nn::Conv1d(torch::nn::Conv1dOptions(channels, channels, 3).padding(1)));
  conv2 = register_module("conv2", torch::nn::Conv1d(torch::nn::Conv1dOptions(channels, channels, 3).padding(1)));
}

torch::Tensor ResConvBlock1dImpl::forward(const torch::Tensor& x) {
  return x + conv2(torch::gelu(conv1(torch::gelu(x))));
}

InkVaeEncoderImpl::InkVaeEncoderImpl(const VaeConfig& config) {
  down1 = register_module("down1", torch::nn::Conv1d(torch::nn::Conv1dOptions(5, 128, 4).stride(2).padding(1)));
  down2 = register_module("down2", torch::nn::Conv1d(torch::nn::Conv1dOptions(128, 256, 4).stride(2).padding(1)));
  down3 = register_module("down3",
                          torch::nn::Conv1d(torch::nn::Conv1dOptions(256, config.latent_dim, 4).stride(2).padding(1)));
  res1 = register_module("res1", ResConvBlock1d(128));
  res2 = register_module("res2", ResConvBlock1d(256));
  res3 = register_module("res3", ResConvBlock1d(config.latent_dim));
  mu_head = register_module("mu_head", torch::nn::Linear(config.latent_dim, config.latent_dim));
  logvar_head = register_module("logvar_head", torch::nn::Linear(config.latent_dim, config.latent_dim));
}

LatentPosterior InkVaeEncoderImpl::forward(const torch::Tensor& points) {
  if (points.dim() != 3 || points.size(2) != 5) throw ShapeError("encoder: input must be [B, N, 5]");
  if (points.size(1) % 8 != 0)
    throw ShapeError("encoder: N = " + std::to_string(points.size(1)) + " not divisible by 8");
  auto h = points.transpose(1, 2);  // [B, 5, N]
  h = res1(down1(h));
  h = res2(down2(h));
  h = res3(down3(h));
  h = h.transpose(1, 2);  // [B, N/8, d]
  return {mu_head(h), logvar_head(h)};
}

InkVaeDecoderImpl::InkVaeDecoderImpl(const VaeConfig& config) {
  const auto d = config.latent_dim;
  const auto w = config.dec_tf_dim;
  up1 = register_module("up1", torch::nn::ConvTranspose1d(torch::nn::ConvTranspose1dOptions(d, d, 4).stride(2).padding(1)));
  up2 = register_module("up2", torch::nn::ConvTranspose1d(torch::nn::ConvTranspose1dOptions(d, w, 4).stride(2).padding(1)));
  up3 = register_module("up3", torch::nn::ConvTranspose1d(torch::nn::ConvTranspose1dOptions(w, w, 4).stride(2).padding(1)));
  res1 = register_module("res1", ResConvBlock1d(d));
  res2 = register_module("res2", ResConvBlock1d(w));
  res3 = register_module("res3", ResConvBlock1d(w));
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < config.dec_tf_layers; ++i)
    blocks->push_back(TransformerBlock(w, config.dec_tf_heads));
  out_norm = register_module("out_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({w})));
  out_proj = register_module("out_proj", torch::nn::Linear(w, 6 * config.gmm_components + 3));
}

torch::Tensor InkVaeDecoderImpl::forward(const torch::Tensor& latent) {
  if (latent.dim() != 3) throw ShapeError("decoder: latent must be [B, l, d]");
  auto h = latent.transpose(1, 2);  // [B, d, l]
  h = res1(up1(h));                 // l*2
  h = res2(up2(h));                 // l*4
  h = res3(up3(h));                 // l*8 = N
  h = h.transpose(1, 2);            // [B, N, w]
  h = h + sinusoidal_positions(h.size(1), h.size(2), h.options()).unsqueeze(0);
  for (auto& block : *blocks) h = block->as<TransformerBlockImpl>()->forward(h);
  return out_proj(out_norm(h));
}

OcrHeadImpl::OcrHeadImpl(const VaeConfig& config) {
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < config.ocr_layers; ++i)
    blocks->push_back(TransformerBlock(config.latent_dim, config.ocr_heads));
  out_norm = register_module("out_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({config.latent_dim})));
  out_proj = register_module("out_proj", torch::nn::Linear(config.latent_dim, config.vocab_size + 1));
}

torch::Tensor OcrHeadImpl::forward(const torch::Tensor& latent, const torch::Tensor& valid_mask) {
  auto h = latent + sinusoidal_positions(latent.size(1), latent.size(2), latent.options()).unsqueeze(0);
  for (auto& block : *blocks) h = block->as<TransformerBlockImpl>()->forward(h, valid_mask);
  return out_proj(out_norm(h));
}

StyleHeadImpl::StyleHeadImpl(const VaeConfig& config) {
  lstm = register_module(
      "lstm", torch::nn::LSTM(torch::nn::LSTMOptions(config.latent_dim, config.style_hidden).batch_first(true)));
  attn_hidden = register_module("attn_hidden", torch::nn::Linear(config.style_hidden, config.style_hidden));
  attn_score = register_module("attn_score", torch::nn::Linear(config.style_hidden, 1));
  out_proj = register_module("out_proj", torch::nn::Linear(config.style_hidden, config.writer_count));
}

torch::Tensor StyleHeadImpl::forward(const torch::Tensor& latent, const torch::Tensor& valid_mask) {
  auto [h, state] = lstm(latent);                                  // [B, l, H]
  auto scores = attn_score(torch::tanh(attn_hidden(h))).squeeze(-1);  // [B, l]
  if (valid_mask.defined()) scores = scores.masked_fill(~valid_mask, -1e9);
  const auto weights = torch::softmax(scores, -1).unsqueeze(-1);   // [B, l, 1]
  const auto pooled = (h * weights).sum(1);                        // [B, H]
  return out_proj(pooled);
}

InkVaeImpl::InkVaeImpl(const VaeConfig& cfg) : config(cfg) {
  if (config.vocab_size <= 0 || config.writer_count <= 0)
    throw UserError("InkVae: vocab_size and writer_count must be set");
  encoder = register_module("encoder", InkVaeEncoder(config));
  decoder = register_module("decoder", InkVaeDecoder(config));
  ocr_head = register_module("ocr_head", OcrHead(config));
  style_head = register_module("style_head", StyleHead(config));
}

std::pair<LatentPosterior, LatentSeq> InkVaeImpl::encode(const torch::Tensor& points,
                                                         const torch::Tensor& valid_lengths, bool deterministic,
                                                         std::uint64_t seed) {
  auto posterior = encoder(points);
  LatentSeq latent;
  latent.values = deterministic ? posterior.mu : posterior.sample(seed);
  latent.valid_lens = valid_lengths.defined()
                          ? (valid_lengths + 7).floor_divide(8)
                          : torch::full({points.size(0)}, points.size(1) / 8, torch::kInt64);
  return {std::move(posterior), std::move(latent)};
}

GmmParams InkVaeImpl::decode(const torch::Tensor& latent_values) {
  if (latent_values.size(-1) != config.latent_dim) throw ShapeError("decode: latent width mismatch");
  return GmmParams::split(decoder(latent_values), config.gmm_components);
}

}  // namespace ink
