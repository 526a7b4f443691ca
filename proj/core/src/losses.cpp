#include "ink/losses.hpp"

#include <cmath>

#include "ink/error.hpp"

namespace ink {

GmmParams GmmParams::split(const torch::Tensor& raw, std::int64_t p) {
  if (raw.dim() != 3) throw ShapeError("GmmParams::split: expected [B, N, 6p+3]");
  if (raw.size(2) != 6 * p + 3)
    throw ShapeError("GmmParams::split: channel width " + std::to_string(raw.size(2)) + " != " +
                     std::to_string(6 * p + 3));
  using torch::indexing::Slice;
  GmmParams g;
  g.mix_logits = raw.index({Slice(), Slice(), Slice(0, p)});
  g.mean_x = raw.index({Slice(), Slice(), Slice(p, 2 * p)});
  g.mean_y = raw.index({Slice(), Slice(), Slice(2 * p, 3 * p)});
  // Soft clamp keeps sigma in a sane range while staying smooth for
  // gradient checks away from the bounds.
  g.log_std_x = raw.index({Slice(), Slice(), Slice(3 * p, 4 * p)}).clamp(-7.0, 7.0);
  g.log_std_y = raw.index({Slice(), Slice(), Slice(4 * p, 5 * p)}).clamp(-7.0, 7.0);
  g.corr = torch::tanh(raw.index({Slice(), Slice(), Slice(5 * p, 6 * p)})) * (1.0 - 1e-6);
  g.pen_logits = raw.index({Slice(), Slice(), Slice(6 * p, 6 * p + 3)});
  return g;
}

torch::Tensor gmm_nll(const GmmParams& params, const torch::Tensor& targets, const torch::Tensor& valid_mask) {
  if (targets.dim() != 3 || targets.size(2) != 2) throw ShapeError("gmm_nll: targets must be [B, N, 2]");
  for (const auto* t : {&params.mix_logits, &params.mean_x, &params.corr, &targets}) {
    if (!t->isfinite().all().item<bool>()) throw NumericError("gmm_nll: non-finite input");
  }
  using torch::indexing::None;
  using torch::indexing::Slice;

  const auto x = targets.index({Slice(), Slice(), Slice(0, 1)});  // [B,N,1] broadcasts over p
  const auto y = targets.index({Slice(), Slice(), Slice(1, 2)});

  const auto sx = torch::exp(params.log_std_x);
  const auto sy = torch::exp(params.log_std_y);
  const auto rho = params.corr;
  const auto one_minus_r2 = 1.0 - rho * rho;

  const auto dx = (x - params.mean_x) / sx;
  const auto dy = (y - params.mean_y) / sy;
  const auto z = dx * dx - 2.0 * rho * dx * dy + dy * dy;

  const double log_2pi = std::log(2.0 * M_PI);
  const auto log_density = -log_2pi - params.log_std_x - params.log_std_y - 0.5 * torch::log(one_minus_r2) -
                           z / (2.0 * one_minus_r2);

  const auto log_mix = torch::log_softmax(params.mix_logits, -1);
  const auto log_prob = torch::logsumexp(log_mix + log_density, -1);  // [B, N]

  const auto mask = valid_mask.to(log_prob.dtype());
  const auto denom = mask.sum();
  if (denom.item<double>() <= 0.0) throw ShapeError("gmm_nll: empty valid mask");
  return -(log_prob * mask).sum() / denom;
}

torch::Tensor pen_focal_loss(const torch::Tensor& pen_logits, const torch::Tensor& pen_targets_onehot, double gamma,
                             std::optional<torch::Tensor> alpha) {
  if (pen_logits.sizes() != pen_targets_onehot.sizes())
    throw ShapeError("pen_focal_loss: logits/targets shape mismatch");
  const auto logp = torch::log_softmax(pen_logits, -1);
  const auto p = torch::exp(logp);
  auto focal = torch::pow(1.0 - p, gamma) * pen_targets_onehot.to(logp.dtype()) * logp;
  if (alpha.has_value()) {
    focal = focal * alpha->to(logp.dtype());
  }
  const auto steps = static_cast<double>(pen_logits.size(0) * pen_logits.size(1));
  return -focal.sum() / steps;
}

torch::Tensor kl_loss(const torch::Tensor& mu, const torch::Tensor& logvar, const torch::Tensor& valid_mask) {
  const auto per_step = 0.5 * (torch::exp(logvar) + mu * mu - 1.0 - logvar).sum(-1);  // [B, l]
  const auto mask = valid_mask.to(per_step.dtype());
  const auto denom = mask.sum();
  if (denom.item<double>() <= 0.0) throw ShapeError("kl_loss: empty valid mask");
  return (per_step * mask).sum() / denom;
}

torch::Tensor cross_entropy_loss(const torch::Tensor& logits, const torch::Tensor& targets) {
  const auto logp = torch::log_softmax(logits, -1);
  const auto picked = logp.gather(-1, targets.unsqueeze(-1)).squeeze(-1);
  return -picked.mean();
}

std::pair<torch::Tensor, VaeLossReport> vae_total_loss(const torch::Tensor& gmm, const torch::Tensor& pen,
                                                       const torch::Tensor& kl, const torch::Tensor& ocr,
                                                       const torch::Tensor& sty, const VaeLossWeights& weights) {
  auto total = weights.gmm * gmm + weights.pen * pen + weights.kl * kl + weights.ocr * ocr + weights.sty * sty;
  VaeLossReport report;
  report.gmm_nll = gmm.item<double>();
  report.pen_focal = pen.item<double>();
  report.kl = kl.item<double>();
  report.ocr_ctc = ocr.item<double>();
  report.style_ce = sty.item<double>();
  report.total = total.item<double>();
  report.finite = std::isfinite(report.total);
  return {total, report};
}

}  // namespace ink
