#pragma once

#include <optional>
#include <vector>

#include <torch/torch.h>

namespace ink {

/// Per-timestep bivariate mixture parameters plus pen-state logits, split
/// from the raw decoder output of width 6p + 3. Channel layout of the raw
/// tensor: [mix_logits | mean_x | mean_y | log_std_x | log_std_y | corr_raw |
/// pen_logits], each block of width p except the final 3.
struct GmmParams {
  torch::Tensor mix_logits;  // [B, N, p]
  torch::Tensor mean_x;      // [B, N, p]
  torch::Tensor mean_y;      // [B, N, p]
  torch::Tensor log_std_x;   // [B, N, p]
  torch::Tensor log_std_y;   // [B, N, p]
  torch::Tensor corr;        // [B, N, p], already squashed to (-1, 1)
  torch::Tensor pen_logits;  // [B, N, 3]

  std::int64_t components() const { return mix_logits.size(-1); }

  static GmmParams split(const torch::Tensor& raw, std::int64_t p = 20);
};

/// Masked negative log-likelihood of targets under the predicted mixture:
/// -(1/sum(mask)) * sum over valid steps of log sum_m pi_m N(p | mu_m, Sigma_m),
/// with a full bivariate normal (correlation included), log-sum-exp stabilized.
torch::Tensor gmm_nll(const GmmParams& params, const torch::Tensor& targets, const torch::Tensor& valid_mask);

/// Focal pen-state loss over the entire sequence including padded steps:
/// -(1/(B*N)) sum_t sum_k alpha_k (1-p_{t,k})^gamma y_{t,k} log p_{t,k}.
/// alpha defaults to uniform 1.
torch::Tensor pen_focal_loss(const torch::Tensor& pen_logits, const torch::Tensor& pen_targets_onehot,
                             double gamma = 2.0, std::optional<torch::Tensor> alpha = std::nullopt);

/// Gaussian KL to N(0, I), summed over channels per latent step and averaged
/// over valid steps: 0.5 * sum(exp(logvar) + mu^2 - 1 - logvar).
torch::Tensor kl_loss(const torch::Tensor& mu, const torch::Tensor& logvar, const torch::Tensor& valid_mask);

/// Mean cross-entropy of integer class targets.
torch::Tensor cross_entropy_loss(const torch::Tensor& logits, const torch::Tensor& targets);

struct VaeLossWeights {
  double gmm = 1.0;
  double pen = 2.0;
  double ocr = 1.0;
  double sty = 0.5;
  double kl = 1e-6;
};

struct VaeLossReport {
  double gmm_nll = 0.0;
  double pen_focal = 0.0;
  double kl = 0.0;
  double ocr_ctc = 0.0;
  double style_ce = 0.0;
  double total = 0.0;
  bool finite = true;
};

/// total = w.gmm*gmm + w.pen*pen + w.kl*kl + w.ocr*ocr + w.sty*sty.
/// The returned tensor keeps the graph for backward; the report carries the
/// detached values and a finiteness flag (a non-finite total signals that the
/// training step should be skipped).
std::pair<torch::Tensor, VaeLossReport> vae_total_loss(const torch::Tensor& gmm, const torch::Tensor& pen,
                                                       const torch::Tensor& kl, const torch::Tensor& ocr,
                                                       const torch::Tensor& sty, const VaeLossWeights& weights);

}  // namespace ink
