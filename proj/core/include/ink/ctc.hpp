#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace ink {

/// CTC negative log-likelihood via the forward dynamic program over the
/// blank-interleaved label lattice, entirely in log space. The blank class is
/// the last index (K). Differentiable through torch autograd.
///
/// A label is infeasible when the frame count is smaller than
/// label_len + adjacent_repeats; such samples get an infinite per-sample loss
/// and are excluded from the mean (reported, not thrown).
struct CtcBatchResult {
  torch::Tensor loss;         // scalar, mean over feasible samples
  torch::Tensor per_sample;   // [B], +inf where infeasible
  std::vector<bool> feasible; // [B]
  std::int64_t feasible_count = 0;
};

CtcBatchResult ctc_loss(const torch::Tensor& logits, const std::vector<std::vector<std::int64_t>>& labels,
                        const std::vector<std::int64_t>& valid_lens);

/// Single-sequence loss; logits [T, K+1]. Returns +inf tensor when infeasible.
torch::Tensor ctc_loss_single(const torch::Tensor& logits, const std::vector<std::int64_t>& label,
                              std::int64_t valid_len);

bool ctc_feasible(std::size_t label_len, std::size_t adjacent_repeats, std::int64_t frames);

/// Greedy CTC decode: per-frame argmax, collapse repeats, drop blanks.
std::vector<std::int64_t> ctc_greedy_decode(const torch::Tensor& logits, std::int64_t valid_len);

}  // namespace ink
