#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace ink {

/// Cumulative signal coefficients of the squared-cosine schedule:
/// alpha_bar(t) = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2),
/// clamped to [1e-5, 1 - 1e-5] for t >= 1; alpha_bar(0) = 1 exactly.
struct NoiseSchedule {
  std::vector<double> alpha_bar;  // length T+1
  std::int64_t timesteps = 0;     // T
  double offset = 0.008;          // s

  double at(std::int64_t t) const;
  /// Gathers per-sample alpha_bar for a batch of timesteps, shape [B].
  torch::Tensor gather(const torch::Tensor& t, torch::TensorOptions opts) const;
};

NoiseSchedule build_schedule(std::int64_t timesteps, double offset = 0.008);

/// Eq.-style forward noising: x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps.
torch::Tensor forward_noise(const torch::Tensor& x0, std::int64_t t, const torch::Tensor& eps,
                            const NoiseSchedule& schedule);

/// Batched variant; t is an int64 tensor [B], coefficients broadcast over
/// trailing dims.
torch::Tensor forward_noise(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& eps,
                            const NoiseSchedule& schedule);

}  // namespace ink
