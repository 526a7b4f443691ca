#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <torch/torch.h>

#include "ink/dit.hpp"
#include "ink/schedule.hpp"

namespace ink {

/// Evenly spaced timestep subsequence of [T..1]; the implicit final jump goes
/// to 0. grid[0] = T; steps = 1 degenerates to a single jump from T.
std::vector<std::int64_t> ddim_time_grid(std::int64_t timesteps, std::int64_t steps);

/// One deterministic update: recover eps from (x_t, x0_hat) at t, then move
/// to t_next. Matches the inference recursion
///   eps = (x_t - sqrt(ab_t) x0_hat) / sqrt(1 - ab_t)
///   x_next = sqrt(ab_next) x0_hat + sqrt(1 - ab_next) eps.
torch::Tensor ddim_step(const torch::Tensor& x_t, const torch::Tensor& x0_hat, std::int64_t t, std::int64_t t_next,
                        const NoiseSchedule& schedule);

using DenoiseFn = std::function<torch::Tensor(const torch::Tensor& x_t, std::int64_t t)>;

struct DdimTraceEntry {
  std::int64_t step = 0;
  std::int64_t t = 0;
  double x0_norm = 0.0;
};

/// Runs the grid from x_start (the x_T draw) and returns the final x0
/// estimate. Independent of any particular model: tests drive it with oracle
/// denoisers.
torch::Tensor ddim_sample_core(const DenoiseFn& denoise, const torch::Tensor& x_start, const NoiseSchedule& schedule,
                               std::int64_t steps, std::vector<DdimTraceEntry>* trace = nullptr);

/// Full sampler: seeded x_T ~ N(0, I), conditioned DDIM iteration, and the
/// reference positions of the result overwritten with x_ref (they were never
/// supervised).
torch::Tensor ddim_sample(InkDit& dit, const torch::Tensor& x_ref, const torch::Tensor& z,
                          const torch::Tensor& ref_mask, const NoiseSchedule& schedule, std::int64_t steps,
                          std::uint64_t seed, std::vector<DdimTraceEntry>* trace = nullptr);

/// Differentiable unroll for DDIM fine-tuning: noise x0 to the grid position
/// `grid_index`, run `unroll_steps` consecutive updates through the model,
/// and return the last x0 estimate.
torch::Tensor ddim_unroll(InkDit& dit, const torch::Tensor& x0, const torch::Tensor& x_ref, const torch::Tensor& z,
                          const NoiseSchedule& schedule, std::int64_t steps, std::int64_t grid_index,
                          std::int64_t unroll_steps, const torch::Tensor& eps);

}  // namespace ink
