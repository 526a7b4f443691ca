#include "ink/ddim.hpp"

#include <cmath>

#include "ink/error.hpp"
#include "ink/tensor_util.hpp"

namespace ink {

std::vector<std::int64_t> ddim_time_grid(std::int64_t timesteps, std::int64_t steps) {
  if (steps < 1) throw UserError("ddim_time_grid: steps must be >= 1");
  if (steps > timesteps) throw UserError("ddim_time_grid: steps exceeds schedule length");
  std::vector<std::int64_t> grid;
  grid.reserve(static_cast<std::size_t>(steps));
  for (std::int64_t i = 0; i < steps; ++i) {
    const double v = static_cast<double>(timesteps) * static_cast<double>(steps - i) / static_cast<double>(steps);
    const std::int64_t t = std::max<std::int64_t>(1, std::llround(v));
    if (!grid.empty() && t >= grid.back()) continue;  // dedupe for tiny T
    grid.push_back(t);
  }
  return grid;
}

torch::Tensor ddim_step(const torch::Tensor& x_t, const torch::Tensor& x0_hat, std::int64_t t, std::int64_t t_next,
                        const NoiseSchedule& schedule) {
  const double ab = schedule.at(t);
  const double ab_next = schedule.at(t_next);
  const auto eps = (x_t - std::sqrt(ab) * x0_hat) / std::sqrt(1.0 - ab);
  return std::sqrt(ab_next) * x0_hat + std::sqrt(1.0 - ab_next) * eps;
}

torch::Tensor ddim_sample_core(const DenoiseFn& denoise, const torch::Tensor& x_start, const NoiseSchedule& schedule,
                               std::int64_t steps, std::vector<DdimTraceEntry>* trace) {
  const auto grid = ddim_time_grid(schedule.timesteps, steps);
  auto x = x_start;
  torch::Tensor x0_hat;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::int64_t t = grid[i];
    const std::int64_t t_next = i + 1 < grid.size() ? grid[i + 1] : 0;
    x0_hat = denoise(x, t);
    if (trace)
      trace->push_back({static_cast<std::int64_t>(i), t, x0_hat.detach().norm().item<double>()});
    x = ddim_step(x, x0_hat, t, t_next, schedule);
  }
  // The final update lands on t = 0 where alpha_bar = 1, so x == x0_hat.
  return x;
}

torch::Tensor ddim_sample(InkDit& dit, const torch::Tensor& x_ref, const torch::Tensor& z,
                          const torch::Tensor& ref_mask, const NoiseSchedule& schedule, std::int64_t steps,
                          std::uint64_t seed, std::vector<DdimTraceEntry>* trace) {
  torch::NoGradGuard no_grad;
  const auto x_T = seeded_randn(x_ref.sizes(), seed, x_ref.options());
  const auto fn = [&](const torch::Tensor& x_t, std::int64_t t) {
    const auto t_idx = torch::full({x_t.size(0)}, t, torch::kInt64);
    return dit->denoise(x_t, x_ref, z, t_idx);
  };
  auto x0 = ddim_sample_core(fn, x_T, schedule, steps, trace);
  return torch::where(ref_mask.unsqueeze(-1), x_ref, x0);
}

torch::Tensor ddim_unroll(InkDit& dit, const torch::Tensor& x0, const torch::Tensor& x_ref, const torch::Tensor& z,
                          const NoiseSchedule& schedule, std::int64_t steps, std::int64_t grid_index,
                          std::int64_t unroll_steps, const torch::Tensor& eps) {
  if (unroll_steps < 1) throw UserError("ddim_unroll: unroll_steps must be >= 1");
  const auto grid = ddim_time_grid(schedule.timesteps, steps);
  if (grid_index < 0 || grid_index >= static_cast<std::int64_t>(grid.size()))
    throw UserError("ddim_unroll: grid_index out of range");

  auto x = forward_noise(x0, grid[static_cast<std::size_t>(grid_index)], eps, schedule);
  torch::Tensor x0_hat;
  for (std::int64_t k = 0; k < unroll_steps; ++k) {
    const std::size_t i = static_cast<std::size_t>(grid_index + k);
    if (i >= grid.size()) break;
    const std::int64_t t = grid[i];
    const std::int64_t t_next = i + 1 < grid.size() ? grid[i + 1] : 0;
    const auto t_idx = torch::full({x.size(0)}, t, torch::kInt64);
    x0_hat = dit->denoise(x, x_ref, z, t_idx);
    x = ddim_step(x, x0_hat, t, t_next, schedule);
  }
  return x0_hat;
}

}  // namespace ink
