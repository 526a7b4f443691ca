#include "ink/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ink/error.hpp"

namespace ink {

double NoiseSchedule::at(std::int64_t t) const {
  if (t < 0 || t >= static_cast<std::int64_t>(alpha_bar.size()))
    throw ShapeError("NoiseSchedule: timestep " + std::to_string(t) + " out of range");
  return alpha_bar[static_cast<std::size_t>(t)];
}

torch::Tensor NoiseSchedule::gather(const torch::Tensor& t, torch::TensorOptions opts) const {
  auto out = torch::empty(t.sizes(), opts);
  auto tc = t.contiguous();
  const auto* idx = tc.const_data_ptr<std::int64_t>();
  auto flat = out.view(-1);
  for (std::int64_t i = 0; i < tc.numel(); ++i) flat[i] = at(idx[i]);
  return out;
}

NoiseSchedule build_schedule(std::int64_t timesteps, double offset) {
  if (timesteps < 1) throw UserError("build_schedule: T must be >= 1");
  NoiseSchedule sched;
  sched.timesteps = timesteps;
  sched.offset = offset;
  sched.alpha_bar.resize(static_cast<std::size_t>(timesteps) + 1);
  const auto f = [&](double t) {
    const double u = (t / static_cast<double>(timesteps) + offset) / (1.0 + offset);
    const double c = std::cos(u * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0.0);
  sched.alpha_bar[0] = 1.0;
  for (std::int64_t t = 1; t <= timesteps; ++t) {
    sched.alpha_bar[static_cast<std::size_t>(t)] = std::clamp(f(static_cast<double>(t)) / f0, 1e-5, 1.0 - 1e-5);
  }
  return sched;
}

torch::Tensor forward_noise(const torch::Tensor& x0, std::int64_t t, const torch::Tensor& eps,
                            const NoiseSchedule& schedule) {
  const double ab = schedule.at(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

torch::Tensor forward_noise(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& eps,
                            const NoiseSchedule& schedule) {
  if (x0.sizes() != eps.sizes()) throw ShapeError("forward_noise: x0/eps shape mismatch");
  auto ab = schedule.gather(t, x0.options());
  while (ab.dim() < x0.dim()) ab = ab.unsqueeze(-1);
  return torch::sqrt(ab) * x0 + torch::sqrt(1.0 - ab) * eps;
}

}  // namespace ink
