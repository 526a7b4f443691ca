#include "ink/sampling.hpp"

#include <cmath>

#include "ink/error.hpp"
#include "ink/rng.hpp"

namespace ink {

std::vector<PenPoint> sample_trajectory(const GmmParams& params, SampleMode mode, double temperature,
                                        std::uint64_t seed, std::int64_t expected_chars, std::int64_t valid_len,
                                        std::int64_t batch_index) {
  if (mode == SampleMode::Sample && !(temperature > 0.0))
    throw UserError("sample_trajectory: temperature must be > 0 in sample mode");

  const auto mix = params.mix_logits[batch_index].detach().to(torch::kFloat64).contiguous();
  const auto mx = params.mean_x[batch_index].detach().to(torch::kFloat64).contiguous();
  const auto my = params.mean_y[batch_index].detach().to(torch::kFloat64).contiguous();
  const auto lsx = params.log_std_x[batch_index].detach().to(torch::kFloat64).contiguous();
  const auto lsy = params.log_std_y[batch_index].detach().to(torch::kFloat64).contiguous();
  const auto rho = params.corr[batch_index].detach().to(torch::kFloat64).contiguous();
  const auto pen = params.pen_logits[batch_index].detach().to(torch::kFloat64).contiguous();

  const std::int64_t n = valid_len < 0 ? mix.size(0) : std::min<std::int64_t>(valid_len, mix.size(0));
  const std::int64_t p = mix.size(1);
  auto mix_a = mix.accessor<double, 2>();
  auto mx_a = mx.accessor<double, 2>();
  auto my_a = my.accessor<double, 2>();
  auto lsx_a = lsx.accessor<double, 2>();
  auto lsy_a = lsy.accessor<double, 2>();
  auto rho_a = rho.accessor<double, 2>();
  auto pen_a = pen.accessor<double, 2>();

  Rng rng(mix_seed(seed, 0x7Aa3));
  std::vector<PenPoint> out;
  out.reserve(static_cast<std::size_t>(n));
  std::int64_t eoc_seen = 0;
  for (std::int64_t t = 0; t < n; ++t) {
    std::int64_t comp = 0;
    PenPoint pt;
    if (mode == SampleMode::Greedy) {
      for (std::int64_t m = 1; m < p; ++m)
        if (mix_a[t][m] > mix_a[t][comp]) comp = m;
      pt.x = mx_a[t][comp];
      pt.y = my_a[t][comp];
      int arg = 0;
      for (int k = 1; k < 3; ++k)
        if (pen_a[t][k] > pen_a[t][arg]) arg = k;
      pt.pen = static_cast<Pen>(arg);
    } else {
      // Tempered categorical over components.
      std::vector<double> w(static_cast<std::size_t>(p));
      double max_logit = mix_a[t][0] / temperature;
      for (std::int64_t m = 1; m < p; ++m) max_logit = std::max(max_logit, mix_a[t][m] / temperature);
      for (std::int64_t m = 0; m < p; ++m) w[static_cast<std::size_t>(m)] = std::exp(mix_a[t][m] / temperature - max_logit);
      comp = static_cast<std::int64_t>(rng.categorical(w));

      const double sx = std::exp(lsx_a[t][comp]) * std::sqrt(temperature);
      const double sy = std::exp(lsy_a[t][comp]) * std::sqrt(temperature);
      const double r = rho_a[t][comp];
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      pt.x = mx_a[t][comp] + sx * z1;
      pt.y = my_a[t][comp] + sy * (r * z1 + std::sqrt(std::max(0.0, 1.0 - r * r)) * z2);

      std::vector<double> pw(3);
      double pmax = pen_a[t][0] / temperature;
      for (int k = 1; k < 3; ++k) pmax = std::max(pmax, pen_a[t][k] / temperature);
      for (int k = 0; k < 3; ++k) pw[static_cast<std::size_t>(k)] = std::exp(pen_a[t][k] / temperature - pmax);
      pt.pen = static_cast<Pen>(rng.categorical(pw));
    }
    out.push_back(pt);
    if (pt.pen == Pen::EndOfChar) {
      ++eoc_seen;
      if (expected_chars > 0 && eoc_seen >= expected_chars) break;
    }
  }
  return out;
}

}  // namespace ink
