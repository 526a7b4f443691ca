#include "ink/tensor_util.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include "ink/error.hpp"
#include "ink/rng.hpp"

namespace ink {

namespace {

at::Generator cpu_generator(std::uint64_t seed) {
  auto gen = at::detail::createCPUGenerator(seed);
  return gen;
}

}  // namespace

torch::Tensor seeded_randn(torch::IntArrayRef shape, std::uint64_t seed, torch::TensorOptions opts) {
  return torch::randn(shape, cpu_generator(seed), opts);
}

torch::Tensor seeded_rand(torch::IntArrayRef shape, std::uint64_t seed, torch::TensorOptions opts) {
  return torch::rand(shape, cpu_generator(seed), opts);
}

std::int64_t seeded_randint(std::int64_t lo, std::int64_t hi, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x7a11));
  return rng.uniform_int(lo, hi);
}

std::uint64_t tensor_fingerprint(const torch::Tensor& t) {
  auto c = t.detach().contiguous().cpu();
  const auto* bytes = static_cast<const unsigned char*>(c.const_data_ptr());
  const std::size_t n = c.numel() * c.element_size();
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ShapeError("max_abs_diff: shape mismatch");
  if (a.numel() == 0) return 0.0;
  return (a.detach() - b.detach()).abs().max().item<double>();
}

}  // namespace ink
