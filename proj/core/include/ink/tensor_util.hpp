#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace ink {

/// Stateless seeded draws: every call constructs its own CPU generator, so
/// random streams depend only on the seed, never on call order. This is what
/// makes training resumable and bit-reproducible.
torch::Tensor seeded_randn(torch::IntArrayRef shape, std::uint64_t seed,
                           torch::TensorOptions opts = torch::TensorOptions().dtype(torch::kFloat32));
torch::Tensor seeded_rand(torch::IntArrayRef shape, std::uint64_t seed,
                          torch::TensorOptions opts = torch::TensorOptions().dtype(torch::kFloat32));
std::int64_t seeded_randint(std::int64_t lo, std::int64_t hi, std::uint64_t seed);  // inclusive range

/// FNV-1a over the raw tensor bytes (contiguous, CPU).
std::uint64_t tensor_fingerprint(const torch::Tensor& t);

double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b);

}  // namespace ink
