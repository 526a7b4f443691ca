#pragma once

#include <cstdint>
#include <vector>

#include "ink/losses.hpp"
#include "ink/types.hpp"

namespace ink {

enum class SampleMode { Greedy, Sample };

/// Turns per-timestep mixture parameters into a trajectory.
/// Greedy: mean of the max-weight component, argmax pen state.
/// Sample: component ~ softmax(mix_logits / temperature), then a correlated
/// bivariate normal draw with standard deviations scaled by sqrt(temperature);
/// pen ~ softmax(pen_logits / temperature). As temperature -> 0 sampling
/// converges to greedy.
/// Emission stops after the expected_chars-th EndOfChar (when > 0) or at
/// valid_len.
std::vector<PenPoint> sample_trajectory(const GmmParams& params, SampleMode mode, double temperature,
                                        std::uint64_t seed, std::int64_t expected_chars = 0,
                                        std::int64_t valid_len = -1, std::int64_t batch_index = 0);

}  // namespace ink
