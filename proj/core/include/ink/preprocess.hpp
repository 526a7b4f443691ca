#pragma once

#include <span>
#include <vector>

#include <torch/torch.h>

#include "ink/types.hpp"

namespace ink {

/// Tensor view of a batch of lines, padded to a common length. Padding steps
/// carry x = y = 0 and a pen one-hot of EndOfChar.
struct PaddedBatch {
  torch::Tensor points;         // [B, L, 5] float32: x, y, pen one-hot
  torch::Tensor valid_lengths;  // [B] int64: true point count per line
  torch::Tensor pen_targets;    // [B, L] int64 class indices (padding = EndOfChar)
  torch::Tensor coord_targets;  // [B, L, 2] float32
  torch::Tensor valid_mask;     // [B, L] bool, true on real points
};

PaddedBatch pad_batch(std::span<const InkLine> lines, std::int64_t target_len);
PaddedBatch pad_batch(const std::vector<const InkLine*>& lines, std::int64_t target_len);

/// Per-batch target length: the max line length rounded up to a multiple of 8
/// (so the 8x temporal compression divides evenly), capped by
/// max_line_points. Throws if any line exceeds the cap.
std::int64_t batch_target_len(const std::vector<const InkLine*>& lines, std::int64_t max_line_points);

std::int64_t round_up_multiple(std::int64_t v, std::int64_t m);

/// Latent length of a line of n points under 8x compression.
std::int64_t latent_len(std::int64_t n_points);

struct PreprocessStats {
  std::size_t dropped_short = 0;     // fewer than 2 points or degenerate bbox
  std::size_t dropped_overlong = 0;  // longer than max_line_points after simplification
  std::size_t kept = 0;
};

/// normalize -> RDP-simplify -> length-cap filter, per line.
Corpus preprocess_corpus(const Corpus& corpus, const PreprocessConfig& config, PreprocessStats* stats = nullptr);
InkLine preprocess_line(const InkLine& line, const PreprocessConfig& config);

/// Deterministic length-bucketed batching: lines are sorted by point count,
/// chunked into batches, and the batch order is shuffled per epoch.
std::vector<std::vector<std::size_t>> make_epoch_batches(const Corpus& corpus, std::size_t batch_size,
                                                         std::uint64_t seed, std::uint64_t epoch);

}  // namespace ink
