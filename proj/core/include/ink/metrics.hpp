#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ink/types.hpp"

namespace ink {

/// Levenshtein decomposition of a prediction against the ground truth.
struct EditOps {
  std::int64_t deletions = 0;
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t gt_len = 0;

  std::int64_t total() const { return deletions + substitutions + insertions; }

  EditOps& operator+=(const EditOps& o) {
    deletions += o.deletions;
    substitutions += o.substitutions;
    insertions += o.insertions;
    gt_len += o.gt_len;
    return *this;
  }
};

/// Minimal-cost alignment with unit costs and a deterministic traceback:
/// ties prefer substitution over an insert+delete pair, then deletion over
/// insertion.
EditOps edit_ops(std::u32string_view gt, std::u32string_view pred);

/// Accurate rate / correct rate in percent, ops summed corpus-wide before
/// division. AR additionally subtracts insertions, so AR <= CR always.
std::pair<double, double> ar_cr(std::span<const EditOps> ops);

/// Exact dynamic-programming DTW over (x, y) with Euclidean point cost.
double dtw_distance(std::span<const PenPoint> a, std::span<const PenPoint> b);

/// DTW divided by the ground-truth length |gt|.
double norm_dtw(std::span<const PenPoint> gt, std::span<const PenPoint> gen);

/// Mean silhouette over all samples (Euclidean distance). Samples in
/// singleton clusters score 0; requires at least two distinct labels.
double silhouette_score(const std::vector<std::vector<float>>& points, const std::vector<int>& labels);

}  // namespace ink
