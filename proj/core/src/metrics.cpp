#include "ink/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ink/error.hpp"

namespace ink {

EditOps edit_ops(std::u32string_view gt, std::u32string_view pred) {
  const std::size_t n = gt.size();
  const std::size_t m = pred.size();
  std::vector<std::vector<std::int32_t>> d(n + 1, std::vector<std::int32_t>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<std::int32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<std::int32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::int32_t sub = d[i - 1][j - 1] + (gt[i - 1] == pred[j - 1] ? 0 : 1);
      const std::int32_t del = d[i - 1][j] + 1;
      const std::int32_t ins = d[i][j - 1] + 1;
      d[i][j] = std::min({sub, del, ins});
    }
  }

  EditOps ops;
  ops.gt_len = static_cast<std::int64_t>(n);
  // Deterministic traceback: diagonal first, then deletion, then insertion.
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (gt[i - 1] == pred[j - 1] ? 0 : 1)) {
      if (gt[i - 1] != pred[j - 1]) ++ops.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++ops.deletions;
      --i;
    } else {
      ++ops.insertions;
      --j;
    }
  }
  return ops;
}

std::pair<double, double> ar_cr(std::span<const EditOps> ops) {
  if (ops.empty()) throw UserError("ar_cr: empty op list");
  EditOps sum;
  for (const auto& o : ops) sum += o;
  if (sum.gt_len <= 0) throw UserError("ar_cr: aggregate ground-truth length is zero");
  const double nt = static_cast<double>(sum.gt_len);
  const double cr = (nt - static_cast<double>(sum.deletions) - static_cast<double>(sum.substitutions)) / nt * 100.0;
  const double ar = (nt - static_cast<double>(sum.deletions) - static_cast<double>(sum.substitutions) -
                     static_cast<double>(sum.insertions)) /
                    nt * 100.0;
  return {ar, cr};
}

double dtw_distance(std::span<const PenPoint> a, std::span<const PenPoint> b) {
  if (a.empty() || b.empty()) throw UserError("dtw_distance: empty sequence");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double cost = std::hypot(a[i - 1].x - b[j - 1].x, a[i - 1].y - b[j - 1].y);
      cur[j] = cost + std::min({prev[j - 1], prev[j], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double norm_dtw(std::span<const PenPoint> gt, std::span<const PenPoint> gen) {
  return dtw_distance(gt, gen) / static_cast<double>(gt.size());
}

double silhouette_score(const std::vector<std::vector<float>>& points, const std::vector<int>& labels) {
  if (points.size() != labels.size()) throw Error("silhouette_score: size mismatch");
  const std::size_t n = points.size();
  if (n < 2) throw Error("silhouette_score: need at least 2 samples");

  std::map<int, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters[labels[i]].push_back(i);
  if (clusters.size() < 2) throw Error("silhouette_score: need at least 2 clusters");

  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    const auto& p = points[i];
    const auto& q = points[j];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double d = static_cast<double>(p[k]) - static_cast<double>(q[k]);
      s += d * d;
    }
    return std::sqrt(s);
  };

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& own = clusters.at(labels[i]);
    if (own.size() < 2) continue;  // singleton: s(i) = 0
    double a = 0.0;
    for (std::size_t j : own)
      if (j != i) a += dist(i, j);
    a /= static_cast<double>(own.size() - 1);

    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, members] : clusters) {
      if (label == labels[i]) continue;
      double mean = 0.0;
      for (std::size_t j : members) mean += dist(i, j);
      mean /= static_cast<double>(members.size());
      b = std::min(b, mean);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

}  // namespace ink
