#include "ink/preprocess.hpp"

#include <algorithm>
#include <numeric>

#include "ink/error.hpp"
#include "ink/geometry.hpp"
#include "ink/rng.hpp"

namespace ink {

std::int64_t round_up_multiple(std::int64_t v, std::int64_t m) { return (v + m - 1) / m * m; }

std::int64_t latent_len(std::int64_t n_points) { return (n_points + 7) / 8; }

PaddedBatch pad_batch(const std::vector<const InkLine*>& lines, std::int64_t target_len) {
  const std::int64_t b = static_cast<std::int64_t>(lines.size());
  PaddedBatch batch;
  batch.points = torch::zeros({b, target_len, 5}, torch::kFloat32);
  batch.valid_lengths = torch::zeros({b}, torch::kInt64);
  batch.pen_targets = torch::full({b, target_len}, static_cast<std::int64_t>(Pen::EndOfChar), torch::kInt64);
  batch.valid_mask = torch::zeros({b, target_len}, torch::kBool);
  if (b == 0) {
    batch.coord_targets = torch::zeros({b, target_len, 2}, torch::kFloat32);
    // Padding convention holds vacuously; the one-hot channel still marks EndOfChar.
    batch.points.index_put_({torch::indexing::Slice(), torch::indexing::Slice(), 2 + static_cast<int>(Pen::EndOfChar)},
                            1.0f);
    return batch;
  }

  auto pts = batch.points.accessor<float, 3>();
  auto pen = batch.pen_targets.accessor<std::int64_t, 2>();
  auto mask = batch.valid_mask.accessor<bool, 2>();
  auto vl = batch.valid_lengths.accessor<std::int64_t, 1>();
  for (std::int64_t i = 0; i < b; ++i) {
    const InkLine& line = *lines[static_cast<std::size_t>(i)];
    const std::int64_t n = static_cast<std::int64_t>(line.points.size());
    if (n > target_len)
      throw UserError("pad_batch: line of " + std::to_string(n) + " points exceeds target length " +
                      std::to_string(target_len));
    vl[i] = n;
    for (std::int64_t t = 0; t < target_len; ++t) {
      if (t < n) {
        const PenPoint& p = line.points[static_cast<std::size_t>(t)];
        pts[i][t][0] = static_cast<float>(p.x);
        pts[i][t][1] = static_cast<float>(p.y);
        pts[i][t][2 + static_cast<int>(p.pen)] = 1.0f;
        pen[i][t] = static_cast<std::int64_t>(p.pen);
        mask[i][t] = true;
      } else {
        pts[i][t][2 + static_cast<int>(Pen::EndOfChar)] = 1.0f;
      }
    }
  }
  batch.coord_targets = batch.points.index({torch::indexing::Slice(), torch::indexing::Slice(),
                                            torch::indexing::Slice(0, 2)})
                            .clone();
  return batch;
}

PaddedBatch pad_batch(std::span<const InkLine> lines, std::int64_t target_len) {
  std::vector<const InkLine*> ptrs;
  ptrs.reserve(lines.size());
  for (const auto& l : lines) ptrs.push_back(&l);
  return pad_batch(ptrs, target_len);
}

std::int64_t batch_target_len(const std::vector<const InkLine*>& lines, std::int64_t max_line_points) {
  std::int64_t max_n = 0;
  for (const auto* l : lines) max_n = std::max(max_n, static_cast<std::int64_t>(l->points.size()));
  const std::int64_t cap = round_up_multiple(max_line_points, 8);
  const std::int64_t target = round_up_multiple(std::max<std::int64_t>(max_n, 8), 8);
  if (max_n > cap)
    throw UserError("batch_target_len: line of " + std::to_string(max_n) + " points exceeds cap " +
                    std::to_string(cap));
  return std::min(target, cap);
}

InkLine preprocess_line(const InkLine& line, const PreprocessConfig& config) {
  InkLine out = config.normalize ? normalize_line(line) : line;
  if (config.rdp_epsilon > 0.0) out = simplify_line(out, config.rdp_epsilon);
  return out;
}

Corpus preprocess_corpus(const Corpus& corpus, const PreprocessConfig& config, PreprocessStats* stats) {
  if (config.rdp_epsilon < 0.0) throw UserError("preprocess: rdp_epsilon must be >= 0");
  Corpus out;
  PreprocessStats local;
  const std::int64_t cap = round_up_multiple(config.max_line_points, 8);
  for (const auto& line : corpus.lines) {
    if (line.points.size() < 2) {
      ++local.dropped_short;
      continue;
    }
    InkLine pre;
    try {
      pre = preprocess_line(line, config);
    } catch (const UserError&) {
      ++local.dropped_short;  // degenerate geometry
      continue;
    }
    if (static_cast<std::int64_t>(pre.points.size()) > cap) {
      ++local.dropped_overlong;
      continue;
    }
    ++local.kept;
    out.lines.push_back(std::move(pre));
  }
  out.rebuild_index();
  if (stats) *stats = local;
  return out;
}

std::vector<std::vector<std::size_t>> make_epoch_batches(const Corpus& corpus, std::size_t batch_size,
                                                         std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size == 0) throw Error("make_epoch_batches: batch_size must be > 0");
  std::vector<std::size_t> order(corpus.lines.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0xBA7C4, epoch));
  rng.shuffle(order);
  // Sort by length within a coarse shuffled window so batches stay
  // length-homogeneous without making the epoch order deterministic in length.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus.lines[a].points.size() < corpus.lines[b].points.size();
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    batches.emplace_back(order.begin() + i, order.begin() + end);
  }
  rng.shuffle(batches);
  return batches;
}

}  // namespace ink
