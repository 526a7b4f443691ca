#include "ink/ctc.hpp"

#include <limits>

#include "ink/error.hpp"

namespace ink {

namespace {

// Finite stand-in for log(0): exp(kLogZero - finite) underflows to exactly 0,
// and unlike -inf it cannot produce NaN inside logsumexp backward for lattice
// cells that stay unreachable.
constexpr double kLogZero = -1e30;

std::size_t adjacent_repeats(const std::vector<std::int64_t>& label) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < label.size(); ++i)
    if (label[i] == label[i - 1]) ++n;
  return n;
}

}  // namespace

bool ctc_feasible(std::size_t label_len, std::size_t repeats, std::int64_t frames) {
  return static_cast<std::int64_t>(label_len + repeats) <= frames;
}

torch::Tensor ctc_loss_single(const torch::Tensor& logits, const std::vector<std::int64_t>& label,
                              std::int64_t valid_len) {
  if (logits.dim() != 2) throw ShapeError("ctc_loss_single: logits must be [T, K+1]");
  const std::int64_t frames = valid_len < 0 ? logits.size(0) : valid_len;
  if (frames <= 0 || frames > logits.size(0)) throw ShapeError("ctc_loss_single: bad valid_len");
  const std::int64_t num_classes = logits.size(1);
  const std::int64_t blank = num_classes - 1;
  for (std::int64_t c : label) {
    if (c < 0 || c >= blank) throw UserError("ctc_loss_single: label index out of vocabulary");
  }
  const auto opts = logits.options();
  if (!ctc_feasible(label.size(), adjacent_repeats(label), frames)) {
    return torch::full({}, std::numeric_limits<double>::infinity(), opts);
  }

  const auto logp = torch::log_softmax(logits, -1);

  // Extended label with blanks: blank, l1, blank, l2, ..., blank.
  const std::int64_t S = 2 * static_cast<std::int64_t>(label.size()) + 1;
  auto ext = torch::full({S}, blank, torch::kInt64);
  for (std::size_t i = 0; i < label.size(); ++i) ext[2 * static_cast<std::int64_t>(i) + 1] = label[i];

  // skip_ok[s]: the s-2 -> s transition is allowed (s is a non-blank that
  // differs from the previous non-blank).
  auto skip_ok = torch::zeros({S}, torch::kBool);
  for (std::int64_t s = 2; s < S; ++s) {
    if (s % 2 == 1 && ext[s].item<std::int64_t>() != ext[s - 2].item<std::int64_t>())
      skip_ok[s] = true;
  }

  const auto log_zero = torch::full({S}, kLogZero, opts);
  auto alpha = log_zero.clone();
  alpha[0] = logp[0][blank];
  if (S > 1) alpha[1] = logp[0].index({ext[1]});

  const auto frame_probs = logp.index_select(1, ext);  // [T, S]
  for (std::int64_t t = 1; t < frames; ++t) {
    auto stay = alpha;
    auto step1 = torch::cat({log_zero.slice(0, 0, 1), alpha.slice(0, 0, S - 1)});
    auto step2 = torch::cat({log_zero.slice(0, 0, 2), alpha.slice(0, 0, S - 2)});
    step2 = torch::where(skip_ok, step2, log_zero);
    alpha = torch::logsumexp(torch::stack({stay, step1, step2}), 0) + frame_probs[t];
  }

  torch::Tensor tail = S > 1 ? torch::logsumexp(torch::stack({alpha[S - 1], alpha[S - 2]}), 0) : alpha[S - 1];
  return -tail;
}

CtcBatchResult ctc_loss(const torch::Tensor& logits, const std::vector<std::vector<std::int64_t>>& labels,
                        const std::vector<std::int64_t>& valid_lens) {
  if (logits.dim() != 3) throw ShapeError("ctc_loss: logits must be [B, T, K+1]");
  const std::size_t b = static_cast<std::size_t>(logits.size(0));
  if (labels.size() != b || valid_lens.size() != b) throw ShapeError("ctc_loss: batch size mismatch");

  CtcBatchResult result;
  result.feasible.resize(b, false);
  std::vector<torch::Tensor> per_sample;
  std::vector<torch::Tensor> feasible_losses;
  per_sample.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    auto loss_i = ctc_loss_single(logits[static_cast<std::int64_t>(i)], labels[i], valid_lens[i]);
    const bool ok = std::isfinite(loss_i.item<double>());
    result.feasible[i] = ok;
    if (ok) {
      feasible_losses.push_back(loss_i);
      ++result.feasible_count;
    }
    per_sample.push_back(std::move(loss_i));
  }
  result.per_sample = torch::stack(per_sample);
  result.loss = feasible_losses.empty() ? torch::zeros({}, logits.options())
                                        : torch::stack(feasible_losses).mean();
  return result;
}

std::vector<std::int64_t> ctc_greedy_decode(const torch::Tensor& logits, std::int64_t valid_len) {
  if (logits.dim() != 2) throw ShapeError("ctc_greedy_decode: logits must be [T, K+1]");
  const std::int64_t frames = valid_len < 0 ? logits.size(0) : std::min(valid_len, logits.size(0));
  const std::int64_t blank = logits.size(1) - 1;
  const auto arg = logits.slice(0, 0, frames).argmax(-1).contiguous();
  const auto acc = arg.accessor<std::int64_t, 1>();
  std::vector<std::int64_t> out;
  std::int64_t prev = -1;
  for (std::int64_t t = 0; t < frames; ++t) {
    const std::int64_t c = acc[t];
    if (c != prev && c != blank) out.push_back(c);
    prev = c;
  }
  return out;
}

}  // namespace ink
