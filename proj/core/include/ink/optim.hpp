#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace ink {

/// Linear warm-up over the first warmup_frac of total steps, then cosine
/// decay to zero.
double warmup_cosine_lr(std::int64_t step, std::int64_t total_steps, double base_lr, double warmup_frac = 0.05);

std::unique_ptr<torch::optim::AdamW> make_adamw(std::vector<torch::Tensor> params, double lr,
                                                std::pair<double, double> betas = {0.9, 0.99},
                                                double weight_decay = 1e-4);

void set_lr(torch::optim::Optimizer& optimizer, double lr);

/// AdamW moment tensors and step counters, keyed by the given parameter
/// names, for checkpointing. Parameters without state yet are skipped.
std::vector<std::pair<std::string, torch::Tensor>> optimizer_state_arrays(
    const torch::optim::AdamW& optimizer, const std::vector<std::pair<std::string, torch::Tensor>>& named_params);

void load_optimizer_state(torch::optim::AdamW& optimizer,
                          const std::vector<std::pair<std::string, torch::Tensor>>& named_params,
                          const std::map<std::string, torch::Tensor>& arrays);

}  // namespace ink
