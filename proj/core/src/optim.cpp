#include "ink/optim.hpp"

#include <cmath>
#include <numbers>

#include "ink/error.hpp"

namespace ink {

double warmup_cosine_lr(std::int64_t step, std::int64_t total_steps, double base_lr, double warmup_frac) {
  if (total_steps <= 0) throw Error("warmup_cosine_lr: total_steps must be > 0");
  const auto warmup = static_cast<std::int64_t>(std::ceil(warmup_frac * static_cast<double>(total_steps)));
  if (warmup > 0 && step < warmup) {
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  const double progress = total_steps == warmup
                              ? 1.0
                              : static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(1.0, progress)));
}

std::unique_ptr<torch::optim::AdamW> make_adamw(std::vector<torch::Tensor> params, double lr,
                                                std::pair<double, double> betas, double weight_decay) {
  auto options = torch::optim::AdamWOptions(lr).betas({betas.first, betas.second}).weight_decay(weight_decay);
  return std::make_unique<torch::optim::AdamW>(std::move(params), options);
}

void set_lr(torch::optim::Optimizer& optimizer, double lr) {
  for (auto& group : optimizer.param_groups()) {
    group.options().set_lr(lr);
  }
}

std::vector<std::pair<std::string, torch::Tensor>> optimizer_state_arrays(
    const torch::optim::AdamW& optimizer, const std::vector<std::pair<std::string, torch::Tensor>>& named_params) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  const auto& state = optimizer.state();
  for (const auto& [name, param] : named_params) {
    const auto it = state.find(param.unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto* s = static_cast<const torch::optim::AdamWParamState*>(it->second.get());
    out.emplace_back("opt/" + name + "/exp_avg", s->exp_avg());
    out.emplace_back("opt/" + name + "/exp_avg_sq", s->exp_avg_sq());
    out.emplace_back("opt/" + name + "/step", torch::tensor(s->step(), torch::kInt64));
  }
  return out;
}

void load_optimizer_state(torch::optim::AdamW& optimizer,
                          const std::vector<std::pair<std::string, torch::Tensor>>& named_params,
                          const std::map<std::string, torch::Tensor>& arrays) {
  auto& state = optimizer.state();
  for (const auto& [name, param] : named_params) {
    const auto ea = arrays.find("opt/" + name + "/exp_avg");
    if (ea == arrays.end()) continue;  // no state was recorded for this param
    const auto eas = arrays.find("opt/" + name + "/exp_avg_sq");
    const auto st = arrays.find("opt/" + name + "/step");
    if (eas == arrays.end() || st == arrays.end())
      throw UserError("optimizer state for '" + name + "' is incomplete");
    auto s = std::make_unique<torch::optim::AdamWParamState>();
    s->exp_avg(ea->second.clone());
    s->exp_avg_sq(eas->second.clone());
    s->step(st->second.item<std::int64_t>());
    state[param.unsafeGetTensorImpl()] = std::move(s);
  }
}

}  // namespace ink
