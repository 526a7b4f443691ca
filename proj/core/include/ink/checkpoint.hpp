#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace ink {

/// Checkpoint archive: a little-endian binary container of named arrays plus
/// a JSON text header. The version field is mandatory and checked on load.
struct CheckpointHeader {
  int version = 1;
  std::string kind;  // "vae", "dit", "eval_ocr", "eval_style"
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::map<std::string, double> metrics;  // last loss report, gate accuracies, ...
  std::string extra;                      // free-form JSON payload (model dims, vocab, ...)
};

struct Checkpoint {
  CheckpointHeader header;
  std::map<std::string, torch::Tensor> arrays;

  const torch::Tensor& at(const std::string& name) const;
};

/// Atomic write (temp file + rename). Arrays are stored sorted by name so the
/// byte stream is a pure function of content.
void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const std::vector<std::pair<std::string, torch::Tensor>>& arrays);

Checkpoint load_checkpoint(const std::string& path);

/// Parameters and buffers of a module, sorted by hierarchical name.
std::vector<std::pair<std::string, torch::Tensor>> named_state(const torch::nn::Module& module);

/// Copies arrays into the module's parameters/buffers by name; throws on a
/// missing or shape-mismatched entry.
void load_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& arrays,
                const std::string& prefix = {});

}  // namespace ink
