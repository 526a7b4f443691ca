#include "ink/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ink/error.hpp"

namespace ink {

namespace {

constexpr char kMagic[8] = {'I', 'N', 'K', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return 0;
    case torch::kFloat64: return 1;
    case torch::kInt64: return 2;
    case torch::kBool: return 3;
    default: throw Error("checkpoint: unsupported dtype");
  }
}

torch::ScalarType code_dtype(std::uint8_t c) {
  switch (c) {
    case 0: return torch::kFloat32;
    case 1: return torch::kFloat64;
    case 2: return torch::kInt64;
    case 3: return torch::kBool;
    default: throw UserError("checkpoint: unknown dtype code");
  }
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw UserError("checkpoint: truncated file");
  return v;
}

nlohmann::json header_to_json(const CheckpointHeader& h) {
  nlohmann::json j;
  j["version"] = h.version;
  j["kind"] = h.kind;
  j["step"] = h.step;
  j["seed"] = h.seed;
  j["config_hash"] = h.config_hash;
  j["metrics"] = h.metrics;
  if (!h.extra.empty()) j["extra"] = nlohmann::json::parse(h.extra);
  return j;
}

CheckpointHeader header_from_json(const nlohmann::json& j) {
  CheckpointHeader h;
  if (!j.contains("version")) throw UserError("checkpoint: header missing version field");
  h.version = j.at("version").get<int>();
  h.kind = j.value("kind", "");
  h.step = j.value("step", std::int64_t{0});
  h.seed = j.value("seed", std::uint64_t{0});
  h.config_hash = j.value("config_hash", std::uint64_t{0});
  if (j.contains("metrics")) h.metrics = j.at("metrics").get<std::map<std::string, double>>();
  if (j.contains("extra")) h.extra = j.at("extra").dump();
  return h;
}

}  // namespace

const torch::Tensor& Checkpoint::at(const std::string& name) const {
  const auto it = arrays.find(name);
  if (it == arrays.end()) throw UserError("checkpoint: missing array '" + name + "'");
  return it->second;
}

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const std::vector<std::pair<std::string, torch::Tensor>>& arrays) {
  auto sorted = arrays;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw UserError("checkpoint: cannot open " + tmp + " for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kFormatVersion);
    const std::string hdr = header_to_json(header).dump();
    write_pod(out, static_cast<std::uint64_t>(hdr.size()));
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    write_pod(out, static_cast<std::uint64_t>(sorted.size()));
    for (const auto& [name, tensor] : sorted) {
      auto t = tensor.detach().contiguous().cpu();
      write_pod(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_pod(out, dtype_code(t.scalar_type()));
      write_pod(out, static_cast<std::uint32_t>(t.dim()));
      for (std::int64_t d = 0; d < t.dim(); ++d) write_pod(out, static_cast<std::uint64_t>(t.size(d)));
      const std::uint64_t nbytes = static_cast<std::uint64_t>(t.numel()) * t.element_size();
      write_pod(out, nbytes);
      out.write(static_cast<const char*>(t.const_data_ptr()), static_cast<std::streamsize>(nbytes));
    }
    if (!out) throw Error("checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw UserError("checkpoint: " + path + " is not a checkpoint archive");
  const auto fmt = read_pod<std::uint32_t>(in);
  if (fmt != kFormatVersion)
    throw UserError("checkpoint: unsupported format version " + std::to_string(fmt));

  const auto hdr_len = read_pod<std::uint64_t>(in);
  std::string hdr(hdr_len, '\0');
  in.read(hdr.data(), static_cast<std::streamsize>(hdr_len));
  if (!in) throw UserError("checkpoint: truncated header");

  Checkpoint ckpt;
  try {
    ckpt.header = header_from_json(nlohmann::json::parse(hdr));
  } catch (const nlohmann::json::exception& e) {
    throw UserError(std::string("checkpoint: bad header: ") + e.what());
  }

  const auto count = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto dtype = code_dtype(read_pod<std::uint8_t>(in));
    const auto ndim = read_pod<std::uint32_t>(in);
    std::vector<std::int64_t> dims(ndim);
    for (auto& d : dims) d = static_cast<std::int64_t>(read_pod<std::uint64_t>(in));
    const auto nbytes = read_pod<std::uint64_t>(in);
    auto t = torch::empty(dims, torch::TensorOptions().dtype(dtype));
    if (static_cast<std::uint64_t>(t.numel()) * t.element_size() != nbytes)
      throw UserError("checkpoint: size mismatch for array '" + name + "'");
    in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
    if (!in) throw UserError("checkpoint: truncated array '" + name + "'");
    ckpt.arrays.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

std::vector<std::pair<std::string, torch::Tensor>> named_state(const torch::nn::Module& module) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : module.named_parameters(/*recurse=*/true)) out.emplace_back(p.key(), p.value());
  for (const auto& b : module.named_buffers(/*recurse=*/true)) out.emplace_back(b.key(), b.value());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void load_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& arrays,
                const std::string& prefix) {
  torch::NoGradGuard no_grad;
  for (auto& p : module.named_parameters(/*recurse=*/true)) {
    const auto it = arrays.find(prefix + p.key());
    if (it == arrays.end()) throw UserError("load_state: missing parameter '" + prefix + p.key() + "'");
    if (it->second.sizes() != p.value().sizes())
      throw UserError("load_state: shape mismatch for '" + prefix + p.key() + "'");
    p.value().copy_(it->second);
  }
  for (auto& b : module.named_buffers(/*recurse=*/true)) {
    const auto it = arrays.find(prefix + b.key());
    if (it == arrays.end()) throw UserError("load_state: missing buffer '" + prefix + b.key() + "'");
    b.value().copy_(it->second);
  }
}

}  // namespace ink
