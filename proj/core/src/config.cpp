#include "ink/config.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ink/error.hpp"

namespace ink {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw UserError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw UserError("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw UserError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UserError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// One registry drives parsing, overrides and serialization so the three can
// never drift apart.
struct FieldDef {
  std::string key;  // "section.name"
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define INK_FIELD_I64(section, name)                                                                   \
  {#section "." #name, [](RunConfig& c, const std::string& v) { c.section.name = parse_int(#name, v); }, \
   [](const RunConfig& c) { return std::to_string(c.section.name); }}
#define INK_FIELD_INT(section, name)                                                                            \
  {#section "." #name,                                                                                          \
   [](RunConfig& c, const std::string& v) { c.section.name = static_cast<int>(parse_int(#name, v)); },          \
   [](const RunConfig& c) { return std::to_string(c.section.name); }}
#define INK_FIELD_DBL(section, name)                                                                      \
  {#section "." #name, [](RunConfig& c, const std::string& v) { c.section.name = parse_double(#name, v); }, \
   [](const RunConfig& c) { return fmt_double(c.section.name); }}
#define INK_FIELD_BOOL(section, name)                                                                   \
  {#section "." #name, [](RunConfig& c, const std::string& v) { c.section.name = parse_bool(#name, v); }, \
   [](const RunConfig& c) { return c.section.name ? "true" : "false"; }}

const std::vector<FieldDef>& field_registry() {
  static const std::vector<FieldDef> fields = {
      {"run.seed", [](RunConfig& c, const std::string& v) { c.seed = parse_uint("seed", v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"run.threads", [](RunConfig& c, const std::string& v) { c.threads = static_cast<int>(parse_int("threads", v)); },
       [](const RunConfig& c) { return std::to_string(c.threads); }},
      INK_FIELD_INT(data, n_writers),
      INK_FIELD_INT(data, glyph_set_size),
      INK_FIELD_INT(data, lines_per_writer),
      INK_FIELD_INT(data, line_len_min),
      INK_FIELD_INT(data, line_len_max),
      INK_FIELD_DBL(data, zipf_exponent),
      INK_FIELD_INT(data, augment_lines),
      INK_FIELD_DBL(data, test_fraction),
      INK_FIELD_DBL(data, rdp_epsilon),
      INK_FIELD_BOOL(data, normalize),
      INK_FIELD_INT(data, max_line_points),
      INK_FIELD_DBL(vae, lr),
      INK_FIELD_INT(vae, batch_size),
      INK_FIELD_I64(vae, steps),
      INK_FIELD_DBL(vae, clip_norm),
      INK_FIELD_DBL(vae, beta1),
      INK_FIELD_DBL(vae, beta2),
      INK_FIELD_DBL(vae, weight_decay),
      INK_FIELD_DBL(vae, warmup_frac),
      INK_FIELD_DBL(vae, lambda_gmm),
      INK_FIELD_DBL(vae, lambda_pen),
      INK_FIELD_DBL(vae, lambda_ocr),
      INK_FIELD_DBL(vae, lambda_sty),
      INK_FIELD_DBL(vae, lambda_kl),
      INK_FIELD_DBL(vae, focal_gamma),
      INK_FIELD_I64(vae, log_every),
      INK_FIELD_I64(vae, ckpt_every),
      INK_FIELD_I64(dit, layers),
      INK_FIELD_I64(dit, joint_dim),
      INK_FIELD_I64(dit, latent_dim),
      INK_FIELD_I64(dit, content_dim),
      INK_FIELD_I64(dit, heads),
      INK_FIELD_I64(dit, timestep_embed_dim),
      INK_FIELD_I64(dit, convnext_blocks),
      INK_FIELD_I64(dit, convnext_kernel),
      INK_FIELD_I64(dit, timesteps),
      INK_FIELD_DBL(dit, schedule_offset),
      INK_FIELD_I64(dit, ddim_steps),
      INK_FIELD_BOOL(dit, invert_loss_mask),
      INK_FIELD_DBL(dit, ref_frac_min),
      INK_FIELD_DBL(dit, ref_frac_max),
      INK_FIELD_DBL(dit, lr),
      INK_FIELD_INT(dit, batch_size),
      INK_FIELD_I64(dit, steps),
      INK_FIELD_DBL(dit, clip_norm),
      INK_FIELD_DBL(dit, beta1),
      INK_FIELD_DBL(dit, beta2),
      INK_FIELD_DBL(dit, weight_decay),
      INK_FIELD_DBL(dit, warmup_frac),
      INK_FIELD_I64(dit, log_every),
      INK_FIELD_I64(dit, ckpt_every),
      INK_FIELD_I64(dit, finetune_unroll),
      INK_FIELD_DBL(dit, finetune_lr_scale),
      INK_FIELD_I64(dit, finetune_steps),
      INK_FIELD_DBL(eval, ocr_gate),
      INK_FIELD_DBL(eval, style_gate),
      INK_FIELD_DBL(eval, ref_fraction),
      INK_FIELD_I64(eval, throughput_chars),
      INK_FIELD_I64(eval, train_steps),
      INK_FIELD_INT(eval, batch_size),
      INK_FIELD_DBL(eval, lr),
      INK_FIELD_I64(eval, max_lines),
  };
  return fields;
}

const FieldDef* find_field(const std::string& dotted) {
  for (const auto& f : field_registry())
    if (f.key == dotted) return &f;
  return nullptr;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const RunConfig& base) {
  RunConfig config = base;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find('#');
    std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UserError("config line " + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UserError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw UserError("config line " + std::to_string(line_no) + ": key outside any section");
    apply_override(config, section + "." + key, value);
  }
  return config;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw UserError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), base);
}

void apply_override(RunConfig& config, const std::string& dotted_key, const std::string& value) {
  const auto* field = find_field(dotted_key);
  if (!field) throw UserError("config: unknown key '" + dotted_key + "'");
  field->set(config, value);
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream out;
  std::string current_section;
  for (const auto& f : field_registry()) {
    const auto dot = f.key.find('.');
    const std::string section = f.key.substr(0, dot);
    if (section != current_section) {
      if (!current_section.empty()) out << '\n';
      out << '[' << section << "]\n";
      current_section = section;
    }
    out << f.key.substr(dot + 1) << " = " << f.get(config) << '\n';
  }
  return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
  const std::string text = serialize_config(config);
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace ink
