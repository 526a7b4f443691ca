#pragma once

#include <cstdint>
#include <string>

#include "ink/ddim.hpp"
#include "ink/schedule.hpp"
#include "ink/train.hpp"
#include "ink/types.hpp"
#include "ink/vae.hpp"
#include "ink/vocab.hpp"

namespace ink {

struct GenerateOptions {
  std::int64_t ddim_steps = 5;
  std::int64_t max_line_points = 512;
  std::uint64_t seed = 7;
  bool keep_trace = false;
};

struct GenerateResult {
  InkLine generated;   // the generation-region trajectory, text = text_gen
  InkLine full_line;   // decoded reference + generation regions (debugging)
  std::vector<DdimTraceEntry> trace;
};

/// One-shot conditional generation: encode the reference trajectory as the
/// style prompt, embed text_ref + text_gen as the content condition, sample a
/// clean latent with DDIM and decode it to a trajectory. The target latent
/// length extrapolates the reference's points-per-character to the full text.
/// Returns only the generation region (points after the reference's
/// characters). Deterministic given (texts, reference, seed).
GenerateResult generate_line(const std::u32string& text_ref, const std::u32string& text_gen,
                             const InkLine& ref_trajectory, InkVae& vae, DitModel& dit_model,
                             const NoiseSchedule& schedule, const Vocab& vocab, const GenerateOptions& options);

}  // namespace ink
