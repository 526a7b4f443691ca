#include "ink/generate.hpp"

#include <algorithm>
#include <cmath>

#include "ink/error.hpp"
#include "ink/preprocess.hpp"
#include "ink/rng.hpp"
#include "ink/sampling.hpp"

namespace ink {

GenerateResult generate_line(const std::u32string& text_ref, const std::u32string& text_gen,
                             const InkLine& ref_trajectory, InkVae& vae, DitModel& dit_model,
                             const NoiseSchedule& schedule, const Vocab& vocab, const GenerateOptions& options) {
  if (text_gen.empty()) throw UserError("generate_line: empty generation text");
  if (text_ref.empty()) throw UserError("generate_line: empty reference text");
  if (ref_trajectory.points.size() < 2) throw UserError("generate_line: reference trajectory too short");
  const auto ref_indices = vocab.encode(text_ref);
  const auto gen_indices = vocab.encode(text_gen);

  torch::NoGradGuard ng;
  vae->eval();
  dit_model->eval();

  const std::int64_t n_ref = static_cast<std::int64_t>(ref_trajectory.points.size());
  const std::int64_t m_ref = static_cast<std::int64_t>(text_ref.size());
  const std::int64_t m_total = m_ref + static_cast<std::int64_t>(text_gen.size());

  // Latent length: the reference's observed points-per-character extrapolated
  // to the whole text, clamped to the configured cap.
  const double pts_per_char = static_cast<double>(n_ref) / static_cast<double>(m_ref);
  const std::int64_t cap_points = round_up_multiple(options.max_line_points, 8);
  const std::int64_t cap_l = cap_points / 8;
  if (m_total > cap_l)
    throw UserError("generate_line: text of " + std::to_string(m_total) +
                    " characters cannot fit the configured cap of " + std::to_string(cap_points) + " points");
  std::int64_t l = static_cast<std::int64_t>(
      std::ceil(pts_per_char * static_cast<double>(m_total) / 8.0));
  const std::int64_t r = latent_len(n_ref);
  l = std::clamp<std::int64_t>(std::max({l, r + 1, m_total}), r + 1, cap_l);

  // Style prompt: the reference's posterior mean, left-aligned, zero padded.
  std::vector<const InkLine*> one{&ref_trajectory};
  const auto batch = pad_batch(one, round_up_multiple(std::max<std::int64_t>(n_ref, 8), 8));
  auto [posterior, latent] = vae->encode(batch.points, batch.valid_lengths, /*deterministic=*/true);
  const auto d = posterior.mu.size(2);
  auto x_ref = torch::zeros({1, l, d}, posterior.mu.options());
  x_ref.index_put_({0, torch::indexing::Slice(0, r)}, posterior.mu[0].slice(0, 0, r));
  const auto ref_mask = mask_from_lens(torch::tensor({r}, torch::kInt64), l);

  std::vector<std::int64_t> full_text = ref_indices;
  full_text.insert(full_text.end(), gen_indices.begin(), gen_indices.end());
  const auto z = dit_model->content(dit_model->codebook->embed_batch({full_text}, l));

  GenerateResult result;
  auto x0 = ddim_sample(dit_model->dit, x_ref, z, ref_mask, schedule, options.ddim_steps,
                        mix_seed(options.seed, 0x6E4), options.keep_trace ? &result.trace : nullptr);

  const auto params = vae->decode(x0);
  const auto traj = sample_trajectory(params, SampleMode::Greedy, 1.0, mix_seed(options.seed, 0x5a3), m_total,
                                      l * 8);

  result.full_line.text = text_ref + text_gen;
  result.full_line.writer_id = ref_trajectory.writer_id;
  result.full_line.points = traj;
  result.full_line.rebuild_boundaries();

  // Split the decoded line at the end of the reference text; fall back to the
  // latent boundary if the decoder under-emitted EndOfChar markers.
  std::size_t split = std::min<std::size_t>(static_cast<std::size_t>(r) * 8, traj.size());
  std::size_t eoc = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj[i].pen == Pen::EndOfChar && ++eoc == static_cast<std::size_t>(m_ref)) {
      split = i + 1;
      break;
    }
  }
  result.generated.text = text_gen;
  result.generated.writer_id = ref_trajectory.writer_id;
  result.generated.points.assign(traj.begin() + static_cast<std::ptrdiff_t>(split), traj.end());
  result.generated.rebuild_boundaries();
  return result;
}

}  // namespace ink
