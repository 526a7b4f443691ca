#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "ink/rng.hpp"
#include "ink/types.hpp"

namespace ink {

/// One glyph prototype: strokes of dense polyline vertices inside the unit
/// box (y grows downward). Prototypes are fixed; writers restyle them.
using GlyphProto = std::vector<std::vector<std::pair<double, double>>>;

/// The fixed bank of procedural glyph prototypes (currently 20 motifs).
/// Glyph k is bound to codepoint 'a' + k.
const std::vector<GlyphProto>& glyph_prototypes();
char32_t glyph_codepoint(std::size_t index);

SynthStyleParams draw_style_params(Rng& rng);

struct SynthConfig {
  int n_writers = 8;
  int glyph_set_size = 20;
  int lines_per_writer = 250;
  int line_len_min = 5;
  int line_len_max = 15;
  std::uint64_t seed = 1;
  double zipf_exponent = 1.1;  // induces the long-tail character distribution
};

/// Deterministic synthetic corpus: every writer is a style draw, glyphs are
/// placed left-to-right with per-writer spacing, baseline drift and jitter,
/// and characters are Zipf-sampled so frequencies are long-tailed.
Corpus synth_corpus(const SynthConfig& config);
Corpus synth_corpus(int n_writers, int glyph_set_size, int lines_per_writer,
                    std::pair<int, int> line_len_range, std::uint64_t seed);

/// Per-character single-glyph trajectories grouped by writer. Each entry ends
/// with an EndOfChar point.
struct CharBank {
  std::map<char32_t, std::map<int, std::vector<std::vector<PenPoint>>>> entries;

  bool covers(char32_t c) const;
  bool covers(char32_t c, int writer) const;
};

/// Cuts every line of the corpus at its character boundaries.
CharBank build_char_bank(const Corpus& corpus);

/// Sampling distribution proportional to inverse character frequency.
std::map<char32_t, double> inverse_freq_distribution(const Corpus& corpus);

/// Appends n_new synthetic lines: characters sampled with probability
/// proportional to 1/char_freq, placed into the character bounding boxes of a
/// randomly chosen template line, using bank glyphs from the template's
/// writer. A character with no bank entry for that writer is resampled;
/// it is an error only if no writer has it at all.
Corpus freq_augment(const Corpus& corpus, const CharBank& bank, int n_new, std::uint64_t seed);

}  // namespace ink
