#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ink {

/// Pen state of a trajectory point. Serialized as its integer value, modeled
/// as a 3-way one-hot in tensors.
enum class Pen : int {
  Down = 0,       // pen stays on the surface through this point
  Up = 1,         // pen lifts after this point (end of a stroke)
  EndOfChar = 2,  // last point of a character
};

struct PenPoint {
  double x = 0.0;
  double y = 0.0;
  Pen pen = Pen::Down;

  bool operator==(const PenPoint&) const = default;
};

/// One handwritten text line: the character sequence, the writer label and
/// the ordered pen trajectory. Exactly one EndOfChar point per character;
/// the final point of the line is always EndOfChar.
struct InkLine {
  std::u32string text;
  int writer_id = 0;
  std::vector<PenPoint> points;
  std::vector<std::size_t> char_boundaries;  // indices of EndOfChar points, one per character

  std::size_t char_count() const { return text.size(); }
  std::size_t point_count() const { return points.size(); }
  std::size_t end_of_char_count() const;

  /// Recomputes char_boundaries from the pen states.
  void rebuild_boundaries();

  /// Throws UserError if the EndOfChar structure does not match the text.
  void validate(const std::string& context = {}) const;

  /// Point index range [first, last] of character `i` (boundaries inclusive).
  std::pair<std::size_t, std::size_t> char_span(std::size_t i) const;

  bool operator==(const InkLine&) const = default;
};

/// A collection of lines plus the derived vocabulary and frequency table.
struct Corpus {
  std::vector<InkLine> lines;
  std::vector<char32_t> vocab;  // sorted by codepoint
  int writer_count = 0;
  std::map<char32_t, std::int64_t> char_freq;

  /// Rebuilds vocab / writer_count / char_freq from lines.
  void rebuild_index();

  std::optional<std::size_t> vocab_index(char32_t c) const;
  std::int64_t total_char_occurrences() const;

  bool operator==(const Corpus&) const = default;
};

/// Style of one synthetic writer. Every per-writer geometric trait is derived
/// deterministically from these fields (drift period/phase come from rng_seed),
/// so a writer's layout is a pure function of (style, text).
struct SynthStyleParams {
  double slant = 0.0;               // radians, applied as a shear
  double scale = 1.0;               // glyph size multiplier
  double char_spacing = 0.25;       // gap between glyph boxes, canvas units
  double baseline_drift_amp = 0.0;  // amplitude of the sinusoidal baseline
  double jitter_sigma = 0.0;        // per-point Gaussian noise
  double stroke_speed = 16.0;       // points per unit of arc length (>= 2)
  std::uint64_t rng_seed = 0;

  void validate() const;

  bool operator==(const SynthStyleParams&) const = default;
};

struct PreprocessConfig {
  double rdp_epsilon = 0.4;
  bool normalize = true;
  int max_line_points = 512;  // rounded up to a multiple of 8 when padding
};

}  // namespace ink
