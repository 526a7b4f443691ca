#include "ink/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ink/error.hpp"
#include "ink/geometry.hpp"
#include "ink/utf8.hpp"

namespace ink {

namespace {

using Path = std::vector<std::pair<double, double>>;

constexpr double kPi = std::numbers::pi;
constexpr double deg = kPi / 180.0;

Path arc(double cx, double cy, double rx, double ry, double a0, double a1, int n = 48) {
  Path p;
  p.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = a0 + (a1 - a0) * static_cast<double>(i) / n;
    p.emplace_back(cx + rx * std::cos(t), cy + ry * std::sin(t));
  }
  return p;
}

/// Segment from a to b bulging sideways by `sag` (so RDP keeps interior
/// points; perfectly straight strokes would collapse to their endpoints).
Path bow(std::pair<double, double> a, std::pair<double, double> b, double sag, int n = 24) {
  Path p;
  p.reserve(n + 1);
  const double dx = b.first - a.first;
  const double dy = b.second - a.second;
  const double len = std::hypot(dx, dy);
  const double nx = len > 1e-12 ? -dy / len : 0.0;
  const double ny = len > 1e-12 ? dx / len : 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double s = sag * std::sin(kPi * t);
    p.emplace_back(a.first + t * dx + s * nx, a.second + t * dy + s * ny);
  }
  return p;
}

Path join(std::initializer_list<Path> parts) {
  Path out;
  for (const auto& part : parts) {
    if (!out.empty() && !part.empty() && out.back() == part.front())
      out.insert(out.end(), part.begin() + 1, part.end());
    else
      out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<GlyphProto> make_prototypes() {
  std::vector<GlyphProto> g;
  // Closed curves and open arcs.
  g.push_back({arc(.50, .50, .38, .44, 90 * deg, 450 * deg)});                       // ring
  g.push_back({arc(.55, .50, .40, .44, 60 * deg, 300 * deg)});                       // open-right arc
  g.push_back({arc(.50, .40, .38, .52, 10 * deg, 170 * deg)});                       // cup (open top, y-down)
  g.push_back({arc(.50, .62, .38, .52, 190 * deg, 350 * deg)});                      // cap (open bottom)
  g.push_back({join({arc(.50, .27, .28, .23, 270 * deg, 90 * deg),                   // s-curve
                     arc(.50, .73, .28, .23, 270 * deg, 450 * deg)})});
  g.push_back({[] {                                                                  // inward spiral
    Path p;
    for (int i = 0; i <= 96; ++i) {
      const double t = static_cast<double>(i) / 96.0;
      const double a = t * 3.0 * kPi;
      const double r = 0.42 - 0.30 * t;
      p.emplace_back(.5 + r * std::cos(a), .5 + r * std::sin(a));
    }
    return p;
  }()});
  // Single-stroke waves and zigzags (all segments bowed).
  g.push_back({[] {                                                                  // horizontal wave
    Path p;
    for (int i = 0; i <= 72; ++i) {
      const double t = static_cast<double>(i) / 72.0;
      p.emplace_back(.06 + .88 * t, .5 + .34 * std::sin(4.0 * kPi * t));
    }
    return p;
  }()});
  g.push_back({[] {                                                                  // vertical wave
    Path p;
    for (int i = 0; i <= 72; ++i) {
      const double t = static_cast<double>(i) / 72.0;
      p.emplace_back(.5 + .30 * std::sin(4.0 * kPi * t), .06 + .88 * t);
    }
    return p;
  }()});
  g.push_back({join({bow({.08, .10}, {.88, .10}, .05), bow({.88, .10}, {.12, .90}, .07),    // zigzag Z
                     bow({.12, .90}, {.92, .90}, .05)})});
  g.push_back({join({bow({.06, .08}, {.28, .92}, .05), bow({.28, .92}, {.50, .14}, .05),    // double-v W
                     bow({.50, .14}, {.72, .92}, .05), bow({.72, .92}, {.94, .08}, .05)})});
  g.push_back({join({bow({.10, .14}, {.44, .14}, .04), bow({.44, .14}, {.44, .52}, .04),    // staircase
                     bow({.44, .52}, {.78, .52}, .04), bow({.78, .52}, {.78, .92}, .04)})});
  // Single-stroke corners and closed polygons.
  g.push_back({join({bow({.18, .06}, {.18, .88}, .06), bow({.18, .88}, {.90, .88}, .06)})});  // corner L
  g.push_back({join({bow({.08, .06}, {.50, .94}, .06), bow({.50, .94}, {.92, .06}, .06)})});  // vee
  g.push_back({join({bow({.12, .92}, {.12, .08}, .05), bow({.12, .08}, {.88, .92}, .07),      // n-stroke
                     bow({.88, .92}, {.88, .08}, .05)})});
  g.push_back({join({bow({.50, .06}, {.90, .50}, .05), bow({.90, .50}, {.50, .94}, .05),      // diamond
                     bow({.50, .94}, {.10, .50}, .05), bow({.10, .50}, {.50, .06}, .05)})});
  // Multi-stroke glyphs.
  g.push_back({bow({.10, .10}, {.90, .90}, .07), bow({.90, .10}, {.10, .90}, .07)});          // cross X
  g.push_back({bow({.50, .06}, {.50, .94}, .05), bow({.08, .50}, {.92, .50}, .05)});          // plus
  g.push_back({bow({.06, .10}, {.94, .10}, .05), bow({.50, .10}, {.50, .94}, .06)});          // tee
  g.push_back({bow({.14, .06}, {.14, .94}, .05), bow({.86, .06}, {.86, .94}, .05),            // rails H
               bow({.14, .50}, {.86, .50}, .04)});
  g.push_back({join({bow({.08, .06}, {.50, .48}, .05), bow({.50, .48}, {.92, .06}, .05)}),    // wye
               bow({.50, .48}, {.50, .94}, .05)});
  if (g.size() != 20) throw Error("glyph prototype bank must hold 20 motifs");
  return g;
}

struct WriterTraits {
  SynthStyleParams style;
  double drift_period;
  double drift_phase;
  double glyph_width;   // canvas units
  double glyph_height;  // canvas units
};

WriterTraits writer_traits(const SynthStyleParams& style) {
  // Drift period/phase and glyph box derive from the style seed so each
  // writer's layout is deterministic given (style, text).
  Rng rng(mix_seed(style.rng_seed, 0x1eafu));
  WriterTraits t;
  t.style = style;
  t.drift_period = rng.uniform(2.5, 6.0);
  t.drift_phase = rng.uniform(0.0, 2.0 * kPi);
  t.glyph_width = 0.70 * style.scale;
  t.glyph_height = 0.85 * style.scale;
  return t;
}

/// Renders one glyph at cursor_x for the given writer, appending points.
/// The last point is EndOfChar, internal stroke ends are PenUp.
void place_glyph(std::vector<PenPoint>& out, const GlyphProto& proto, const WriterTraits& t, double cursor_x,
                 Rng& jitter_rng) {
  const double shear = std::tan(t.style.slant);
  const double drift =
      t.style.baseline_drift_amp * std::sin(2.0 * kPi * (cursor_x + 0.5 * t.glyph_width) / t.drift_period +
                                            t.drift_phase);
  for (std::size_t s = 0; s < proto.size(); ++s) {
    Path scaled;
    scaled.reserve(proto[s].size());
    for (const auto& [u, v] : proto[s]) {
      const double gx = u * t.glyph_width + shear * (1.0 - v) * t.glyph_height;
      const double gy = (v - 1.0) * t.glyph_height;
      scaled.emplace_back(cursor_x + gx, drift + gy);
    }
    const Path pts = resample_polyline(scaled, t.style.stroke_speed);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      PenPoint p;
      p.x = pts[i].first + jitter_rng.normal(0.0, t.style.jitter_sigma);
      p.y = pts[i].second + jitter_rng.normal(0.0, t.style.jitter_sigma);
      const bool stroke_end = (i + 1 == pts.size());
      const bool glyph_end = stroke_end && (s + 1 == proto.size());
      p.pen = glyph_end ? Pen::EndOfChar : (stroke_end ? Pen::Up : Pen::Down);
      out.push_back(p);
    }
  }
}

}  // namespace

const std::vector<GlyphProto>& glyph_prototypes() {
  static const std::vector<GlyphProto> protos = make_prototypes();
  return protos;
}

char32_t glyph_codepoint(std::size_t index) { return static_cast<char32_t>(U'a' + index); }

SynthStyleParams draw_style_params(Rng& rng) {
  SynthStyleParams s;
  s.slant = rng.uniform(-0.22, 0.22);
  s.scale = rng.uniform(0.75, 1.30);
  s.char_spacing = rng.uniform(0.10, 0.45);
  s.baseline_drift_amp = rng.uniform(0.02, 0.12);
  s.jitter_sigma = rng.uniform(0.004, 0.009);
  s.stroke_speed = rng.uniform(14.0, 20.0);
  s.rng_seed = rng.raw();
  s.validate();
  return s;
}

Corpus synth_corpus(const SynthConfig& config) {
  if (config.glyph_set_size < 2) throw UserError("synth_corpus: glyph_set_size must be >= 2");
  if (config.n_writers < 2) throw UserError("synth_corpus: n_writers must be >= 2");
  if (config.glyph_set_size > static_cast<int>(glyph_prototypes().size()))
    throw UserError("synth_corpus: glyph_set_size exceeds the prototype bank (" +
                    std::to_string(glyph_prototypes().size()) + ")");
  if (config.line_len_min < 1 || config.line_len_max < config.line_len_min)
    throw UserError("synth_corpus: bad line length range");

  const auto& protos = glyph_prototypes();
  const auto weights = zipf_weights(static_cast<std::size_t>(config.glyph_set_size), config.zipf_exponent);

  Corpus corpus;
  for (int w = 0; w < config.n_writers; ++w) {
    Rng style_rng(mix_seed(config.seed, 0x57F1Eu + static_cast<std::uint64_t>(w)));
    const WriterTraits traits = writer_traits(draw_style_params(style_rng));
    for (int k = 0; k < config.lines_per_writer; ++k) {
      Rng line_rng(mix_seed(config.seed, static_cast<std::uint64_t>(w), 0x11AE5u + static_cast<std::uint64_t>(k)));
      const int m = static_cast<int>(line_rng.uniform_int(config.line_len_min, config.line_len_max));
      InkLine line;
      line.writer_id = w;
      double cursor_x = 0.0;
      for (int c = 0; c < m; ++c) {
        const std::size_t glyph = line_rng.categorical(weights);
        line.text.push_back(glyph_codepoint(glyph));
        place_glyph(line.points, protos[glyph], traits, cursor_x, line_rng);
        cursor_x += traits.glyph_width + traits.style.char_spacing;
      }
      line.rebuild_boundaries();
      line.validate("synth_corpus");
      corpus.lines.push_back(std::move(line));
    }
  }
  corpus.rebuild_index();
  return corpus;
}

Corpus synth_corpus(int n_writers, int glyph_set_size, int lines_per_writer, std::pair<int, int> line_len_range,
                    std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_writers = n_writers;
  cfg.glyph_set_size = glyph_set_size;
  cfg.lines_per_writer = lines_per_writer;
  cfg.line_len_min = line_len_range.first;
  cfg.line_len_max = line_len_range.second;
  cfg.seed = seed;
  return synth_corpus(cfg);
}

bool CharBank::covers(char32_t c) const {
  const auto it = entries.find(c);
  if (it == entries.end()) return false;
  for (const auto& [writer, glyphs] : it->second)
    if (!glyphs.empty()) return true;
  return false;
}

bool CharBank::covers(char32_t c, int writer) const {
  const auto it = entries.find(c);
  if (it == entries.end()) return false;
  const auto wit = it->second.find(writer);
  return wit != it->second.end() && !wit->second.empty();
}

CharBank build_char_bank(const Corpus& corpus) {
  CharBank bank;
  for (const auto& line : corpus.lines) {
    for (std::size_t i = 0; i < line.char_count(); ++i) {
      const auto [first, last] = line.char_span(i);
      std::vector<PenPoint> glyph(line.points.begin() + first, line.points.begin() + last + 1);
      bank.entries[line.text[i]][line.writer_id].push_back(std::move(glyph));
    }
  }
  return bank;
}

std::map<char32_t, double> inverse_freq_distribution(const Corpus& corpus) {
  std::map<char32_t, double> dist;
  double total = 0.0;
  for (const auto& [c, freq] : corpus.char_freq) {
    if (freq <= 0) continue;
    const double w = 1.0 / static_cast<double>(freq);
    dist[c] = w;
    total += w;
  }
  if (total <= 0.0) throw UserError("inverse_freq_distribution: corpus has no characters");
  for (auto& [c, w] : dist) w /= total;
  return dist;
}

namespace {

/// Fits glyph points into a target bbox (per-axis scaling; degenerate axes
/// are translated to the target center instead).
std::vector<PenPoint> fit_to_bbox(const std::vector<PenPoint>& glyph, const BBox& target) {
  const BBox src = bounding_box(glyph);
  const bool sx_ok = src.width() > 1e-9 && target.width() > 1e-9;
  const bool sy_ok = src.height() > 1e-9 && target.height() > 1e-9;
  const double sx = sx_ok ? target.width() / src.width() : 1.0;
  const double sy = sy_ok ? target.height() / src.height() : 1.0;
  std::vector<PenPoint> out;
  out.reserve(glyph.size());
  for (const auto& p : glyph) {
    PenPoint q = p;
    q.x = sx_ok ? target.min_x + (p.x - src.min_x) * sx
                : 0.5 * (target.min_x + target.max_x) + (p.x - 0.5 * (src.min_x + src.max_x));
    q.y = sy_ok ? target.min_y + (p.y - src.min_y) * sy
                : 0.5 * (target.min_y + target.max_y) + (p.y - 0.5 * (src.min_y + src.max_y));
    out.push_back(q);
  }
  return out;
}

}  // namespace

Corpus freq_augment(const Corpus& corpus, const CharBank& bank, int n_new, std::uint64_t seed) {
  if (n_new < 0) throw UserError("freq_augment: n_new must be >= 0");
  if (n_new == 0) return corpus;
  if (corpus.lines.empty()) throw UserError("freq_augment: corpus is empty");
  for (char32_t c : corpus.vocab)
    if (!bank.covers(c)) throw UserError("freq_augment: char bank does not cover '" + utf8_encode(c) + "'");

  const auto dist = inverse_freq_distribution(corpus);
  std::vector<char32_t> chars;
  std::vector<double> char_weights;
  for (const auto& [c, w] : dist) {
    chars.push_back(c);
    char_weights.push_back(w);
  }

  Corpus out = corpus;
  const std::size_t n_templates = corpus.lines.size();
  for (int k = 0; k < n_new; ++k) {
    Rng rng(mix_seed(seed, 0xA06u + static_cast<std::uint64_t>(k)));
    const auto& tmpl = corpus.lines[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n_templates) - 1))];
    InkLine line;
    line.writer_id = tmpl.writer_id;
    for (std::size_t slot = 0; slot < tmpl.char_count(); ++slot) {
      char32_t c = 0;
      // Resample characters the template writer never produced.
      for (int attempt = 0;; ++attempt) {
        c = chars[rng.categorical(char_weights)];
        if (bank.covers(c, tmpl.writer_id)) break;
        if (attempt >= 256) {
          // The writer genuinely lacks this part of the vocabulary; restrict
          // the draw to what the writer has.
          std::vector<double> restricted = char_weights;
          bool any = false;
          for (std::size_t i = 0; i < chars.size(); ++i) {
            if (!bank.covers(chars[i], tmpl.writer_id)) restricted[i] = 0.0;
            else any = true;
          }
          if (!any) throw UserError("freq_augment: writer " + std::to_string(tmpl.writer_id) +
                                    " has no bank entries at all");
          c = chars[rng.categorical(restricted)];
          break;
        }
      }
      const auto& glyphs = bank.entries.at(c).at(tmpl.writer_id);
      const auto& glyph = glyphs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(glyphs.size()) - 1))];
      const auto [first, last] = tmpl.char_span(slot);
      const BBox target = bounding_box(std::span<const PenPoint>(tmpl.points).subspan(first, last - first + 1));
      auto placed = fit_to_bbox(glyph, target);
      placed.back().pen = Pen::EndOfChar;  // bank glyphs end with EndOfChar already; keep it explicit
      line.text.push_back(c);
      line.points.insert(line.points.end(), placed.begin(), placed.end());
    }
    line.rebuild_boundaries();
    line.validate("freq_augment");
    out.lines.push_back(std::move(line));
  }
  out.rebuild_index();
  return out;
}

}  // namespace ink
