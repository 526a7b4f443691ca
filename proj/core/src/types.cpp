#include "ink/types.hpp"

#include <algorithm>
#include <set>

#include "ink/error.hpp"
#include "ink/utf8.hpp"

namespace ink {

std::size_t InkLine::end_of_char_count() const {
  std::size_t n = 0;
  for (const auto& p : points)
    if (p.pen == Pen::EndOfChar) ++n;
  return n;
}

void InkLine::rebuild_boundaries() {
  char_boundaries.clear();
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].pen == Pen::EndOfChar) char_boundaries.push_back(i);
}

void InkLine::validate(const std::string& context) const {
  const std::string where = context.empty() ? std::string() : (context + ": ");
  const std::size_t eoc = end_of_char_count();
  if (eoc != text.size()) {
    throw UserError(where + "EndOfChar count " + std::to_string(eoc) + " does not match text length " +
                    std::to_string(text.size()) + " (text \"" + utf8_encode(text) + "\")");
  }
  if (char_boundaries.size() != text.size()) throw UserError(where + "char_boundaries out of sync with text");
  for (std::size_t i = 0; i + 1 < char_boundaries.size(); ++i) {
    if (char_boundaries[i] >= char_boundaries[i + 1])
      throw UserError(where + "char_boundaries not strictly increasing");
  }
  if (!points.empty()) {
    if (char_boundaries.empty() || char_boundaries.back() != points.size() - 1)
      throw UserError(where + "line must end with an EndOfChar point");
  }
}

std::pair<std::size_t, std::size_t> InkLine::char_span(std::size_t i) const {
  if (i >= char_boundaries.size()) throw Error("char_span: index out of range");
  const std::size_t first = i == 0 ? 0 : char_boundaries[i - 1] + 1;
  return {first, char_boundaries[i]};
}

void Corpus::rebuild_index() {
  std::set<char32_t> chars;
  std::set<int> writers;
  char_freq.clear();
  for (const auto& line : lines) {
    writers.insert(line.writer_id);
    for (char32_t c : line.text) {
      chars.insert(c);
      ++char_freq[c];
    }
  }
  vocab.assign(chars.begin(), chars.end());  // std::set iterates in codepoint order
  writer_count = static_cast<int>(writers.size());
}

std::optional<std::size_t> Corpus::vocab_index(char32_t c) const {
  const auto it = std::lower_bound(vocab.begin(), vocab.end(), c);
  if (it == vocab.end() || *it != c) return std::nullopt;
  return static_cast<std::size_t>(it - vocab.begin());
}

std::int64_t Corpus::total_char_occurrences() const {
  std::int64_t n = 0;
  for (const auto& [c, k] : char_freq) n += k;
  return n;
}

void SynthStyleParams::validate() const {
  if (!(scale > 0.0)) throw UserError("SynthStyleParams: scale must be > 0");
  if (jitter_sigma < 0.0) throw UserError("SynthStyleParams: jitter_sigma must be >= 0");
  if (stroke_speed < 2.0) throw UserError("SynthStyleParams: stroke_speed must be >= 2");
}

}  // namespace ink
