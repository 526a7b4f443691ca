#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ink/error.hpp"
#include "ink/types.hpp"
#include "ink/utf8.hpp"

namespace ink {

/// Ordered character set (sorted by codepoint) with index lookup.
struct Vocab {
  std::u32string chars;

  static Vocab from_corpus(const Corpus& corpus) {
    Vocab v;
    v.chars.assign(corpus.vocab.begin(), corpus.vocab.end());
    return v;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(chars.size()); }

  std::optional<std::int64_t> index(char32_t c) const {
    const auto it = std::lower_bound(chars.begin(), chars.end(), c);
    if (it == chars.end() || *it != c) return std::nullopt;
    return static_cast<std::int64_t>(it - chars.begin());
  }

  /// Throws UserError naming the offending character when out of vocabulary.
  std::vector<std::int64_t> encode(std::u32string_view text) const {
    std::vector<std::int64_t> out;
    out.reserve(text.size());
    for (char32_t c : text) {
      const auto idx = index(c);
      if (!idx) throw UserError("character '" + utf8_encode(c) + "' is not in the vocabulary");
      out.push_back(*idx);
    }
    return out;
  }

  std::u32string decode(const std::vector<std::int64_t>& indices) const {
    std::u32string out;
    out.reserve(indices.size());
    for (const auto i : indices) {
      if (i < 0 || i >= size()) throw Error("Vocab::decode: index out of range");
      out.push_back(chars[static_cast<std::size_t>(i)]);
    }
    return out;
  }
};

}  // namespace ink
