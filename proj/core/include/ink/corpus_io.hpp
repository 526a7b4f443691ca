#pragma once

#include <iosfwd>
#include <string>

#include "ink/types.hpp"

namespace ink {

/// Reads a line-delimited corpus file. One UTF-8 JSON object per line:
///   {"text": str, "writer_id": int, "points": [[x, y, pen], ...]}
/// with pen 0=PenDown, 1=PenUp, 2=EndOfChar. Records whose EndOfChar count
/// does not match the text length are rejected; errors carry the line number.
Corpus parse_corpus(const std::string& path);
Corpus parse_corpus_stream(std::istream& in, const std::string& name = "<stream>");

void serialize_corpus(const Corpus& corpus, const std::string& path);
void serialize_corpus_stream(const Corpus& corpus, std::ostream& out);

std::string line_to_json(const InkLine& line);

}  // namespace ink
