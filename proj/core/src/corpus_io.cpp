#include "ink/corpus_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ink/error.hpp"
#include "ink/utf8.hpp"

namespace ink {

namespace {

InkLine parse_record(const std::string& text_line, std::size_t line_no, const std::string& name) {
  const std::string where = name + ":" + std::to_string(line_no);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text_line);
  } catch (const nlohmann::json::exception& e) {
    throw UserError(where + ": malformed record: " + e.what());
  }
  if (!j.is_object() || !j.contains("text") || !j.contains("writer_id") || !j.contains("points"))
    throw UserError(where + ": record must be an object with text/writer_id/points");

  InkLine line;
  try {
    line.text = utf8_decode(j.at("text").get<std::string>());
    line.writer_id = j.at("writer_id").get<int>();
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 3) throw UserError(where + ": point must be [x, y, pen]");
      const int pen = p.at(2).get<int>();
      if (pen < 0 || pen > 2) throw UserError(where + ": pen index " + std::to_string(pen) + " not in {0,1,2}");
      line.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(), static_cast<Pen>(pen)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw UserError(where + ": malformed record: " + e.what());
  }
  line.rebuild_boundaries();
  line.validate(where);
  return line;
}

}  // namespace

Corpus parse_corpus_stream(std::istream& in, const std::string& name) {
  Corpus corpus;
  std::string text_line;
  std::size_t line_no = 0;
  while (std::getline(in, text_line)) {
    ++line_no;
    if (text_line.empty()) continue;
    corpus.lines.push_back(parse_record(text_line, line_no, name));
  }
  corpus.rebuild_index();
  return corpus;
}

Corpus parse_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("parse_corpus: cannot open " + path);
  return parse_corpus_stream(in, path);
}

std::string line_to_json(const InkLine& line) {
  nlohmann::ordered_json j;
  j["text"] = utf8_encode(line.text);
  j["writer_id"] = line.writer_id;
  auto points = nlohmann::ordered_json::array();
  for (const auto& p : line.points) {
    points.push_back({p.x, p.y, static_cast<int>(p.pen)});
  }
  j["points"] = std::move(points);
  return j.dump();
}

void serialize_corpus_stream(const Corpus& corpus, std::ostream& out) {
  for (const auto& line : corpus.lines) out << line_to_json(line) << '\n';
}

void serialize_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UserError("serialize_corpus: cannot open " + path + " for writing");
  serialize_corpus_stream(corpus, out);
}

}  // namespace ink
