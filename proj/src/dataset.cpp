#include "mrcner/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "mrcner/errors.hpp"

namespace mrcner {

std::vector<std::string> whitespace_tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::vector<std::string> char_tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if ((c & 0x80) == 0x00) len = 1;
    else if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    len = std::min(len, text.size() - i);
    std::string ch = text.substr(i, len);
    i += len;
    if (ch == " " || ch == "\t" || ch == "\n" || ch == "\r") continue;
    tokens.push_back(ch);
  }
  return tokens;
}

Tokenizer make_tokenizer(const std::string& kind) {
  if (kind == "whitespace") return whitespace_tokenize;
  if (kind == "char") return char_tokenize;
  throw ValidationError("unknown tokenizer kind: " + kind);
}

namespace {

// Dedup identical (start, end, type) spans, warning once per duplicate.
std::vector<EntitySpan> dedup_spans(std::vector<EntitySpan> spans, const std::string& sentence_id) {
  std::vector<EntitySpan> out;
  for (const auto& s : spans) {
    bool dup = std::any_of(out.begin(), out.end(), [&](const EntitySpan& o) {
      return o.start == s.start && o.end == s.end && o.entity_type.name == s.entity_type.name;
    });
    if (dup) {
      std::cerr << "warning: duplicate span (" << s.start << "," << s.end << ","
                << s.entity_type.name << ") in sentence " << sentence_id << ", dropped\n";
      continue;
    }
    out.push_back(s);
  }
  return out;
}

struct BioTag {
  char prefix;       // 'B', 'I' or 'O'
  std::string type;  // empty for O
};

BioTag parse_bio(const std::string& tag, int line_no) {
  if (tag == "O") return {'O', ""};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
    return {tag[0], tag.substr(2)};
  throw ValidationError("line " + std::to_string(line_no) +
                        ": unknown tag prefix in '" + tag + "' (expected B-/I-/O)");
}

}  // namespace

std::vector<Sentence> read_conll(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open CoNLL file: " + path);

  std::vector<Sentence> sentences;
  std::vector<std::string> tokens;
  std::vector<BioTag> tags;
  std::vector<std::string> type_order;  // first-appearance index assignment
  int line_no = 0;

  auto type_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < type_order.size(); ++i)
      if (type_order[i] == name) return static_cast<int>(i);
    type_order.push_back(name);
    return static_cast<int>(type_order.size() - 1);
  };

  auto flush = [&]() {
    if (tokens.empty()) return;
    Sentence s;
    s.id = "s" + std::to_string(sentences.size());
    s.tokens = tokens;
    int run_start = -1;
    std::string run_type;
    auto close_run = [&](int end) {
      if (run_start < 0) return;
      s.spans.push_back(EntitySpan{run_start, end,
                                   EntityType{run_type, type_index(run_type)},
                                   std::nullopt});
      run_start = -1;
    };
    for (std::size_t i = 0; i < tags.size(); ++i) {
      const BioTag& t = tags[i];
      if (t.prefix == 'O') {
        close_run(static_cast<int>(i) - 1);
      } else if (t.prefix == 'B' || (run_start < 0 || t.type != run_type)) {
        // A bare or mismatched I-X starts a new run, same as B-X.
        close_run(static_cast<int>(i) - 1);
        run_start = static_cast<int>(i);
        run_type = t.type;
      }
    }
    close_run(static_cast<int>(tags.size()) - 1);
    s.spans = dedup_spans(std::move(s.spans), s.id);
    sentences.push_back(std::move(s));
    tokens.clear();
    tags.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cols = whitespace_tokenize(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols.size() < 2)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": expected at least token and tag columns");
    tokens.push_back(cols.front());
    tags.push_back(parse_bio(cols.back(), line_no));
  }
  flush();
  return sentences;
}

std::vector<Sentence> read_span_jsonl(const std::string& path, const TagSet& tags) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open span JSONL file: " + path);

  std::vector<Sentence> sentences;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("id") || !doc.contains("tokens"))
      throw ValidationError("line " + std::to_string(line_no) +
                            ": record must have 'id' and 'tokens'");
    Sentence s;
    s.id = doc["id"].get<std::string>();
    s.tokens = doc["tokens"].get<std::vector<std::string>>();
    if (s.tokens.empty())
      throw ValidationError("line " + std::to_string(line_no) + ": empty token list");
    const int n = static_cast<int>(s.tokens.size());

    if (doc.contains("spans")) {
      for (const auto& rec : doc["spans"]) {
        int start = rec.at("start").get<int>();
        int end = rec.at("end").get<int>();
        std::string label = rec.at("label").get<std::string>();
        if (start > end)
          throw ValidationError("line " + std::to_string(line_no) + ": span start " +
                                std::to_string(start) + " > end " + std::to_string(end));
        if (start < 0 || end >= n)
          throw ValidationError("line " + std::to_string(line_no) + ": span (" +
                                std::to_string(start) + "," + std::to_string(end) +
                                ") out of range for " + std::to_string(n) + " tokens");
        const EntityType* type = tags.find(label);
        if (!type)
          throw ValidationError("line " + std::to_string(line_no) +
                                ": unknown entity type '" + label + "'");
        EntitySpan span{start, end, *type, std::nullopt};
        if (rec.contains("score")) span.score = rec["score"].get<double>();
        s.spans.push_back(std::move(span));
      }
    }
    s.spans = dedup_spans(std::move(s.spans), s.id);
    sentences.push_back(std::move(s));
  }
  return sentences;
}

std::string sentence_to_json_line(const Sentence& s) {
  nlohmann::json doc;
  doc["id"] = s.id;
  doc["tokens"] = s.tokens;
  doc["spans"] = nlohmann::json::array();
  for (const auto& span : s.spans) {
    nlohmann::json rec;
    rec["start"] = span.start;
    rec["end"] = span.end;
    rec["label"] = span.entity_type.name;
    if (span.score) rec["score"] = *span.score;
    doc["spans"].push_back(std::move(rec));
  }
  return doc.dump();
}

void write_span_jsonl(const std::string& path, const std::vector<Sentence>& sentences) {
  std::ofstream out(path);
  if (!out) throw ExecError("cannot write span JSONL file: " + path);
  for (const auto& s : sentences) out << sentence_to_json_line(s) << "\n";
}

void write_mrc_triples_jsonl(const std::string& path, const std::vector<MrcExample>& examples) {
  std::ofstream out(path);
  if (!out) throw ExecError("cannot write triples file: " + path);
  for (const auto& e : examples) {
    nlohmann::json doc;
    doc["sentence_id"] = e.sentence_id;
    doc["label"] = e.entity_type.name;
    doc["query"] = e.query_tokens;
    doc["context"] = e.context_tokens;
    doc["answers"] = nlohmann::json::array();
    for (const auto& [start, end] : e.answers)
      doc["answers"].push_back(nlohmann::json::array({start, end}));
    out << doc.dump() << "\n";
  }
}

std::vector<MrcExample> build_triples(const std::vector<Sentence>& sentences,
                                      const TagSet& tags,
                                      const QueryCatalog& catalog,
                                      const Tokenizer& tokenizer) {
  std::vector<MrcExample> examples;
  examples.reserve(sentences.size() * tags.size());
  for (const auto& sentence : sentences) {
    for (const auto& type : tags.types()) {
      MrcExample e;
      e.sentence_id = sentence.id;
      e.entity_type = type;
      e.query_tokens = tokenizer(lookup_query(catalog, type).text);
      e.context_tokens = sentence.tokens;
      for (const auto& span : sentence.spans)
        if (span.entity_type.name == type.name)
          e.answers.emplace_back(span.start, span.end);
      std::sort(e.answers.begin(), e.answers.end());
      examples.push_back(std::move(e));
    }
  }
  return examples;
}

LabelTensors make_label_tensors(const MrcExample& example) {
  const int n = static_cast<int>(example.context_tokens.size());
  LabelTensors t;
  t.y_start.assign(n, 0);
  t.y_end.assign(n, 0);
  for (const auto& [start, end] : example.answers) {
    if (start < 0 || end >= n || start > end)
      throw ValidationError("answer (" + std::to_string(start) + "," +
                            std::to_string(end) + ") invalid for context length " +
                            std::to_string(n));
    t.y_start[start] = 1;
    t.y_end[end] = 1;
    t.y_match.emplace(start, end);
  }
  return t;
}

std::vector<std::pair<int, int>> decode_gold(const LabelTensors& tensors) {
  return {tensors.y_match.begin(), tensors.y_match.end()};
}

}  // namespace mrcner
