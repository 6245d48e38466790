#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mrcner/query.hpp"
#include "mrcner/span.hpp"

namespace mrcner {

// One annotated sentence. Spans may overlap or nest freely.
struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<EntitySpan> spans;
};

// One (query, context, answers) triple for a single (sentence, type) pair.
// Zero answers marks a negative example; those are kept for training.
struct MrcExample {
  std::string sentence_id;
  EntityType entity_type;
  std::vector<std::string> query_tokens;
  std::vector<std::string> context_tokens;
  std::vector<std::pair<int, int>> answers;  // inclusive ends, context coords
};

// Ground-truth tensors for one example: per-token start/end indicators and
// the set of positive (start, end) pairs.
struct LabelTensors {
  std::vector<std::uint8_t> y_start;
  std::vector<std::uint8_t> y_end;
  std::set<std::pair<int, int>> y_match;
};

using Tokenizer = std::function<std::vector<std::string>(const std::string&)>;

std::vector<std::string> whitespace_tokenize(const std::string& text);
// One token per UTF-8 code point; spaces dropped. Handles character-level
// corpora without language-specific logic.
std::vector<std::string> char_tokenize(const std::string& text);
// kind is "whitespace" or "char".
Tokenizer make_tokenizer(const std::string& kind);

// CoNLL-style file: one token per line, whitespace-separated columns, last
// column holds the BIO tag, blank line between sentences. An I-X that does
// not continue a run of X is repaired to B-X. Type indexes follow first
// appearance in the file.
std::vector<Sentence> read_conll(const std::string& path);

// JSON Lines, one sentence per record:
//   {"id": str, "tokens": [str,...], "spans": [{"start", "end", "label"},...]}
// with INCLUSIVE end. Duplicate identical spans are dropped with a warning
// on stderr. Labels are validated against the tag set.
std::vector<Sentence> read_span_jsonl(const std::string& path, const TagSet& tags);

// Same schema as read_span_jsonl; predicted spans carry a "score" field.
void write_span_jsonl(const std::string& path, const std::vector<Sentence>& sentences);
std::string sentence_to_json_line(const Sentence& s);

// Inspection dump: {"sentence_id","label","query","context","answers"}.
void write_mrc_triples_jsonl(const std::string& path, const std::vector<MrcExample>& examples);

// The |sentences| x |tags| triple grid, ordered by (sentence order, tag
// index). Query and context share the tokenizer. Zero-answer examples are
// retained.
std::vector<MrcExample> build_triples(const std::vector<Sentence>& sentences,
                                      const TagSet& tags,
                                      const QueryCatalog& catalog,
                                      const Tokenizer& tokenizer);

LabelTensors make_label_tensors(const MrcExample& example);

// Round-trip oracle: the positive pairs of y_match, sorted.
std::vector<std::pair<int, int>> decode_gold(const LabelTensors& tensors);

}  // namespace mrcner
