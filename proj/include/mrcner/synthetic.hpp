#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrcner/dataset.hpp"
#include "mrcner/query.hpp"
#include "mrcner/span.hpp"

namespace mrcner {

// Sentinel-marked corpus: an entity of type X is a bracketed block
// "openX ... closeX" laid into filler text. At most one entity per type
// per sentence; nesting places one type's block inside another's. Every
// sentence, span and token is a pure function of the seed.
struct SyntheticConfig {
  std::vector<std::string> entity_types = {"A", "B", "C"};
  // Types covered by the emitted vocabulary and catalogs; supersedes
  // entity_types so a corpus with unseen types can share one vocabulary.
  std::vector<std::string> universe_types;
  int num_sentences = 500;
  double nest_prob = 0.5;
  double presence_prob = 0.75;
  int max_filler_run = 3;
  int num_fillers = 24;
  std::uint64_t seed = 1;
  std::string id_prefix = "s";
};

struct SyntheticCorpus {
  std::vector<Sentence> sentences;
  TagSet tags;  // entity_types
  std::vector<std::string> vocab_tokens;
};

SyntheticCorpus gen_synthetic(const SyntheticConfig& cfg);

std::string open_sentinel(const std::string& type_name);
std::string close_sentinel(const std::string& type_name);

// Catalog for the synthetic tag set under one strategy. Query texts for
// the informative strategies lead with the open and close sentinels of the
// type; PositionIndex and RuleTemplate stay sentinel-free.
QueryCatalog synthetic_catalog(QueryStrategy strategy,
                               const std::vector<std::string>& type_names,
                               const std::string& dataset_id = "synthetic");

// Fraction of spans that participate in a nesting relation, either side.
double nested_fraction(const std::vector<Sentence>& sentences);

}  // namespace mrcner
