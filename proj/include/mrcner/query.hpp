#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrcner/span.hpp"

namespace mrcner {

// The seven ways of phrasing the per-type question. Closed set; names are
// the wire spelling used in catalog files, case-sensitive.
enum class QueryStrategy {
  PositionIndex,
  Keyword,
  RuleTemplate,
  Wikipedia,
  Synonyms,
  KeywordSynonyms,
  AnnotationGuideline,
};

const std::vector<QueryStrategy>& all_query_strategies();
std::string to_string(QueryStrategy s);
std::optional<QueryStrategy> strategy_from_string(const std::string& name);

// The natural-language question attached to one entity type.
struct Query {
  EntityType entity_type;
  std::string text;
  QueryStrategy strategy = QueryStrategy::AnnotationGuideline;
};

// Per-dataset query texts for one strategy, keyed by type name. Immutable
// after construction. Query text is stored pre-tokenization; one catalog
// serves word-level and character-level corpora.
class QueryCatalog {
 public:
  QueryCatalog() = default;
  QueryCatalog(std::string dataset_id, QueryStrategy strategy,
               std::map<std::string, std::string> entries);

  // Strict JSON: {"dataset_id", "strategy", "entries"}; unknown keys rejected.
  static QueryCatalog load(const std::string& path);
  void save(const std::string& path) const;

  const std::string& dataset_id() const { return dataset_id_; }
  QueryStrategy strategy() const { return strategy_; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::string dataset_id_;
  QueryStrategy strategy_ = QueryStrategy::AnnotationGuideline;
  std::map<std::string, std::string> entries_;
};

// Cardinal-word query from the tag index: "one".."twenty" for indexes
// 0..19, the decimal numeral of index+1 beyond that.
Query build_position_index_query(const EntityType& t);

// Catalog entry wrapped as a Query. PositionIndex catalogs generate their
// text instead of reading entries; any other strategy throws
// ValidationError when the entry is missing or empty.
Query lookup_query(const QueryCatalog& catalog, const EntityType& t);

// One diagnostic string per missing or empty entry; empty means the
// catalog covers the tag set. PositionIndex catalogs always validate.
std::vector<std::string> validate_catalog(const QueryCatalog& catalog, const TagSet& tags);

}  // namespace mrcner
