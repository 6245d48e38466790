#include "mrcner/query.hpp"

#include <array>
#include <fstream>

#include <json.hpp>

#include "mrcner/errors.hpp"

namespace mrcner {

namespace {

constexpr std::array<const char*, 7> kStrategyNames = {
    "PositionIndex", "Keyword",         "RuleTemplate",       "Wikipedia",
    "Synonyms",      "KeywordSynonyms", "AnnotationGuideline"};

constexpr std::array<const char*, 20> kCardinals = {
    "one",     "two",     "three",    "four",     "five",
    "six",     "seven",   "eight",    "nine",     "ten",
    "eleven",  "twelve",  "thirteen", "fourteen", "fifteen",
    "sixteen", "seventeen", "eighteen", "nineteen", "twenty"};

}  // namespace

const std::vector<QueryStrategy>& all_query_strategies() {
  static const std::vector<QueryStrategy> all = {
      QueryStrategy::PositionIndex,   QueryStrategy::Keyword,
      QueryStrategy::RuleTemplate,    QueryStrategy::Wikipedia,
      QueryStrategy::Synonyms,        QueryStrategy::KeywordSynonyms,
      QueryStrategy::AnnotationGuideline};
  return all;
}

std::string to_string(QueryStrategy s) {
  return kStrategyNames[static_cast<int>(s)];
}

std::optional<QueryStrategy> strategy_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i)
    if (name == kStrategyNames[i]) return static_cast<QueryStrategy>(i);
  return std::nullopt;
}

QueryCatalog::QueryCatalog(std::string dataset_id, QueryStrategy strategy,
                           std::map<std::string, std::string> entries)
    : dataset_id_(std::move(dataset_id)),
      strategy_(strategy),
      entries_(std::move(entries)) {}

QueryCatalog QueryCatalog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open catalog file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("catalog is not valid JSON: " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("catalog root must be an object: " + path);

  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "dataset_id" && key != "strategy" && key != "entries")
      throw ValidationError("catalog has unknown key '" + key + "': " + path);
  }
  if (!doc.contains("dataset_id") || !doc["dataset_id"].is_string())
    throw ValidationError("catalog missing string 'dataset_id': " + path);
  if (!doc.contains("strategy") || !doc["strategy"].is_string())
    throw ValidationError("catalog missing string 'strategy': " + path);
  if (!doc.contains("entries") || !doc["entries"].is_object())
    throw ValidationError("catalog missing object 'entries': " + path);

  auto strategy = strategy_from_string(doc["strategy"].get<std::string>());
  if (!strategy)
    throw ValidationError("unknown query strategy '" +
                          doc["strategy"].get<std::string>() + "': " + path);

  std::map<std::string, std::string> entries;
  for (const auto& [name, text] : doc["entries"].items()) {
    if (!text.is_string())
      throw ValidationError("catalog entry '" + name + "' must be a string: " + path);
    entries[name] = text.get<std::string>();
  }
  return QueryCatalog(doc["dataset_id"].get<std::string>(), *strategy, std::move(entries));
}

void QueryCatalog::save(const std::string& path) const {
  nlohmann::json doc;
  doc["dataset_id"] = dataset_id_;
  doc["strategy"] = to_string(strategy_);
  doc["entries"] = entries_;
  std::ofstream out(path);
  if (!out) throw ExecError("cannot write catalog file: " + path);
  out << doc.dump(2) << "\n";
}

Query build_position_index_query(const EntityType& t) {
  if (t.index < 0) throw ValidationError("tag index must be non-negative");
  std::string text = t.index < 20 ? kCardinals[t.index]
                                  : std::to_string(t.index + 1);
  return Query{t, std::move(text), QueryStrategy::PositionIndex};
}

Query lookup_query(const QueryCatalog& catalog, const EntityType& t) {
  if (catalog.strategy() == QueryStrategy::PositionIndex)
    return build_position_index_query(t);
  auto it = catalog.entries().find(t.name);
  if (it == catalog.entries().end())
    throw ValidationError("catalog incomplete: no query for type " + t.name);
  if (it->second.empty())
    throw ValidationError("catalog incomplete: empty query for type " + t.name);
  return Query{t, it->second, catalog.strategy()};
}

std::vector<std::string> validate_catalog(const QueryCatalog& catalog, const TagSet& tags) {
  std::vector<std::string> diagnostics;
  if (catalog.strategy() == QueryStrategy::PositionIndex) return diagnostics;
  for (const auto& t : tags.types()) {
    auto it = catalog.entries().find(t.name);
    if (it == catalog.entries().end())
      diagnostics.push_back("missing query: " + t.name);
    else if (it->second.empty())
      diagnostics.push_back("empty query: " + t.name);
  }
  return diagnostics;
}

}  // namespace mrcner
