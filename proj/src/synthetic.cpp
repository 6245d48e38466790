#include "mrcner/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "mrcner/errors.hpp"

namespace mrcner {

std::string open_sentinel(const std::string& type_name) { return "open" + type_name; }
std::string close_sentinel(const std::string& type_name) { return "close" + type_name; }

namespace {

std::string filler_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%02d", i);
  return buf;
}

struct Builder {
  std::vector<std::string> tokens;
  std::vector<EntitySpan> spans;
  std::mt19937_64& rng;
  const SyntheticConfig& cfg;

  int rand_int(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  }

  void fillers(int count) {
    for (int i = 0; i < count; ++i)
      tokens.push_back(filler_name(rand_int(0, cfg.num_fillers - 1)));
  }

  void entity(const EntityType& type) {
    const int start = static_cast<int>(tokens.size());
    tokens.push_back(open_sentinel(type.name));
    fillers(rand_int(0, 2));
    tokens.push_back(close_sentinel(type.name));
    spans.push_back(EntitySpan{start, static_cast<int>(tokens.size()) - 1, type, std::nullopt});
  }

  void nested_pair(const EntityType& outer, const EntityType& inner) {
    const int start = static_cast<int>(tokens.size());
    tokens.push_back(open_sentinel(outer.name));
    fillers(rand_int(0, 1));
    entity(inner);
    fillers(rand_int(0, 1));
    tokens.push_back(close_sentinel(outer.name));
    spans.push_back(EntitySpan{start, static_cast<int>(tokens.size()) - 1, outer, std::nullopt});
  }
};

}  // namespace

SyntheticCorpus gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.entity_types.empty()) throw ValidationError("synthetic corpus needs entity types");
  if (cfg.num_sentences < 1) throw ValidationError("num_sentences must be >= 1");
  if (cfg.nest_prob < 0.0 || cfg.nest_prob > 1.0 || cfg.presence_prob < 0.0 ||
      cfg.presence_prob > 1.0)
    throw ValidationError("probabilities must lie in [0, 1]");

  SyntheticCorpus corpus;
  corpus.tags = TagSet(cfg.entity_types);
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution present(cfg.presence_prob);
  std::bernoulli_distribution nest(cfg.nest_prob);

  for (int s = 0; s < cfg.num_sentences; ++s) {
    Builder b{{}, {}, rng, cfg};

    std::vector<EntityType> active;
    for (const auto& t : corpus.tags.types())
      if (present(rng)) active.push_back(t);
    std::shuffle(active.begin(), active.end(), rng);

    std::size_t consumed = 0;
    b.fillers(b.rand_int(1, cfg.max_filler_run));
    if (active.size() >= 2 && nest(rng)) {
      b.nested_pair(active[0], active[1]);
      b.fillers(b.rand_int(1, cfg.max_filler_run));
      consumed = 2;
    }
    for (std::size_t i = consumed; i < active.size(); ++i) {
      b.entity(active[i]);
      b.fillers(b.rand_int(1, cfg.max_filler_run));
    }

    Sentence sent;
    sent.id = cfg.id_prefix + std::to_string(s);
    sent.tokens = std::move(b.tokens);
    sent.spans = std::move(b.spans);
    std::sort(sent.spans.begin(), sent.spans.end(), span_less);
    corpus.sentences.push_back(std::move(sent));
  }

  // Vocabulary spans the whole universe so checkpoints transfer across
  // corpora that share it (unseen-type sentinels keep their own ids).
  const std::vector<std::string>& universe =
      cfg.universe_types.empty() ? cfg.entity_types : cfg.universe_types;
  std::set<std::string> seen;
  auto add = [&](const std::string& tok) {
    if (seen.insert(tok).second) corpus.vocab_tokens.push_back(tok);
  };
  for (int i = 0; i < cfg.num_fillers; ++i) add(filler_name(i));
  for (const auto& t : universe) {
    add(open_sentinel(t));
    add(close_sentinel(t));
  }
  for (QueryStrategy strategy : all_query_strategies()) {
    if (strategy == QueryStrategy::PositionIndex) {
      for (std::size_t i = 0; i < universe.size(); ++i)
        add(build_position_index_query(EntityType{universe[i], static_cast<int>(i)}).text);
      continue;
    }
    QueryCatalog catalog = synthetic_catalog(strategy, universe);
    for (const auto& [name, text] : catalog.entries()) {
      (void)name;
      for (const auto& tok : whitespace_tokenize(text)) add(tok);
    }
  }
  return corpus;
}

QueryCatalog synthetic_catalog(QueryStrategy strategy,
                               const std::vector<std::string>& type_names,
                               const std::string& dataset_id) {
  std::map<std::string, std::string> entries;
  for (const auto& name : type_names) {
    const std::string open = open_sentinel(name);
    const std::string close = close_sentinel(name);
    std::string text;
    switch (strategy) {
      case QueryStrategy::PositionIndex:
        continue;  // generated from the tag index, never stored
      case QueryStrategy::Keyword:
        text = open + " " + close + " " + name;
        break;
      case QueryStrategy::Synonyms:
        text = open + " " + close + " marker " + name;
        break;
      case QueryStrategy::KeywordSynonyms:
        text = open + " " + close + " " + name + " " + open + " " + close +
               " marker " + name;
        break;
      case QueryStrategy::Wikipedia:
        text = open + " " + close + " an " + name +
               " span is text delimited by its markers";
        break;
      case QueryStrategy::RuleTemplate:
        text = "which " + name + " span is mentioned in the text";
        break;
      case QueryStrategy::AnnotationGuideline:
        text = open + " " + close + " find spans that start with " + open +
               " and finish with " + close;
        break;
    }
    entries[name] = text;
  }
  return QueryCatalog(dataset_id, strategy, std::move(entries));
}

double nested_fraction(const std::vector<Sentence>& sentences) {
  long total = 0, nested = 0;
  for (const auto& s : sentences) {
    total += static_cast<long>(s.spans.size());
    for (const auto& a : s.spans) {
      bool involved = false;
      for (const auto& b : s.spans)
        if (is_nested(a, b) || is_nested(b, a)) involved = true;
      nested += involved;
    }
  }
  return total > 0 ? double(nested) / double(total) : 0.0;
}

}  // namespace mrcner
