#include <doctest.h>

#include <algorithm>
#include <random>

#include "mrcner/errors.hpp"
#include "mrcner/span.hpp"

using namespace mrcner;

namespace {

const EntityType kPer{"PER", 0};
const EntityType kOrg{"ORG", 1};

EntitySpan span(int s, int e, const EntityType& t = kPer) {
  return EntitySpan{s, e, t, std::nullopt};
}

EntitySpan scored(int s, int e, const EntityType& t, double score) {
  return EntitySpan{s, e, t, score};
}

std::vector<EntitySpan> random_scored_spans(std::mt19937_64& rng, int max_count) {
  std::uniform_int_distribution<int> count_dist(0, max_count);
  std::uniform_int_distribution<int> pos_dist(0, 9);
  std::uniform_real_distribution<double> score_dist(0.0, 1.0);
  std::vector<EntitySpan> spans;
  const int count = count_dist(rng);
  for (int i = 0; i < count; ++i) {
    int a = pos_dist(rng), b = pos_dist(rng);
    spans.push_back(scored(std::min(a, b), std::max(a, b), rng() % 2 ? kPer : kOrg,
                           score_dist(rng)));
  }
  return spans;
}

}  // namespace

TEST_CASE("tag set enforces its invariants") {
  TagSet tags({"PER", "ORG", "LOC"});
  CHECK(tags.size() == 3);
  CHECK(tags.at(1).name == "ORG");
  CHECK(tags.at(1).index == 1);
  CHECK(tags.find("LOC") != nullptr);
  CHECK(tags.find("GPE") == nullptr);
  CHECK_THROWS_AS(TagSet({}), ValidationError);
  CHECK_THROWS_AS(TagSet({"PER", "PER"}), ValidationError);
}

TEST_CASE("spans_overlap on closed intervals") {
  CHECK(spans_overlap(span(0, 1), span(1, 2)));   // shared boundary token
  CHECK_FALSE(spans_overlap(span(0, 1), span(2, 3)));
  CHECK(spans_overlap(span(0, 5), span(2, 3)));   // containment intersects
}

TEST_CASE("spans_overlap is symmetric") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pos(0, 11);
  for (int trial = 0; trial < 500; ++trial) {
    int a1 = pos(rng), a2 = pos(rng), b1 = pos(rng), b2 = pos(rng);
    auto a = span(std::min(a1, a2), std::max(a1, a2));
    auto b = span(std::min(b1, b2), std::max(b1, b2));
    CHECK(spans_overlap(a, b) == spans_overlap(b, a));
  }
}

TEST_CASE("is_nested follows the containment-with-difference rule") {
  CHECK(is_nested(span(0, 5), span(2, 3)));
  CHECK_FALSE(is_nested(span(0, 3), span(0, 3)));  // identical intervals excluded
  CHECK_FALSE(is_nested(span(2, 3), span(0, 5)));  // directional
}

TEST_CASE("is_nested is antisymmetric") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pos(0, 9);
  for (int trial = 0; trial < 500; ++trial) {
    int a1 = pos(rng), a2 = pos(rng), b1 = pos(rng), b2 = pos(rng);
    auto a = span(std::min(a1, a2), std::max(a1, a2));
    auto b = span(std::min(b1, b2), std::max(b1, b2));
    CHECK_FALSE(is_nested(a, b) && is_nested(b, a));
  }
}

TEST_CASE("resolve_flat_conflicts picks the greedy winner") {
  auto kept = resolve_flat_conflicts({scored(0, 2, kPer, 0.9), scored(1, 3, kOrg, 0.8)});
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].start == 0);
  CHECK(kept[0].end == 2);
  CHECK(kept[0].entity_type.name == "PER");
}

TEST_CASE("resolve_flat_conflicts trivial cases") {
  CHECK(resolve_flat_conflicts({}).empty());

  auto kept = resolve_flat_conflicts({scored(0, 1, kPer, 0.5), scored(3, 4, kOrg, 0.5)});
  CHECK(kept.size() == 2);  // no overlap: identity

  CHECK_THROWS_AS(resolve_flat_conflicts({span(0, 1)}), ValidationError);
}

TEST_CASE("resolve_flat_conflicts properties over random inputs") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    auto spans = random_scored_spans(rng, 8);
    auto kept = resolve_flat_conflicts(spans);

    // No overlapping pair survives.
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j)
        CHECK_FALSE(spans_overlap(kept[i], kept[j]));

    // Output is a subset of the input.
    for (const auto& k : kept)
      CHECK(std::count(spans.begin(), spans.end(), k) > 0);

    // Idempotent.
    CHECK(resolve_flat_conflicts(kept) == kept);

    // Greedy maximality: every dropped span overlaps a kept one with >= score.
    for (const auto& s : spans) {
      if (std::count(kept.begin(), kept.end(), s)) continue;
      bool blocked = std::any_of(kept.begin(), kept.end(), [&](const EntitySpan& k) {
        return spans_overlap(k, s) && *k.score >= *s.score;
      });
      CHECK(blocked);
    }
  }
}
