#include <algorithm>
#include <set>

#include "doctest.h"
#include "kgind/datasetgen.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace kgind;

namespace {

std::vector<StringTriple> relation_triples(const std::string& r, std::size_t n, std::size_t offset = 0) {
  std::vector<StringTriple> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"h" + std::to_string(i + offset), r, "t" + std::to_string(i + offset)});
  }
  return out;
}

std::set<std::string> relations_of(const std::vector<StringTriple>& t) {
  std::set<std::string> out;
  for (const auto& x : t) out.insert(x.relation);
  return out;
}

bool subset_of(const std::vector<StringTriple>& a, const std::vector<StringTriple>& b) {
  const std::set<StringTriple> sb(b.begin(), b.end());
  return std::all_of(a.begin(), a.end(), [&](const StringTriple& t) { return sb.contains(t); });
}

}  // namespace

TEST_CASE("rare relations are dropped") {
  auto t = relation_triples("common", 5);
  const auto rare = relation_triples("rare", 2);
  const auto edge = relation_triples("edge", 3);
  t.insert(t.end(), rare.begin(), rare.end());
  t.insert(t.end(), edge.begin(), edge.end());
  const auto kept = filter_rare_relations(t, 3);
  CHECK(kept.size() == 8);
  CHECK(relations_of(kept) == std::set<std::string>{"common", "edge"});
  CHECK(filter_rare_relations(t, 1) == t);
}

TEST_CASE("inverse and duplicate relations") {
  const auto base = relation_triples("r1", 10);
  SUBCASE("perfect inverse") {
    auto t = base;
    for (const auto& x : base) t.push_back({x.tail, "r2", x.head});
    CHECK(detect_inverse_and_duplicates(t, 0.9) == std::unordered_set<std::string>{"r2"});
  }
  SUBCASE("equal sizes drop the larger id") {
    auto t = base;
    for (const auto& x : base) t.push_back({x.head, "r0", x.tail});
    CHECK(detect_inverse_and_duplicates(t, 0.9) == std::unordered_set<std::string>{"r1"});
  }
  SUBCASE("unrelated relations") {
    auto t = base;
    const auto other = relation_triples("r2", 10, 100);
    t.insert(t.end(), other.begin(), other.end());
    CHECK(detect_inverse_and_duplicates(t, 0.9).empty());
  }
  SUBCASE("80 percent overlap") {
    auto t = base;
    for (std::size_t i = 0; i < 8; ++i) t.push_back({base[i].tail, "r2", base[i].head});
    t.push_back({"x1", "r2", "y1"});
    t.push_back({"x2", "r2", "y2"});
    CHECK(detect_inverse_and_duplicates(t, 0.9).empty());
    CHECK(detect_inverse_and_duplicates(t, 0.8) == std::unordered_set<std::string>{"r2"});
  }
}

TEST_CASE("relation split") {
  std::vector<std::string> rels;
  for (int i = 0; i < 9; ++i) rels.push_back("P" + std::to_string(i));
  const std::array<double, 3> thirds{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto parts = split_relations(rels, {}, thirds, 1);
  for (const auto& p : parts) CHECK(p.size() == 3);

  RelationTypeMap one_type;
  for (const auto& r : rels) one_type[r] = "T";
  const auto lumped = split_relations(rels, one_type, thirds, 1);
  std::vector<std::size_t> sizes{lumped[0].size(), lumped[1].size(), lumped[2].size()};
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{0, 0, 9});

  RelationTypeMap pairs;
  for (int i = 0; i < 9; ++i) pairs[rels[i]] = "T" + std::to_string(i / 2);
  const auto a = split_relations(rels, pairs, {0.5, 0.25, 0.25}, 7);
  CHECK(a == split_relations(rels, pairs, {0.5, 0.25, 0.25}, 7));
  for (const auto& part : a) {
    for (const auto& r : part) {
      for (const auto& other : rels) {
        if (pairs[other] == pairs[r]) CHECK(std::find(part.begin(), part.end(), other) != part.end());
      }
    }
  }
}

TEST_CASE("k-core") {
  const std::vector<StringTriple> chain{{"a", "r", "b"}, {"b", "r", "c"}};
  CHECK(kcore(chain, 2).empty());
  CHECK(kcore(chain, 1) == chain);
  const std::vector<StringTriple> triangle{{"a", "r", "b"}, {"b", "r", "c"}, {"c", "r", "a"}};
  CHECK(kcore(triangle, 2) == triangle);
  CHECK_THROWS_AS(kcore(triangle, 0), Error);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = testing::random_triples(seed, 40, 3, 150);
    for (std::size_t k : {2u, 4u, 6u}) {
      const auto core = kcore(t, k);
      CHECK(subset_of(core, t));
      for (const auto& [e, n] : testing::entity_occurrences(core)) CHECK(n >= k);
    }
  }
}

TEST_CASE("skew filter") {
  std::vector<StringTriple> hub;
  for (int i = 0; i < 6; ++i) hub.push_back({"hub", "P", "t" + std::to_string(i)});
  CHECK(skew_filter(hub, 0.5).empty());
  const auto distinct = relation_triples("Q", 6);
  CHECK(skew_filter(distinct, 0.5) == distinct);

  std::vector<StringTriple> boundary;
  for (int i = 0; i < 10; ++i) boundary.push_back({"h" + std::to_string(i), "B", i < 5 ? "x" : "t" + std::to_string(i)});
  CHECK(skew_filter(boundary, 0.5).empty());
  boundary[0].tail = "t0";
  CHECK(skew_filter(boundary, 0.5) == boundary);
}

TEST_CASE("pipeline on a small raw set keeps every invariant") {
  const auto raw = testing::raw_world(3, 200);
  GenConfig config;
  config.k = {2, 2, 2};
  config.ratios = {0.5, 0.25, 0.25};
  const auto out = generate_dataset(raw.triples, {}, {}, config);

  std::array<std::set<std::string>, 3> rels;
  for (int p = 0; p < 3; ++p) {
    CHECK_FALSE(out.parts[p].empty());
    rels[p] = relations_of(out.parts[p]);
    CHECK(subset_of(out.after_kcore[p], raw.triples));
    CHECK(subset_of(out.parts[p], out.after_kcore[p]));
    for (const auto& [e, n] : testing::entity_occurrences(out.after_kcore[p])) CHECK(n >= 2);
    CHECK(testing::max_position_share(out.parts[p]).first < config.skew_threshold);
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      std::vector<std::string> shared;
      std::set_intersection(rels[a].begin(), rels[a].end(), rels[b].begin(), rels[b].end(),
                            std::back_inserter(shared));
      CHECK(shared.empty());
    }
  }
  CHECK(classify_setting(out.to_splits()) == InductiveSetting::truly_inductive);
  CHECK(out.stats.contains("rare_relation_filter"));
  CHECK(out.stats["parts"]["train"].contains("kcore"));

  const auto again = generate_dataset(raw.triples, {}, {}, config);
  CHECK(again.parts == out.parts);

  const auto audit = audit_splits(out.to_splits(), AuditLimits{std::array<std::size_t, 3>{1, 1, 1}, 0.5});
  CHECK(audit["ok"] == true);
  CHECK(audit["setting"] == "truly_inductive");
}

TEST_CASE("labels are enforced when text records are given") {
  const auto raw = testing::raw_world(5, 10000);
  const GenConfig config;
  std::set<std::string> ids;
  for (const auto& t : raw.triples) ids.insert({t.head, t.relation, t.tail});
  std::vector<TextRecord> texts;
  for (const auto& id : ids) {
    if (id != "Q0" && id != "P0") texts.push_back({id, "label " + id, ""});
  }
  const auto out = generate_dataset(raw.triples, {}, texts, config);
  for (const auto& part : out.parts) {
    for (const auto& t : part) {
      CHECK(t.head != "Q0");
      CHECK(t.tail != "Q0");
      CHECK(t.relation != "P0");
    }
  }
}

TEST_CASE("an empty part aborts generation") {
  const auto raw = testing::raw_world(2, 1000);
  RelationTypeMap one_type;
  for (const auto& t : raw.triples) one_type[t.relation] = "T";
  GenConfig config;
  config.k = {1, 1, 1};
  CHECK_THROWS_AS(generate_dataset(raw.triples, one_type, {}, config), Error);
}

TEST_CASE("generation config validation") {
  GenConfig c;
  CHECK_NOTHROW(c.validate());
  c.ratios = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(c.validate(), Error);
  c = GenConfig{};
  c.inverse_threshold = 0.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = GenConfig{};
  c.k = {10, 0, 5};
  CHECK_THROWS_AS(c.validate(), Error);
  c = GenConfig{};
  c.skew_threshold = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}
