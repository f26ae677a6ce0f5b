#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "kgind/kg.hpp"
#include "synthetic.hpp"

using namespace kgind;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("kgind_unit_" + name);
  std::ofstream(path) << content;
  return path;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse a single triple line") {
  const auto file = parse_triples("Q1\tP10\tQ2\n");
  REQUIRE(file.triples.size() == 1);
  CHECK(file.triples[0] == StringTriple{"Q1", "P10", "Q2"});
  CHECK(file.line_count == 1);
  CHECK(file.duplicate_count == 0);
}

TEST_CASE("empty triple file gives no triples") {
  const auto path = temp_file("empty.tsv", "");
  const auto file = load_triples(path);
  CHECK(file.triples.empty());
  CHECK(file.duplicate_count == 0);
}

TEST_CASE("duplicates are kept on load and counted") {
  const auto file = parse_triples("a\tr\tb\nb\tr\tc\na\tr\tb\n");
  CHECK(file.triples.size() == 3);
  CHECK(file.duplicate_count == 1);
}

TEST_CASE("blank lines are skipped, CRLF is tolerated") {
  const auto file = parse_triples("a\tr\tb\r\n\n  \nb\tr\tc\n");
  CHECK(file.triples.size() == 2);
  CHECK(file.triples[0].tail == "b");
}

TEST_CASE("malformed lines name the line number") {
  CHECK(error_of([] { parse_triples("a\tr\tb\na\tr\n", "x.tsv"); }).find("x.tsv:2") != std::string::npos);
  CHECK(error_of([] { parse_triples("a\tr\tb\tc\n", "x.tsv"); }).find("x.tsv:1") != std::string::npos);
  CHECK(error_of([] { parse_triples("a\t\tb\n", "x.tsv"); }).find("x.tsv:1") != std::string::npos);
  CHECK_THROWS_AS(load_triples("/nonexistent/kgind/file.tsv"), Error);
}

TEST_CASE("triple file write/load round trip") {
  const std::vector<StringTriple> triples{{"a", "r", "b"}, {"ü", "r2", "x y"}};
  const auto path = std::filesystem::temp_directory_path() / "kgind_unit_roundtrip.tsv";
  write_triples(path, triples);
  CHECK(load_triples(path).triples == triples);
}

TEST_CASE("build_graph interns in first-appearance order") {
  const std::vector<StringTriple> one{{"a", "r", "b"}};
  const auto g = build_graph(one);
  CHECK(g.vocab().entities.size() == 2);
  CHECK(g.vocab().relations.size() == 1);
  CHECK(g.size() == 1);
  CHECK(g.vocab().entities.name(0) == "a");
  CHECK(g.vocab().entities.find("b") == 1u);
  CHECK_FALSE(g.vocab().entities.find("c").has_value());
}

TEST_CASE("five-triple example graph shape") {
  const std::vector<StringTriple> t{
      {"e1", "r1", "e1"}, {"e1", "r2", "e2"}, {"e1", "r4", "e4"}, {"e2", "r3", "e3"}, {"e2", "r2", "e4"}};
  const auto g = build_graph(t);
  CHECK(g.vocab().entities.size() == 4);
  CHECK(g.vocab().relations.size() == 4);
  CHECK(g.size() == 5);
}

TEST_CASE("build_graph drops repeated triples") {
  const std::vector<StringTriple> t{{"a", "r", "b"}, {"a", "r", "b"}, {"b", "r", "a"}};
  const auto g = build_graph(t);
  CHECK(g.size() == 2);
  CHECK(g.duplicates_removed() == 1);
}

TEST_CASE("graph indexes are consistent with the triple list") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto raw = testing::random_triples(seed, 12, 4, 80);
    const auto g = build_graph(raw);
    std::size_t total = 0;
    for (auto r : g.relation_ids()) {
      std::uint64_t heads = 0;
      std::uint64_t tails = 0;
      for (const auto& [e, c] : g.head_counts(r)) heads += c;
      for (const auto& [e, c] : g.tail_counts(r)) tails += c;
      CHECK(heads == g.triples_of(r).size());
      CHECK(tails == g.triples_of(r).size());
      total += g.triples_of(r).size();
    }
    CHECK(total == g.size());
    // Round trip as a set.
    const std::set<StringTriple> in(raw.begin(), raw.end());
    const auto out_list = g.to_strings();
    CHECK(std::set<StringTriple>(out_list.begin(), out_list.end()) == in);
    CHECK(out_list.size() == in.size());
  }
}

TEST_CASE("classify_setting") {
  const std::vector<StringTriple> train{{"a", "r1", "b"}, {"b", "r2", "c"}};
  SUBCASE("seen everything") {
    const std::vector<StringTriple> test{{"a", "r2", "c"}};
    CHECK(classify_setting(build_splits(train, {}, test)) == InductiveSetting::transductive);
  }
  SUBCASE("one new endpoint") {
    const std::vector<StringTriple> test{{"a", "r2", "z"}, {"a", "r1", "c"}};
    CHECK(classify_setting(build_splits(train, {}, test)) == InductiveSetting::semi_inductive);
  }
  SUBCASE("both endpoints new everywhere") {
    const std::vector<StringTriple> test{{"x", "r2", "y"}, {"y", "r1", "z"}};
    CHECK(classify_setting(build_splits(train, {}, test)) == InductiveSetting::fully_inductive);
  }
  SUBCASE("disjoint relations") {
    const std::vector<StringTriple> test{{"a", "r9", "b"}};
    CHECK(classify_setting(build_splits(train, {}, test)) == InductiveSetting::truly_inductive);
  }
  SUBCASE("an unseen relation in valid also counts") {
    const std::vector<StringTriple> valid{{"a", "r9", "b"}};
    const std::vector<StringTriple> test{{"a", "r2", "c"}};
    CHECK(classify_setting(build_splits(train, valid, test)) == InductiveSetting::truly_inductive);
  }
  SUBCASE("empty test split") {
    CHECK_THROWS_AS(classify_setting(build_splits(train, {}, {})), Error);
  }
  SUBCASE("listing order does not matter") {
    std::vector<StringTriple> test{{"x", "r2", "y"}, {"a", "r1", "z"}, {"a", "r2", "c"}};
    const auto expected = classify_setting(build_splits(train, {}, test));
    CHECK(expected == InductiveSetting::semi_inductive);
    std::reverse(test.begin(), test.end());
    auto train_rev = train;
    std::reverse(train_rev.begin(), train_rev.end());
    CHECK(classify_setting(build_splits(train_rev, {}, test)) == expected);
  }
}

TEST_CASE("split vocabularies are exactly the ids in each split") {
  const std::vector<StringTriple> train{{"a", "r1", "b"}};
  const std::vector<StringTriple> valid{{"c", "r2", "d"}};
  const std::vector<StringTriple> test{{"a", "r3", "e"}};
  const auto s = build_splits(train, valid, test);
  CHECK(s.vocab->entities.size() == 5);
  CHECK(s.train.entity_ids().size() == 2);
  CHECK(s.valid.entity_ids().size() == 2);
  CHECK(s.test.entity_ids().size() == 2);
  CHECK(s.test.has_entity(EntityId{0}));
  CHECK_FALSE(s.test.has_entity(EntityId{1}));
  CHECK(s.train.role() == SplitRole::train);
  CHECK(s.test.role() == SplitRole::test);
}

TEST_CASE("text records") {
  const auto path = temp_file("text.tsv", "Q1\tChristopher Nolan\tfilm director\nP1\tdirected by\n\n");
  const auto records = load_text_records(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].label == "Christopher Nolan");
  CHECK(records[0].description == "film director");
  CHECK(records[1].description.empty());
  const auto bad = temp_file("bad_text.tsv", "Q1\n");
  CHECK_THROWS_AS(load_text_records(bad), Error);
}
