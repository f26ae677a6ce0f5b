#include <filesystem>
#include <map>
#include <random>

#include "doctest.h"
#include "kgind/weidner.hpp"
#include "synthetic.hpp"

using namespace kgind;

namespace {

const std::vector<StringTriple> kFiveTriples{
    {"e1", "r1", "e1"}, {"e1", "r2", "e2"}, {"e1", "r4", "e4"}, {"e2", "r3", "e3"}, {"e2", "r2", "e4"}};

std::map<std::pair<std::string, std::string>, std::uint64_t> named_edges(const RelationNetwork& n) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> out;
  for (const auto& e : n.edges()) out[{n.name(e.source), n.name(e.target)}] = e.weight;
  return out;
}

// Hand count of t1 = h2 links from relation a to relation b (a != b).
std::uint64_t direct_links(const std::vector<StringTriple>& triples, const std::string& a, const std::string& b) {
  std::uint64_t n = 0;
  for (const auto& x : triples) {
    for (const auto& y : triples) {
      if (x.relation == a && y.relation == b && x.tail == y.head) ++n;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("five-triple example network") {
  const auto g = build_graph(kFiveTriples);
  const std::map<std::pair<std::string, std::string>, std::uint64_t> expected{
      {{"r1", "r2"}, 2}, {{"r1", "r4"}, 2}, {{"r2", "r1"}, 1}, {{"r2", "r2"}, 1}, {{"r2", "r3"}, 2},
      {{"r2", "r4"}, 2}, {{"r3", "r2"}, 1}, {{"r4", "r1"}, 1}, {{"r4", "r2"}, 2}};
  CHECK(named_edges(build_network(g)) == expected);
  CHECK(named_edges(naive_network_oracle(g)) == expected);
}

TEST_CASE("a single triple has no edges") {
  const std::vector<StringTriple> t{{"e1", "r1", "e2"}};
  const auto n = build_network(build_graph(t));
  CHECK(n.node_count() == 1);
  CHECK(n.edge_count() == 0);
}

TEST_CASE("shared head gives one edge each way") {
  const std::vector<StringTriple> t{{"a", "r1", "b"}, {"a", "r2", "c"}};
  const auto edges = named_edges(build_network(build_graph(t)));
  const std::map<std::pair<std::string, std::string>, std::uint64_t> expected{{{"r1", "r2"}, 1}, {{"r2", "r1"}, 1}};
  CHECK(edges == expected);
}

TEST_CASE("relations sharing no entity stay isolated") {
  const std::vector<StringTriple> t{{"a", "r1", "b"}, {"c", "r2", "d"}};
  const auto n = build_network(build_graph(t));
  CHECK(n.node_count() == 2);
  CHECK(n.edge_count() == 0);
}

TEST_CASE("empty graph gives an empty network") {
  const KnowledgeGraph g;
  CHECK(naive_network_oracle(g).edge_count() == 0);
  CHECK(build_network(g).node_count() == 0);
}

TEST_CASE("efficient build equals the literal oracle on random graphs") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto t = testing::random_triples(seed, 15, 5, 100);
    const auto g = build_graph(t);
    const auto fast = build_network(g);
    const auto slow = naive_network_oracle(g);
    CHECK(fast.same_edges(slow));
    CHECK(fast.fingerprint() == slow.fingerprint());
  }
}

TEST_CASE("indirect contribution is symmetric") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = build_graph(testing::random_triples(seed, 10, 4, 60));
    const auto t = g.to_strings();
    const auto n = build_network(g);
    const auto edges = named_edges(n);
    auto weight = [&](const std::string& a, const std::string& b) {
      const auto it = edges.find({a, b});
      return it == edges.end() ? std::uint64_t{0} : it->second;
    };
    for (const auto& a : n.names()) {
      for (const auto& b : n.names()) {
        if (a == b) continue;
        CHECK(weight(a, b) - direct_links(t, a, b) == weight(b, a) - direct_links(t, b, a));
      }
    }
  }
}

TEST_CASE("entity relabeling leaves the network unchanged") {
  const auto t = testing::random_triples(7, 12, 4, 70);
  std::vector<int> perm(12);
  for (int i = 0; i < 12; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  auto relabeled = t;
  for (auto& x : relabeled) {
    x.head = "n" + std::to_string(perm[std::stoi(x.head.substr(1))]);
    x.tail = "n" + std::to_string(perm[std::stoi(x.tail.substr(1))]);
  }
  CHECK(build_network(build_graph(t)).same_edges(build_network(build_graph(relabeled))));
}

TEST_CASE("network file round trip") {
  const auto dir = std::filesystem::temp_directory_path();
  SUBCASE("five-triple example") {
    const auto n = build_network(build_graph(kFiveTriples));
    write_network(n, dir / "kgind_unit_five.tsv");
    const auto back = read_network(dir / "kgind_unit_five.tsv");
    CHECK(back.same_edges(n));
    CHECK(back.edge_count() == 9);
  }
  SUBCASE("empty") {
    write_network(RelationNetwork(), dir / "kgind_unit_empty_net.tsv");
    CHECK(read_network(dir / "kgind_unit_empty_net.tsv").edge_count() == 0);
  }
  SUBCASE("1000 random edges") {
    std::mt19937_64 rng(11);
    std::vector<std::string> names;
    for (int i = 0; i < 40; ++i) names.push_back("P" + std::to_string(i));
    std::vector<RelationNetwork::Edge> edges;
    for (std::uint32_t s = 0; s < 40 && edges.size() < 1000; ++s) {
      for (std::uint32_t t = 0; t < 40 && edges.size() < 1000; ++t) {
        edges.push_back({s, t, 1 + rng() % 1000000000000ULL});
      }
    }
    const RelationNetwork n(names, edges);
    const auto back = parse_network(format_network(n));
    CHECK(back.edge_count() == 1000);
    CHECK(back.same_edges(n));
  }
}

TEST_CASE("malformed network files are rejected") {
  CHECK_THROWS_AS(parse_network("a\tb\n"), Error);
  CHECK_THROWS_AS(parse_network("a\tb\t0\n"), Error);
  CHECK_THROWS_AS(parse_network("a\tb\tx\n"), Error);
  CHECK_THROWS_AS(parse_network("a\tb\t1\na\tb\t2\n"), Error);
  CHECK_THROWS_AS(read_network("/nonexistent/kgind/net.tsv"), Error);
}
