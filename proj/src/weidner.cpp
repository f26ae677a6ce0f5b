#include "kgind/weidner.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace kgind {

RelationNetwork::RelationNetwork(std::vector<std::string> node_names, std::vector<Edge> edges)
    : names_(std::move(node_names)), edges_(std::move(edges)) {
  const auto n = static_cast<std::uint32_t>(names_.size());
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.source, a.target) < std::tie(b.source, b.target);
  });
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (e.source >= n || e.target >= n) throw Error("network edge references unknown node");
    if (e.weight == 0) throw Error("network edge with zero weight");
    if (i > 0 && edges_[i - 1].source == e.source && edges_[i - 1].target == e.target) {
      throw Error("duplicate network edge " + names_[e.source] + " -> " + names_[e.target]);
    }
  }
  offsets_.assign(n + 1, 0);
  for (const auto& e : edges_) ++offsets_[e.source + 1];
  for (std::uint32_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
}

std::span<const RelationNetwork::Edge> RelationNetwork::out_edges(std::uint32_t node) const {
  if (node + 1 >= offsets_.size()) return {};
  return std::span<const Edge>(edges_).subspan(offsets_[node], offsets_[node + 1] - offsets_[node]);
}

bool RelationNetwork::has_edge(std::uint32_t source, std::uint32_t target) const {
  return weight(source, target) != 0;
}

std::uint64_t RelationNetwork::weight(std::uint32_t source, std::uint32_t target) const {
  const auto out = out_edges(source);
  auto it = std::lower_bound(out.begin(), out.end(), target,
                             [](const Edge& e, std::uint32_t t) { return e.target < t; });
  return (it != out.end() && it->target == target) ? it->weight : 0;
}

std::uint64_t RelationNetwork::fingerprint() const {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  auto feed = [&h](std::uint64_t v) { h = mix_seed(h ^ v); };
  for (const auto& name : names_) {
    for (char c : name) feed(static_cast<unsigned char>(c));
    feed(0xffff);
  }
  for (const auto& e : edges_) {
    feed(e.source);
    feed(e.target);
    feed(e.weight);
  }
  return h;
}

namespace {

using NamedEdges = std::map<std::pair<std::string, std::string>, std::uint64_t>;

NamedEdges named_edges(const RelationNetwork& network) {
  NamedEdges out;
  for (const auto& e : network.edges()) out[{network.name(e.source), network.name(e.target)}] = e.weight;
  return out;
}

std::vector<std::string> relation_names(const KnowledgeGraph& graph) {
  std::vector<std::string> names;
  names.reserve(graph.relation_ids().size());
  for (RelationId r : graph.relation_ids()) names.push_back(graph.relation_name(r));
  return names;
}

std::unordered_map<std::uint32_t, std::uint32_t> node_index(const KnowledgeGraph& graph) {
  std::unordered_map<std::uint32_t, std::uint32_t> out;
  const auto rels = graph.relation_ids();
  for (std::uint32_t i = 0; i < rels.size(); ++i) out.emplace(rels[i].value, i);
  return out;
}

constexpr std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

bool RelationNetwork::same_edges(const RelationNetwork& other) const {
  return named_edges(*this) == named_edges(other);
}

RelationNetwork build_network(const KnowledgeGraph& graph) {
  const auto nodes = node_index(graph);
  const auto n = static_cast<std::uint32_t>(nodes.size());

  // Position counts regrouped by entity: (node, #as head, #as tail).
  struct Occurrence {
    std::uint32_t node;
    std::uint64_t heads;
    std::uint64_t tails;
  };
  std::unordered_map<std::uint32_t, std::vector<Occurrence>> by_entity;
  for (RelationId r : graph.relation_ids()) {
    const std::uint32_t node = nodes.at(r.value);
    for (const auto& [e, c] : graph.head_counts(r)) by_entity[e].push_back({node, c, 0});
    for (const auto& [e, c] : graph.tail_counts(r)) {
      auto& occ = by_entity[e];
      if (!occ.empty() && occ.back().node == node) {
        occ.back().tails += c;
      } else {
        occ.push_back({node, 0, c});
      }
    }
  }

  struct PairCounts {
    std::uint64_t chain = 0;      // first tail == second head
    std::uint64_t same_head = 0;  // h1 == h2
    std::uint64_t same_tail = 0;  // t1 == t2
    std::uint64_t same_both = 0;  // h1 == h2 and t1 == t2
  };
  std::unordered_map<std::uint64_t, PairCounts> acc;
  for (const auto& [entity, occ] : by_entity) {
    for (const auto& x : occ) {
      for (const auto& y : occ) {
        const std::uint64_t chain = x.tails * y.heads;
        const std::uint64_t heads = x.heads * y.heads;
        const std::uint64_t tails = x.tails * y.tails;
        if (chain == 0 && heads == 0 && tails == 0) continue;
        auto& c = acc[pair_key(x.node, y.node)];
        c.chain += chain;
        c.same_head += heads;
        c.same_tail += tails;
      }
    }
  }

  // Pairs of distinct relations linking the same (head, tail); needed to avoid
  // double counting in the h1 == h2 OR t1 == t2 condition.
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_endpoints;
  std::vector<std::uint64_t> self_loops(n, 0);
  for (const auto& t : graph.triples()) {
    const std::uint32_t node = nodes.at(t.relation.value);
    by_endpoints[pair_key(t.head.value, t.tail.value)].push_back(node);
    if (t.head == t.tail) ++self_loops[node];
  }
  for (const auto& [key, rels] : by_endpoints) {
    for (auto a : rels) {
      for (auto b : rels) {
        if (a != b) ++acc[pair_key(a, b)].same_both;
      }
    }
  }

  std::vector<RelationNetwork::Edge> edges;
  edges.reserve(acc.size());
  const auto rels = graph.relation_ids();
  for (const auto& [key, c] : acc) {
    const auto a = static_cast<std::uint32_t>(key >> 32);
    const auto b = static_cast<std::uint32_t>(key & 0xffffffffULL);
    std::uint64_t weight = 0;
    if (a != b) {
      weight = c.chain + c.same_head + c.same_tail - c.same_both;
    } else {
      const std::uint64_t size = graph.triples_of(rels[a]).size();
      // Self-pairs: drop a self-loop triple chained with itself, and pairs
      // sharing both endpoints (only the triple with itself, after dedup).
      weight = (c.chain - self_loops[a]) + (c.same_head - size) + (c.same_tail - size);
    }
    if (weight > 0) edges.push_back({a, b, weight});
  }
  return RelationNetwork(relation_names(graph), std::move(edges));
}

RelationNetwork naive_network_oracle(const KnowledgeGraph& graph) {
  const auto nodes = node_index(graph);
  const auto rels = graph.relation_ids();
  const auto triples = graph.triples();
  std::vector<RelationNetwork::Edge> edges;

  for (std::uint32_t ia = 0; ia < rels.size(); ++ia) {
    for (std::uint32_t ib = ia; ib < rels.size(); ++ib) {
      const RelationId ra = rels[ia];
      const RelationId rb = rels[ib];
      if (ra != rb) {
        std::uint64_t direct_ab = 0;
        std::uint64_t direct_ba = 0;
        std::uint64_t indirect = 0;
        for (const auto& t1 : triples) {
          if (t1.relation != ra) continue;
          for (const auto& t2 : triples) {
            if (t2.relation != rb) continue;
            if (t1.tail == t2.head) ++direct_ab;
            if (t1.head == t2.tail) ++direct_ba;
            if (t1.head == t2.head || t1.tail == t2.tail) ++indirect;
          }
        }
        const std::uint64_t w_ab = direct_ab + indirect;
        const std::uint64_t w_ba = direct_ba + indirect;
        if (w_ab > 0) edges.push_back({nodes.at(ra.value), nodes.at(rb.value), w_ab});
        if (w_ba > 0) edges.push_back({nodes.at(rb.value), nodes.at(ra.value), w_ba});
      } else {
        std::uint64_t direct = 0;
        std::uint64_t indirect = 0;
        for (const auto& t1 : triples) {
          if (t1.relation != ra) continue;
          for (const auto& t2 : triples) {
            if (t2.relation != ra) continue;
            if (t1.tail == t2.head && (t1.head != t1.tail || t1.head != t2.tail)) ++direct;
            if ((t1.head == t2.head && t1.tail != t2.tail) ||
                (t1.tail == t2.tail && t1.head != t2.head)) {
              ++indirect;
            }
          }
        }
        if (direct + indirect > 0) {
          edges.push_back({nodes.at(ra.value), nodes.at(ra.value), direct + indirect});
        }
      }
    }
  }
  return RelationNetwork(relation_names(graph), std::move(edges));
}

std::string format_network(const RelationNetwork& network) {
  std::vector<std::tuple<const std::string*, const std::string*, std::uint64_t>> rows;
  rows.reserve(network.edge_count());
  for (const auto& e : network.edges()) {
    rows.emplace_back(&network.name(e.source), &network.name(e.target), e.weight);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    if (*std::get<0>(x) != *std::get<0>(y)) return *std::get<0>(x) < *std::get<0>(y);
    return *std::get<1>(x) < *std::get<1>(y);
  });
  std::string out;
  for (const auto& [s, t, w] : rows) {
    out += *s;
    out += '\t';
    out += *t;
    out += '\t';
    out += std::to_string(w);
    out += '\n';
  }
  return out;
}

void write_network(const RelationNetwork& network, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << format_network(network);
  if (!out) throw Error("write failed: " + path.string());
}

RelationNetwork parse_network(std::string_view text, std::string_view source_name) {
  Vocabulary names;
  std::vector<RelationNetwork::Edge> edges;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fail = [&] {
      return Error(std::string(source_name) + ":" + std::to_string(line_no) +
                   ": expected source<TAB>target<TAB>weight");
    };
    const auto t1 = line.find('\t');
    if (t1 == std::string_view::npos) throw fail();
    const auto t2 = line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos) throw fail();
    const auto src = line.substr(0, t1);
    const auto dst = line.substr(t1 + 1, t2 - t1 - 1);
    const auto wtxt = line.substr(t2 + 1);
    std::uint64_t w = 0;
    auto [ptr, ec] = std::from_chars(wtxt.data(), wtxt.data() + wtxt.size(), w);
    if (src.empty() || dst.empty() || ec != std::errc() || ptr != wtxt.data() + wtxt.size() || w == 0) {
      throw fail();
    }
    const auto s = names.intern(src);
    const auto d = names.intern(dst);
    edges.push_back({s, d, w});
  }
  return RelationNetwork(names.names(), std::move(edges));
}

RelationNetwork read_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_network(buffer.str(), path.string());
}

}  // namespace kgind
