#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kgind/kg.hpp"

namespace kgind {

/// Weighted directed relation-relation network. Nodes are relations of the
/// source graph (local indices 0..n-1, with names); edges are sorted by
/// (source, target) and every weight is at least 1.
class RelationNetwork {
 public:
  struct Edge {
    std::uint32_t source = 0;
    std::uint32_t target = 0;
    std::uint64_t weight = 0;

    bool operator==(const Edge&) const = default;
  };

  RelationNetwork() = default;
  /// Edges may arrive in any order; duplicates (same source and target) are
  /// rejected, as are zero weights.
  RelationNetwork(std::vector<std::string> node_names, std::vector<Edge> edges);

  std::size_t node_count() const { return names_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::uint32_t node) const { return names_.at(node); }
  std::span<const Edge> edges() const { return edges_; }

  /// Out-edges of `node`, sorted by target.
  std::span<const Edge> out_edges(std::uint32_t node) const;
  bool has_edge(std::uint32_t source, std::uint32_t target) const;
  /// 0 when the edge is absent.
  std::uint64_t weight(std::uint32_t source, std::uint32_t target) const;

  /// Stable content hash of names and edges.
  std::uint64_t fingerprint() const;

  /// Edge sets compared by node name, so networks built over different
  /// vocabularies compare equal when they describe the same relations.
  bool same_edges(const RelationNetwork& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;  // CSR: out-edges of node i in [offsets_[i], offsets_[i+1])
};

/// Builds the network from per-(relation, entity) position counts. Node i
/// corresponds to graph.relation_ids()[i].
RelationNetwork build_network(const KnowledgeGraph& graph);

/// Literal quadratic transcription over ordered triple pairs. Test oracle for
/// build_network; only suitable for small graphs.
RelationNetwork naive_network_oracle(const KnowledgeGraph& graph);

/// Edge list: `source<TAB>target<TAB>weight`, lines sorted by (source, target) name.
void write_network(const RelationNetwork& network, const std::filesystem::path& path);
std::string format_network(const RelationNetwork& network);
RelationNetwork read_network(const std::filesystem::path& path);
RelationNetwork parse_network(std::string_view text, std::string_view source_name = "<memory>");

}  // namespace kgind
