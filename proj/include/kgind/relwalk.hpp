#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "kgind/feature_matrix.hpp"
#include "kgind/weidner.hpp"

namespace kgind {

struct WalkConfig {
  std::size_t num_walks_per_node = 10;
  std::size_t walk_length = 10;
  std::size_t window_size = 10;
  double p = 1.0;  // return parameter
  double q = 1.0;  // in-out parameter
  std::size_t epochs = 100;
  std::size_t dim = 768;
  std::size_t negatives_per_positive = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
  unsigned threads = 1;  // >1 enables asynchronous skip-gram updates

  void validate() const;
};

void to_json(nlohmann::json& j, const WalkConfig& c);
void from_json(const nlohmann::json& j, WalkConfig& c);

/// Bias factor for a candidate next node given the previously visited node:
/// 1/p when returning to prev, 1 when prev links directly to the candidate,
/// 1/q otherwise.
double walk_bias(const RelationNetwork& network, std::uint32_t prev, std::uint32_t candidate,
                 double p, double q);

/// Next-hop probabilities aligned with network.out_edges(current). Without a
/// previous node the probabilities are proportional to edge weight.
/// Throws when `current` has no out-edges.
std::vector<double> transition_distribution(const RelationNetwork& network,
                                            std::optional<std::uint32_t> prev,
                                            std::uint32_t current, double p, double q);

/// Draws one next node from transition_distribution.
std::uint32_t sample_next(const RelationNetwork& network, std::optional<std::uint32_t> prev,
                          std::uint32_t current, double p, double q, Rng& rng);

struct WalkCorpus {
  std::vector<std::vector<std::uint32_t>> walks;
  std::vector<std::uint32_t> isolated;  // nodes without out-edges (no walks started)
};

/// Walks are ordered round-major: round 0 for every start node, then round 1,
/// and so on. Each walk uses its own generator seeded from (seed, node,
/// round), so the corpus does not depend on the thread count.
WalkCorpus generate_walks(const RelationNetwork& network, const WalkConfig& config);

struct SkipGramResult {
  std::vector<double> center;  // node_count x dim
  std::vector<double> epoch_loss;
};

/// Skip-gram with negative sampling over walk sentences. Centers start
/// uniform in [-0.5/dim, 0.5/dim], contexts at zero; negatives come from the
/// unigram^0.75 distribution of the corpus.
SkipGramResult train_skipgram(const WalkCorpus& corpus, std::size_t node_count,
                              const WalkConfig& config);

struct NodeEmbeddings {
  FeatureMatrix vectors;  // one row per network node, source = graph
  std::vector<std::string> fallback;  // nodes given the zero vector
  std::uint64_t network_fingerprint = 0;
  WalkConfig config;
  std::vector<double> epoch_loss;
};

/// Walks plus skip-gram. Nodes that appear in no walk get the zero vector and
/// a warning.
NodeEmbeddings embed_relations(const RelationNetwork& network, const WalkConfig& config);

}  // namespace kgind
