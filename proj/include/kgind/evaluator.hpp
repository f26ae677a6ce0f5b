#pragma once

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "kgind/kg.hpp"
#include "kgind/model.hpp"

namespace kgind {

enum class QueryDirection { head, tail };

struct RankQuery {
  Triple triple;
  QueryDirection direction = QueryDirection::tail;
};

/// Known true triples from train, valid and test, keyed for both query directions.
class FilterIndex {
 public:
  FilterIndex() = default;
  explicit FilterIndex(const SplitDataset& splits);
  void add(const KnowledgeGraph& graph);

  /// True when `candidate` completes the query's open slot to a known triple.
  bool is_known(const RankQuery& query, EntityId candidate) const;

 private:
  static std::uint64_t key(RelationId r, EntityId e) {
    return (static_cast<std::uint64_t>(r.value) << 32) | e.value;
  }
  std::unordered_map<std::uint64_t, std::unordered_set<std::uint32_t>> tails_;  // (r, h) -> tails
  std::unordered_map<std::uint64_t, std::unordered_set<std::uint32_t>> heads_;  // (r, t) -> heads
};

enum class CandidatePolicy {
  all_entities,     // every entity in the union of the split vocabularies
  eval_split_only,  // entities of the evaluated split
};
std::string_view to_string(CandidatePolicy policy);
CandidatePolicy candidate_policy_from_string(std::string_view text);

std::vector<EntityId> candidate_pool(const SplitDataset& splits, SplitRole split, CandidatePolicy policy);

/// 1 + #(scores strictly above the target) + #(ties other than the target) / 2,
/// skipping candidates flagged in `excluded`.
double rank_among(std::span<const double> scores, std::size_t target, std::span<const bool> excluded = {});

/// Scores every candidate in the query's open slot; with a filter, known
/// true triples other than the target are skipped.
double rank_query(const Encoder& encoder, const RankQuery& query, std::span<const EntityId> candidates,
                  const FilterIndex* filter);

struct Metrics {
  std::size_t queries = 0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
};
Metrics summarize(std::span<const double> ranks);

struct RankingReport {
  std::vector<RankQuery> queries;
  std::vector<double> ranks;  // aligned with queries
  Metrics metrics;
  std::string candidate_policy;
  std::size_t candidate_count = 0;
  std::string setting;
  std::string split;
  std::map<std::string, Metrics> per_relation;

  nlohmann::json to_json(bool include_per_relation = false) const;
};

struct EvalOptions {
  SplitRole split = SplitRole::test;
  CandidatePolicy policy = CandidatePolicy::all_entities;
  bool filtered = true;
  unsigned threads = 1;
};

/// Head and tail query per triple of the evaluated split.
RankingReport evaluate(const Encoder& encoder, const SplitDataset& splits, const EvalOptions& options = {});

/// Recomputes every rank directly: encodes each candidate triple from raw
/// features and filters by scanning all split triples.
RankingReport brute_force_oracle(const Encoder& encoder, const SplitDataset& splits,
                                 const EvalOptions& options = {});

/// Expected MRR of a scorer that ranks candidates uniformly at random, under
/// the same candidate pool and filtering: mean over queries of H_n / n.
double random_baseline_mrr(const SplitDataset& splits, const EvalOptions& options = {});

}  // namespace kgind
