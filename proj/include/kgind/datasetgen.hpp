#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "kgind/kg.hpp"

namespace kgind {

/// relation id -> type id. Relations missing from the map form singleton types.
using RelationTypeMap = std::unordered_map<std::string, std::string>;

RelationTypeMap load_relation_types(const std::filesystem::path& path);

struct GenConfig {
  std::size_t min_triples = 3;                     // N
  std::array<std::size_t, 3> k{10, 6, 5};          // k-core per part
  std::array<double, 3> ratios{0.5, 0.25, 0.25};   // relation split ratios
  double skew_threshold = 0.5;
  double inverse_threshold = 0.9;                  // theta
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const GenConfig& c);
void from_json(const nlohmann::json& j, GenConfig& c);

/// Keeps the triples of relations occurring in at least `min_triples` triples.
std::vector<StringTriple> filter_rare_relations(std::span<const StringTriple> triples, std::size_t min_triples);

/// Relations to drop as inverses or duplicates of a larger relation. r2 is
/// an inverse (duplicate) of r1 when at least `theta` of r2's triples (h, t)
/// have (t, r1, h) (resp. (h, r1, t)) present and |T_r1| >= |T_r2|. The smaller
/// of each pair is dropped; on equal sizes the lexicographically larger id.
std::unordered_set<std::string> detect_inverse_and_duplicates(std::span<const StringTriple> triples, double theta);

/// Partitions relations into three parts, keeping each type whole. Types are
/// shuffled with the seed, then placed largest first into the part furthest
/// below its target size.
std::array<std::vector<std::string>, 3> split_relations(std::span<const std::string> relations,
                                                        const RelationTypeMap& types,
                                                        const std::array<double, 3>& ratios, std::uint64_t seed);

/// Iteratively removes entities occurring in fewer than k triples (and their
/// triples) until every remaining entity occurs in at least k triples.
std::vector<StringTriple> kcore(std::span<const StringTriple> triples, std::size_t k);

/// Drops relations where one entity holds the head position, or one entity
/// the tail position, in at least `threshold` of the relation's triples.
std::vector<StringTriple> skew_filter(std::span<const StringTriple> triples, double threshold);

struct GeneratedDataset {
  std::array<std::vector<StringTriple>, 3> parts;  // train, valid, test
  /// Each part right after its k-core step, before skew filtering.
  std::array<std::vector<StringTriple>, 3> after_kcore;
  nlohmann::json stats;

  SplitDataset to_splits() const { return build_splits(parts[0], parts[1], parts[2]); }
};

/// Full pipeline: rare-relation filter, inverse/duplicate and unlabeled
/// removal, relation split, per-part k-core and skew filter. Labels are
/// enforced only when `texts` is non-empty. Throws if any part ends empty.
GeneratedDataset generate_dataset(std::span<const StringTriple> raw, const RelationTypeMap& types,
                                  std::span<const TextRecord> texts, const GenConfig& config);

struct AuditLimits {
  std::optional<std::array<std::size_t, 3>> k;  // minimum entity occurrences per split
  std::optional<double> skew_threshold;
};

/// Summarizes split sizes, the inductive setting, relation overlap between
/// splits, minimum entity occurrence and maximum position skew per split.
/// "ok" is false when a supplied limit is violated.
nlohmann::json audit_splits(const SplitDataset& splits, const AuditLimits& limits = {});

}  // namespace kgind
