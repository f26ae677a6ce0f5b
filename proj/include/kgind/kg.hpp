#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgind/common.hpp"

namespace kgind {

/// Bijection between string identifiers and dense handles, assigned in
/// first-interned order.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t index) const { return names_.at(index); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct Vocabularies {
  Vocabulary entities;
  Vocabulary relations;
};

struct StringTriple {
  std::string head;
  std::string relation;
  std::string tail;

  auto operator<=>(const StringTriple&) const = default;
};

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t x = mix_seed(t.head.value);
    x = mix_seed(x ^ t.relation.value);
    return static_cast<std::size_t>(mix_seed(x ^ t.tail.value));
  }
};

struct TripleFile {
  std::vector<StringTriple> triples;  // file order, duplicates kept
  std::size_t line_count = 0;
  std::size_t duplicate_count = 0;
};

/// Reads a tab-separated head/relation/tail file. Blank lines are skipped;
/// any other line without exactly three non-empty fields is an error that
/// names the line number.
TripleFile load_triples(const std::filesystem::path& path);
TripleFile parse_triples(std::string_view text, std::string_view source_name = "<memory>");
void write_triples(const std::filesystem::path& path, std::span<const StringTriple> triples);

/// Which split a graph was built from; carried along as a provenance tag.
enum class SplitRole { standalone, train, valid, test };
std::string_view to_string(SplitRole role);

/// Immutable triple set over shared vocabularies, with per-relation and
/// per-(relation, entity) position indexes.
class KnowledgeGraph {
 public:
  using PositionCounts = std::unordered_map<std::uint32_t, std::uint64_t>;

  KnowledgeGraph() : KnowledgeGraph(std::make_shared<Vocabularies>(), {}) {}
  /// Deduplicates `triples` (first occurrence kept). All handles must be valid
  /// in `vocab`.
  KnowledgeGraph(std::shared_ptr<const Vocabularies> vocab, std::vector<Triple> triples,
                 SplitRole role = SplitRole::standalone);

  const Vocabularies& vocab() const { return *vocab_; }
  std::shared_ptr<const Vocabularies> shared_vocab() const { return vocab_; }
  SplitRole role() const { return role_; }

  std::span<const Triple> triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  std::size_t duplicates_removed() const { return duplicates_removed_; }

  /// Ids occurring in this graph's triples, in first-occurrence order.
  std::span<const EntityId> entity_ids() const { return entity_ids_; }
  std::span<const RelationId> relation_ids() const { return relation_ids_; }
  bool has_entity(EntityId e) const;
  bool has_relation(RelationId r) const;

  /// Indices into triples() of the triples using relation r.
  std::span<const std::size_t> triples_of(RelationId r) const;
  const PositionCounts& head_counts(RelationId r) const;
  const PositionCounts& tail_counts(RelationId r) const;

  const std::string& entity_name(EntityId e) const { return vocab_->entities.name(e.value); }
  const std::string& relation_name(RelationId r) const { return vocab_->relations.name(r.value); }
  std::vector<StringTriple> to_strings() const;

 private:
  std::shared_ptr<const Vocabularies> vocab_;
  std::vector<Triple> triples_;
  SplitRole role_ = SplitRole::standalone;
  std::size_t duplicates_removed_ = 0;
  std::vector<EntityId> entity_ids_;
  std::vector<RelationId> relation_ids_;
  std::vector<bool> entity_present_;
  std::vector<bool> relation_present_;
  std::vector<std::vector<std::size_t>> by_relation_;
  std::vector<PositionCounts> head_counts_;
  std::vector<PositionCounts> tail_counts_;
};

/// Interns ids in first-appearance order and drops repeated triples.
KnowledgeGraph build_graph(std::span<const StringTriple> triples);

struct SplitDataset {
  std::shared_ptr<const Vocabularies> vocab;
  KnowledgeGraph train;
  KnowledgeGraph valid;
  KnowledgeGraph test;

  const KnowledgeGraph& split(SplitRole role) const;
};

/// Builds the three splits over one global id space (train ids first, then
/// valid, then test).
SplitDataset build_splits(std::span<const StringTriple> train, std::span<const StringTriple> valid,
                          std::span<const StringTriple> test);
/// Loads `train.tsv`, `valid.tsv` and `test.tsv` from a directory.
SplitDataset load_split_dir(const std::filesystem::path& dir);

enum class InductiveSetting { transductive, semi_inductive, fully_inductive, truly_inductive };
std::string_view to_string(InductiveSetting setting);

/// Classifies the evaluation triples (valid and test) against the training
/// vocabularies. Unseen relations take priority over unseen entities.
InductiveSetting classify_setting(const SplitDataset& splits);

struct TextRecord {
  std::string id;
  std::string label;
  std::string description;
};

/// Reads `id<TAB>label[<TAB>description]` lines.
std::vector<TextRecord> load_text_records(const std::filesystem::path& path);

}  // namespace kgind
