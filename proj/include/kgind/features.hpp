#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgind/feature_matrix.hpp"
#include "kgind/kg.hpp"

namespace kgind {

/// Lowercases ASCII and splits on maximal runs of non-alphanumeric bytes.
/// Bytes >= 0x80 count as word characters, so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

/// Pretrained word vectors. Out-of-vocabulary tokens are skipped.
class TokenVocabulary {
 public:
  explicit TokenVocabulary(FeatureMatrix vectors);

  std::size_t dim() const { return vectors_.dim(); }
  std::size_t size() const { return vectors_.rows(); }
  std::optional<std::size_t> find(std::string_view token) const { return vectors_.find(token); }
  std::span<const double> vector(std::size_t index) const { return vectors_.row(index); }
  const FeatureMatrix& matrix() const { return vectors_; }

 private:
  FeatureMatrix vectors_;
};

TokenVocabulary load_token_vocabulary(const std::filesystem::path& path);

struct BowFeatures {
  FeatureMatrix matrix;
  std::vector<std::string> empty_rows;  // ids with no in-vocabulary token (zero rows)
  /// Per row, the in-vocabulary token indices that were averaged.
  std::vector<std::vector<std::size_t>> token_indices;
};

/// Each row is the mean of the word vectors of the record's label tokens (and
/// description tokens when `use_description`).
BowFeatures build_bow_features(std::span<const TextRecord> records, const TokenVocabulary& vocab,
                               bool use_description = true);

/// Identity rows over `ids`: row i has a single 1 at position i.
FeatureMatrix build_onehot_features(std::span<const std::string> ids);

enum class RelationFeatureMode { text_only, graph_only, concat };
std::string_view to_string(RelationFeatureMode mode);
RelationFeatureMode relation_feature_mode_from_string(std::string_view text);

enum class RelationSource { text, graph };

/// Which relation features feed the model, and whether entity vectors are
/// duplicated to match the concatenated relation width.
struct RelationInputs {
  RelationFeatureMode mode = RelationFeatureMode::text_only;
  std::vector<RelationSource> sources;
  bool duplicate_entities = false;
  std::shared_ptr<const FeatureMatrix> text;
  std::shared_ptr<const FeatureMatrix> graph;

  /// Input width of each source that is present.
  std::size_t text_dim() const { return text ? text->dim() : 0; }
  std::size_t graph_dim() const { return graph ? graph->dim() : 0; }
  bool covers(std::string_view relation) const;
};

/// Validates that the mode has what it needs; for concat both matrices must
/// cover the identical relation id set. Raw features are not concatenated here.
RelationInputs assemble_relation_inputs(std::shared_ptr<const FeatureMatrix> text,
                                        std::shared_ptr<const FeatureMatrix> graph,
                                        RelationFeatureMode mode);

}  // namespace kgind
