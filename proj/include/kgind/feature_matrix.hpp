#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgind/kg.hpp"

namespace kgind {

enum class FeatureSource { bow, pretrained_file, graph, onehot };
std::string_view to_string(FeatureSource source);

/// Dense row-major feature rows keyed by string id.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t dim, FeatureSource source);

  /// Appends a row. Rejects duplicate ids, wrong lengths and non-finite values.
  void add_row(std::string id, std::span<const double> values);

  std::size_t rows() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return ids_.empty(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> row(std::size_t index) const;
  std::span<double> mutable_row(std::size_t index);
  std::optional<std::size_t> find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id).has_value(); }
  /// Throws when the id is missing.
  std::span<const double> row(std::string_view id) const;

  FeatureSource source() const { return source_; }
  bool trainable() const { return trainable_; }
  void set_trainable(bool trainable) { trainable_ = trainable; }
  /// Split whose triples produced this matrix (graph features only).
  SplitRole provenance() const { return provenance_; }
  void set_provenance(SplitRole role) { provenance_ = role; }

  /// Rows for `ids`, in that order. Throws when any id is missing.
  FeatureMatrix subset(std::span<const std::string> ids) const;

  bool operator==(const FeatureMatrix& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
  FeatureSource source_ = FeatureSource::pretrained_file;
  bool trainable_ = false;
  SplitRole provenance_ = SplitRole::standalone;
};

/// `<count> <dim>` header, then `id v1 ... vdim` per row. Values are written
/// in shortest round-trip form, so write/read is exact.
void write_feature_file(const FeatureMatrix& matrix, const std::filesystem::path& path);
std::string format_feature_matrix(const FeatureMatrix& matrix);
FeatureMatrix load_feature_file(const std::filesystem::path& path,
                                FeatureSource source = FeatureSource::pretrained_file);
FeatureMatrix parse_feature_matrix(std::string_view text, FeatureSource source,
                                   std::string_view source_name = "<memory>");

}  // namespace kgind
