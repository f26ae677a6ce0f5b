#include "kgind/features.hpp"

#include <algorithm>
#include <unordered_set>

#include "kgind/log.hpp"

namespace kgind {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (word) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TokenVocabulary::TokenVocabulary(FeatureMatrix vectors) : vectors_(std::move(vectors)) {
  if (vectors_.empty()) throw Error("token vocabulary is empty");
}

TokenVocabulary load_token_vocabulary(const std::filesystem::path& path) {
  return TokenVocabulary(load_feature_file(path, FeatureSource::pretrained_file));
}

BowFeatures build_bow_features(std::span<const TextRecord> records, const TokenVocabulary& vocab,
                               bool use_description) {
  if (records.empty()) throw Error("bag-of-words features: no text records");
  BowFeatures out{FeatureMatrix(vocab.dim(), FeatureSource::bow), {}, {}};
  std::vector<double> row(vocab.dim());
  for (const auto& record : records) {
    auto tokens = tokenize(record.label);
    if (use_description) {
      auto more = tokenize(record.description);
      tokens.insert(tokens.end(), more.begin(), more.end());
    }
    std::vector<std::size_t> used;
    for (const auto& token : tokens) {
      if (auto index = vocab.find(token)) used.push_back(*index);
    }
    std::fill(row.begin(), row.end(), 0.0);
    for (auto index : used) {
      const auto v = vocab.vector(index);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] += v[k];
    }
    if (used.empty()) {
      out.empty_rows.push_back(record.id);
    } else {
      for (double& x : row) x /= static_cast<double>(used.size());
    }
    out.matrix.add_row(record.id, row);
    out.token_indices.push_back(std::move(used));
  }
  if (!out.empty_rows.empty()) {
    log::warn("bow_rows_without_known_tokens", {{"count", out.empty_rows.size()}});
  }
  return out;
}

FeatureMatrix build_onehot_features(std::span<const std::string> ids) {
  FeatureMatrix out(ids.size(), FeatureSource::onehot);
  std::vector<double> row(ids.size(), 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    row[i] = 1.0;
    out.add_row(ids[i], row);
    row[i] = 0.0;
  }
  return out;
}

std::string_view to_string(RelationFeatureMode mode) {
  switch (mode) {
    case RelationFeatureMode::text_only: return "text_only";
    case RelationFeatureMode::graph_only: return "graph_only";
    case RelationFeatureMode::concat: return "concat";
  }
  return "text_only";
}

RelationFeatureMode relation_feature_mode_from_string(std::string_view text) {
  if (text == "text_only") return RelationFeatureMode::text_only;
  if (text == "graph_only") return RelationFeatureMode::graph_only;
  if (text == "concat") return RelationFeatureMode::concat;
  throw Error("unknown relation feature mode '" + std::string(text) + "'");
}

bool RelationInputs::covers(std::string_view relation) const {
  for (auto source : sources) {
    const auto& m = source == RelationSource::text ? text : graph;
    if (!m->contains(relation)) return false;
  }
  return true;
}

RelationInputs assemble_relation_inputs(std::shared_ptr<const FeatureMatrix> text,
                                        std::shared_ptr<const FeatureMatrix> graph,
                                        RelationFeatureMode mode) {
  RelationInputs out;
  out.mode = mode;
  switch (mode) {
    case RelationFeatureMode::text_only:
      if (!text) throw Error("relation mode text_only requires text features");
      out.sources = {RelationSource::text};
      out.text = std::move(text);
      break;
    case RelationFeatureMode::graph_only:
      if (!graph) throw Error("relation mode graph_only requires graph features");
      out.sources = {RelationSource::graph};
      out.graph = std::move(graph);
      break;
    case RelationFeatureMode::concat: {
      if (!text || !graph) throw Error("relation mode concat requires both text and graph features");
      const std::unordered_set<std::string> a(text->ids().begin(), text->ids().end());
      const std::unordered_set<std::string> b(graph->ids().begin(), graph->ids().end());
      if (a != b) throw Error("relation text and graph features cover different relation sets");
      out.sources = {RelationSource::text, RelationSource::graph};
      out.duplicate_entities = true;
      out.text = std::move(text);
      out.graph = std::move(graph);
      break;
    }
  }
  return out;
}

}  // namespace kgind
