#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "kgind/features.hpp"
#include "kgind/kg.hpp"

namespace kgind {

enum class Scorer { transe_l1, transe_l2, complex };
enum class SharingPolicy {
  shared,       // one projection for entities and every relation source
  separate,     // entity projection; one relation projection for all relation sources
  independent,  // entity projection; one projection per relation source
};
enum class LossKind { margin, nll };

std::string_view to_string(Scorer scorer);
std::string_view to_string(SharingPolicy sharing);
std::string_view to_string(LossKind loss);
Scorer scorer_from_string(std::string_view text);
SharingPolicy sharing_from_string(std::string_view text);
LossKind loss_from_string(std::string_view text);

/// Linear map R^in -> R^out without bias; weights row-major out x in.
struct ProjectionLayer {
  std::size_t out_dim = 0;
  std::size_t in_dim = 0;
  std::vector<double> weights;

  ProjectionLayer() = default;
  ProjectionLayer(std::size_t out, std::size_t in) : out_dim(out), in_dim(in), weights(out * in, 0.0) {}

  static ProjectionLayer identity(std::size_t n);
  void apply(std::span<const double> input, std::span<double> output) const;
  std::vector<double> apply(std::span<const double> input) const;
};

struct ModelConfig {
  Scorer scorer = Scorer::transe_l1;
  std::size_t dim = 100;
  SharingPolicy sharing = SharingPolicy::separate;
  RelationFeatureMode mode = RelationFeatureMode::text_only;
  std::size_t entity_input_dim = 0;
  std::size_t relation_text_dim = 0;
  std::size_t relation_graph_dim = 0;
  bool trainable_tokens = false;

  /// Width of encoded entity and relation vectors (dim, or 2*dim in concat mode).
  std::size_t output_dim() const { return mode == RelationFeatureMode::concat ? 2 * dim : dim; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Trainable state. Projection slots are resolved from the sharing policy;
/// a slot of -1 means the path is unused.
struct ModelParams {
  ModelConfig config;
  std::vector<ProjectionLayer> projections;
  int entity_slot = 0;
  int relation_text_slot = -1;
  int relation_graph_slot = -1;
  /// Word-vector table, present only when config.trainable_tokens.
  std::optional<FeatureMatrix> token_table;

  const ProjectionLayer& entity_projection() const { return projections.at(entity_slot); }
  std::size_t parameter_count() const;
};

/// Xavier-uniform projections drawn from the seed's "init" stream.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed,
                       const FeatureMatrix* token_table = nullptr);

/// e = W_e f, duplicated to [e; e] in concat mode.
std::vector<double> encode_entity(const ModelParams& params, std::span<const double> features);
/// text_only: W f_text; graph_only: W f_graph; concat: [W f_text; W f_graph].
std::vector<double> encode_relation(const ModelParams& params, std::optional<std::span<const double>> text,
                                    std::optional<std::span<const double>> graph);

/// -||h + r - t||; L1 or L2.
double score_transe(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                    bool l1);
/// Re(sum h_i r_i conj(t_i)); vectors store all real parts then all imaginary parts.
double score_complex(std::span<const double> h, std::span<const double> r, std::span<const double> t);
double score(Scorer scorer, std::span<const double> h, std::span<const double> r, std::span<const double> t);

/// Adds scale * d score / d(h, r, t) into gh, gr, gt. The L1 subgradient at 0
/// is 0, as is the L2 gradient at h + r = t.
void score_gradient(Scorer scorer, std::span<const double> h, std::span<const double> r,
                    std::span<const double> t, double scale, std::span<double> gh, std::span<double> gr,
                    std::span<double> gt);

double margin_loss(double positive, double negative, double margin);
double nll_loss(double positive, double negative);

struct PairLoss {
  double value;
  double d_positive;
  double d_negative;
};
PairLoss pair_loss(LossKind kind, double positive, double negative, double margin);

/// Entity features plus the per-split relation inputs the model reads.
struct FeatureContext {
  std::shared_ptr<const FeatureMatrix> entities;
  /// Per entity row, the token indices averaged into it. Needed only with a
  /// trainable token table.
  std::shared_ptr<const std::vector<std::vector<std::size_t>>> entity_tokens;
  RelationInputs relations;
};

/// Binds parameters and features to a vocabulary for id-based encoding.
class Encoder {
 public:
  Encoder(const ModelParams& params, const FeatureContext& features, const Vocabularies& vocab);

  bool has_entity(EntityId e) const;
  bool has_relation(RelationId r) const;
  /// Feature row of an entity (recomputed from the token table when trainable).
  std::vector<double> entity_features(EntityId e) const;
  std::vector<double> encode_entity(EntityId e) const;
  std::vector<double> encode_relation(RelationId r) const;
  std::optional<std::span<const double>> relation_text(RelationId r) const;
  std::optional<std::span<const double>> relation_graph(RelationId r) const;
  std::span<const std::size_t> entity_tokens(EntityId e) const;

  const ModelParams& params() const { return params_; }
  const Vocabularies& vocab() const { return vocab_; }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t entity_row(EntityId e) const;

  const ModelParams& params_;
  const FeatureContext& features_;
  const Vocabularies& vocab_;
  std::vector<std::size_t> entity_rows_;
  std::vector<std::size_t> text_rows_;
  std::vector<std::size_t> graph_rows_;
};

struct TrainingExample {
  Triple positive;
  std::vector<Triple> negatives;
};

struct LossConfig {
  LossKind kind = LossKind::margin;
  double margin = 1.0;
  double l2 = 0.0;  // adds l2/2 * ||W||^2 per projection
};

struct Gradients {
  std::vector<std::vector<double>> projections;  // aligned with ModelParams::projections
  std::unordered_map<std::size_t, std::vector<double>> token_rows;

  static Gradients zeros_like(const ModelParams& params);
  double max_abs() const;
};

struct BatchResult {
  double loss = 0.0;  // mean over (positive, negative) pairs, plus the L2 term
  std::size_t pairs = 0;
  Gradients gradients;
};

/// Analytic gradient of the mean batch loss with respect to every trainable
/// tensor.
BatchResult backward(const ModelParams& params, const Encoder& encoder,
                     std::span<const TrainingExample> batch, const LossConfig& loss);
/// Loss only; same value as backward().loss.
double batch_loss(const ModelParams& params, const Encoder& encoder, std::span<const TrainingExample> batch,
                  const LossConfig& loss);

}  // namespace kgind
