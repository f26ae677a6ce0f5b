#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "json.hpp"
#include "kgind/evaluator.hpp"
#include "kgind/features.hpp"
#include "kgind/kg.hpp"
#include "kgind/model.hpp"
#include "kgind/relwalk.hpp"

namespace kgind {

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double warmup_fraction = 0.2;
  LossKind loss = LossKind::margin;
  double margin = 1.0;
  double l2_coeff = 0.0;
  std::size_t negatives_per_positive = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  std::size_t eval_every = 1;  // epochs between validation snapshots; 0 disables
  CandidatePolicy eval_policy = CandidatePolicy::all_entities;
  unsigned threads = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Linear warmup from 0 to the configured rate over warmup_fraction of the
/// steps, then linear decay to 0 at total_steps.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config);

/// `count` corruptions of `positive`: head or tail (uniform per negative)
/// replaced by a uniform draw from `pool`. A corruption equal to the positive
/// is redrawn once and then kept.
std::vector<Triple> sample_negatives(const Triple& positive, std::size_t count, std::span<const EntityId> pool,
                                     Rng& rng);

/// Graph-derived relation features per split. In the truly inductive setting
/// each split gets its own network; otherwise all splits share the training
/// network's features.
struct SplitGraphFeatures {
  std::shared_ptr<const FeatureMatrix> train;
  std::shared_ptr<const FeatureMatrix> valid;
  std::shared_ptr<const FeatureMatrix> test;
  std::size_t networks_built = 0;
  InductiveSetting setting = InductiveSetting::transductive;

  std::shared_ptr<const FeatureMatrix> for_split(SplitRole role) const;
};

SplitGraphFeatures prepare_split_graph_features(const SplitDataset& splits, const WalkConfig& walk,
                                                std::optional<InductiveSetting> setting = std::nullopt);

/// Feature contexts for training, validation and test.
struct SplitContexts {
  FeatureContext train;
  FeatureContext valid;
  FeatureContext test;

  const FeatureContext& for_split(SplitRole role) const;
};

/// Builds the per-split relation inputs. For concat the text matrix is
/// restricted to the relations covered by each split's graph features.
SplitContexts make_split_contexts(std::shared_ptr<const FeatureMatrix> entities,
                                  std::shared_ptr<const std::vector<std::vector<std::size_t>>> entity_tokens,
                                  std::shared_ptr<const FeatureMatrix> relation_text,
                                  const SplitGraphFeatures* graph, RelationFeatureMode mode);

struct ValidationSnapshot {
  std::size_t epoch = 0;
  Metrics metrics;
};

struct TrainHistory {
  std::vector<double> epoch_loss;
  std::vector<double> lr_trace;  // one entry per optimizer step
  std::vector<ValidationSnapshot> validation;
  std::set<SplitRole> batch_provenance;  // splits whose triples entered the loss
};

struct TrainResult {
  ModelParams final_params;
  ModelParams best_params;
  std::optional<std::size_t> best_epoch;
  double best_valid_mrr = 0.0;
  TrainHistory history;
};

/// Called with one {epoch, step, loss, lr} record per optimizer step.
using TrainLogger = std::function<void(const nlohmann::json&)>;

TrainResult train(const SplitDataset& splits, const SplitContexts& contexts, const ModelConfig& model,
                  const TrainConfig& config, const FeatureMatrix* token_table = nullptr,
                  const TrainLogger& logger = {});

}  // namespace kgind
