#include "kgind/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgind/log.hpp"
#include "kgind/weidner.hpp"

namespace kgind {

void TrainConfig::validate() const {
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw Error("train config: warmup_fraction must be in [0, 1)");
  if (negatives_per_positive < 1) throw Error("train config: negatives_per_positive must be at least 1");
  if (batch_size < 1) throw Error("train config: batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw Error("train config: learning_rate must be positive");
  if (loss == LossKind::margin && !(margin > 0.0)) throw Error("train config: margin must be positive");
  if (l2_coeff < 0.0) throw Error("train config: l2_coeff must be non-negative");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"warmup_fraction", c.warmup_fraction},
       {"loss", to_string(c.loss)},
       {"margin", c.margin},
       {"l2_coeff", c.l2_coeff},
       {"negatives_per_positive", c.negatives_per_positive},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"epsilon", c.epsilon},
       {"seed", c.seed},
       {"eval_every", c.eval_every},
       {"eval_policy", to_string(c.eval_policy)},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
  if (j.contains("loss")) c.loss = loss_from_string(j.at("loss").get<std::string>());
  c.margin = j.value("margin", c.margin);
  c.l2_coeff = j.value("l2_coeff", c.l2_coeff);
  c.negatives_per_positive = j.value("negatives_per_positive", c.negatives_per_positive);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.seed = j.value("seed", c.seed);
  c.eval_every = j.value("eval_every", c.eval_every);
  if (j.contains("eval_policy")) c.eval_policy = candidate_policy_from_string(j.at("eval_policy").get<std::string>());
  c.threads = j.value("threads", c.threads);
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config) {
  if (total_steps == 0) return 0.0;
  const double s = static_cast<double>(step);
  const double total = static_cast<double>(total_steps);
  const double warmup = config.warmup_fraction * total;
  if (s < warmup) return config.learning_rate * s / warmup;
  return config.learning_rate * std::max(0.0, total - s) / (total - warmup);
}

std::vector<Triple> sample_negatives(const Triple& positive, std::size_t count, std::span<const EntityId> pool,
                                     Rng& rng) {
  if (pool.empty()) throw Error("negative sampling: empty entity pool");
  std::vector<Triple> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const bool corrupt_head = uniform01(rng) < 0.5;
    auto draw = [&] {
      Triple t = positive;
      (corrupt_head ? t.head : t.tail) = pool[uniform_index(rng, pool.size())];
      return t;
    };
    Triple t = draw();
    if (t == positive) t = draw();
    out.push_back(t);
  }
  return out;
}

std::shared_ptr<const FeatureMatrix> SplitGraphFeatures::for_split(SplitRole role) const {
  switch (role) {
    case SplitRole::valid: return valid;
    case SplitRole::test: return test;
    default: return train;
  }
}

namespace {

std::shared_ptr<const FeatureMatrix> embed_split(const KnowledgeGraph& graph, const WalkConfig& walk) {
  const auto network = build_network(graph);
  log::info("relation_network_built", {{"split", to_string(graph.role())},
                                       {"nodes", network.node_count()},
                                       {"edges", network.edge_count()}});
  WalkConfig config = walk;
  config.seed = substream_seed(walk.seed, to_string(graph.role()));
  auto emb = embed_relations(network, config);
  emb.vectors.set_provenance(graph.role());
  return std::make_shared<const FeatureMatrix>(std::move(emb.vectors));
}

}  // namespace

SplitGraphFeatures prepare_split_graph_features(const SplitDataset& splits, const WalkConfig& walk,
                                                std::optional<InductiveSetting> setting) {
  SplitGraphFeatures out;
  out.setting = setting ? *setting : classify_setting(splits);
  out.train = embed_split(splits.train, walk);
  out.networks_built = 1;
  if (out.setting == InductiveSetting::truly_inductive) {
    if (!splits.valid.empty()) {
      out.valid = embed_split(splits.valid, walk);
      ++out.networks_built;
    } else {
      out.valid = std::make_shared<const FeatureMatrix>(walk.dim, FeatureSource::graph);
    }
    out.test = embed_split(splits.test, walk);
    ++out.networks_built;
  } else {
    out.valid = out.train;
    out.test = out.train;
  }
  return out;
}

const FeatureContext& SplitContexts::for_split(SplitRole role) const {
  switch (role) {
    case SplitRole::valid: return valid;
    case SplitRole::test: return test;
    default: return train;
  }
}

SplitContexts make_split_contexts(std::shared_ptr<const FeatureMatrix> entities,
                                  std::shared_ptr<const std::vector<std::vector<std::size_t>>> entity_tokens,
                                  std::shared_ptr<const FeatureMatrix> relation_text,
                                  const SplitGraphFeatures* graph, RelationFeatureMode mode) {
  if (mode != RelationFeatureMode::text_only && graph == nullptr) {
    throw Error("relation mode " + std::string(to_string(mode)) + " needs graph features");
  }
  auto build = [&](SplitRole role) {
    FeatureContext ctx;
    ctx.entities = entities;
    ctx.entity_tokens = entity_tokens;
    std::shared_ptr<const FeatureMatrix> g = graph ? graph->for_split(role) : nullptr;
    std::shared_ptr<const FeatureMatrix> text = relation_text;
    if (mode == RelationFeatureMode::concat && text && g) {
      text = std::make_shared<const FeatureMatrix>(text->subset(g->ids()));
    }
    ctx.relations = assemble_relation_inputs(mode == RelationFeatureMode::graph_only ? nullptr : text,
                                             mode == RelationFeatureMode::text_only ? nullptr : g, mode);
    return ctx;
  };
  return {build(SplitRole::train), build(SplitRole::valid), build(SplitRole::test)};
}

namespace {

// Adam moments for every trainable tensor.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::vector<double> token_m;
  std::vector<double> token_v;
  std::size_t t = 0;

  explicit AdamState(const ModelParams& params) {
    for (const auto& p : params.projections) {
      m.emplace_back(p.weights.size(), 0.0);
      v.emplace_back(p.weights.size(), 0.0);
    }
    if (params.token_table) {
      token_m.assign(params.token_table->rows() * params.token_table->dim(), 0.0);
      token_v.assign(token_m.size(), 0.0);
    }
  }

  void step(ModelParams& params, const Gradients& grads, double lr, const TrainConfig& c) {
    ++t;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
    auto update = [&](double& w, double& mm, double& vv, double g) {
      mm = c.beta1 * mm + (1.0 - c.beta1) * g;
      vv = c.beta2 * vv + (1.0 - c.beta2) * g * g;
      w -= lr * (mm / bc1) / (std::sqrt(vv / bc2) + c.epsilon);
    };
    for (std::size_t p = 0; p < params.projections.size(); ++p) {
      auto& w = params.projections[p].weights;
      for (std::size_t k = 0; k < w.size(); ++k) update(w[k], m[p][k], v[p][k], grads.projections[p][k]);
    }
    if (params.token_table && !grads.token_rows.empty()) {
      // Only rows touched by the batch move (lazy Adam for the sparse table).
      std::vector<std::size_t> rows;
      for (const auto& [row, g] : grads.token_rows) rows.push_back(row);
      std::sort(rows.begin(), rows.end());
      const std::size_t dim = params.token_table->dim();
      for (auto row : rows) {
        const auto& g = grads.token_rows.at(row);
        auto w = params.token_table->mutable_row(row);
        for (std::size_t k = 0; k < dim; ++k) update(w[k], token_m[row * dim + k], token_v[row * dim + k], g[k]);
      }
    }
  }
};

// Gradient of one batch, split into fixed chunks across workers and reduced
// in chunk order.
BatchResult batch_gradients(const ModelParams& params, const Encoder& encoder,
                            std::span<const TrainingExample> batch, const LossConfig& loss, unsigned threads) {
  if (threads <= 1 || batch.size() < 2) return backward(params, encoder, batch, loss);
  const std::size_t chunks = std::min<std::size_t>(threads, batch.size());
  const std::size_t per = (batch.size() + chunks - 1) / chunks;
  std::vector<BatchResult> parts(chunks);
  LossConfig no_l2 = loss;
  no_l2.l2 = 0.0;
  parallel_for(chunks, threads, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t c = begin; c < end; ++c) {
      const std::size_t lo = c * per;
      const std::size_t hi = std::min(batch.size(), lo + per);
      parts[c] = backward(params, encoder, batch.subspan(lo, hi - lo), no_l2);
    }
  });
  BatchResult total;
  total.gradients = Gradients::zeros_like(params);
  for (const auto& part : parts) total.pairs += part.pairs;
  for (const auto& part : parts) {
    if (part.pairs == 0) continue;
    const double share = static_cast<double>(part.pairs) / static_cast<double>(total.pairs);
    total.loss += share * part.loss;
    for (std::size_t p = 0; p < total.gradients.projections.size(); ++p) {
      for (std::size_t k = 0; k < total.gradients.projections[p].size(); ++k) {
        total.gradients.projections[p][k] += share * part.gradients.projections[p][k];
      }
    }
    for (const auto& [row, g] : part.gradients.token_rows) {
      auto& acc = total.gradients.token_rows[row];
      acc.resize(g.size(), 0.0);
      for (std::size_t k = 0; k < g.size(); ++k) acc[k] += share * g[k];
    }
  }
  for (std::size_t p = 0; p < params.projections.size(); ++p) {
    const auto& w = params.projections[p].weights;
    double sq = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      sq += w[k] * w[k];
      total.gradients.projections[p][k] += loss.l2 * w[k];
    }
    total.loss += 0.5 * loss.l2 * sq;
  }
  return total;
}

}  // namespace

TrainResult train(const SplitDataset& splits, const SplitContexts& contexts, const ModelConfig& model,
                  const TrainConfig& config, const FeatureMatrix* token_table, const TrainLogger& logger) {
  config.validate();
  const auto& train_graph = splits.train;
  if (train_graph.empty()) throw Error("train: training split is empty");
  if (const auto& g = contexts.train.relations.graph; g && g->provenance() != SplitRole::train &&
                                                       g->provenance() != SplitRole::standalone) {
    throw Error("train: relation graph features were generated from the " +
                std::string(to_string(g->provenance())) + " split");
  }

  TrainResult result;
  result.final_params = init_model(model, config.seed, token_table);
  ModelParams& params = result.final_params;
  const Encoder encoder(params, contexts.train, *splits.vocab);
  for (EntityId e : train_graph.entity_ids()) {
    if (!encoder.has_entity(e)) throw Error("train: feature row missing for entity '" + train_graph.entity_name(e) + "'");
  }
  for (RelationId r : train_graph.relation_ids()) {
    if (!encoder.has_relation(r)) {
      throw Error("train: feature row missing for relation '" + train_graph.relation_name(r) + "'");
    }
  }
  result.best_params = params;
  if (config.epochs == 0) return result;

  const std::vector<EntityId> pool(train_graph.entity_ids().begin(), train_graph.entity_ids().end());
  const auto triples = train_graph.triples();
  const std::size_t batches_per_epoch = (triples.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = config.epochs * batches_per_epoch;
  const LossConfig loss{config.loss, config.margin, config.l2_coeff};
  const unsigned threads = resolve_threads(config.threads);
  AdamState adam(params);

  std::optional<Encoder> valid_encoder;
  if (!splits.valid.empty() && config.eval_every > 0) valid_encoder.emplace(params, contexts.valid, *splits.vocab);

  std::vector<std::size_t> order(triples.size());
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(substream_seed(config.seed, "shuffle", epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);
    Rng neg_rng(substream_seed(config.seed, "negatives", epoch));

    double epoch_loss = 0.0;
    std::vector<TrainingExample> batch;
    for (std::size_t b = 0; b < batches_per_epoch; ++b, ++step) {
      batch.clear();
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(triples.size(), lo + config.batch_size);
      for (std::size_t k = lo; k < hi; ++k) {
        const Triple& positive = triples[order[k]];
        batch.push_back({positive, sample_negatives(positive, config.negatives_per_positive, pool, neg_rng)});
      }
      result.history.batch_provenance.insert(train_graph.role());

      const auto br = batch_gradients(params, encoder, batch, loss, threads);
      if (!std::isfinite(br.loss)) {
        throw Error("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                    " (try a lower learning rate or margin)");
      }
      const double lr = lr_at(step, total_steps, config);
      adam.step(params, br.gradients, lr, config);
      epoch_loss += br.loss;
      result.history.lr_trace.push_back(lr);
      if (logger) logger({{"epoch", epoch}, {"step", step}, {"loss", br.loss}, {"lr", lr}});
    }
    result.history.epoch_loss.push_back(epoch_loss / static_cast<double>(batches_per_epoch));

    if (valid_encoder && (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      EvalOptions opts;
      opts.split = SplitRole::valid;
      opts.policy = config.eval_policy;
      opts.threads = threads;
      const auto report = evaluate(*valid_encoder, splits, opts);
      result.history.validation.push_back({epoch, report.metrics});
      log::info("validation", {{"epoch", epoch}, {"mrr", report.metrics.mrr}, {"hits10", report.metrics.hits10}});
      if (!result.best_epoch || report.metrics.mrr > result.best_valid_mrr) {
        result.best_epoch = epoch;
        result.best_valid_mrr = report.metrics.mrr;
        result.best_params = params;
      }
    }
  }
  if (!result.best_epoch) result.best_params = params;
  return result;
}

}  // namespace kgind
