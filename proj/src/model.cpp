#include "kgind/model.hpp"

#include <algorithm>
#include <cmath>

namespace kgind {

std::string_view to_string(Scorer scorer) {
  switch (scorer) {
    case Scorer::transe_l1: return "transe_l1";
    case Scorer::transe_l2: return "transe_l2";
    case Scorer::complex: return "complex";
  }
  return "transe_l1";
}

std::string_view to_string(SharingPolicy sharing) {
  switch (sharing) {
    case SharingPolicy::shared: return "shared";
    case SharingPolicy::separate: return "separate";
    case SharingPolicy::independent: return "independent";
  }
  return "separate";
}

std::string_view to_string(LossKind loss) { return loss == LossKind::margin ? "margin" : "nll"; }

Scorer scorer_from_string(std::string_view text) {
  if (text == "transe_l1") return Scorer::transe_l1;
  if (text == "transe_l2") return Scorer::transe_l2;
  if (text == "complex") return Scorer::complex;
  throw Error("unknown scorer '" + std::string(text) + "'");
}

SharingPolicy sharing_from_string(std::string_view text) {
  if (text == "shared") return SharingPolicy::shared;
  if (text == "separate") return SharingPolicy::separate;
  if (text == "independent") return SharingPolicy::independent;
  throw Error("unknown sharing policy '" + std::string(text) + "'");
}

LossKind loss_from_string(std::string_view text) {
  if (text == "margin") return LossKind::margin;
  if (text == "nll") return LossKind::nll;
  throw Error("unknown loss '" + std::string(text) + "'");
}

ProjectionLayer ProjectionLayer::identity(std::size_t n) {
  ProjectionLayer out(n, n);
  for (std::size_t i = 0; i < n; ++i) out.weights[i * n + i] = 1.0;
  return out;
}

void ProjectionLayer::apply(std::span<const double> input, std::span<double> output) const {
  if (input.size() != in_dim) {
    throw Error("projection expects " + std::to_string(in_dim) + " inputs, got " + std::to_string(input.size()));
  }
  for (std::size_t i = 0; i < out_dim; ++i) {
    const double* w = &weights[i * in_dim];
    double acc = 0.0;
    for (std::size_t k = 0; k < in_dim; ++k) acc += w[k] * input[k];
    output[i] = acc;
  }
}

std::vector<double> ProjectionLayer::apply(std::span<const double> input) const {
  std::vector<double> out(out_dim);
  apply(input, out);
  return out;
}

void ModelConfig::validate() const {
  if (dim < 1) throw Error("model config: dim must be at least 1");
  if (entity_input_dim < 1) throw Error("model config: entity_input_dim must be at least 1");
  const bool text = mode != RelationFeatureMode::graph_only;
  const bool graph = mode != RelationFeatureMode::text_only;
  if (text && relation_text_dim < 1) throw Error("model config: relation_text_dim required by relation mode");
  if (graph && relation_graph_dim < 1) throw Error("model config: relation_graph_dim required by relation mode");
  if (scorer == Scorer::complex && output_dim() % 2 != 0) {
    throw Error("model config: complex scorer needs an even encoded width");
  }
  if (sharing == SharingPolicy::shared) {
    if ((text && relation_text_dim != entity_input_dim) || (graph && relation_graph_dim != entity_input_dim)) {
      throw Error("model config: shared projection needs equal input widths for all sources");
    }
  }
  if (sharing == SharingPolicy::separate && text && graph && relation_text_dim != relation_graph_dim) {
    throw Error("model config: separate sharing needs equal relation text and graph widths");
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"scorer", to_string(c.scorer)},
       {"dim", c.dim},
       {"sharing", to_string(c.sharing)},
       {"relation_mode", to_string(c.mode)},
       {"entity_input_dim", c.entity_input_dim},
       {"relation_text_dim", c.relation_text_dim},
       {"relation_graph_dim", c.relation_graph_dim},
       {"trainable_tokens", c.trainable_tokens}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (j.contains("scorer")) c.scorer = scorer_from_string(j.at("scorer").get<std::string>());
  c.dim = j.value("dim", c.dim);
  if (j.contains("sharing")) c.sharing = sharing_from_string(j.at("sharing").get<std::string>());
  if (j.contains("relation_mode")) {
    c.mode = relation_feature_mode_from_string(j.at("relation_mode").get<std::string>());
  }
  c.entity_input_dim = j.value("entity_input_dim", c.entity_input_dim);
  c.relation_text_dim = j.value("relation_text_dim", c.relation_text_dim);
  c.relation_graph_dim = j.value("relation_graph_dim", c.relation_graph_dim);
  c.trainable_tokens = j.value("trainable_tokens", c.trainable_tokens);
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : projections) n += p.weights.size();
  if (token_table) n += token_table->rows() * token_table->dim();
  return n;
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed, const FeatureMatrix* token_table) {
  config.validate();
  ModelParams params;
  params.config = config;
  const bool text = config.mode != RelationFeatureMode::graph_only;
  const bool graph = config.mode != RelationFeatureMode::text_only;

  std::vector<std::size_t> inputs{config.entity_input_dim};
  params.entity_slot = 0;
  switch (config.sharing) {
    case SharingPolicy::shared:
      if (text) params.relation_text_slot = 0;
      if (graph) params.relation_graph_slot = 0;
      break;
    case SharingPolicy::separate:
      inputs.push_back(text ? config.relation_text_dim : config.relation_graph_dim);
      if (text) params.relation_text_slot = 1;
      if (graph) params.relation_graph_slot = 1;
      break;
    case SharingPolicy::independent:
      if (text) {
        params.relation_text_slot = static_cast<int>(inputs.size());
        inputs.push_back(config.relation_text_dim);
      }
      if (graph) {
        params.relation_graph_slot = static_cast<int>(inputs.size());
        inputs.push_back(config.relation_graph_dim);
      }
      break;
  }

  Rng rng(substream_seed(seed, "init"));
  for (std::size_t in : inputs) {
    ProjectionLayer layer(config.dim, in);
    const double bound = std::sqrt(6.0 / static_cast<double>(config.dim + in));
    for (double& w : layer.weights) w = (2.0 * uniform01(rng) - 1.0) * bound;
    params.projections.push_back(std::move(layer));
  }

  if (config.trainable_tokens) {
    if (token_table == nullptr) throw Error("trainable token table requested but none supplied");
    if (token_table->dim() != config.entity_input_dim) {
      throw Error("token table width does not match entity_input_dim");
    }
    params.token_table = *token_table;
    params.token_table->set_trainable(true);
  }
  return params;
}

std::vector<double> encode_entity(const ModelParams& params, std::span<const double> features) {
  const auto& proj = params.entity_projection();
  if (features.size() != proj.in_dim) throw Error("entity feature width does not match the projection");
  const std::size_t d = params.config.dim;
  std::vector<double> out(params.config.output_dim());
  proj.apply(features, std::span<double>(out).first(d));
  if (params.config.mode == RelationFeatureMode::concat) std::copy_n(out.begin(), d, out.begin() + d);
  return out;
}

std::vector<double> encode_relation(const ModelParams& params, std::optional<std::span<const double>> text,
                                    std::optional<std::span<const double>> graph) {
  const std::size_t d = params.config.dim;
  std::vector<double> out(params.config.output_dim());
  auto project = [&](int slot, std::optional<std::span<const double>> row, std::size_t offset, const char* what) {
    if (!row) throw Error(std::string("missing relation ") + what + " features");
    const auto& proj = params.projections.at(slot);
    if (row->size() != proj.in_dim) throw Error(std::string("relation ") + what + " feature width mismatch");
    proj.apply(*row, std::span<double>(out).subspan(offset, d));
  };
  switch (params.config.mode) {
    case RelationFeatureMode::text_only: project(params.relation_text_slot, text, 0, "text"); break;
    case RelationFeatureMode::graph_only: project(params.relation_graph_slot, graph, 0, "graph"); break;
    case RelationFeatureMode::concat:
      project(params.relation_text_slot, text, 0, "text");
      project(params.relation_graph_slot, graph, d, "graph");
      break;
  }
  return out;
}

namespace {

void check_dims(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  if (h.size() != r.size() || h.size() != t.size()) throw Error("score: vector widths differ");
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

double score_transe(std::span<const double> h, std::span<const double> r, std::span<const double> t, bool l1) {
  check_dims(h, r, t);
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = h[i] + r[i] - t[i];
    acc += l1 ? std::abs(x) : x * x;
  }
  return l1 ? -acc : -std::sqrt(acc);
}

double score_complex(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  check_dims(h, r, t);
  if (h.size() % 2 != 0) throw Error("complex score needs an even width");
  const std::size_t n = h.size() / 2;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ah = h[i], bh = h[n + i], ar = r[i], br = r[n + i], at = t[i], bt = t[n + i];
    acc += ah * ar * at + bh * ar * bt + ah * br * bt - bh * br * at;
  }
  return acc;
}

double score(Scorer scorer, std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  switch (scorer) {
    case Scorer::transe_l1: return score_transe(h, r, t, true);
    case Scorer::transe_l2: return score_transe(h, r, t, false);
    case Scorer::complex: return score_complex(h, r, t);
  }
  return 0.0;
}

void score_gradient(Scorer scorer, std::span<const double> h, std::span<const double> r,
                    std::span<const double> t, double scale, std::span<double> gh, std::span<double> gr,
                    std::span<double> gt) {
  check_dims(h, r, t);
  const std::size_t n = h.size();
  switch (scorer) {
    case Scorer::transe_l1:
      for (std::size_t i = 0; i < n; ++i) {
        const double g = -scale * sign(h[i] + r[i] - t[i]);
        gh[i] += g;
        gr[i] += g;
        gt[i] -= g;
      }
      break;
    case Scorer::transe_l2: {
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = h[i] + r[i] - t[i];
        norm += x * x;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) break;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = -scale * (h[i] + r[i] - t[i]) / norm;
        gh[i] += g;
        gr[i] += g;
        gt[i] -= g;
      }
      break;
    }
    case Scorer::complex: {
      const std::size_t m = n / 2;
      for (std::size_t i = 0; i < m; ++i) {
        const double ah = h[i], bh = h[m + i], ar = r[i], br = r[m + i], at = t[i], bt = t[m + i];
        gh[i] += scale * (ar * at + br * bt);
        gh[m + i] += scale * (ar * bt - br * at);
        gr[i] += scale * (ah * at + bh * bt);
        gr[m + i] += scale * (ah * bt - bh * at);
        gt[i] += scale * (ah * ar - bh * br);
        gt[m + i] += scale * (ah * br + bh * ar);
      }
      break;
    }
  }
}

double margin_loss(double positive, double negative, double margin) {
  return std::max(0.0, margin - positive + negative);
}

double nll_loss(double positive, double negative) { return softplus(-positive) + softplus(negative); }

PairLoss pair_loss(LossKind kind, double positive, double negative, double margin) {
  if (kind == LossKind::margin) {
    const double value = margin_loss(positive, negative, margin);
    return value > 0.0 ? PairLoss{value, -1.0, 1.0} : PairLoss{0.0, 0.0, 0.0};
  }
  return {nll_loss(positive, negative), -sigmoid(-positive), sigmoid(negative)};
}

Encoder::Encoder(const ModelParams& params, const FeatureContext& features, const Vocabularies& vocab)
    : params_(params), features_(features), vocab_(vocab) {
  if (!features_.entities) throw Error("encoder: entity features missing");
  if (features_.entities->dim() != params_.config.entity_input_dim) {
    throw Error("entity feature width " + std::to_string(features_.entities->dim()) +
                " does not match model input width " + std::to_string(params_.config.entity_input_dim));
  }
  if (params_.config.mode != features_.relations.mode) {
    throw Error("relation feature mode of features and model differ");
  }
  if (features_.relations.text && features_.relations.text->dim() != params_.config.relation_text_dim) {
    throw Error("relation text feature width does not match the model");
  }
  if (features_.relations.graph && features_.relations.graph->dim() != params_.config.relation_graph_dim) {
    throw Error("relation graph feature width does not match the model");
  }
  if (params_.token_table && !features_.entity_tokens) {
    throw Error("trainable token table needs per-entity token lists");
  }
  auto resolve = [](const Vocabulary& v, const FeatureMatrix* m) {
    std::vector<std::size_t> rows(v.size(), npos);
    if (m == nullptr) return rows;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (auto row = m->find(v.name(i))) rows[i] = *row;
    }
    return rows;
  };
  entity_rows_ = resolve(vocab_.entities, features_.entities.get());
  text_rows_ = resolve(vocab_.relations, features_.relations.text.get());
  graph_rows_ = resolve(vocab_.relations, features_.relations.graph.get());
}

bool Encoder::has_entity(EntityId e) const {
  return e.value < entity_rows_.size() && entity_rows_[e.value] != npos;
}

bool Encoder::has_relation(RelationId r) const {
  if (r.value >= text_rows_.size()) return false;
  for (auto source : features_.relations.sources) {
    const auto& rows = source == RelationSource::text ? text_rows_ : graph_rows_;
    if (rows[r.value] == npos) return false;
  }
  return true;
}

std::size_t Encoder::entity_row(EntityId e) const {
  if (!has_entity(e)) {
    throw Error("no feature row for entity '" +
                (e.value < vocab_.entities.size() ? vocab_.entities.name(e.value) : std::string("?")) + "'");
  }
  return entity_rows_[e.value];
}

std::span<const std::size_t> Encoder::entity_tokens(EntityId e) const {
  if (!features_.entity_tokens) return {};
  return features_.entity_tokens->at(entity_row(e));
}

std::vector<double> Encoder::entity_features(EntityId e) const {
  const std::size_t row = entity_row(e);
  if (!params_.token_table) {
    const auto f = features_.entities->row(row);
    return {f.begin(), f.end()};
  }
  const auto& table = *params_.token_table;
  std::vector<double> out(table.dim(), 0.0);
  const auto& tokens = features_.entity_tokens->at(row);
  for (auto tok : tokens) {
    const auto v = table.row(tok);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
  }
  if (!tokens.empty()) {
    for (double& x : out) x /= static_cast<double>(tokens.size());
  }
  return out;
}

std::vector<double> Encoder::encode_entity(EntityId e) const {
  return kgind::encode_entity(params_, entity_features(e));
}

std::optional<std::span<const double>> Encoder::relation_text(RelationId r) const {
  if (!features_.relations.text || r.value >= text_rows_.size() || text_rows_[r.value] == npos) return std::nullopt;
  return features_.relations.text->row(text_rows_[r.value]);
}

std::optional<std::span<const double>> Encoder::relation_graph(RelationId r) const {
  if (!features_.relations.graph || r.value >= graph_rows_.size() || graph_rows_[r.value] == npos) {
    return std::nullopt;
  }
  return features_.relations.graph->row(graph_rows_[r.value]);
}

std::vector<double> Encoder::encode_relation(RelationId r) const {
  if (!has_relation(r)) {
    throw Error("no feature row for relation '" +
                (r.value < vocab_.relations.size() ? vocab_.relations.name(r.value) : std::string("?")) + "'");
  }
  return kgind::encode_relation(params_, relation_text(r), relation_graph(r));
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  for (const auto& p : params.projections) g.projections.emplace_back(p.weights.size(), 0.0);
  return g;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& p : projections) {
    for (double x : p) m = std::max(m, std::abs(x));
  }
  for (const auto& [k, row] : token_rows) {
    for (double x : row) m = std::max(m, std::abs(x));
  }
  return m;
}

namespace {

// Encoded vectors and their accumulated gradients for the ids touched by a batch.
struct Workspace {
  std::size_t width;
  std::unordered_map<std::uint32_t, std::size_t> slot;
  std::vector<std::uint32_t> ids;
  std::vector<double> values;
  std::vector<double> grads;

  explicit Workspace(std::size_t w) : width(w) {}

  template <class Encode>
  std::size_t get(std::uint32_t id, Encode&& encode) {
    auto [it, inserted] = slot.emplace(id, ids.size());
    if (inserted) {
      ids.push_back(id);
      const auto v = encode();
      values.insert(values.end(), v.begin(), v.end());
      grads.resize(values.size(), 0.0);
    }
    return it->second;
  }
  std::span<const double> value(std::size_t i) const {
    return std::span<const double>(values).subspan(i * width, width);
  }
  std::span<double> grad(std::size_t i) { return std::span<double>(grads).subspan(i * width, width); }
};

void add_outer(std::vector<double>& grad_w, std::span<const double> g, std::span<const double> f) {
  const std::size_t in = f.size();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 0.0) continue;
    double* row = &grad_w[i * in];
    for (std::size_t k = 0; k < in; ++k) row[k] += g[i] * f[k];
  }
}

BatchResult run_batch(const ModelParams& params, const Encoder& encoder, std::span<const TrainingExample> batch,
                      const LossConfig& loss, bool with_gradients) {
  const auto& cfg = params.config;
  const std::size_t width = cfg.output_dim();
  const std::size_t d = cfg.dim;
  Workspace ents(width);
  Workspace rels(width);
  auto entity = [&](EntityId e) { return ents.get(e.value, [&] { return encoder.encode_entity(e); }); };
  auto relation = [&](RelationId r) { return rels.get(r.value, [&] { return encoder.encode_relation(r); }); };

  BatchResult result;
  for (const auto& ex : batch) result.pairs += ex.negatives.size();

  // Resolve every id first so spans into the workspaces stay valid below.
  for (const auto& ex : batch) {
    entity(ex.positive.head);
    entity(ex.positive.tail);
    relation(ex.positive.relation);
    for (const auto& n : ex.negatives) {
      entity(n.head);
      entity(n.tail);
      if (n.relation != ex.positive.relation) relation(n.relation);
    }
  }

  double total = 0.0;
  const double inv_pairs = result.pairs > 0 ? 1.0 / static_cast<double>(result.pairs) : 0.0;
  for (const auto& ex : batch) {
    const auto ph = ents.slot.at(ex.positive.head.value);
    const auto pt = ents.slot.at(ex.positive.tail.value);
    const auto pr = rels.slot.at(ex.positive.relation.value);
    const double sp = score(cfg.scorer, ents.value(ph), rels.value(pr), ents.value(pt));
    for (const auto& n : ex.negatives) {
      const auto nh = ents.slot.at(n.head.value);
      const auto nt = ents.slot.at(n.tail.value);
      const auto nr = rels.slot.at(n.relation.value);
      const double sn = score(cfg.scorer, ents.value(nh), rels.value(nr), ents.value(nt));
      const auto pl = pair_loss(loss.kind, sp, sn, loss.margin);
      total += pl.value;
      if (!with_gradients) continue;
      if (pl.d_positive != 0.0) {
        score_gradient(cfg.scorer, ents.value(ph), rels.value(pr), ents.value(pt), pl.d_positive * inv_pairs,
                       ents.grad(ph), rels.grad(pr), ents.grad(pt));
      }
      if (pl.d_negative != 0.0) {
        score_gradient(cfg.scorer, ents.value(nh), rels.value(nr), ents.value(nt), pl.d_negative * inv_pairs,
                       ents.grad(nh), rels.grad(nr), ents.grad(nt));
      }
    }
  }
  result.loss = total * inv_pairs;

  for (const auto& p : params.projections) {
    double sq = 0.0;
    for (double w : p.weights) sq += w * w;
    result.loss += 0.5 * loss.l2 * sq;
  }
  if (!with_gradients) return result;

  result.gradients = Gradients::zeros_like(params);
  auto& gproj = result.gradients.projections;
  const bool concat = cfg.mode == RelationFeatureMode::concat;

  std::vector<double> ge(d);
  for (std::size_t i = 0; i < ents.ids.size(); ++i) {
    const auto g = ents.grad(i);
    for (std::size_t k = 0; k < d; ++k) ge[k] = g[k] + (concat ? g[d + k] : 0.0);
    const EntityId e{ents.ids[i]};
    const auto f = encoder.entity_features(e);
    add_outer(gproj[params.entity_slot], ge, f);
    if (params.token_table) {
      const auto tokens = encoder.entity_tokens(e);
      if (tokens.empty()) continue;
      const auto& w = params.entity_projection();
      std::vector<double> gf(w.in_dim, 0.0);
      for (std::size_t r = 0; r < d; ++r) {
        if (ge[r] == 0.0) continue;
        for (std::size_t k = 0; k < w.in_dim; ++k) gf[k] += ge[r] * w.weights[r * w.in_dim + k];
      }
      const double share = 1.0 / static_cast<double>(tokens.size());
      for (auto tok : tokens) {
        auto& row = result.gradients.token_rows[tok];
        row.resize(w.in_dim, 0.0);
        for (std::size_t k = 0; k < w.in_dim; ++k) row[k] += gf[k] * share;
      }
    }
  }

  for (std::size_t i = 0; i < rels.ids.size(); ++i) {
    const auto g = std::span<const double>(rels.grads).subspan(i * width, width);
    const RelationId r{rels.ids[i]};
    switch (cfg.mode) {
      case RelationFeatureMode::text_only:
        add_outer(gproj[params.relation_text_slot], g, *encoder.relation_text(r));
        break;
      case RelationFeatureMode::graph_only:
        add_outer(gproj[params.relation_graph_slot], g, *encoder.relation_graph(r));
        break;
      case RelationFeatureMode::concat:
        add_outer(gproj[params.relation_text_slot], g.first(d), *encoder.relation_text(r));
        add_outer(gproj[params.relation_graph_slot], g.subspan(d, d), *encoder.relation_graph(r));
        break;
    }
  }

  if (loss.l2 != 0.0) {
    for (std::size_t p = 0; p < params.projections.size(); ++p) {
      const auto& w = params.projections[p].weights;
      for (std::size_t k = 0; k < w.size(); ++k) gproj[p][k] += loss.l2 * w[k];
    }
  }
  return result;
}

}  // namespace

BatchResult backward(const ModelParams& params, const Encoder& encoder, std::span<const TrainingExample> batch,
                     const LossConfig& loss) {
  return run_batch(params, encoder, batch, loss, true);
}

double batch_loss(const ModelParams& params, const Encoder& encoder, std::span<const TrainingExample> batch,
                  const LossConfig& loss) {
  return run_batch(params, encoder, batch, loss, false).loss;
}

}  // namespace kgind
