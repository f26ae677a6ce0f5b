#include "kgind/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kgind {

namespace {

constexpr double kMinL2Residual = 0.1;

double uniform_pm(Rng& rng, double scale) { return (2.0 * uniform01(rng) - 1.0) * scale; }

std::size_t uniform_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform_index(rng, hi - lo + 1));
}

std::shared_ptr<FeatureMatrix> random_matrix(const Vocabulary& names, std::size_t dim, FeatureSource source,
                                             Rng& rng) {
  auto m = std::make_shared<FeatureMatrix>(dim, source);
  std::vector<double> row(dim);
  for (const auto& name : names.names()) {
    for (double& x : row) x = uniform_pm(rng, 1.0);
    m->add_row(name, row);
  }
  return m;
}

// True when every loss term and every L1/L2 residual is clear of its kink.
bool clear_of_kinks(const GradcheckCase& c, double clearance) {
  const Encoder encoder(c.params, c.features, *c.vocab);
  const auto scorer = c.params.config.scorer;
  auto residual_ok = [&](const Triple& t) {
    if (scorer == Scorer::complex) return true;
    const auto h = encoder.encode_entity(t.head);
    const auto r = encoder.encode_relation(t.relation);
    const auto tl = encoder.encode_entity(t.tail);
    double sq = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double x = h[i] + r[i] - tl[i];
      if (scorer == Scorer::transe_l1 && std::abs(x) < clearance) return false;
      sq += x * x;
    }
    // The L2 norm's curvature grows as 1/norm; keep it well conditioned.
    return std::sqrt(sq) >= kMinL2Residual;
  };
  auto triple_score = [&](const Triple& t) {
    return score(scorer, encoder.encode_entity(t.head), encoder.encode_relation(t.relation),
                 encoder.encode_entity(t.tail));
  };
  for (const auto& ex : c.batch) {
    if (!residual_ok(ex.positive)) return false;
    const double sp = triple_score(ex.positive);
    for (const auto& n : ex.negatives) {
      if (!residual_ok(n)) return false;
      if (c.loss.kind == LossKind::margin && std::abs(c.loss.margin - sp + triple_score(n)) < clearance) {
        return false;
      }
    }
  }
  return true;
}

GradcheckCase draw_case(Scorer scorer, LossKind loss, Rng& rng) {
  GradcheckCase c;
  c.vocab = std::make_shared<Vocabularies>();
  const std::size_t n_entities = uniform_between(rng, 3, 6);
  const std::size_t n_relations = uniform_between(rng, 1, 3);
  for (std::size_t i = 0; i < n_entities; ++i) c.vocab->entities.intern("e" + std::to_string(i));
  for (std::size_t i = 0; i < n_relations; ++i) c.vocab->relations.intern("r" + std::to_string(i));

  ModelConfig config;
  config.scorer = scorer;
  config.mode = static_cast<RelationFeatureMode>(uniform_index(rng, 3));
  config.sharing = static_cast<SharingPolicy>(uniform_index(rng, 3));
  const bool concat = config.mode == RelationFeatureMode::concat;
  // Encoded width stays at most 16.
  const std::size_t max_dim = concat ? 8 : 16;
  config.dim = uniform_between(rng, 1, max_dim);
  if (scorer == Scorer::complex && config.output_dim() % 2 != 0) config.dim = config.dim == 1 ? 2 : config.dim - 1;
  config.entity_input_dim = uniform_between(rng, 2, 6);
  config.relation_text_dim = uniform_between(rng, 2, 6);
  config.relation_graph_dim = uniform_between(rng, 2, 6);
  if (config.sharing == SharingPolicy::shared) {
    config.relation_text_dim = config.relation_graph_dim = config.entity_input_dim;
  } else if (config.sharing == SharingPolicy::separate) {
    config.relation_graph_dim = config.relation_text_dim;
  }
  if (config.mode == RelationFeatureMode::text_only) config.relation_graph_dim = 0;
  if (config.mode == RelationFeatureMode::graph_only) config.relation_text_dim = 0;
  config.trainable_tokens = uniform_index(rng, 3) == 0;

  std::shared_ptr<const FeatureMatrix> text;
  std::shared_ptr<const FeatureMatrix> graph;
  if (config.relation_text_dim > 0) {
    text = random_matrix(c.vocab->relations, config.relation_text_dim, FeatureSource::bow, rng);
  }
  if (config.relation_graph_dim > 0) {
    graph = random_matrix(c.vocab->relations, config.relation_graph_dim, FeatureSource::graph, rng);
  }
  c.features.relations = assemble_relation_inputs(text, graph, config.mode);

  std::optional<FeatureMatrix> tokens;
  if (config.trainable_tokens) {
    Vocabulary token_names;
    const std::size_t n_tokens = uniform_between(rng, 2, 6);
    for (std::size_t i = 0; i < n_tokens; ++i) token_names.intern("w" + std::to_string(i));
    tokens = *random_matrix(token_names, config.entity_input_dim, FeatureSource::bow, rng);
    auto lists = std::make_shared<std::vector<std::vector<std::size_t>>>();
    auto means = std::make_shared<FeatureMatrix>(config.entity_input_dim, FeatureSource::bow);
    for (const auto& name : c.vocab->entities.names()) {
      std::vector<std::size_t> list;
      const std::size_t len = uniform_between(rng, 0, 3);
      for (std::size_t k = 0; k < len; ++k) list.push_back(uniform_index(rng, n_tokens));
      std::vector<double> mean(config.entity_input_dim, 0.0);
      for (auto tok : list) {
        const auto v = tokens->row(tok);
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v[k] / static_cast<double>(list.size());
      }
      means->add_row(name, mean);
      lists->push_back(std::move(list));
    }
    c.features.entities = means;
    c.features.entity_tokens = lists;
  } else {
    c.features.entities = random_matrix(c.vocab->entities, config.entity_input_dim, FeatureSource::bow, rng);
  }

  c.params = init_model(config, rng(), tokens ? &*tokens : nullptr);

  auto random_triple = [&] {
    return Triple{EntityId{static_cast<std::uint32_t>(uniform_index(rng, n_entities))},
                  RelationId{static_cast<std::uint32_t>(uniform_index(rng, n_relations))},
                  EntityId{static_cast<std::uint32_t>(uniform_index(rng, n_entities))}};
  };
  const std::size_t examples = uniform_between(rng, 1, 3);
  for (std::size_t i = 0; i < examples; ++i) {
    TrainingExample ex{random_triple(), {}};
    const std::size_t negs = uniform_between(rng, 1, 3);
    for (std::size_t k = 0; k < negs; ++k) {
      Triple n = ex.positive;
      const auto e = EntityId{static_cast<std::uint32_t>(uniform_index(rng, n_entities))};
      (uniform_index(rng, 2) == 0 ? n.head : n.tail) = e;
      ex.negatives.push_back(n);
    }
    c.batch.push_back(std::move(ex));
  }

  c.loss.kind = loss;
  c.loss.margin = 0.5 + uniform01(rng);
  c.loss.l2 = uniform_index(rng, 2) == 0 ? 0.0 : 0.05 * uniform01(rng);
  return c;
}

}  // namespace

GradcheckCase make_gradcheck_case(Scorer scorer, LossKind loss, std::uint64_t seed, double kink_clearance) {
  Rng rng(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto c = draw_case(scorer, loss, rng);
    if (clear_of_kinks(c, kink_clearance)) return c;
  }
  throw Error("gradcheck: could not draw a case away from non-differentiable points");
}

double gradient_relative_error(const GradcheckCase& c, double step, double floor, double corrupt_scale) {
  ModelParams params = c.params;
  const Encoder encoder(params, c.features, *c.vocab);
  const auto analytic = backward(params, encoder, c.batch, c.loss);
  double worst = 0.0;
  auto check = [&](double& x, double a) {
    const double saved = x;
    auto at = [&](double offset) {
      x = saved + offset;
      return batch_loss(params, encoder, c.batch, c.loss);
    };
    // Fourth-order central stencil; the loss can be cubic in one weight.
    const double near = at(step) - at(-step);
    const double far = at(2.0 * step) - at(-2.0 * step);
    x = saved;
    const double numeric = (8.0 * near - far) / (12.0 * step);
    a *= corrupt_scale;
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    worst = std::max(worst, err);
  };
  for (std::size_t p = 0; p < params.projections.size(); ++p) {
    auto& w = params.projections[p].weights;
    for (std::size_t k = 0; k < w.size(); ++k) check(w[k], analytic.gradients.projections[p][k]);
  }
  if (params.token_table) {
    auto& table = *params.token_table;
    for (std::size_t row = 0; row < table.rows(); ++row) {
      const auto it = analytic.gradients.token_rows.find(row);
      auto values = table.mutable_row(row);
      for (std::size_t k = 0; k < values.size(); ++k) {
        check(values[k], it == analytic.gradients.token_rows.end() ? 0.0 : it->second[k]);
      }
    }
  }
  return worst;
}

bool GradcheckReport::passed() const {
  return std::all_of(cells.begin(), cells.end(),
                     [&](const Cell& c) { return c.configs > 0 && c.max_relative_error < tolerance; });
}

nlohmann::json GradcheckReport::to_json() const {
  nlohmann::json out = {{"tolerance", tolerance}, {"passed", passed()}, {"cells", nlohmann::json::array()}};
  for (const auto& c : cells) {
    out["cells"].push_back({{"scorer", to_string(c.scorer)},
                            {"loss", to_string(c.loss)},
                            {"configs", c.configs},
                            {"max_relative_error", c.max_relative_error}});
  }
  return out;
}

GradcheckReport run_gradcheck(std::size_t configs_per_cell, std::uint64_t seed, double tolerance,
                              double corrupt_scale) {
  GradcheckReport report;
  report.tolerance = tolerance;
  std::uint64_t cell_index = 0;
  for (auto scorer : {Scorer::transe_l1, Scorer::transe_l2, Scorer::complex}) {
    for (auto loss : {LossKind::margin, LossKind::nll}) {
      GradcheckReport::Cell cell{scorer, loss, 0, 0.0};
      for (std::size_t i = 0; i < configs_per_cell; ++i) {
        const auto c = make_gradcheck_case(scorer, loss, substream_seed(seed, "gradcheck", cell_index * 100003 + i));
        cell.max_relative_error = std::max(cell.max_relative_error, gradient_relative_error(c, 1e-4, 1e-6, corrupt_scale));
        ++cell.configs;
      }
      report.cells.push_back(cell);
      ++cell_index;
    }
  }
  return report;
}

}  // namespace kgind
