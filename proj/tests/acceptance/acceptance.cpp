// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero when any required criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "kgind/cli.hpp"
#include "kgind/datasetgen.hpp"
#include "kgind/evaluator.hpp"
#include "kgind/gradcheck.hpp"
#include "kgind/log.hpp"
#include "kgind/relwalk.hpp"
#include "kgind/trainer.hpp"
#include "kgind/weidner.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace kgind;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (seconds >= limit_seconds) {
    out.pass = false;
    out.detail += "; exceeded " + std::to_string(limit_seconds) + " s";
  }
  if (!out.pass) ++failures;
  std::printf("[%s] %d. %s (%.2f s) %s\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), seconds, out.detail.c_str());
  std::fflush(stdout);
}

std::string edge_string(const RelationNetwork& n) {
  std::ostringstream s;
  for (const auto& e : n.edges()) s << n.name(e.source) << "->" << n.name(e.target) << ":" << e.weight << " ";
  return s.str();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// 1 ------------------------------------------------------------------------
Outcome five_triple_network() {
  const std::vector<StringTriple> triples{
      {"e1", "r1", "e1"}, {"e1", "r2", "e2"}, {"e1", "r4", "e4"}, {"e2", "r3", "e3"}, {"e2", "r2", "e4"}};
  const std::set<std::string> expected{"r1\tr2\t2", "r1\tr4\t2", "r2\tr1\t1", "r2\tr2\t1", "r2\tr3\t2",
                                       "r2\tr4\t2", "r3\tr2\t1", "r4\tr1\t1", "r4\tr2\t2"};
  const auto dir = fs::temp_directory_path() / "kgind_accept_five";
  fs::create_directories(dir);
  write_triples(dir / "in.tsv", triples);
  std::ostringstream sink;
  const int status = run_cli({"weidner", (dir / "in.tsv").string(), (dir / "net.tsv").string()}, sink);
  if (status != 0) return {false, "weidner command exited with " + std::to_string(status)};
  std::ifstream in(dir / "net.tsv");
  std::set<std::string> lines;
  std::size_t count = 0;
  for (std::string line; std::getline(in, line);) {
    lines.insert(line);
    ++count;
  }
  fs::remove_all(dir);
  const auto network = build_network(build_graph(triples));
  const bool ok = lines == expected && count == 9 && network.edge_count() == 9;
  return {ok, "edges: " + edge_string(network)};
}

// 2 ------------------------------------------------------------------------
Outcome weidner_oracle() {
  std::size_t max_edges = 0;
  for (std::uint64_t g = 0; g < 100; ++g) {
    std::mt19937_64 rng(1000 + g);
    const std::size_t entities = 2 + rng() % 29;
    const std::size_t relations = 1 + rng() % 8;
    const std::size_t count = 1 + rng() % 200;
    const auto graph = build_graph(testing::random_triples(rng(), entities, relations, count));
    const auto fast = build_network(graph);
    const auto slow = naive_network_oracle(graph);
    if (fast.names() != slow.names() || !std::equal(fast.edges().begin(), fast.edges().end(), slow.edges().begin(),
                                                    slow.edges().end())) {
      return {false, "graph " + std::to_string(g) + " differs"};
    }
    max_edges = std::max(max_edges, fast.edge_count());
  }
  return {true, "100 graphs equal edge-for-edge (largest " + std::to_string(max_edges) + " edges)"};
}

// 3 ------------------------------------------------------------------------
Outcome walk_convergence() {
  const std::vector<testing::WeightedEdge> edges{
      {"a", "b", 3}, {"a", "c", 1}, {"b", "a", 2}, {"b", "c", 4}, {"b", "d", 1}, {"c", "a", 1},
      {"c", "d", 2}, {"c", "e", 5}, {"d", "b", 1}, {"d", "e", 2}, {"e", "a", 2}, {"e", "c", 1}};
  const std::vector<std::string> names{"a", "b", "c", "d", "e"};
  std::vector<RelationNetwork::Edge> net_edges;
  for (const auto& [s, t, w] : edges) {
    const auto si = static_cast<std::uint32_t>(std::find(names.begin(), names.end(), s) - names.begin());
    const auto ti = static_cast<std::uint32_t>(std::find(names.begin(), names.end(), t) - names.begin());
    net_edges.push_back({si, ti, static_cast<std::uint64_t>(w)});
  }
  const RelationNetwork network(names, net_edges);
  constexpr double p = 0.5;
  constexpr double q = 2.0;
  constexpr int kSteps = 100000;
  double worst = 0.0;
  std::size_t checked = 0;
  Rng rng(2024);
  auto check = [&](std::optional<std::uint32_t> prev, std::uint32_t current) {
    const auto expected = testing::walk_probabilities(
        edges, prev ? std::optional<std::string>(names[*prev]) : std::nullopt, names[current], p, q);
    std::map<std::string, int> counts;
    for (int i = 0; i < kSteps; ++i) ++counts[names[sample_next(network, prev, current, p, q, rng)]];
    for (const auto& [target, prob] : expected) {
      worst = std::max(worst, std::abs(static_cast<double>(counts[target]) / kSteps - prob));
      ++checked;
    }
    for (const auto& [target, c] : counts) {
      if (!expected.contains(target)) worst = 1.0;
    }
  };
  for (std::uint32_t c = 0; c < names.size(); ++c) check(std::nullopt, c);
  for (const auto& e : net_edges) check(e.source, e.target);
  return {worst <= 0.01, "max |empirical - expected| = " + fmt(worst) + " over " + std::to_string(checked) +
                             " probabilities, 1e5 steps each"};
}

// 4 ------------------------------------------------------------------------
Outcome gradient_check() {
  double worst = 0.0;
  std::string where;
  std::uint64_t cell = 0;
  for (auto scorer : {Scorer::transe_l1, Scorer::transe_l2, Scorer::complex}) {
    for (auto loss : {LossKind::margin, LossKind::nll}) {
      for (int i = 0; i < 100; ++i) {
        const auto c = make_gradcheck_case(scorer, loss, 77 + 1000 * cell + i);
        if (c.params.config.output_dim() > 16) return {false, "case wider than 16"};
        ModelParams params = c.params;
        const Encoder encoder(params, c.features, *c.vocab);
        const auto analytic = backward(params, encoder, c.batch, c.loss);
        auto compare = [&](double& x, double a) {
          const double saved = x;
          const double n = testing::central_derivative(
              [&](double v) {
                x = v;
                return batch_loss(params, encoder, c.batch, c.loss);
              },
              saved, 1e-4);
          x = saved;
          const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
          if (err > worst) {
            worst = err;
            where = std::string(to_string(scorer)) + "/" + std::string(to_string(loss));
          }
        };
        for (std::size_t p = 0; p < params.projections.size(); ++p) {
          auto& w = params.projections[p].weights;
          for (std::size_t k = 0; k < w.size(); ++k) compare(w[k], analytic.gradients.projections[p][k]);
        }
        if (params.token_table) {
          for (std::size_t row = 0; row < params.token_table->rows(); ++row) {
            auto it = analytic.gradients.token_rows.find(row);
            auto values = params.token_table->mutable_row(row);
            for (std::size_t k = 0; k < values.size(); ++k) {
              compare(values[k], it == analytic.gradients.token_rows.end() ? 0.0 : it->second[k]);
            }
          }
        }
      }
      ++cell;
    }
  }
  return {worst < 1e-4, "max relative error " + fmt(worst) + " (" + where + "), 600 configs"};
}

// 5 ------------------------------------------------------------------------
Outcome learnability() {
  const auto world = testing::transe_world(5);
  const auto splits = build_splits(world.train, {}, world.test);
  const auto setting = classify_setting(splits);
  auto entities = std::make_shared<const FeatureMatrix>(build_onehot_features(splits.vocab->entities.names()));
  auto relations = std::make_shared<const FeatureMatrix>(build_onehot_features(splits.vocab->relations.names()));
  const auto contexts = make_split_contexts(entities, nullptr, relations, nullptr, RelationFeatureMode::text_only);

  ModelConfig model;
  model.scorer = Scorer::transe_l2;
  model.dim = 16;
  model.mode = RelationFeatureMode::text_only;
  model.entity_input_dim = entities->dim();
  model.relation_text_dim = relations->dim();
  TrainConfig config;
  config.epochs = 300;
  config.batch_size = 64;
  config.learning_rate = 0.02;
  config.negatives_per_positive = 64;
  config.margin = 1.0;
  config.eval_every = 0;
  config.seed = 5;
  const auto result = train(splits, contexts, model, config);

  const Encoder encoder(result.final_params, contexts.test, *splits.vocab);
  const auto metrics = evaluate(encoder, splits).metrics;
  const double baseline = random_baseline_mrr(splits);
  const bool ok = setting == InductiveSetting::transductive && metrics.mrr >= 0.5 && metrics.mrr >= 10.0 * baseline;
  return {ok, "setting " + std::string(to_string(setting)) + ", filtered MRR " + fmt(metrics.mrr) +
                  ", random-scorer MRR " + fmt(baseline) + " (ratio " + fmt(metrics.mrr / baseline) +
                  "), hits@10 " + fmt(metrics.hits10)};
}

// 6 ------------------------------------------------------------------------
Outcome truly_inductive() {
  const auto world = testing::inductive_world(6);
  const auto splits = build_splits(world.train, world.valid, world.test);
  const auto setting = classify_setting(splits);
  if (setting != InductiveSetting::truly_inductive) return {false, "setting is " + std::string(to_string(setting))};

  const TokenVocabulary words(world.word_vectors);
  std::vector<TextRecord> records;
  for (const auto& name : splits.vocab->entities.names()) {
    auto it = std::find_if(world.entity_text.begin(), world.entity_text.end(),
                           [&](const TextRecord& r) { return r.id == name; });
    records.push_back(*it);
  }
  auto bow = build_bow_features(records, words);
  auto entities = std::make_shared<const FeatureMatrix>(bow.matrix);

  WalkConfig walk;
  walk.dim = 16;
  walk.epochs = 20;
  walk.num_walks_per_node = 20;
  walk.seed = 6;
  const auto graph = prepare_split_graph_features(splits, walk);
  const auto contexts = make_split_contexts(entities, nullptr, nullptr, &graph, RelationFeatureMode::graph_only);

  ModelConfig model;
  model.scorer = Scorer::transe_l2;
  model.dim = 16;
  model.mode = RelationFeatureMode::graph_only;
  model.entity_input_dim = entities->dim();
  model.relation_graph_dim = walk.dim;
  TrainConfig config;
  config.epochs = 30;
  config.learning_rate = 0.01;
  config.seed = 6;
  const auto result = train(splits, contexts, model, config);

  const Encoder encoder(result.best_params, contexts.test, *splits.vocab);
  EvalOptions options;
  const auto metrics = evaluate(encoder, splits, options).metrics;
  const double baseline = random_baseline_mrr(splits, options);
  const bool ok = graph.networks_built == 3 && metrics.mrr > baseline;
  return {ok, "networks built " + std::to_string(graph.networks_built) + ", test MRR " + fmt(metrics.mrr) +
                  " vs random-scorer MRR " + fmt(baseline) + " on " +
                  std::to_string(candidate_pool(splits, SplitRole::test, options.policy).size()) + " candidates"};
}

// 7 ------------------------------------------------------------------------
Outcome ranking_oracle() {
  std::size_t queries = 0;
  std::size_t filtered_effect = 0;
  for (auto scorer : {Scorer::transe_l1, Scorer::transe_l2, Scorer::complex}) {
    const auto triples = testing::random_triples(70 + static_cast<int>(scorer), 20, 3, 90);
    std::vector<StringTriple> parts[3];
    for (std::size_t i = 0; i < triples.size(); ++i) parts[i % 3 == 0 ? 2 : i % 5 == 0 ? 1 : 0].push_back(triples[i]);
    // Duplicate (h, r) pairs across splits so filtering has something to remove.
    parts[2].push_back({parts[0][0].head, parts[0][0].relation, parts[0][1].tail});
    const auto splits = build_splits(parts[0], parts[1], parts[2]);
    auto entities = std::make_shared<const FeatureMatrix>(build_onehot_features(splits.vocab->entities.names()));
    auto relations = std::make_shared<const FeatureMatrix>(build_onehot_features(splits.vocab->relations.names()));
    FeatureContext ctx{entities, nullptr, assemble_relation_inputs(relations, nullptr, RelationFeatureMode::text_only)};
    ModelConfig model;
    model.scorer = scorer;
    model.dim = 8;
    model.entity_input_dim = entities->dim();
    model.relation_text_dim = relations->dim();
    const auto params = init_model(model, 7);
    const Encoder encoder(params, ctx, *splits.vocab);
    for (bool filtered : {true, false}) {
      EvalOptions options;
      options.filtered = filtered;
      const auto fast = evaluate(encoder, splits, options);
      const auto slow = brute_force_oracle(encoder, splits, options);
      if (fast.ranks != slow.ranks) return {false, std::string(to_string(scorer)) + ": ranks differ"};
      if (filtered) {
        options.filtered = false;
        const auto raw = evaluate(encoder, splits, options);
        for (std::size_t i = 0; i < raw.ranks.size(); ++i) filtered_effect += raw.ranks[i] != fast.ranks[i];
        queries += fast.ranks.size();
      }
    }
  }
  return {filtered_effect > 0, std::to_string(queries) + " filtered queries equal rank-for-rank across 3 scorers; " +
                                   std::to_string(filtered_effect) + " ranks changed by filtering"};
}

// 8 ------------------------------------------------------------------------
Outcome dataset_invariants() {
  const auto raw = testing::raw_world(8);
  RelationTypeMap types(raw.types.begin(), raw.types.end());
  GenConfig config;
  config.seed = 8;
  const auto a = generate_dataset(raw.triples, types, {}, config);
  const auto b = generate_dataset(raw.triples, types, {}, config);

  std::set<std::string> rels[3];
  for (int p = 0; p < 3; ++p) {
    for (const auto& t : a.parts[p]) rels[p].insert(t.relation);
  }
  for (int x = 0; x < 3; ++x) {
    for (int y = x + 1; y < 3; ++y) {
      for (const auto& r : rels[x]) {
        if (rels[y].contains(r)) return {false, "relation " + r + " appears in two parts"};
      }
    }
  }
  std::size_t min_occ[3];
  for (int p = 0; p < 3; ++p) {
    min_occ[p] = SIZE_MAX;
    for (const auto& [e, c] : testing::entity_occurrences(a.after_kcore[p])) min_occ[p] = std::min(min_occ[p], c);
    if (min_occ[p] < config.k[p]) return {false, "entity below k in part " + std::to_string(p)};
    const auto [share, rel] = testing::max_position_share(a.parts[p]);
    if (share >= config.skew_threshold) return {false, "relation " + rel + " is skewed (" + fmt(share) + ")"};
  }
  if (a.parts != b.parts || a.stats != b.stats) return {false, "two runs with the same seed differ"};
  std::ostringstream d;
  d << raw.triples.size() << " raw triples -> parts " << a.parts[0].size() << "/" << a.parts[1].size() << "/"
    << a.parts[2].size() << " triples, " << rels[0].size() << "/" << rels[1].size() << "/" << rels[2].size()
    << " relations; min entity occurrence after k-core " << min_occ[0] << "/" << min_occ[1] << "/" << min_occ[2];
  return {!a.parts[0].empty() && !a.parts[1].empty() && !a.parts[2].empty(), d.str()};
}

// 9 ------------------------------------------------------------------------
// Expects train/valid/test.tsv, entity_text.tsv, relation_text.tsv and
// vectors.txt (word vectors) in the directory.
Outcome fb15k237_baseline(const fs::path& dir) {
  const auto out = fs::temp_directory_path() / "kgind_acceptance_fb15k237";
  fs::remove_all(out);
  std::ostringstream sink;
  const std::vector<std::string> train_args{
      "train",           "--splits",          dir.string(),
      "--out",           out.string(),        "--entity-features",
      "bow",             "--entity-text",     (dir / "entity_text.tsv").string(),
      "--relation-features", "bow",           "--relation-text",
      (dir / "relation_text.tsv").string(),   "--word-vectors",
      (dir / "vectors.txt").string(),         "--epochs",
      "80",              "--batch-size",      "64",
      "--lr",            "1e-3",              "--negatives",
      "64",              "--eval-every",      "10"};
  if (run_cli(train_args, sink) != 0) return {false, "training failed"};
  std::ostringstream metrics;
  if (run_cli({"eval", "--run", out.string()}, metrics) != 0) return {false, "evaluation failed"};
  const double mrr = nlohmann::json::parse(metrics.str()).at("mrr").get<double>();
  return {std::abs(mrr - 0.1464) <= 0.03, "test MRR " + fmt(mrr) + " vs 0.1464 +/- 0.03"};
}

}  // namespace

int main() {
  log::set_sink(nullptr);
  report(1, "Five-triple network exactness", 1.0, five_triple_network);
  report(2, "Relation-network oracle equivalence", 10.0, weidner_oracle);
  report(3, "Walk-distribution convergence", 30.0, walk_convergence);
  report(4, "Gradient check", 60.0, gradient_check);
  report(5, "Synthetic learnability", 300.0, learnability);
  report(6, "Truly-inductive smoke", 300.0, truly_inductive);
  report(7, "Ranking oracle equivalence", 5.0, ranking_oracle);
  report(8, "Dataset-pipeline invariants", 30.0, dataset_invariants);
  int required = 8;
  if (const char* dir = std::getenv("KGIND_FB15K237_DIR")) {
    ++required;
    report(9, "Approximate baseline reproduction", 1e9, [&] { return fb15k237_baseline(dir); });
  } else {
    std::printf("[SKIP] 9. Approximate baseline reproduction (multi-hour; set KGIND_FB15K237_DIR to run)\n");
  }
  std::printf("%s: %d of %d required criteria failed\n", failures == 0 ? "OK" : "FAILED", failures, required);
  return failures == 0 ? 0 : 1;
}
