#include "kgind/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgind/checkpoint.hpp"
#include "kgind/datasetgen.hpp"
#include "kgind/evaluator.hpp"
#include "kgind/features.hpp"
#include "kgind/gradcheck.hpp"
#include "kgind/log.hpp"
#include "kgind/relwalk.hpp"
#include "kgind/trainer.hpp"
#include "kgind/weidner.hpp"

namespace kgind {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// JSON config files: top-level keys set global options, objects named after
// a subcommand set that subcommand's options. Keys are long option names;
// underscores and dashes are interchangeable.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value: " + v.dump());
  }

  static void collect(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      std::string name = key;
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(name);
        collect(value, nested, items);
        continue;
      }
      std::replace(name.begin(), name.end(), '_', '-');
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = name;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool deterministic = false;

  unsigned effective_threads() const { return deterministic ? 1u : resolve_threads(threads); }
};

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string absolute_or_empty(const std::string& p) { return p.empty() ? p : fs::absolute(p).string(); }

void add_walk_options(CLI::App* cmd, WalkConfig& walk) {
  cmd->add_option("--walk-dim", walk.dim, "Relation embedding width")->capture_default_str();
  cmd->add_option("--walks-per-node", walk.num_walks_per_node)->capture_default_str();
  cmd->add_option("--walk-length", walk.walk_length)->capture_default_str();
  cmd->add_option("--window", walk.window_size, "Skip-gram context window")->capture_default_str();
  cmd->add_option("--p", walk.p, "Return parameter")->capture_default_str();
  cmd->add_option("--q", walk.q, "In-out parameter")->capture_default_str();
  cmd->add_option("--walk-epochs", walk.epochs)->capture_default_str();
  cmd->add_option("--walk-negatives", walk.negatives_per_positive)->capture_default_str();
  cmd->add_option("--walk-lr", walk.learning_rate)->capture_default_str();
}

// Where entity and relation text features come from.
struct FeatureSpec {
  std::string entity_source = "onehot";  // bow | onehot | file
  std::string entity_text;
  std::string entity_file;
  std::string relation_source = "onehot";
  std::string relation_text;
  std::string relation_file;
  std::string word_vectors;
  bool labels_only = false;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--entity-features", entity_source, "bow, onehot or file")
        ->check(CLI::IsMember({"bow", "onehot", "file"}))
        ->capture_default_str();
    cmd->add_option("--entity-text", entity_text, "Entity id/label/description file")->check(CLI::ExistingFile);
    cmd->add_option("--entity-feature-file", entity_file)->check(CLI::ExistingFile);
    cmd->add_option("--relation-features", relation_source, "bow, onehot or file")
        ->check(CLI::IsMember({"bow", "onehot", "file"}))
        ->capture_default_str();
    cmd->add_option("--relation-text", relation_text, "Relation id/label/description file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--relation-feature-file", relation_file)->check(CLI::ExistingFile);
    cmd->add_option("--word-vectors", word_vectors, "Pretrained word vector file")->check(CLI::ExistingFile);
    cmd->add_flag("--labels-only", labels_only, "Bag of words over labels only");
  }

  void validate(bool need_relation_text, bool trainable_tokens) const {
    auto check = [&](const std::string& source, const std::string& text, const std::string& file,
                     const char* what) {
      if (source == "bow" && (text.empty() || word_vectors.empty())) {
        throw Error(std::string(what) + " bow features need --" + what + "-text and --word-vectors");
      }
      if (source == "file" && file.empty()) {
        throw Error(std::string(what) + " file features need --" + what + "-feature-file");
      }
    };
    check(entity_source, entity_text, entity_file, "entity");
    if (need_relation_text) check(relation_source, relation_text, relation_file, "relation");
    if (trainable_tokens && entity_source != "bow") throw Error("trainable tokens need bow entity features");
  }

  json to_json() const {
    return {{"entity_features", entity_source},      {"entity_text", entity_text},
            {"entity_feature_file", entity_file},    {"relation_features", relation_source},
            {"relation_text", relation_text},        {"relation_feature_file", relation_file},
            {"word_vectors", word_vectors},          {"labels_only", labels_only}};
  }

  static FeatureSpec from_json(const json& j) {
    FeatureSpec s;
    s.entity_source = j.value("entity_features", s.entity_source);
    s.entity_text = j.value("entity_text", s.entity_text);
    s.entity_file = j.value("entity_feature_file", s.entity_file);
    s.relation_source = j.value("relation_features", s.relation_source);
    s.relation_text = j.value("relation_text", s.relation_text);
    s.relation_file = j.value("relation_feature_file", s.relation_file);
    s.word_vectors = j.value("word_vectors", s.word_vectors);
    s.labels_only = j.value("labels_only", s.labels_only);
    return s;
  }

  FeatureSpec absolute() const {
    FeatureSpec s = *this;
    for (auto* p : {&s.entity_text, &s.entity_file, &s.relation_text, &s.relation_file, &s.word_vectors}) {
      *p = absolute_or_empty(*p);
    }
    return s;
  }
};

struct LoadedFeatures {
  std::shared_ptr<const FeatureMatrix> entities;
  std::shared_ptr<const std::vector<std::vector<std::size_t>>> entity_tokens;
  std::optional<FeatureMatrix> token_table;
  std::shared_ptr<const FeatureMatrix> relation_text;
};

FeatureMatrix text_features(const std::string& source, const std::vector<std::string>& ids,
                            const std::string& text_path, const std::string& file_path,
                            const std::optional<TokenVocabulary>& words, bool labels_only, const char* what,
                            std::vector<std::vector<std::size_t>>* tokens) {
  if (source == "onehot") return build_onehot_features(ids);
  if (source == "file") {
    const auto all = load_feature_file(file_path);
    std::vector<std::string> missing;
    for (const auto& id : ids) {
      if (!all.contains(id)) missing.push_back(id);
    }
    if (!missing.empty()) {
      throw Error(file_path + ": no feature row for " + std::to_string(missing.size()) + " " + what +
                  " id(s), first '" + missing.front() + "'");
    }
    return all.subset(ids);
  }
  std::unordered_map<std::string, TextRecord> by_id;
  for (auto& r : load_text_records(text_path)) by_id.emplace(r.id, std::move(r));
  std::vector<TextRecord> records;
  std::size_t missing = 0;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      ++missing;
      records.push_back({id, "", ""});
    } else {
      records.push_back(it->second);
    }
  }
  if (missing > 0) log::warn("missing_text_records", {{"kind", what}, {"count", missing}});
  auto bow = build_bow_features(records, *words, !labels_only);
  if (!bow.empty_rows.empty()) log::warn("empty_bow_rows", {{"kind", what}, {"count", bow.empty_rows.size()}});
  if (tokens) *tokens = std::move(bow.token_indices);
  return std::move(bow.matrix);
}

LoadedFeatures load_features(const FeatureSpec& spec, const SplitDataset& splits, bool need_relation_text,
                             bool trainable_tokens) {
  std::optional<TokenVocabulary> words;
  if (spec.entity_source == "bow" || (need_relation_text && spec.relation_source == "bow")) {
    words.emplace(load_token_vocabulary(spec.word_vectors));
  }
  LoadedFeatures out;
  auto tokens = std::make_shared<std::vector<std::vector<std::size_t>>>();
  out.entities = std::make_shared<const FeatureMatrix>(
      text_features(spec.entity_source, splits.vocab->entities.names(), spec.entity_text, spec.entity_file, words,
                    spec.labels_only, "entity", tokens.get()));
  if (spec.entity_source == "bow") out.entity_tokens = tokens;
  if (trainable_tokens) out.token_table = words->matrix();
  if (need_relation_text) {
    out.relation_text = std::make_shared<const FeatureMatrix>(
        text_features(spec.relation_source, splits.vocab->relations.names(), spec.relation_text,
                      spec.relation_file, words, spec.labels_only, "relation", nullptr));
  }
  return out;
}

std::string graph_feature_file(SplitRole role) { return "relation_graph_" + std::string(to_string(role)) + ".txt"; }

constexpr std::array<SplitRole, 3> kRoles{SplitRole::train, SplitRole::valid, SplitRole::test};

void print_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

// --- weidner -----------------------------------------------------------------

struct WeidnerArgs {
  std::string input;
  std::string output;
};

int cmd_weidner(const WeidnerArgs& a, std::ostream& out) {
  const auto file = load_triples(a.input);
  const auto graph = build_graph(file.triples);
  const auto network = build_network(graph);
  ensure_parent(a.output);
  write_network(network, a.output);
  print_json(out, {{"nodes", network.node_count()}, {"edges", network.edge_count()}, {"output", a.output}});
  return 0;
}

// --- embed-relations ----------------------------------------------------------

struct EmbedArgs {
  std::string network;
  std::string triples;
  std::string output;
  WalkConfig walk;
};

int cmd_embed(EmbedArgs a, const Globals& g, std::ostream& out) {
  a.walk.seed = g.seed;
  a.walk.threads = g.effective_threads();
  a.walk.validate();
  const auto network =
      a.network.empty() ? build_network(build_graph(load_triples(a.triples).triples)) : read_network(a.network);
  const auto emb = embed_relations(network, a.walk);
  ensure_parent(a.output);
  write_feature_file(emb.vectors, a.output);
  print_json(out, {{"nodes", emb.vectors.rows()},
                   {"dim", emb.vectors.dim()},
                   {"fallback", emb.fallback},
                   {"network_fingerprint", emb.network_fingerprint},
                   {"output", a.output}});
  return 0;
}

// --- features-bow ------------------------------------------------------------

struct BowArgs {
  std::string text;
  std::string vectors;
  std::string output;
  bool labels_only = false;
};

int cmd_features_bow(const BowArgs& a, std::ostream& out) {
  const auto words = load_token_vocabulary(a.vectors);
  const auto records = load_text_records(a.text);
  const auto bow = build_bow_features(records, words, !a.labels_only);
  if (!bow.empty_rows.empty()) log::warn("empty_bow_rows", {{"count", bow.empty_rows.size()}});
  ensure_parent(a.output);
  write_feature_file(bow.matrix, a.output);
  print_json(out, {{"rows", bow.matrix.rows()},
                   {"dim", bow.matrix.dim()},
                   {"empty_rows", bow.empty_rows.size()},
                   {"output", a.output}});
  return 0;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string splits;
  std::string output;
  FeatureSpec features;
  WalkConfig walk;
  TrainConfig train;
  std::string scorer = "transe_l1";
  std::string sharing = "separate";
  std::string relation_mode = "text_only";
  std::string loss = "margin";
  std::string eval_policy = "all_entities";
  std::size_t dim = 100;
  bool trainable_tokens = false;
};

int cmd_train(TrainArgs a, const Globals& g, std::ostream& out) {
  // Validate everything before any output is written.
  ModelConfig model;
  model.scorer = scorer_from_string(a.scorer);
  model.sharing = sharing_from_string(a.sharing);
  model.mode = relation_feature_mode_from_string(a.relation_mode);
  model.dim = a.dim;
  model.trainable_tokens = a.trainable_tokens;
  a.train.loss = loss_from_string(a.loss);
  a.train.eval_policy = candidate_policy_from_string(a.eval_policy);
  a.train.seed = g.seed;
  a.train.threads = g.effective_threads();
  a.train.validate();
  a.walk.seed = g.seed;
  a.walk.threads = g.effective_threads();
  const bool use_graph = model.mode != RelationFeatureMode::text_only;
  const bool use_text = model.mode != RelationFeatureMode::graph_only;
  if (use_graph) a.walk.validate();
  a.features.validate(use_text, model.trainable_tokens);

  const auto splits = load_split_dir(a.splits);
  const auto features = load_features(a.features, splits, use_text, model.trainable_tokens);
  model.entity_input_dim = features.entities->dim();
  model.relation_text_dim = use_text ? features.relation_text->dim() : 0;
  model.relation_graph_dim = use_graph ? a.walk.dim : 0;
  model.validate();

  std::optional<SplitGraphFeatures> graph;
  if (use_graph) graph = prepare_split_graph_features(splits, a.walk);
  const auto contexts = make_split_contexts(features.entities, features.entity_tokens, features.relation_text,
                                            graph ? &*graph : nullptr, model.mode);

  const fs::path dir = a.output;
  fs::create_directories(dir);
  if (graph) {
    for (auto role : kRoles) write_feature_file(*graph->for_split(role), dir / graph_feature_file(role));
  }
  json run = {{"command", "train"},
              {"seed", g.seed},
              {"splits", fs::absolute(a.splits).string()},
              {"features", a.features.absolute().to_json()},
              {"model", model},
              {"train", a.train},
              {"setting", to_string(splits.test.empty() ? InductiveSetting::transductive : classify_setting(splits))}};
  if (use_graph) {
    run["walk"] = a.walk;
    run["networks_built"] = graph->networks_built;
  }
  write_text(dir / "run.json", run.dump(2) + "\n");

  auto result = train(splits, contexts, model, a.train, features.token_table ? &*features.token_table : nullptr,
                      [](const json& step) { log::emit(log::Level::debug, "train_step", step); });

  std::ostringstream history;
  std::size_t next_snapshot = 0;
  for (std::size_t e = 0; e < result.history.epoch_loss.size(); ++e) {
    json line = {{"epoch", e + 1}, {"loss", result.history.epoch_loss[e]}};
    if (next_snapshot < result.history.validation.size() &&
        result.history.validation[next_snapshot].epoch == e + 1) {
      const auto& m = result.history.validation[next_snapshot++].metrics;
      line["valid"] = {{"mrr", m.mrr}, {"hits1", m.hits1}, {"hits3", m.hits3}, {"hits10", m.hits10}};
    }
    history << line.dump() << '\n';
  }
  write_text(dir / "history.jsonl", history.str());
  write_checkpoint(result.best_params, dir / "checkpoint.best");
  write_checkpoint(result.final_params, dir / "checkpoint.final");

  json summary = {{"epochs", result.history.epoch_loss.size()},
                  {"final_loss", result.history.epoch_loss.empty() ? json(nullptr)
                                                                   : json(result.history.epoch_loss.back())},
                  {"best_epoch", result.best_epoch ? json(*result.best_epoch) : json(nullptr)},
                  {"best_valid_mrr", result.best_epoch ? json(result.best_valid_mrr) : json(nullptr)},
                  {"setting", run["setting"]},
                  {"output", dir.string()}};
  if (use_graph) summary["networks_built"] = graph->networks_built;
  print_json(out, summary);
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string run;
  std::string checkpoint;
  std::string splits;
  std::string split = "test";
  std::string policy = "all_entities";
  std::string output;
  bool unfiltered = false;
  bool check_oracle = false;
  bool per_relation = false;
};

int cmd_eval(const EvalArgs& a, const Globals& g, std::ostream& out) {
  EvalOptions options;
  if (a.split == "test") {
    options.split = SplitRole::test;
  } else if (a.split == "valid") {
    options.split = SplitRole::valid;
  } else {
    throw Error("eval: --split must be valid or test");
  }
  options.policy = candidate_policy_from_string(a.policy);
  options.filtered = !a.unfiltered;
  options.threads = g.effective_threads();

  const fs::path run_dir = a.run;
  const json run = read_json(run_dir / "run.json");
  const fs::path checkpoint = a.checkpoint.empty() ? run_dir / "checkpoint.best" : fs::path(a.checkpoint);
  const auto params = read_checkpoint(checkpoint);
  const auto mode = params.config.mode;
  const bool use_text = mode != RelationFeatureMode::graph_only;
  const auto spec = FeatureSpec::from_json(run.at("features"));
  spec.validate(use_text, params.config.trainable_tokens);

  const auto splits = load_split_dir(a.splits.empty() ? run.at("splits").get<std::string>() : a.splits);
  const auto features = load_features(spec, splits, use_text, false);
  std::optional<SplitGraphFeatures> graph;
  if (mode != RelationFeatureMode::text_only) {
    graph.emplace();
    for (auto role : kRoles) {
      auto m = std::make_shared<const FeatureMatrix>(load_feature_file(run_dir / graph_feature_file(role),
                                                                       FeatureSource::graph));
      (role == SplitRole::train ? graph->train : role == SplitRole::valid ? graph->valid : graph->test) = m;
    }
  }
  const auto contexts =
      make_split_contexts(features.entities, features.entity_tokens, features.relation_text,
                          graph ? &*graph : nullptr, mode);
  const Encoder encoder(params, contexts.for_split(options.split), *splits.vocab);

  const auto report = evaluate(encoder, splits, options);
  json result = report.to_json(a.per_relation);
  result["random_baseline_mrr"] = random_baseline_mrr(splits, options);
  result["checkpoint"] = checkpoint.string();
  if (a.check_oracle) {
    const auto oracle = brute_force_oracle(encoder, splits, options);
    if (oracle.ranks != report.ranks) {
      std::size_t differing = 0;
      for (std::size_t i = 0; i < std::min(oracle.ranks.size(), report.ranks.size()); ++i) {
        differing += oracle.ranks[i] != report.ranks[i];
      }
      throw Error("eval: ranks differ from the brute-force recomputation on " + std::to_string(differing) +
                  " queries");
    }
    result["oracle_equal"] = true;
  }
  const fs::path output = a.output.empty() ? run_dir / ("metrics_" + a.split + ".json") : fs::path(a.output);
  write_text(output, result.dump(2) + "\n");
  print_json(out, result);
  return 0;
}

// --- dataset-gen / dataset-check ----------------------------------------------

struct GenArgs {
  std::string triples;
  std::string types;
  std::string text;
  std::string output;
  std::vector<std::size_t> k;
  std::vector<double> ratios;
  GenConfig config;
};

int cmd_dataset_gen(GenArgs a, const Globals& g, std::ostream& out) {
  a.config.seed = g.seed;
  if (!a.k.empty()) std::copy(a.k.begin(), a.k.end(), a.config.k.begin());
  if (!a.ratios.empty()) std::copy(a.ratios.begin(), a.ratios.end(), a.config.ratios.begin());
  a.config.validate();
  const auto raw = load_triples(a.triples);
  const auto types = a.types.empty() ? RelationTypeMap{} : load_relation_types(a.types);
  const auto texts = a.text.empty() ? std::vector<TextRecord>{} : load_text_records(a.text);
  const auto data = generate_dataset(raw.triples, types, texts, a.config);
  const fs::path dir = a.output;
  fs::create_directories(dir);
  static constexpr std::array<const char*, 3> kFiles{"train.tsv", "valid.tsv", "test.tsv"};
  for (std::size_t p = 0; p < 3; ++p) write_triples(dir / kFiles[p], data.parts[p]);
  write_text(dir / "stats.json", data.stats.dump(2) + "\n");
  print_json(out, data.stats);
  return 0;
}

struct CheckArgs {
  std::string splits;
  std::vector<std::size_t> k;
  std::optional<double> skew;
};

int cmd_dataset_check(const CheckArgs& a, std::ostream& out) {
  AuditLimits limits;
  if (!a.k.empty()) limits.k = std::array<std::size_t, 3>{a.k[0], a.k[1], a.k[2]};
  limits.skew_threshold = a.skew;
  const auto report = audit_splits(load_split_dir(a.splits), limits);
  print_json(out, report);
  return report.at("ok").get<bool>() ? 0 : 1;
}

// --- gradcheck -----------------------------------------------------------------

struct GradArgs {
  std::size_t configs = 100;
  double tolerance = 1e-4;
  double corrupt_scale = 1.0;
};

int cmd_gradcheck(const GradArgs& a, const Globals& g, std::ostream& out) {
  if (a.configs < 1) throw Error("gradcheck: --configs must be at least 1");
  const auto report = run_gradcheck(a.configs, g.seed, a.tolerance, a.corrupt_scale);
  print_json(out, report.to_json());
  return report.passed() ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out) {
  CLI::App app("Link prediction with text and relation-graph features", "kgind");
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals globals;
  app.add_option("--seed", globals.seed, "Root seed for every random component")->capture_default_str();
  app.add_option("--threads", globals.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_flag("--deterministic", globals.deterministic, "Force single-threaded execution");

  WeidnerArgs weidner;
  auto* c_weidner = app.add_subcommand("weidner", "Build the weighted relation network of a triple file");
  c_weidner->add_option("input", weidner.input, "Triple file")->required()->check(CLI::ExistingFile);
  c_weidner->add_option("output", weidner.output, "Edge-list output")->required();

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed-relations", "Embed relation-network nodes with biased random walks");
  auto* embed_src = c_embed->add_option("--network", embed.network, "Edge-list file")->check(CLI::ExistingFile);
  c_embed->add_option("--triples", embed.triples, "Triple file")->check(CLI::ExistingFile)->excludes(embed_src);
  c_embed->add_option("--out", embed.output, "Feature file output")->required();
  add_walk_options(c_embed, embed.walk);

  BowArgs bow;
  auto* c_bow = app.add_subcommand("features-bow", "Average word vectors over label and description tokens");
  c_bow->add_option("--text", bow.text, "id/label/description file")->required()->check(CLI::ExistingFile);
  c_bow->add_option("--word-vectors", bow.vectors)->required()->check(CLI::ExistingFile);
  c_bow->add_option("--out", bow.output)->required();
  c_bow->add_flag("--labels-only", bow.labels_only);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train projections for link prediction");
  c_train->add_option("--splits", tr.splits, "Directory with train/valid/test.tsv")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_train->add_option("--out", tr.output, "Output directory")->required();
  tr.features.add_options(c_train);
  add_walk_options(c_train, tr.walk);
  c_train->add_option("--scorer", tr.scorer, "transe_l1, transe_l2 or complex")->capture_default_str();
  c_train->add_option("--sharing", tr.sharing, "shared, separate or independent")->capture_default_str();
  c_train->add_option("--relation-mode", tr.relation_mode, "text_only, graph_only or concat")
      ->capture_default_str();
  c_train->add_option("--dim", tr.dim, "Projection output width")->capture_default_str();
  c_train->add_flag("--trainable-tokens", tr.trainable_tokens, "Fine-tune entity word vectors");
  c_train->add_option("--epochs", tr.train.epochs)->capture_default_str();
  c_train->add_option("--batch-size", tr.train.batch_size)->capture_default_str();
  c_train->add_option("--lr", tr.train.learning_rate)->capture_default_str();
  c_train->add_option("--warmup", tr.train.warmup_fraction, "Fraction of steps spent warming up")
      ->capture_default_str();
  c_train->add_option("--loss", tr.loss, "margin or nll")->capture_default_str();
  c_train->add_option("--margin", tr.train.margin)->capture_default_str();
  c_train->add_option("--l2", tr.train.l2_coeff)->capture_default_str();
  c_train->add_option("--negatives", tr.train.negatives_per_positive)->capture_default_str();
  c_train->add_option("--eval-every", tr.train.eval_every, "Epochs between validation runs (0 = never)")
      ->capture_default_str();
  c_train->add_option("--eval-policy", tr.eval_policy, "all_entities or eval_split_only")->capture_default_str();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Filtered ranking metrics for a trained run");
  c_eval->add_option("--run", ev.run, "Training output directory")->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--checkpoint", ev.checkpoint, "Defaults to <run>/checkpoint.best")->check(CLI::ExistingFile);
  c_eval->add_option("--splits", ev.splits, "Defaults to the training run's splits")
      ->check(CLI::ExistingDirectory);
  c_eval->add_option("--split", ev.split, "valid or test")->capture_default_str();
  c_eval->add_option("--policy", ev.policy, "all_entities or eval_split_only")->capture_default_str();
  c_eval->add_option("--out", ev.output, "Defaults to <run>/metrics_<split>.json");
  c_eval->add_flag("--unfiltered", ev.unfiltered, "Keep known true triples among the candidates");
  c_eval->add_flag("--check-oracle", ev.check_oracle, "Recompute every rank by brute force and compare");
  c_eval->add_flag("--per-relation", ev.per_relation);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("dataset-gen", "Generate relation-disjoint splits from a raw triple file");
  c_gen->add_option("--triples", gen.triples)->required()->check(CLI::ExistingFile);
  c_gen->add_option("--types", gen.types, "relation<TAB>type file")->check(CLI::ExistingFile);
  c_gen->add_option("--text", gen.text, "Text records; unlabeled ids are dropped")->check(CLI::ExistingFile);
  c_gen->add_option("--out", gen.output, "Output directory")->required();
  c_gen->add_option("--min-triples", gen.config.min_triples)->capture_default_str();
  c_gen->add_option("--k", gen.k, "k-core per part: train valid test")->expected(3);
  c_gen->add_option("--ratios", gen.ratios, "Relation split ratios")->expected(3);
  c_gen->add_option("--skew", gen.config.skew_threshold)->capture_default_str();
  c_gen->add_option("--inverse-threshold", gen.config.inverse_threshold)->capture_default_str();

  CheckArgs chk;
  auto* c_check = app.add_subcommand("dataset-check", "Report split statistics and check invariants");
  c_check->add_option("--splits", chk.splits)->required()->check(CLI::ExistingDirectory);
  c_check->add_option("--k", chk.k, "Required entity occurrences: train valid test")->expected(3);
  c_check->add_option("--skew", chk.skew, "Skew threshold no relation may reach");

  GradArgs grad;
  auto* c_grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  c_grad->add_option("--configs", grad.configs, "Random configurations per scorer/loss cell")->capture_default_str();
  c_grad->add_option("--tolerance", grad.tolerance)->capture_default_str();
  c_grad->add_option("--corrupt-scale", grad.corrupt_scale, "Scale analytic gradients (negative control)")
      ->capture_default_str();

  std::vector<std::string> argv_storage{"kgind"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, std::cerr);
  }

  try {
    if (c_weidner->parsed()) return cmd_weidner(weidner, out);
    if (c_embed->parsed()) {
      if (embed.network.empty() && embed.triples.empty()) throw Error("embed-relations: give --network or --triples");
      return cmd_embed(embed, globals, out);
    }
    if (c_bow->parsed()) return cmd_features_bow(bow, out);
    if (c_train->parsed()) return cmd_train(tr, globals, out);
    if (c_eval->parsed()) return cmd_eval(ev, globals, out);
    if (c_gen->parsed()) return cmd_dataset_gen(gen, globals, out);
    if (c_check->parsed()) return cmd_dataset_check(chk, out);
    if (c_grad->parsed()) return cmd_gradcheck(grad, globals, out);
  } catch (const std::exception& e) {
    log::emit(log::Level::error, "command_failed", {{"message", e.what()}});
    return 1;
  }
  return 1;
}

}  // namespace kgind
