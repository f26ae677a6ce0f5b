#include "kgind/evaluator.hpp"

#include <algorithm>
#include <memory>

namespace kgind {

FilterIndex::FilterIndex(const SplitDataset& splits) {
  add(splits.train);
  add(splits.valid);
  add(splits.test);
}

void FilterIndex::add(const KnowledgeGraph& graph) {
  for (const auto& t : graph.triples()) {
    tails_[key(t.relation, t.head)].insert(t.tail.value);
    heads_[key(t.relation, t.tail)].insert(t.head.value);
  }
}

bool FilterIndex::is_known(const RankQuery& query, EntityId candidate) const {
  const auto& t = query.triple;
  const auto& index = query.direction == QueryDirection::tail ? tails_ : heads_;
  const auto anchor = query.direction == QueryDirection::tail ? t.head : t.tail;
  auto it = index.find(key(t.relation, anchor));
  return it != index.end() && it->second.contains(candidate.value);
}

std::string_view to_string(CandidatePolicy policy) {
  return policy == CandidatePolicy::all_entities ? "all_entities" : "eval_split_only";
}

CandidatePolicy candidate_policy_from_string(std::string_view text) {
  if (text == "all_entities") return CandidatePolicy::all_entities;
  if (text == "eval_split_only") return CandidatePolicy::eval_split_only;
  throw Error("unknown candidate policy '" + std::string(text) + "'");
}

std::vector<EntityId> candidate_pool(const SplitDataset& splits, SplitRole split, CandidatePolicy policy) {
  if (policy == CandidatePolicy::eval_split_only) {
    const auto ids = splits.split(split).entity_ids();
    std::vector<EntityId> out(ids.begin(), ids.end());
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<EntityId> out;
  for (std::uint32_t e = 0; e < splits.vocab->entities.size(); ++e) {
    const EntityId id{e};
    if (splits.train.has_entity(id) || splits.valid.has_entity(id) || splits.test.has_entity(id)) {
      out.push_back(id);
    }
  }
  return out;
}

double rank_among(std::span<const double> scores, std::size_t target, std::span<const bool> excluded) {
  if (target >= scores.size()) throw Error("rank: target not among candidates");
  const double s = scores[target];
  std::size_t greater = 0;
  std::size_t ties = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == target || (!excluded.empty() && excluded[i])) continue;
    if (scores[i] > s) {
      ++greater;
    } else if (scores[i] == s) {
      ++ties;
    }
  }
  return 1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0;
}

namespace {

EntityId target_of(const RankQuery& q) {
  return q.direction == QueryDirection::tail ? q.triple.tail : q.triple.head;
}

Triple with_candidate(const RankQuery& q, EntityId c) {
  Triple t = q.triple;
  (q.direction == QueryDirection::tail ? t.tail : t.head) = c;
  return t;
}

std::vector<RankQuery> queries_for(const KnowledgeGraph& graph) {
  std::vector<RankQuery> out;
  out.reserve(2 * graph.size());
  for (const auto& t : graph.triples()) {
    out.push_back({t, QueryDirection::head});
    out.push_back({t, QueryDirection::tail});
  }
  return out;
}

std::string setting_label(const SplitDataset& splits) {
  try {
    return std::string(to_string(classify_setting(splits)));
  } catch (const Error&) {
    return "unknown";
  }
}

void finish_report(RankingReport& report, const SplitDataset& splits, const EvalOptions& options,
                   std::size_t candidates) {
  report.metrics = summarize(report.ranks);
  report.candidate_policy = std::string(to_string(options.policy)) + (options.filtered ? ",filtered" : ",raw");
  report.candidate_count = candidates;
  report.setting = setting_label(splits);
  report.split = std::string(to_string(options.split));
  std::map<std::string, std::vector<double>> by_relation;
  for (std::size_t i = 0; i < report.queries.size(); ++i) {
    by_relation[splits.vocab->relations.name(report.queries[i].triple.relation.value)].push_back(report.ranks[i]);
  }
  for (const auto& [name, ranks] : by_relation) report.per_relation[name] = summarize(ranks);
}

}  // namespace

double rank_query(const Encoder& encoder, const RankQuery& query, std::span<const EntityId> candidates,
                  const FilterIndex* filter) {
  const EntityId target = target_of(query);
  const auto it = std::find(candidates.begin(), candidates.end(), target);
  if (it == candidates.end()) throw Error("rank query: target entity is not a candidate");
  const auto scorer = encoder.params().config.scorer;
  const auto r = encoder.encode_relation(query.triple.relation);
  const auto anchor = encoder.encode_entity(query.direction == QueryDirection::tail ? query.triple.head
                                                                                    : query.triple.tail);
  std::vector<double> scores(candidates.size());
  std::unique_ptr<bool[]> excluded(new bool[candidates.size()]);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = encoder.encode_entity(candidates[i]);
    scores[i] = query.direction == QueryDirection::tail ? score(scorer, anchor, r, c) : score(scorer, c, r, anchor);
    excluded[i] = filter != nullptr && candidates[i] != target && filter->is_known(query, candidates[i]);
  }
  return rank_among(scores, static_cast<std::size_t>(it - candidates.begin()),
                    std::span<const bool>(excluded.get(), candidates.size()));
}

Metrics summarize(std::span<const double> ranks) {
  Metrics m;
  m.queries = ranks.size();
  if (ranks.empty()) return m;
  for (double r : ranks) {
    m.mrr += 1.0 / r;
    m.hits1 += r <= 1.0 ? 1.0 : 0.0;
    m.hits3 += r <= 3.0 ? 1.0 : 0.0;
    m.hits10 += r <= 10.0 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(ranks.size());
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  return m;
}

nlohmann::json RankingReport::to_json(bool include_per_relation) const {
  nlohmann::json j = {{"setting", setting},
                      {"split", split},
                      {"candidate_policy", candidate_policy},
                      {"n_candidates", candidate_count},
                      {"n_queries", metrics.queries},
                      {"mrr", metrics.mrr},
                      {"hits1", metrics.hits1},
                      {"hits3", metrics.hits3},
                      {"hits10", metrics.hits10}};
  if (include_per_relation) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [name, m] : per_relation) {
      per[name] = {{"n_queries", m.queries}, {"mrr", m.mrr}, {"hits1", m.hits1}, {"hits3", m.hits3},
                   {"hits10", m.hits10}};
    }
    j["per_relation"] = per;
  }
  return j;
}

RankingReport evaluate(const Encoder& encoder, const SplitDataset& splits, const EvalOptions& options) {
  const auto& graph = splits.split(options.split);
  if (graph.empty()) throw Error("evaluate: split '" + std::string(to_string(options.split)) + "' is empty");
  const auto candidates = candidate_pool(splits, options.split, options.policy);
  const auto scorer = encoder.params().config.scorer;
  const std::size_t width = encoder.params().config.output_dim();

  // Encode every candidate once.
  std::vector<double> table(candidates.size() * width);
  std::vector<std::size_t> position(splits.vocab->entities.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto v = encoder.encode_entity(candidates[i]);
    std::copy(v.begin(), v.end(), table.begin() + static_cast<std::ptrdiff_t>(i * width));
    position[candidates[i].value] = i;
  }
  auto row = [&](std::size_t i) { return std::span<const double>(table).subspan(i * width, width); };

  std::unordered_map<std::uint32_t, std::vector<double>> relations;
  for (RelationId r : graph.relation_ids()) relations.emplace(r.value, encoder.encode_relation(r));

  const FilterIndex filter = options.filtered ? FilterIndex(splits) : FilterIndex();
  RankingReport report;
  report.queries = queries_for(graph);
  report.ranks.resize(report.queries.size());

  parallel_for(report.queries.size(), resolve_threads(options.threads),
               [&](std::size_t begin, std::size_t end, unsigned) {
                 std::vector<double> scores(candidates.size());
                 std::unique_ptr<bool[]> excluded(new bool[candidates.size()]);
                 for (std::size_t q = begin; q < end; ++q) {
                   const auto& query = report.queries[q];
                   const EntityId target = target_of(query);
                   const std::size_t target_pos = position[target.value];
                   if (target_pos == static_cast<std::size_t>(-1)) {
                     throw Error("evaluate: target entity is not a candidate");
                   }
                   const auto& r = relations.at(query.triple.relation.value);
                   const EntityId anchor_id = query.direction == QueryDirection::tail ? query.triple.head
                                                                                      : query.triple.tail;
                   const auto anchor = position[anchor_id.value] != static_cast<std::size_t>(-1)
                                           ? std::vector<double>(row(position[anchor_id.value]).begin(),
                                                                 row(position[anchor_id.value]).end())
                                           : encoder.encode_entity(anchor_id);
                   for (std::size_t i = 0; i < candidates.size(); ++i) {
                     scores[i] = query.direction == QueryDirection::tail ? score(scorer, anchor, r, row(i))
                                                                         : score(scorer, row(i), r, anchor);
                     excluded[i] = options.filtered && i != target_pos && filter.is_known(query, candidates[i]);
                   }
                   report.ranks[q] = rank_among(scores, target_pos,
                                                std::span<const bool>(excluded.get(), candidates.size()));
                 }
               });
  finish_report(report, splits, options, candidates.size());
  return report;
}

RankingReport brute_force_oracle(const Encoder& encoder, const SplitDataset& splits, const EvalOptions& options) {
  const auto& graph = splits.split(options.split);
  if (graph.empty()) throw Error("brute-force oracle: evaluated split is empty");
  const auto candidates = candidate_pool(splits, options.split, options.policy);
  const auto scorer = encoder.params().config.scorer;

  auto known = [&](const Triple& t) {
    for (const auto* g : {&splits.train, &splits.valid, &splits.test}) {
      for (const auto& x : g->triples()) {
        if (x == t) return true;
      }
    }
    return false;
  };

  RankingReport report;
  report.queries = queries_for(graph);
  for (const auto& query : report.queries) {
    const EntityId target = target_of(query);
    std::vector<double> all_scores;
    std::vector<Triple> all_triples;
    for (EntityId c : candidates) {
      const Triple t = with_candidate(query, c);
      all_scores.push_back(score(scorer, encoder.encode_entity(t.head), encoder.encode_relation(t.relation),
                                 encoder.encode_entity(t.tail)));
      all_triples.push_back(t);
    }
    double target_score = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i] == target) {
        target_score = all_scores[i];
        found = true;
      }
    }
    if (!found) throw Error("brute-force oracle: target entity is not a candidate");
    double rank = 1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i] == target) continue;
      if (options.filtered && known(all_triples[i])) continue;
      if (all_scores[i] > target_score) rank += 1.0;
      if (all_scores[i] == target_score) rank += 0.5;
    }
    report.ranks.push_back(rank);
  }
  finish_report(report, splits, options, candidates.size());
  return report;
}

double random_baseline_mrr(const SplitDataset& splits, const EvalOptions& options) {
  const auto& graph = splits.split(options.split);
  if (graph.empty()) throw Error("random baseline: evaluated split is empty");
  const auto candidates = candidate_pool(splits, options.split, options.policy);
  const FilterIndex filter(splits);
  std::vector<double> harmonic(candidates.size() + 1, 0.0);
  for (std::size_t n = 1; n <= candidates.size(); ++n) harmonic[n] = harmonic[n - 1] + 1.0 / static_cast<double>(n);

  const auto queries = queries_for(graph);
  double total = 0.0;
  for (const auto& query : queries) {
    std::size_t n = 0;
    const EntityId target = target_of(query);
    for (EntityId c : candidates) {
      if (c == target || !options.filtered || !filter.is_known(query, c)) ++n;
    }
    total += harmonic[n] / static_cast<double>(n);
  }
  return total / static_cast<double>(queries.size());
}

}  // namespace kgind
