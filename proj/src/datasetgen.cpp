#include "kgind/datasetgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "kgind/log.hpp"

namespace kgind {

RelationTypeMap load_relation_types(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  RelationTypeMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected relation<TAB>type");
    }
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

void GenConfig::validate() const {
  if (min_triples < 1) throw Error("dataset config: min_triples must be at least 1");
  for (auto kk : k) {
    if (kk < 1) throw Error("dataset config: k values must be at least 1");
  }
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw Error("dataset config: ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("dataset config: ratios must sum to 1");
  if (!(skew_threshold > 0.0 && skew_threshold <= 1.0)) throw Error("dataset config: skew_threshold must be in (0, 1]");
  if (!(inverse_threshold > 0.5 && inverse_threshold <= 1.0)) {
    throw Error("dataset config: inverse_threshold must be in (0.5, 1]");
  }
}

void to_json(nlohmann::json& j, const GenConfig& c) {
  j = {{"min_triples", c.min_triples},
       {"k", c.k},
       {"ratios", c.ratios},
       {"skew_threshold", c.skew_threshold},
       {"inverse_threshold", c.inverse_threshold},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GenConfig& c) {
  c.min_triples = j.value("min_triples", c.min_triples);
  if (j.contains("k")) c.k = j.at("k").get<std::array<std::size_t, 3>>();
  if (j.contains("ratios")) c.ratios = j.at("ratios").get<std::array<double, 3>>();
  c.skew_threshold = j.value("skew_threshold", c.skew_threshold);
  c.inverse_threshold = j.value("inverse_threshold", c.inverse_threshold);
  c.seed = j.value("seed", c.seed);
}

std::vector<StringTriple> filter_rare_relations(std::span<const StringTriple> triples, std::size_t min_triples) {
  std::unordered_map<std::string, std::size_t> count;
  for (const auto& t : triples) ++count[t.relation];
  std::vector<StringTriple> out;
  for (const auto& t : triples) {
    if (count[t.relation] >= min_triples) out.push_back(t);
  }
  return out;
}

std::unordered_set<std::string> detect_inverse_and_duplicates(std::span<const StringTriple> triples, double theta) {
  // (head, tail) -> relations linking them in that direction.
  std::map<std::pair<std::string, std::string>, std::set<std::string>> by_pair;
  std::map<std::string, std::set<std::pair<std::string, std::string>>> pairs_of;
  for (const auto& t : triples) {
    by_pair[{t.head, t.tail}].insert(t.relation);
    pairs_of[t.relation].insert({t.head, t.tail});
  }

  std::unordered_set<std::string> dropped;
  auto consider = [&](const std::string& r1, const std::string& r2) {
    // r2 is the covered relation; drop the smaller of the pair.
    const auto n1 = pairs_of[r1].size();
    const auto n2 = pairs_of[r2].size();
    if (n1 < n2) return;
    if (n1 == n2) {
      dropped.insert(std::max(r1, r2));
    } else {
      dropped.insert(r2);
    }
  };
  for (const auto& [r2, pairs] : pairs_of) {
    std::map<std::string, std::size_t> inverse_hits;
    std::map<std::string, std::size_t> duplicate_hits;
    for (const auto& [h, t] : pairs) {
      if (auto it = by_pair.find({t, h}); it != by_pair.end()) {
        for (const auto& r1 : it->second) inverse_hits[r1]++;
      }
      if (auto it = by_pair.find({h, t}); it != by_pair.end()) {
        for (const auto& r1 : it->second) duplicate_hits[r1]++;
      }
    }
    const double n = static_cast<double>(pairs.size());
    for (const auto& [r1, hits] : inverse_hits) {
      if (r1 != r2 && static_cast<double>(hits) >= theta * n) consider(r1, r2);
    }
    for (const auto& [r1, hits] : duplicate_hits) {
      if (r1 != r2 && static_cast<double>(hits) >= theta * n) consider(r1, r2);
    }
  }
  return dropped;
}

std::array<std::vector<std::string>, 3> split_relations(std::span<const std::string> relations,
                                                        const RelationTypeMap& types,
                                                        const std::array<double, 3>& ratios, std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> groups;
  std::set<std::string> unique(relations.begin(), relations.end());
  for (const auto& r : unique) {
    auto it = types.find(r);
    // Untyped relations get a key no real type can collide with.
    groups[it != types.end() ? "type:" + it->second : "relation:" + r].push_back(r);
  }
  std::vector<std::vector<std::string>> ordered;
  for (auto& [key, members] : groups) ordered.push_back(std::move(members));
  Rng rng(substream_seed(seed, "splits"));
  for (std::size_t i = ordered.size(); i > 1; --i) std::swap(ordered[i - 1], ordered[uniform_index(rng, i)]);
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });

  const double total = static_cast<double>(unique.size());
  std::array<std::vector<std::string>, 3> parts;
  for (auto& group : ordered) {
    std::size_t best = 0;
    double best_deficit = -1e300;
    for (std::size_t p = 0; p < 3; ++p) {
      const double deficit = ratios[p] * total - static_cast<double>(parts[p].size());
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = p;
      }
    }
    parts[best].insert(parts[best].end(), group.begin(), group.end());
  }
  for (auto& part : parts) std::sort(part.begin(), part.end());
  return parts;
}

std::vector<StringTriple> kcore(std::span<const StringTriple> triples, std::size_t k) {
  if (k < 1) throw Error("kcore: k must be at least 1");
  std::unordered_map<std::string, std::vector<std::size_t>> incident;
  std::unordered_map<std::string, std::size_t> degree;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    incident[t.head].push_back(i);
    ++degree[t.head];
    if (t.tail != t.head) {
      incident[t.tail].push_back(i);
      ++degree[t.tail];
    }
  }
  std::vector<bool> alive(triples.size(), true);
  std::vector<std::string> queue;
  std::unordered_set<std::string> removed;
  for (const auto& [e, d] : degree) {
    if (d < k) queue.push_back(e);
  }
  while (!queue.empty()) {
    const std::string e = std::move(queue.back());
    queue.pop_back();
    if (!removed.insert(e).second) continue;
    for (auto i : incident[e]) {
      if (!alive[i]) continue;
      alive[i] = false;
      const auto& t = triples[i];
      for (const std::string* other : {&t.head, &t.tail}) {
        if (*other == e || removed.contains(*other)) continue;
        if (--degree[*other] < k) queue.push_back(*other);
      }
    }
  }
  std::vector<StringTriple> out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (alive[i]) out.push_back(triples[i]);
  }
  return out;
}

std::vector<StringTriple> skew_filter(std::span<const StringTriple> triples, double threshold) {
  std::unordered_map<std::string, std::size_t> size;
  std::map<std::pair<std::string, std::string>, std::size_t> heads;
  std::map<std::pair<std::string, std::string>, std::size_t> tails;
  for (const auto& t : triples) {
    ++size[t.relation];
    ++heads[{t.relation, t.head}];
    ++tails[{t.relation, t.tail}];
  }
  std::unordered_set<std::string> skewed;
  for (const auto* counts : {&heads, &tails}) {
    for (const auto& [key, c] : *counts) {
      if (static_cast<double>(c) >= threshold * static_cast<double>(size[key.first])) skewed.insert(key.first);
    }
  }
  std::vector<StringTriple> out;
  for (const auto& t : triples) {
    if (!skewed.contains(t.relation)) out.push_back(t);
  }
  return out;
}

namespace {

nlohmann::json describe(std::span<const StringTriple> triples) {
  std::unordered_set<std::string> entities;
  std::unordered_set<std::string> relations;
  for (const auto& t : triples) {
    entities.insert(t.head);
    entities.insert(t.tail);
    relations.insert(t.relation);
  }
  return {{"triples", triples.size()}, {"entities", entities.size()}, {"relations", relations.size()}};
}

std::vector<std::string> relations_of(std::span<const StringTriple> triples) {
  std::set<std::string> out;
  for (const auto& t : triples) out.insert(t.relation);
  return {out.begin(), out.end()};
}

}  // namespace

GeneratedDataset generate_dataset(std::span<const StringTriple> raw, const RelationTypeMap& types,
                                  std::span<const TextRecord> texts, const GenConfig& config) {
  config.validate();
  GeneratedDataset out;
  auto& stats = out.stats;
  stats["config"] = config;

  std::vector<StringTriple> triples;
  {
    std::set<StringTriple> seen;
    for (const auto& t : raw) {
      if (seen.insert(t).second) triples.push_back(t);
    }
  }
  stats["input"] = describe(triples);
  stats["input"]["duplicates_removed"] = raw.size() - triples.size();

  triples = filter_rare_relations(triples, config.min_triples);
  stats["rare_relation_filter"] = describe(triples);

  const auto dropped = detect_inverse_and_duplicates(triples, config.inverse_threshold);
  std::erase_if(triples, [&](const StringTriple& t) { return dropped.contains(t.relation); });
  std::vector<std::string> dropped_sorted(dropped.begin(), dropped.end());
  std::sort(dropped_sorted.begin(), dropped_sorted.end());
  stats["inverse_duplicate_filter"] = describe(triples);
  stats["inverse_duplicate_filter"]["dropped_relations"] = dropped_sorted;

  if (!texts.empty()) {
    std::unordered_set<std::string> labeled;
    for (const auto& r : texts) {
      if (!r.label.empty()) labeled.insert(r.id);
    }
    std::erase_if(triples, [&](const StringTriple& t) {
      return !labeled.contains(t.head) || !labeled.contains(t.tail) || !labeled.contains(t.relation);
    });
    stats["unlabeled_filter"] = describe(triples);
  } else {
    stats["unlabeled_filter"] = "skipped: no text records";
  }

  const auto relations = relations_of(triples);
  const auto parts = split_relations(relations, types, config.ratios, config.seed);
  std::unordered_map<std::string, std::size_t> part_of;
  for (std::size_t p = 0; p < 3; ++p) {
    for (const auto& r : parts[p]) part_of[r] = p;
  }
  for (const auto& t : triples) out.parts[part_of.at(t.relation)].push_back(t);

  static constexpr std::array<const char*, 3> kNames{"train", "valid", "test"};
  for (std::size_t p = 0; p < 3; ++p) {
    auto& part = out.parts[p];
    nlohmann::json s;
    s["split"] = describe(part);
    part = kcore(part, config.k[p]);
    out.after_kcore[p] = part;
    s["kcore"] = describe(part);
    s["kcore"]["k"] = config.k[p];
    part = skew_filter(part, config.skew_threshold);
    s["skew_filter"] = describe(part);
    stats["parts"][kNames[p]] = s;
    if (part.empty()) {
      throw Error(std::string("dataset generation: the ") + kNames[p] + " part is empty after filtering");
    }
  }
  log::info("dataset_generated", {{"train", out.parts[0].size()},
                                  {"valid", out.parts[1].size()},
                                  {"test", out.parts[2].size()}});
  return out;
}

}  // namespace kgind

namespace kgind {

nlohmann::json audit_splits(const SplitDataset& splits, const AuditLimits& limits) {
  static constexpr std::array<SplitRole, 3> kRoles{SplitRole::train, SplitRole::valid, SplitRole::test};
  nlohmann::json out;
  bool ok = true;
  std::array<std::set<std::string>, 3> relation_sets;
  for (std::size_t p = 0; p < 3; ++p) {
    const auto& g = splits.split(kRoles[p]);
    std::unordered_map<std::uint32_t, std::size_t> occurrences;
    for (const auto& t : g.triples()) {
      ++occurrences[t.head.value];
      if (t.tail != t.head) ++occurrences[t.tail.value];
    }
    std::size_t min_occ = 0;
    for (const auto& [e, c] : occurrences) min_occ = min_occ == 0 ? c : std::min(min_occ, c);
    double max_skew = 0.0;
    std::string most_skewed;
    for (RelationId r : g.relation_ids()) {
      relation_sets[p].insert(g.relation_name(r));
      const double size = static_cast<double>(g.triples_of(r).size());
      for (const auto* counts : {&g.head_counts(r), &g.tail_counts(r)}) {
        for (const auto& [e, c] : *counts) {
          if (static_cast<double>(c) / size > max_skew) {
            max_skew = static_cast<double>(c) / size;
            most_skewed = g.relation_name(r);
          }
        }
      }
    }
    nlohmann::json s = {{"triples", g.size()},
                        {"entities", g.entity_ids().size()},
                        {"relations", g.relation_ids().size()},
                        {"min_entity_occurrence", min_occ},
                        {"max_skew", max_skew},
                        {"most_skewed_relation", most_skewed}};
    if (limits.k && !g.empty() && min_occ < (*limits.k)[p]) {
      s["violation"] = "entity occurs fewer than " + std::to_string((*limits.k)[p]) + " times";
      ok = false;
    }
    if (limits.skew_threshold && max_skew >= *limits.skew_threshold) {
      s["skew_violation"] = "relation '" + most_skewed + "' reaches the skew threshold";
      ok = false;
    }
    out["splits"][std::string(to_string(kRoles[p]))] = s;
  }
  nlohmann::json overlap = nlohmann::json::object();
  static constexpr std::array<std::pair<int, int>, 3> kPairs{{{0, 1}, {0, 2}, {1, 2}}};
  for (auto [a, b] : kPairs) {
    std::size_t shared = 0;
    for (const auto& r : relation_sets[a]) shared += relation_sets[b].count(r);
    overlap[std::string(to_string(kRoles[a])) + "_" + std::string(to_string(kRoles[b]))] = shared;
  }
  out["shared_relations"] = overlap;
  if (!splits.test.empty()) out["setting"] = to_string(classify_setting(splits));
  out["ok"] = ok;
  return out;
}

}  // namespace kgind
