#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace kgind::testing {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick(rng, i)]);
}

}  // namespace

std::vector<StringTriple> random_triples(std::uint64_t seed, std::size_t entities, std::size_t relations,
                                         std::size_t count) {
  std::mt19937_64 rng(seed);
  std::vector<StringTriple> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({"e" + std::to_string(pick(rng, entities)), "r" + std::to_string(pick(rng, relations)),
                   "e" + std::to_string(pick(rng, entities))});
  }
  return out;
}

TransEWorld transe_world(std::uint64_t seed, std::size_t entities, std::size_t relations, std::size_t dim,
                         std::size_t keep, double holdout) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> ent(entities, std::vector<double>(dim));
  std::vector<std::vector<double>> rel(relations, std::vector<double>(dim));
  for (auto& v : ent) {
    for (double& x : v) x = uniform(rng, -1.0, 1.0);
  }
  for (auto& v : rel) {
    for (double& x : v) x = uniform(rng, -1.0, 1.0);
  }
  struct Scored {
    double score;
    std::size_t h, r, t;
  };
  std::vector<Scored> all;
  for (std::size_t h = 0; h < entities; ++h) {
    for (std::size_t r = 0; r < relations; ++r) {
      for (std::size_t t = 0; t < entities; ++t) {
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double d = ent[h][k] + rel[r][k] - ent[t][k];
          sq += d * d;
        }
        all.push_back({-std::sqrt(sq), h, r, t});
      }
    }
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  all.resize(std::min(keep, all.size()));
  shuffle(all, rng);

  std::map<std::size_t, std::size_t> ent_count;
  std::map<std::size_t, std::size_t> rel_count;
  for (const auto& s : all) {
    ++ent_count[s.h];
    ++ent_count[s.t];
    ++rel_count[s.r];
  }
  const auto target = static_cast<std::size_t>(std::round(holdout * static_cast<double>(all.size())));
  TransEWorld world;
  auto name = [](const Scored& s) {
    return StringTriple{"e" + std::to_string(s.h), "r" + std::to_string(s.r), "e" + std::to_string(s.t)};
  };
  for (const auto& s : all) {
    if (world.test.size() < target && ent_count[s.h] > 1 && ent_count[s.t] > 1 && rel_count[s.r] > 1) {
      --ent_count[s.h];
      --ent_count[s.t];
      --rel_count[s.r];
      world.test.push_back(name(s));
    } else {
      world.train.push_back(name(s));
    }
  }
  return world;
}

InductiveWorld inductive_world(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr std::size_t kClusters = 4;
  constexpr std::size_t kPerCluster = 30;
  constexpr std::size_t kWordDim = 8;
  const std::vector<std::string> cluster_words{"alpha", "beta", "gamma", "delta"};

  InductiveWorld world;
  world.word_vectors = FeatureMatrix(kWordDim, FeatureSource::pretrained_file);
  std::vector<double> v(kWordDim);
  for (const auto& w : cluster_words) {
    for (double& x : v) x = uniform(rng, -1.0, 1.0);
    world.word_vectors.add_row(w, v);
  }
  auto entity = [](std::size_t c, std::size_t i) { return "c" + std::to_string(c) + "_e" + std::to_string(i); };
  for (std::size_t c = 0; c < kClusters; ++c) {
    for (std::size_t i = 0; i < kPerCluster; ++i) {
      const std::string noise = "w" + std::to_string(c * kPerCluster + i);
      for (double& x : v) x = uniform(rng, -0.3, 0.3);
      world.word_vectors.add_row(noise, v);
      world.entity_text.push_back({entity(c, i), cluster_words[c] + " " + noise, ""});
    }
  }

  constexpr std::size_t kRelations = 12;
  constexpr std::size_t kTriplesPerRelation = 60;
  for (std::size_t r = 0; r < kRelations; ++r) {
    const std::size_t c = r % kClusters;
    auto& part = r < 6 ? world.train : r < 9 ? world.valid : world.test;
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    while (pairs.size() < kTriplesPerRelation) {
      const auto h = pick(rng, kPerCluster);
      const auto t = pick(rng, kPerCluster);
      if (h != t) pairs.insert({h, t});
    }
    for (const auto& [h, t] : pairs) part.push_back({entity(c, h), "rel" + std::to_string(r), entity(c, t)});
  }
  return world;
}

RawWorld raw_world(std::uint64_t seed, std::size_t target) {
  std::mt19937_64 rng(seed);
  constexpr std::size_t kEntities = 400;
  std::vector<double> cumulative(kEntities);
  double total = 0.0;
  for (std::size_t i = 0; i < kEntities; ++i) {
    total += 1.0 / std::pow(static_cast<double>(i) + 10.0, 0.8);
    cumulative[i] = total;
  }
  auto draw_entity = [&] {
    const double u = uniform(rng, 0.0, total);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return "Q" + std::to_string(std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), kEntities - 1));
  };

  RawWorld world;
  auto& out = world.triples;
  std::vector<std::vector<StringTriple>> normal;
  auto add_normal = [&](std::size_t size) {
    const std::string r = "P" + std::to_string(normal.size());
    std::vector<StringTriple> rel;
    for (std::size_t i = 0; i < size; ++i) rel.push_back({draw_entity(), r, draw_entity()});
    normal.push_back(rel);
    out.insert(out.end(), rel.begin(), rel.end());
    world.types.push_back({r, "T" + std::to_string((normal.size() - 1) / 3)});
  };
  for (int i = 0; i < 3; ++i) add_normal(150 + pick(rng, 150));

  // Inverse of P0, duplicate of P1.
  for (const auto& t : normal[0]) out.push_back({t.tail, "Pinv", t.head});
  for (const auto& t : normal[1]) {
    if (uniform(rng, 0.0, 1.0) < 0.95) out.push_back({t.head, "Pdup", t.tail});
  }
  // Skewed: one head dominates.
  for (int s = 0; s < 3; ++s) {
    const std::string r = "Pskew" + std::to_string(s);
    const std::string hub = draw_entity();
    for (int i = 0; i < 120; ++i) out.push_back({uniform(rng, 0.0, 1.0) < 0.7 ? hub : draw_entity(), r, draw_entity()});
  }
  // Rare relations.
  for (int s = 0; s < 5; ++s) {
    const std::string r = "Prare" + std::to_string(s);
    for (std::size_t i = 0; i < 1 + pick(rng, 2); ++i) out.push_back({draw_entity(), r, draw_entity()});
  }
  while (out.size() < target) {
    const std::size_t remaining = target - out.size();
    add_normal(std::min<std::size_t>(remaining, 100 + pick(rng, 200)));
  }
  shuffle(out, rng);
  return world;
}

}  // namespace kgind::testing
