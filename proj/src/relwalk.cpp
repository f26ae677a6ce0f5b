#include "kgind/relwalk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "kgind/log.hpp"

namespace kgind {

void WalkConfig::validate() const {
  if (!(p > 0.0) || !(q > 0.0)) throw Error("walk config: p and q must be positive");
  if (walk_length < 2) throw Error("walk config: walk_length must be at least 2");
  if (dim < 1) throw Error("walk config: dim must be at least 1");
  if (window_size < 1) throw Error("walk config: window_size must be at least 1");
  if (!(learning_rate > 0.0)) throw Error("walk config: learning_rate must be positive");
}

void to_json(nlohmann::json& j, const WalkConfig& c) {
  j = {{"num_walks_per_node", c.num_walks_per_node},
       {"walk_length", c.walk_length},
       {"window_size", c.window_size},
       {"p", c.p},
       {"q", c.q},
       {"epochs", c.epochs},
       {"dim", c.dim},
       {"negatives_per_positive", c.negatives_per_positive},
       {"learning_rate", c.learning_rate},
       {"seed", c.seed},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, WalkConfig& c) {
  c.num_walks_per_node = j.value("num_walks_per_node", c.num_walks_per_node);
  c.walk_length = j.value("walk_length", c.walk_length);
  c.window_size = j.value("window_size", c.window_size);
  c.p = j.value("p", c.p);
  c.q = j.value("q", c.q);
  c.epochs = j.value("epochs", c.epochs);
  c.dim = j.value("dim", c.dim);
  c.negatives_per_positive = j.value("negatives_per_positive", c.negatives_per_positive);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
}

double walk_bias(const RelationNetwork& network, std::uint32_t prev, std::uint32_t candidate,
                 double p, double q) {
  if (candidate == prev) return 1.0 / p;
  if (network.has_edge(prev, candidate)) return 1.0;
  return 1.0 / q;
}

std::vector<double> transition_distribution(const RelationNetwork& network,
                                            std::optional<std::uint32_t> prev,
                                            std::uint32_t current, double p, double q) {
  const auto out = network.out_edges(current);
  if (out.empty()) throw Error("node '" + network.name(current) + "' has no out-edges");
  std::vector<double> probs(out.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double alpha = prev ? walk_bias(network, *prev, out[i].target, p, q) : 1.0;
    probs[i] = alpha * static_cast<double>(out[i].weight);
    total += probs[i];
  }
  for (double& x : probs) x /= total;
  return probs;
}

std::uint32_t sample_next(const RelationNetwork& network, std::optional<std::uint32_t> prev,
                          std::uint32_t current, double p, double q, Rng& rng) {
  const auto out = network.out_edges(current);
  if (out.empty()) throw Error("node '" + network.name(current) + "' has no out-edges");
  // Unnormalized inverse-CDF draw; same distribution as transition_distribution.
  double total = 0.0;
  std::vector<double> mass(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double alpha = prev ? walk_bias(network, *prev, out[i].target, p, q) : 1.0;
    mass[i] = alpha * static_cast<double>(out[i].weight);
    total += mass[i];
  }
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (u < mass[i]) return out[i].target;
    u -= mass[i];
  }
  return out.back().target;
}

WalkCorpus generate_walks(const RelationNetwork& network, const WalkConfig& config) {
  config.validate();
  WalkCorpus corpus;
  std::vector<std::uint32_t> starts;
  for (std::uint32_t v = 0; v < network.node_count(); ++v) {
    if (network.out_edges(v).empty()) {
      corpus.isolated.push_back(v);
    } else {
      starts.push_back(v);
    }
  }
  const std::size_t total = starts.size() * config.num_walks_per_node;
  corpus.walks.resize(total);
  parallel_for(total, resolve_threads(config.threads), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t round = k / starts.size();
      const std::uint32_t start = starts[k % starts.size()];
      Rng rng(substream_seed(config.seed, "walks", (static_cast<std::uint64_t>(start) << 32) | round));
      auto& walk = corpus.walks[k];
      walk.reserve(config.walk_length);
      walk.push_back(start);
      std::optional<std::uint32_t> prev;
      while (walk.size() < config.walk_length) {
        const std::uint32_t current = walk.back();
        if (network.out_edges(current).empty()) break;
        const std::uint32_t next = sample_next(network, prev, current, config.p, config.q, rng);
        prev = current;
        walk.push_back(next);
      }
    }
  });
  return corpus;
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -log(sigmoid(x)) without overflow.
double neg_log_sigmoid(double x) {
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

class NegativeTable {
 public:
  NegativeTable(const WalkCorpus& corpus, std::size_t node_count) : cumulative_(node_count, 0.0) {
    std::vector<double> freq(node_count, 0.0);
    for (const auto& walk : corpus.walks) {
      for (auto v : walk) freq[v] += 1.0;
    }
    double acc = 0.0;
    for (std::size_t v = 0; v < node_count; ++v) {
      acc += std::pow(freq[v], 0.75);
      cumulative_[v] = acc;
    }
  }

  std::uint32_t sample(Rng& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::uint32_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace

SkipGramResult train_skipgram(const WalkCorpus& corpus, std::size_t node_count,
                              const WalkConfig& config) {
  config.validate();
  std::size_t tokens = 0;
  for (const auto& walk : corpus.walks) tokens += walk.size();
  if (tokens == 0) throw Error("skip-gram: empty walk corpus");
  for (const auto& walk : corpus.walks) {
    for (auto v : walk) {
      if (v >= node_count) throw Error("skip-gram: walk references unknown node");
    }
  }

  const std::size_t dim = config.dim;
  SkipGramResult result;
  result.center.resize(node_count * dim);
  std::vector<double> context(node_count * dim, 0.0);
  {
    Rng rng(substream_seed(config.seed, "skipgram-init"));
    const double half = 0.5 / static_cast<double>(dim);
    for (double& x : result.center) x = (uniform01(rng) * 2.0 - 1.0) * half;
  }
  if (config.epochs == 0) return result;

  const NegativeTable negatives(corpus, node_count);
  const unsigned threads = resolve_threads(config.threads);
  const double total_work = static_cast<double>(config.epochs * tokens);
  std::atomic<std::size_t> processed{0};

  // Relaxed atomic accesses allow lock-free concurrent updates when threads > 1.
  auto load = [](double& x) { return std::atomic_ref<double>(x).load(std::memory_order_relaxed); };
  auto store = [](double& x, double v) { std::atomic_ref<double>(x).store(v, std::memory_order_relaxed); };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<double> loss_sum(threads, 0.0);
    std::vector<std::size_t> pair_count(threads, 0);
    parallel_for(corpus.walks.size(), threads, [&](std::size_t begin, std::size_t end, unsigned worker) {
      Rng rng(substream_seed(config.seed, "skipgram", epoch * 1024 + worker));
      std::vector<double> grad(dim);
      std::vector<double> center_copy(dim);
      for (std::size_t w = begin; w < end; ++w) {
        const auto& walk = corpus.walks[w];
        const double progress = static_cast<double>(processed.load(std::memory_order_relaxed)) / total_work;
        const double lr = config.learning_rate * std::max(1e-4, 1.0 - progress);
        for (std::size_t i = 0; i < walk.size(); ++i) {
          const std::uint32_t u = walk[i];
          double* zu = &result.center[u * dim];
          const std::size_t lo = i >= config.window_size ? i - config.window_size : 0;
          const std::size_t hi = std::min(walk.size() - 1, i + config.window_size);
          for (std::size_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = 0; k < dim; ++k) center_copy[k] = load(zu[k]);
            for (std::size_t s = 0; s <= config.negatives_per_positive; ++s) {
              std::uint32_t target = walk[j];
              double label = 1.0;
              if (s > 0) {
                target = negatives.sample(rng);
                if (target == walk[j]) continue;
                label = 0.0;
              }
              double* ct = &context[target * dim];
              double dot = 0.0;
              for (std::size_t k = 0; k < dim; ++k) dot += center_copy[k] * load(ct[k]);
              loss_sum[worker] += label > 0 ? neg_log_sigmoid(dot) : neg_log_sigmoid(-dot);
              const double g = lr * (label - sigmoid(dot));
              for (std::size_t k = 0; k < dim; ++k) {
                const double c = load(ct[k]);
                grad[k] += g * c;
                store(ct[k], c + g * center_copy[k]);
              }
            }
            for (std::size_t k = 0; k < dim; ++k) store(zu[k], load(zu[k]) + grad[k]);
            ++pair_count[worker];
          }
        }
        processed.fetch_add(walk.size(), std::memory_order_relaxed);
      }
    });
    const double loss = std::accumulate(loss_sum.begin(), loss_sum.end(), 0.0);
    const std::size_t pairs = std::accumulate(pair_count.begin(), pair_count.end(), std::size_t{0});
    result.epoch_loss.push_back(pairs > 0 ? loss / static_cast<double>(pairs) : 0.0);
  }
  return result;
}

NodeEmbeddings embed_relations(const RelationNetwork& network, const WalkConfig& config) {
  config.validate();
  NodeEmbeddings out;
  out.config = config;
  out.network_fingerprint = network.fingerprint();
  out.vectors = FeatureMatrix(config.dim, FeatureSource::graph);

  const std::size_t n = network.node_count();
  std::vector<bool> visited(n, false);
  std::vector<double> center;
  const WalkCorpus corpus = generate_walks(network, config);
  for (const auto& walk : corpus.walks) {
    for (auto v : walk) visited[v] = true;
  }
  if (!corpus.walks.empty()) {
    auto trained = train_skipgram(corpus, n, config);
    center = std::move(trained.center);
    out.epoch_loss = std::move(trained.epoch_loss);
  } else {
    log::warn("relation_network_without_edges", {{"nodes", n}});
  }

  const std::vector<double> zero(config.dim, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (visited[v]) {
      out.vectors.add_row(network.name(v), std::span<const double>(center).subspan(v * config.dim, config.dim));
    } else {
      out.vectors.add_row(network.name(v), zero);
      out.fallback.push_back(network.name(v));
    }
  }
  if (!out.fallback.empty()) {
    log::warn("isolated_relation_fallback", {{"count", out.fallback.size()}, {"relations", out.fallback}});
  }
  return out;
}

}  // namespace kgind
