#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kgind {

/// Error raised for invalid input, malformed files and violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense integer handle into one vocabulary. The tag keeps entity and
/// relation handles from being mixed up.
template <class Tag>
struct Handle {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const Handle&) const = default;
};

using EntityId = Handle<struct EntityTag>;
using RelationId = Handle<struct RelationTag>;

// splitmix64 finalizer; used to derive independent seeds from a root seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a named sub-stream ("walks", "negatives", "init", "splits", ...)
/// of a root seed.
std::uint64_t substream_seed(std::uint64_t root, std::string_view stream,
                             std::uint64_t index = 0);

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits; identical across standard
/// library implementations, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Runs body(begin, end, worker) over [0, n) split into `threads` contiguous
/// chunks. With threads <= 1 the body runs inline on the calling thread.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t, unsigned)>& body);

/// Effective worker count: 0 means hardware concurrency.
unsigned resolve_threads(unsigned requested);

}  // namespace kgind

template <class Tag>
struct std::hash<kgind::Handle<Tag>> {
  std::size_t operator()(const kgind::Handle<Tag>& h) const noexcept {
    return std::hash<std::uint32_t>{}(h.value);
  }
};
