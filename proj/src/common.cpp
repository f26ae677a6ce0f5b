#include "kgind/common.hpp"

#include <algorithm>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include "kgind/log.hpp"

namespace kgind {

std::uint64_t substream_seed(std::uint64_t root, std::string_view stream, std::uint64_t index) {
  // FNV-1a over the stream name keeps named streams stable across builds.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix_seed(mix_seed(root ^ h) + index);
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t, unsigned)>& body) {
  if (n == 0) return;
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (threads == 1) {
    body(0, n, 0);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      workers.emplace_back([&, begin, end, w] {
        try {
          body(begin, end, w);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

namespace log {
namespace {

std::ostream* g_sink = &std::cerr;
Level g_min_level = Level::info;
std::mutex g_mutex;

const char* level_name(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warning: return "warning";
    case Level::error: return "error";
  }
  return "info";
}

}  // namespace

void emit(Level level, std::string_view event, nlohmann::json fields) {
  std::lock_guard lock(g_mutex);
  if (g_sink == nullptr || level < g_min_level) return;
  nlohmann::json record = {{"level", level_name(level)}, {"event", std::string(event)}};
  if (fields.is_object()) {
    for (auto& [key, value] : fields.items()) record[key] = std::move(value);
  }
  *g_sink << record.dump() << '\n';
  g_sink->flush();
}

void set_sink(std::ostream* sink) {
  std::lock_guard lock(g_mutex);
  g_sink = sink;
}

void set_min_level(Level level) {
  std::lock_guard lock(g_mutex);
  g_min_level = level;
}

}  // namespace log
}  // namespace kgind
