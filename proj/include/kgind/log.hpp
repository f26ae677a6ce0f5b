#pragma once

#include <iosfwd>
#include <string_view>

#include "json.hpp"

namespace kgind::log {

enum class Level { debug, info, warning, error };

/// Writes one line-delimited JSON record {"level", "event", ...fields}.
void emit(Level level, std::string_view event, nlohmann::json fields = nlohmann::json::object());

inline void info(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
  emit(Level::info, event, std::move(fields));
}
inline void warn(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
  emit(Level::warning, event, std::move(fields));
}

// Defaults to std::cerr. nullptr silences logging.
void set_sink(std::ostream* sink);
void set_min_level(Level level);

}  // namespace kgind::log
