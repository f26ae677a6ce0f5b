#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "kgind/model.hpp"

namespace kgind {

// Layout:
//   kgind-checkpoint 1
//   scorer <name> / dim <n> / sharing <name> / relation_mode <name> /
//   entity_input_dim <n> / relation_text_dim <n> / relation_graph_dim <n> /
//   trainable_tokens <0|1> / entity_slot <i> / relation_text_slot <i> /
//   relation_graph_slot <i> / projections <count>
//   [projection <i>] followed by a feature-file block (one row per output unit)
//   [token_table] followed by a feature-file block, when trainable
//   [end]
std::string format_checkpoint(const ModelParams& params);
ModelParams parse_checkpoint(std::string_view text, std::string_view source_name = "<memory>");
void write_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace kgind
