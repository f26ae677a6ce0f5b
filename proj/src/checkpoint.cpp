#include "kgind/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "kgind/feature_matrix.hpp"

namespace kgind {

namespace {

constexpr std::string_view kMagic = "kgind-checkpoint";
constexpr int kVersion = 1;

FeatureMatrix projection_block(const ProjectionLayer& layer) {
  FeatureMatrix m(layer.in_dim, FeatureSource::pretrained_file);
  for (std::size_t i = 0; i < layer.out_dim; ++i) {
    m.add_row("row" + std::to_string(i),
              std::span<const double>(layer.weights).subspan(i * layer.in_dim, layer.in_dim));
  }
  return m;
}

}  // namespace

std::string format_checkpoint(const ModelParams& params) {
  const auto& c = params.config;
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n'
      << "scorer " << to_string(c.scorer) << '\n'
      << "dim " << c.dim << '\n'
      << "sharing " << to_string(c.sharing) << '\n'
      << "relation_mode " << to_string(c.mode) << '\n'
      << "entity_input_dim " << c.entity_input_dim << '\n'
      << "relation_text_dim " << c.relation_text_dim << '\n'
      << "relation_graph_dim " << c.relation_graph_dim << '\n'
      << "trainable_tokens " << (c.trainable_tokens ? 1 : 0) << '\n'
      << "entity_slot " << params.entity_slot << '\n'
      << "relation_text_slot " << params.relation_text_slot << '\n'
      << "relation_graph_slot " << params.relation_graph_slot << '\n'
      << "projections " << params.projections.size() << '\n';
  for (std::size_t i = 0; i < params.projections.size(); ++i) {
    out << "[projection " << i << "]\n" << format_feature_matrix(projection_block(params.projections[i]));
  }
  if (params.token_table) out << "[token_table]\n" << format_feature_matrix(*params.token_table);
  out << "[end]\n";
  return out.str();
}

ModelParams parse_checkpoint(std::string_view text, std::string_view source_name) {
  const std::string where(source_name);
  auto fail = [&](const std::string& what) { return Error(where + ": " + what); };

  // Split into header lines and [section] blocks.
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty() || lines[0] != std::string(kMagic) + " " + std::to_string(kVersion)) {
    throw fail("not a version " + std::to_string(kVersion) + " checkpoint");
  }

  std::map<std::string, std::string> header;
  std::size_t i = 1;
  for (; i < lines.size() && (lines[i].empty() || lines[i].front() != '['); ++i) {
    if (lines[i].empty()) continue;
    const auto sp = lines[i].find(' ');
    if (sp == std::string_view::npos) throw fail("malformed header line '" + std::string(lines[i]) + "'");
    header[std::string(lines[i].substr(0, sp))] = std::string(lines[i].substr(sp + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw fail("missing header field '" + key + "'");
    return it->second;
  };
  auto get_int = [&](const std::string& key) {
    long long v = 0;
    const auto& s = get(key);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw fail("bad integer for '" + key + "'");
    return v;
  };

  ModelParams params;
  auto& c = params.config;
  c.scorer = scorer_from_string(get("scorer"));
  c.dim = static_cast<std::size_t>(get_int("dim"));
  c.sharing = sharing_from_string(get("sharing"));
  c.mode = relation_feature_mode_from_string(get("relation_mode"));
  c.entity_input_dim = static_cast<std::size_t>(get_int("entity_input_dim"));
  c.relation_text_dim = static_cast<std::size_t>(get_int("relation_text_dim"));
  c.relation_graph_dim = static_cast<std::size_t>(get_int("relation_graph_dim"));
  c.trainable_tokens = get_int("trainable_tokens") != 0;
  params.entity_slot = static_cast<int>(get_int("entity_slot"));
  params.relation_text_slot = static_cast<int>(get_int("relation_text_slot"));
  params.relation_graph_slot = static_cast<int>(get_int("relation_graph_slot"));
  const auto n_proj = static_cast<std::size_t>(get_int("projections"));
  c.validate();

  std::map<std::string, std::string> sections;
  std::string current;
  std::string body;
  bool ended = false;
  for (; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (!line.empty() && line.front() == '[') {
      if (!current.empty()) sections[current] = body;
      current = std::string(line.substr(1, line.size() - 2));
      body.clear();
      if (current == "end") {
        ended = true;
        break;
      }
      continue;
    }
    body.append(line);
    body += '\n';
  }
  if (!ended) throw fail("missing [end] marker");

  for (std::size_t p = 0; p < n_proj; ++p) {
    const auto key = "projection " + std::to_string(p);
    auto it = sections.find(key);
    if (it == sections.end()) throw fail("missing section [" + key + "]");
    const auto m = parse_feature_matrix(it->second, FeatureSource::pretrained_file, where + " [" + key + "]");
    ProjectionLayer layer(m.rows(), m.dim());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      std::copy(row.begin(), row.end(), layer.weights.begin() + static_cast<std::ptrdiff_t>(r * m.dim()));
    }
    if (layer.out_dim != c.dim) throw fail("projection " + std::to_string(p) + " output width differs from dim");
    params.projections.push_back(std::move(layer));
  }
  for (int slot : {params.entity_slot, params.relation_text_slot, params.relation_graph_slot}) {
    if (slot >= static_cast<int>(n_proj)) throw fail("projection slot out of range");
  }
  if (params.entity_projection().in_dim != c.entity_input_dim) throw fail("entity projection width mismatch");
  if (c.trainable_tokens) {
    auto it = sections.find("token_table");
    if (it == sections.end()) throw fail("missing section [token_table]");
    params.token_table = parse_feature_matrix(it->second, FeatureSource::bow, where + " [token_table]");
    params.token_table->set_trainable(true);
  }
  return params;
}

void write_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << format_checkpoint(params);
  if (!out) throw Error("write failed: " + path.string());
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint(buffer.str(), path.string());
}

}  // namespace kgind
