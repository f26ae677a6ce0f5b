#include "kgind/feature_matrix.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kgind {

std::string_view to_string(FeatureSource source) {
  switch (source) {
    case FeatureSource::bow: return "bow";
    case FeatureSource::pretrained_file: return "pretrained_file";
    case FeatureSource::graph: return "graph";
    case FeatureSource::onehot: return "onehot";
  }
  return "pretrained_file";
}

FeatureMatrix::FeatureMatrix(std::size_t dim, FeatureSource source) : dim_(dim), source_(source) {}

void FeatureMatrix::add_row(std::string id, std::span<const double> values) {
  if (values.size() != dim_) {
    throw Error("feature row '" + id + "' has " + std::to_string(values.size()) + " values, expected " +
                std::to_string(dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("feature row '" + id + "' contains a non-finite value");
  }
  if (index_.contains(id)) throw Error("duplicate feature id '" + id + "'");
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
}

std::span<const double> FeatureMatrix::row(std::size_t index) const {
  return std::span<const double>(data_).subspan(index * dim_, dim_);
}

std::span<double> FeatureMatrix::mutable_row(std::size_t index) {
  return std::span<double>(data_).subspan(index * dim_, dim_);
}

std::optional<std::size_t> FeatureMatrix::find(std::string_view id) const {
  if (auto it = index_.find(std::string(id)); it != index_.end()) return it->second;
  return std::nullopt;
}

std::span<const double> FeatureMatrix::row(std::string_view id) const {
  const auto index = find(id);
  if (!index) throw Error("no feature row for '" + std::string(id) + "'");
  return row(*index);
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::string> ids) const {
  FeatureMatrix out(dim_, source_);
  out.trainable_ = trainable_;
  out.provenance_ = provenance_;
  for (const auto& id : ids) out.add_row(id, row(std::string_view(id)));
  return out;
}

std::string format_feature_matrix(const FeatureMatrix& matrix) {
  std::string out = std::to_string(matrix.rows()) + " " + std::to_string(matrix.dim()) + "\n";
  char buf[64];
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out += matrix.ids()[i];
    for (double v : matrix.row(i)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out += ' ';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

void write_feature_file(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << format_feature_matrix(matrix);
  if (!out) throw Error("write failed: " + path.string());
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view text, T& value) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

FeatureMatrix parse_feature_matrix(std::string_view text, FeatureSource source,
                                   std::string_view source_name) {
  const std::string where(source_name);
  std::size_t start = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      line = text.substr(start, end - start);
      start = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!split_spaces(line).empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw Error(where + ": missing '<count> <dim>' header");
  const auto header = split_spaces(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim)) {
    throw Error(where + ":" + std::to_string(line_no) + ": malformed '<count> <dim>' header");
  }

  FeatureMatrix out(dim, source);
  std::vector<double> values(dim);
  while (next_line(line)) {
    const auto fields = split_spaces(line);
    const std::string prefix = where + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != dim + 1) {
      throw Error(prefix + "expected id and " + std::to_string(dim) + " values, got " +
                  std::to_string(fields.size() - 1) + " values");
    }
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_number(fields[k + 1], values[k])) throw Error(prefix + "malformed value");
    }
    try {
      out.add_row(std::string(fields[0]), values);
    } catch (const Error& e) {
      throw Error(prefix + e.what());
    }
  }
  if (out.rows() != count) {
    throw Error(where + ": header declares " + std::to_string(count) + " rows, found " +
                std::to_string(out.rows()));
  }
  return out;
}

FeatureMatrix load_feature_file(const std::filesystem::path& path, FeatureSource source) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_feature_matrix(buffer.str(), source, path.string());
}

}  // namespace kgind
