#include "kgind/kg.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "kgind/log.hpp"

namespace kgind {

std::uint32_t Vocabulary::intern(std::string_view name) {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  return std::nullopt;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Splits on '\t'; strips a trailing '\r'.
std::vector<std::string_view> split_tabs(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    fn(text.substr(start, end - start), line_no);
    start = end + 1;
  }
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

TripleFile parse_triples(std::string_view text, std::string_view source_name) {
  TripleFile out;
  std::unordered_set<std::string> seen;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    out.line_count = line_no;
    if (is_blank(line)) return;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw Error(std::string(source_name) + ":" + std::to_string(line_no) +
                  ": expected head<TAB>relation<TAB>tail");
    }
    StringTriple t{std::string(fields[0]), std::string(fields[1]), std::string(fields[2])};
    if (!seen.insert(t.head + '\t' + t.relation + '\t' + t.tail).second) ++out.duplicate_count;
    out.triples.push_back(std::move(t));
  });
  return out;
}

TripleFile load_triples(const std::filesystem::path& path) {
  auto out = parse_triples(read_file(path), path.string());
  log::info("triples_loaded", {{"path", path.string()},
                               {"lines", out.line_count},
                               {"triples", out.triples.size()},
                               {"duplicates", out.duplicate_count}});
  if (out.duplicate_count > 0) {
    log::warn("duplicate_triples", {{"path", path.string()}, {"count", out.duplicate_count}});
  }
  return out;
}

void write_triples(const std::filesystem::path& path, std::span<const StringTriple> triples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  for (const auto& t : triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

std::string_view to_string(SplitRole role) {
  switch (role) {
    case SplitRole::standalone: return "standalone";
    case SplitRole::train: return "train";
    case SplitRole::valid: return "valid";
    case SplitRole::test: return "test";
  }
  return "standalone";
}

KnowledgeGraph::KnowledgeGraph(std::shared_ptr<const Vocabularies> vocab, std::vector<Triple> triples,
                               SplitRole role)
    : vocab_(std::move(vocab)), role_(role) {
  const std::size_t n_ent = vocab_->entities.size();
  const std::size_t n_rel = vocab_->relations.size();
  entity_present_.assign(n_ent, false);
  relation_present_.assign(n_rel, false);
  by_relation_.resize(n_rel);
  head_counts_.resize(n_rel);
  tail_counts_.resize(n_rel);

  std::unordered_set<Triple, TripleHash> seen;
  seen.reserve(triples.size());
  triples_.reserve(triples.size());
  for (const auto& t : triples) {
    if (t.head.value >= n_ent || t.tail.value >= n_ent || t.relation.value >= n_rel) {
      throw Error("triple handle outside vocabulary");
    }
    if (!seen.insert(t).second) {
      ++duplicates_removed_;
      continue;
    }
    const std::size_t index = triples_.size();
    triples_.push_back(t);
    for (EntityId e : {t.head, t.tail}) {
      if (!entity_present_[e.value]) {
        entity_present_[e.value] = true;
        entity_ids_.push_back(e);
      }
    }
    if (!relation_present_[t.relation.value]) {
      relation_present_[t.relation.value] = true;
      relation_ids_.push_back(t.relation);
    }
    by_relation_[t.relation.value].push_back(index);
    ++head_counts_[t.relation.value][t.head.value];
    ++tail_counts_[t.relation.value][t.tail.value];
  }
}

bool KnowledgeGraph::has_entity(EntityId e) const {
  return e.value < entity_present_.size() && entity_present_[e.value];
}

bool KnowledgeGraph::has_relation(RelationId r) const {
  return r.value < relation_present_.size() && relation_present_[r.value];
}

std::span<const std::size_t> KnowledgeGraph::triples_of(RelationId r) const {
  if (r.value >= by_relation_.size()) return {};
  return by_relation_[r.value];
}

const KnowledgeGraph::PositionCounts& KnowledgeGraph::head_counts(RelationId r) const {
  static const PositionCounts empty;
  return r.value < head_counts_.size() ? head_counts_[r.value] : empty;
}

const KnowledgeGraph::PositionCounts& KnowledgeGraph::tail_counts(RelationId r) const {
  static const PositionCounts empty;
  return r.value < tail_counts_.size() ? tail_counts_[r.value] : empty;
}

std::vector<StringTriple> KnowledgeGraph::to_strings() const {
  std::vector<StringTriple> out;
  out.reserve(triples_.size());
  for (const auto& t : triples_) {
    out.push_back({entity_name(t.head), relation_name(t.relation), entity_name(t.tail)});
  }
  return out;
}

namespace {

std::vector<Triple> intern_all(Vocabularies& vocab, std::span<const StringTriple> triples) {
  std::vector<Triple> out;
  out.reserve(triples.size());
  for (const auto& t : triples) {
    const EntityId h{vocab.entities.intern(t.head)};
    const RelationId r{vocab.relations.intern(t.relation)};
    const EntityId tl{vocab.entities.intern(t.tail)};
    out.push_back({h, r, tl});
  }
  return out;
}

}  // namespace

KnowledgeGraph build_graph(std::span<const StringTriple> triples) {
  auto vocab = std::make_shared<Vocabularies>();
  auto interned = intern_all(*vocab, triples);
  KnowledgeGraph graph(vocab, std::move(interned));
  if (graph.duplicates_removed() > 0) {
    log::warn("duplicate_triples_removed", {{"count", graph.duplicates_removed()}});
  }
  return graph;
}

const KnowledgeGraph& SplitDataset::split(SplitRole role) const {
  switch (role) {
    case SplitRole::valid: return valid;
    case SplitRole::test: return test;
    default: return train;
  }
}

SplitDataset build_splits(std::span<const StringTriple> train, std::span<const StringTriple> valid,
                          std::span<const StringTriple> test) {
  auto vocab = std::make_shared<Vocabularies>();
  auto tr = intern_all(*vocab, train);
  auto va = intern_all(*vocab, valid);
  auto te = intern_all(*vocab, test);
  SplitDataset out;
  out.vocab = vocab;
  out.train = KnowledgeGraph(vocab, std::move(tr), SplitRole::train);
  out.valid = KnowledgeGraph(vocab, std::move(va), SplitRole::valid);
  out.test = KnowledgeGraph(vocab, std::move(te), SplitRole::test);
  for (const auto* g : {&out.train, &out.valid, &out.test}) {
    if (g->duplicates_removed() > 0) {
      log::warn("duplicate_triples_removed",
                {{"split", to_string(g->role())}, {"count", g->duplicates_removed()}});
    }
  }
  return out;
}

SplitDataset load_split_dir(const std::filesystem::path& dir) {
  const auto train = load_triples(dir / "train.tsv");
  const auto valid = load_triples(dir / "valid.tsv");
  const auto test = load_triples(dir / "test.tsv");
  return build_splits(train.triples, valid.triples, test.triples);
}

std::string_view to_string(InductiveSetting setting) {
  switch (setting) {
    case InductiveSetting::transductive: return "transductive";
    case InductiveSetting::semi_inductive: return "semi_inductive";
    case InductiveSetting::fully_inductive: return "fully_inductive";
    case InductiveSetting::truly_inductive: return "truly_inductive";
  }
  return "transductive";
}

InductiveSetting classify_setting(const SplitDataset& splits) {
  if (splits.test.empty()) throw Error("cannot classify setting: empty test split");
  const auto& train = splits.train;
  bool relation_unseen = false;
  bool all_both_unseen = true;
  bool any_unseen = false;
  for (const auto* eval : {&splits.valid, &splits.test}) {
    for (const auto& t : eval->triples()) {
      if (!train.has_relation(t.relation)) relation_unseen = true;
      const bool head_new = !train.has_entity(t.head);
      const bool tail_new = !train.has_entity(t.tail);
      if (head_new || tail_new) any_unseen = true;
      if (!(head_new && tail_new)) all_both_unseen = false;
    }
  }
  if (relation_unseen) return InductiveSetting::truly_inductive;
  if (all_both_unseen) return InductiveSetting::fully_inductive;
  if (any_unseen) return InductiveSetting::semi_inductive;
  return InductiveSetting::transductive;
}

std::vector<TextRecord> load_text_records(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<TextRecord> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (is_blank(line)) return;
    const auto fields = split_tabs(line);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": expected id<TAB>label[<TAB>description]");
    }
    out.push_back({std::string(fields[0]), std::string(fields[1]),
                   fields.size() == 3 ? std::string(fields[2]) : std::string()});
  });
  return out;
}

}  // namespace kgind
