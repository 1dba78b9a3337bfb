#include "textmatch/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "textmatch/errors.hpp"
#include "textmatch/random.hpp"

namespace textmatch {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Calls fn(line_number, line) for every line, without the terminator.
template <typename Fn>
void for_each_line(std::string_view content, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    fn(line_no, line);
    pos = end + 1;
  }
}

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + " line " + std::to_string(line);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
}

}  // namespace

RawCorpus parse_corpus(std::string_view content, std::string_view source) {
  RawCorpus corpus;
  for_each_line(content, [&](std::size_t n, std::string_view line) {
    if (line.empty()) return;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw IngestionError(where(source, n) + ": expected \"id<TAB>text\"");
    }
    std::string id(line.substr(0, tab));
    if (!corpus.emplace(id, std::string(line.substr(tab + 1))).second) {
      throw IngestionError(where(source, n) + ": duplicate id '" + id + "'");
    }
  });
  return corpus;
}

RawCorpus load_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_file(path), path.filename().string());
}

std::vector<Relation> parse_relations(std::string_view content, std::string_view source) {
  std::vector<Relation> relations;
  for_each_line(content, [&](std::size_t n, std::string_view line) {
    if (line.empty()) return;
    auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[1].empty() || fields[2].empty()) {
      throw IngestionError(where(source, n) + ": expected \"label<TAB>left-id<TAB>right-id\"");
    }
    std::int64_t label = -1;
    auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), label);
    if (ec != std::errc() || ptr != fields[0].data() + fields[0].size() || label < 0) {
      throw IngestionError(where(source, n) + ": label '" + std::string(fields[0]) +
                           "' is not a non-negative integer");
    }
    relations.push_back(Relation{std::string(fields[1]), std::string(fields[2]), label});
  });
  if (relations.empty()) throw IngestionError(std::string(source) + ": no relations");
  return relations;
}

std::vector<Relation> load_relations(const std::filesystem::path& path) {
  return parse_relations(read_file(path), path.filename().string());
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// DataPack

DataPack::DataPack(Corpus left, Corpus right, std::vector<Relation> relations, Split split)
    : left_(std::move(left)), right_(std::move(right)), relations_(std::move(relations)),
      split_(split) {
  if (relations_.empty()) throw IngestionError("data pack needs at least one relation");
  std::set<std::string> missing;
  for (const auto& r : relations_) {
    if (r.label < 0) throw IngestionError("negative label for " + r.left_id + "/" + r.right_id);
    if (!left_.contains(r.left_id)) missing.insert("left:" + r.left_id);
    if (!right_.contains(r.right_id)) missing.insert("right:" + r.right_id);
  }
  if (!missing.empty()) {
    std::string msg = "relations reference unknown ids:";
    for (const auto& m : missing) msg += " " + m;
    throw IngestionError(msg);
  }
}

DataPack DataPack::assemble(const RawCorpus& left, const RawCorpus& right,
                            std::vector<Relation> relations, Split split,
                            const Pipeline& pipeline) {
  std::set<std::string_view> used_left, used_right;
  for (const auto& r : relations) {
    used_left.insert(r.left_id);
    used_right.insert(r.right_id);
  }
  // Only texts the relations use are processed; unknown ids fall through to
  // the constructor's check.
  auto process = [&](const RawCorpus& raw, const std::set<std::string_view>& used) {
    Corpus out;
    for (auto id : used) {
      auto it = raw.find(id);
      if (it != raw.end()) out.emplace(it->first, pipeline.transform(Datum(it->second)));
    }
    return out;
  };
  return DataPack(process(left, used_left), process(right, used_right), std::move(relations),
                  split);
}

const Datum& DataPack::left(std::string_view id) const {
  auto it = left_.find(id);
  if (it == left_.end()) throw IngestionError("unknown left id '" + std::string(id) + "'");
  return it->second;
}

const Datum& DataPack::right(std::string_view id) const {
  auto it = right_.find(id);
  if (it == right_.end()) throw IngestionError("unknown right id '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> DataPack::left_ids() const {
  std::set<std::string> ids;
  for (const auto& r : relations_) ids.insert(r.left_id);
  return {ids.begin(), ids.end()};
}

// ---------------------------------------------------------------------------
// Batching

std::string_view batch_mode_name(BatchMode m) {
  switch (m) {
    case BatchMode::kPointwise: return "pointwise";
    case BatchMode::kPairwise: return "pairwise";
    case BatchMode::kListwise: return "listwise";
  }
  return "unknown";
}

BatchMode parse_batch_mode(std::string_view name) {
  for (auto m : {BatchMode::kPointwise, BatchMode::kPairwise, BatchMode::kListwise}) {
    if (batch_mode_name(m) == name) return m;
  }
  throw ConfigError("unknown batch mode '" + std::string(name) + "'");
}

std::size_t Batch::size() const {
  switch (mode) {
    case BatchMode::kPointwise: return points.size();
    case BatchMode::kPairwise: return pairs.size();
    case BatchMode::kListwise: return groups.size();
  }
  return 0;
}

namespace {

template <typename T, typename Assign>
std::vector<Batch> chunk(const std::vector<T>& items, std::size_t batch_size, BatchMode mode,
                         Assign assign) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    Batch b;
    b.mode = mode;
    const std::size_t end = std::min(items.size(), start + batch_size);
    assign(b, std::vector<T>(items.begin() + start, items.begin() + end));
    out.push_back(std::move(b));
  }
  return out;
}

// Relation indices per left id, in file order; map keeps left ids ascending.
std::map<std::string, std::vector<std::size_t>> group_by_left(const std::vector<Relation>& rels) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rels.size(); ++i) groups[rels[i].left_id].push_back(i);
  return groups;
}

}  // namespace

std::vector<Batch> pointwise_batches(const DataPack& pack, std::size_t batch_size,
                                     std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<Relation> rels = pack.relations();
  Rng rng(seed);
  rng.shuffle(rels);
  return chunk(rels, batch_size, BatchMode::kPointwise,
               [](Batch& b, std::vector<Relation> part) { b.points = std::move(part); });
}

std::vector<Batch> pairwise_batches(const DataPack& pack, std::size_t num_neg_per_pos,
                                    std::size_t batch_size, std::uint64_t seed) {
  if (num_neg_per_pos < 1) throw ConfigError("num_neg_per_pos must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  const auto& rels = pack.relations();
  Rng rng(seed);
  std::vector<PairExample> pairs;
  for (const auto& [left, members] : group_by_left(rels)) {
    for (std::size_t pos : members) {
      std::vector<std::size_t> lower;
      for (std::size_t neg : members) {
        if (rels[pos].label > rels[neg].label) lower.push_back(neg);
      }
      // Partial Fisher-Yates: the first k slots become a uniform draw
      // without replacement.
      const std::size_t k = std::min(num_neg_per_pos, lower.size());
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(lower[i], lower[i + rng.index(lower.size() - i)]);
      }
      for (std::size_t i = 0; i < k; ++i) {
        pairs.push_back(PairExample{left, rels[pos].right_id, rels[lower[i]].right_id});
      }
    }
  }
  if (pairs.empty()) throw ConfigError("no trainable pairs: no left id has two distinct labels");
  rng.shuffle(pairs);
  return chunk(pairs, batch_size, BatchMode::kPairwise,
               [](Batch& b, std::vector<PairExample> part) { b.pairs = std::move(part); });
}

std::vector<Batch> listwise_batches(const DataPack& pack, std::size_t groups_per_batch,
                                    std::optional<std::uint64_t> shuffle_seed) {
  const auto& rels = pack.relations();
  std::vector<ListGroup> groups;
  for (const auto& [left, members] : group_by_left(rels)) {
    ListGroup g{left, {}, {}};
    for (std::size_t i : members) {
      g.right_ids.push_back(rels[i].right_id);
      g.labels.push_back(rels[i].label);
    }
    groups.push_back(std::move(g));
  }
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(groups);
  }
  return chunk(groups, groups_per_batch, BatchMode::kListwise,
               [](Batch& b, std::vector<ListGroup> part) { b.groups = std::move(part); });
}

// ---------------------------------------------------------------------------
// Embeddings

Tensor random_embeddings(std::size_t vocab_size, std::size_t dimension, std::uint64_t seed) {
  if (vocab_size < 1 || dimension < 1) throw ConfigError("embedding shape must be positive");
  Tensor m({vocab_size, dimension});
  Rng rng(seed);
  for (auto& v : m.data()) v = rng.uniform(-0.2, 0.2);
  for (std::size_t j = 0; j < dimension; ++j) m.at(0, j) = 0.0;
  return m;
}

Tensor parse_embeddings(std::string_view content, const Vocabulary& vocab, std::size_t dimension,
                        std::uint64_t seed) {
  Tensor m = random_embeddings(vocab.size(), dimension, seed);
  bool first = true;
  for_each_line(content, [&](std::size_t n, std::string_view line) {
    std::istringstream fields{std::string(line)};
    std::vector<std::string> parts;
    for (std::string f; fields >> f;) parts.push_back(f);
    if (parts.empty()) return;
    const bool was_first = first;
    first = false;
    if (was_first && parts.size() == 2 &&
        std::all_of(parts[0].begin(), parts[0].end(), ::isdigit) &&
        std::all_of(parts[1].begin(), parts[1].end(), ::isdigit) &&
        static_cast<std::size_t>(std::stoull(parts[1])) == dimension) {
      return;  // "count dim" header
    }
    const std::string& token = parts[0];
    if (parts.size() - 1 != dimension) {
      throw IngestionError("embeddings line " + std::to_string(n) + ": vector for '" + token +
                           "' has " + std::to_string(parts.size() - 1) + " values, expected " +
                           std::to_string(dimension));
    }
    std::vector<double> values(dimension);
    for (std::size_t j = 0; j < dimension; ++j) {
      const std::string& f = parts[j + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[j]);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(values[j])) {
        throw IngestionError("embeddings line " + std::to_string(n) + ": value '" + f +
                             "' for '" + token + "' is not a finite number");
      }
    }
    const std::int64_t idx = vocab.index(token);
    if (idx == kOovIndex) return;
    for (std::size_t j = 0; j < dimension; ++j) m.at(static_cast<std::size_t>(idx), j) = values[j];
  });
  for (std::size_t j = 0; j < dimension; ++j) m.at(0, j) = 0.0;
  return m;
}

Tensor load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                       std::size_t dimension, std::uint64_t seed) {
  return parse_embeddings(read_file(path), vocab, dimension, seed);
}

// ---------------------------------------------------------------------------
// IDF

IdfTable::IdfTable(const DataPack& pack) {
  for (const auto& [id, datum] : pack.right_corpus()) {
    const auto* indices = std::get_if<Indices>(&datum);
    if (indices == nullptr) throw ConfigError("idf needs index sequences in the right corpus");
    std::set<std::int64_t> terms(indices->begin(), indices->end());
    terms.erase(kPaddingIndex);
    for (auto t : terms) ++df_[t];
    ++documents_;
  }
  if (documents_ == 0) throw ConfigError("idf needs a non-empty right corpus");
}

IdfTable::IdfTable(std::size_t documents, std::map<std::int64_t, std::size_t> df)
    : documents_(documents), df_(std::move(df)) {}

double IdfTable::operator()(std::int64_t term) const {
  auto it = df_.find(term);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  const double n = static_cast<double>(documents_);
  return std::log((n + 1.0) / (df + 1.0)) + 1.0;
}

std::vector<double> IdfTable::dense(std::size_t size) const {
  std::vector<double> out(size);
  for (std::size_t i = 0; i < size; ++i) out[i] = (*this)(static_cast<std::int64_t>(i));
  return out;
}

std::map<std::int64_t, double> idf_weights(const DataPack& pack) {
  IdfTable table(pack);
  std::set<std::int64_t> terms;
  for (const auto& [id, datum] : pack.right_corpus()) {
    const auto& idx = std::get<Indices>(datum);
    terms.insert(idx.begin(), idx.end());
  }
  terms.erase(kPaddingIndex);
  std::map<std::int64_t, double> out;
  for (auto t : terms) out[t] = table(t);
  return out;
}

}  // namespace textmatch
