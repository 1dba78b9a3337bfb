#include "textmatch/workflow.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "textmatch/errors.hpp"
#include "textmatch/random.hpp"

namespace textmatch {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Files

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot move " + tmp.string() + " into place");
  }
}

// ---------------------------------------------------------------------------
// Datasets

void RawDataset::check_ids() const {
  std::set<std::string> missing;
  for (const auto* rels : {&train, &valid, &test}) {
    for (const auto& r : *rels) {
      if (!left.contains(r.left_id)) missing.insert("left:" + r.left_id);
      if (!right.contains(r.right_id)) missing.insert("right:" + r.right_id);
    }
  }
  if (missing.empty()) return;
  std::string msg = "relations reference unknown ids:";
  std::size_t shown = 0;
  for (const auto& m : missing) {
    if (++shown > 20) {
      msg += " ... (" + std::to_string(missing.size()) + " total)";
      break;
    }
    msg += " " + m;
  }
  throw IngestionError(msg);
}

RawDataset load_dataset(const DatasetFiles& files) {
  RawDataset raw;
  raw.left = load_corpus(files.corpus_left);
  raw.right = load_corpus(files.corpus_right);
  raw.train = load_relations(files.relations_train);
  if (files.relations_valid) raw.valid = load_relations(*files.relations_valid);
  if (files.relations_test) raw.test = load_relations(*files.relations_test);
  raw.check_ids();
  return raw;
}

Pipeline data_transformer_for(std::string_view model_id) {
  const ModelSpec& spec = find_model_spec(model_id);
  std::vector<std::unique_ptr<ProcessorUnit>> units;
  units.push_back(make_tokenize_unit());
  units.push_back(make_lowercase_unit());
  units.push_back(make_punc_removal_unit());
  if (spec.id == "dssm") {
    units.push_back(make_word_hashing_unit());
    units.push_back(make_trigram_vectorize_unit());
  } else {
    units.push_back(make_frequency_filter_unit(1));
    units.push_back(make_vocabulary_unit());
    units.push_back(make_fixed_length_unit(kFixedTextLength));
  }
  return Pipeline(std::move(units));
}

PreparedData prepare_data(std::string_view model_id, const RawDataset& raw,
                          const nlohmann::json& hyper_parameters, std::uint64_t seed,
                          const std::optional<fs::path>& embeddings_file) {
  const ModelSpec& spec = find_model_spec(model_id);
  const nlohmann::json hp = spec.resolve(hyper_parameters);
  raw.check_ids();

  std::set<std::string> left_ids, right_ids;
  for (const auto& r : raw.train) {
    left_ids.insert(r.left_id);
    right_ids.insert(r.right_id);
  }
  std::vector<std::string> texts;
  for (const auto& id : left_ids) texts.push_back(raw.left.find(id)->second);
  for (const auto& id : right_ids) texts.push_back(raw.right.find(id)->second);

  Pipeline pipeline = data_transformer_for(model_id);
  pipeline.fit_transform(texts);

  auto pack = [&](const std::vector<Relation>& rels, Split split) -> std::optional<DataPack> {
    if (rels.empty()) return std::nullopt;
    return DataPack::assemble(raw.left, raw.right, rels, split, pipeline);
  };
  if (raw.train.empty()) throw IngestionError("training relations are empty");
  DataPack train = *pack(raw.train, Split::kTrain);

  ModelContext ctx;
  const Vocabulary* vocab = pipeline.vocabulary();
  if (vocab == nullptr) throw ConfigError("data transformer has no vocabulary");
  if (spec.id == "dssm") {
    ctx.trigram_dim = vocab->size();
  } else {
    ctx.vocab_size = vocab->size();
    const auto dim = hp.at("embedding_dim").get<std::size_t>();
    const std::uint64_t emb_seed = derive_seed(seed, 0x656d62);
    ctx.embeddings = embeddings_file ? load_embeddings(*embeddings_file, *vocab, dim, emb_seed)
                                     : random_embeddings(vocab->size(), dim, emb_seed);
    ctx.idf = IdfTable(train).dense(vocab->size());
  }
  auto valid = pack(raw.valid, Split::kValid);
  auto test = pack(raw.test, Split::kTest);
  return PreparedData{std::move(pipeline), std::move(train), std::move(valid), std::move(test),
                      std::move(ctx)};
}

FitResult fit_model(std::string_view model_id, const RawDataset& raw,
                    const nlohmann::json& hyper_parameters, const TrainConfig& config,
                    const EventSink& sink, const std::atomic<bool>* cancel,
                    const std::optional<fs::path>& embeddings_file) {
  config.validate();
  PreparedData data = prepare_data(model_id, raw, hyper_parameters, config.seed, embeddings_file);
  auto model = build_model(model_id, hyper_parameters, data.context, config.seed);
  TrainResult result =
      train(*model, data.train, data.valid ? &*data.valid : nullptr, config, sink, cancel);
  return FitResult{TrainedModel(std::move(model), std::move(data.pipeline), config),
                   std::move(result)};
}

// ---------------------------------------------------------------------------
// Trained models

TrainedModel::TrainedModel(std::unique_ptr<MatchingModel> m, Pipeline p, TrainConfig c)
    : model(std::move(m)), pipeline(std::move(p)), config(std::move(c)) {}

TrainedModel::TrainedModel(const TrainedModel& other)
    : model(other.model ? other.model->clone() : nullptr),
      pipeline(other.pipeline),
      config(other.config) {}

TrainedModel& TrainedModel::operator=(const TrainedModel& other) {
  if (this != &other) *this = TrainedModel(other);
  return *this;
}

namespace {

Datum process_text(const Pipeline& pipeline, std::string_view text, const char* side) {
  if (text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos) {
    throw ConfigError(std::string(side) + " text is empty");
  }
  return pipeline.transform(Datum(std::string(text)));
}

}  // namespace

double TrainedModel::score_text(std::string_view left, std::string_view right) const {
  return model->score(process_text(pipeline, left, "left"), process_text(pipeline, right, "right"));
}

Explanation TrainedModel::explain_text(std::string_view left, std::string_view right) const {
  return model->explain(process_text(pipeline, left, "left"), process_text(pipeline, right, "right"));
}

namespace {

constexpr int kFormatVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return out;
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | ((v >> (8 * i)) & 0xff);
  return out;
}

void append_double(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  bits = to_little_endian(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

double read_double(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  bits = to_little_endian(bits);  // the swap is its own inverse
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace

void save_model(const fs::path& dir, const TrainedModel& trained) {
  if (!trained.model) throw ConfigError("no model to save");
  fs::create_directories(dir);
  std::string weights;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : trained.model->parameters()) {
    params.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"trainable", p.trainable}});
    for (double v : p.tensor.data()) append_double(weights, v);
  }
  const nlohmann::json manifest = {
      {"format", kFormatVersion},
      {"model_id", trained.model->spec().id},
      {"hyper_parameters", trained.model->hyper_parameters()},
      {"pipeline", trained.pipeline.to_json()},
      {"train_config", trained.config.to_json()},
      {"parameters", params},
      {"weights_bytes", weights.size()},
      {"weights_fnv1a64", hex64(fnv1a64(weights))},
  };
  write_file_atomic(dir / "weights.bin", weights);
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

TrainedModel load_model(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  const fs::path weights_path = dir / "weights.bin";
  auto fail = [](const fs::path& file, const std::string& why) {
    return LoadError(file.filename().string() + ": " + why);
  };
  if (!fs::exists(manifest_path)) throw fail(manifest_path, "missing in " + dir.string());
  if (!fs::exists(weights_path)) throw fail(weights_path, "missing in " + dir.string());

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw fail(manifest_path, std::string("invalid JSON: ") + e.what());
  }
  const std::string weights = read_file(weights_path);
  try {
    if (manifest.at("format").get<int>() != kFormatVersion) {
      throw fail(manifest_path, "unsupported format version");
    }
    const auto expected = manifest.at("weights_bytes").get<std::size_t>();
    if (weights.size() != expected) {
      throw fail(weights_path, "expected " + std::to_string(expected) + " bytes, found " +
                                   std::to_string(weights.size()));
    }
    if (hex64(fnv1a64(weights)) != manifest.at("weights_fnv1a64").get<std::string>()) {
      throw fail(weights_path, "checksum mismatch");
    }
    ParameterSet params;
    std::size_t offset = 0;
    for (const auto& p : manifest.at("parameters")) {
      const Shape shape = p.at("shape").get<Shape>();
      const std::size_t count = shape_size(shape);
      if (offset + count * 8 > weights.size()) {
        throw fail(weights_path, "shorter than the parameter shapes in the manifest");
      }
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) values[i] = read_double(weights.data() + offset + 8 * i);
      offset += 8 * count;
      params.add(p.at("name").get<std::string>(), Tensor(shape, std::move(values)),
                 p.at("trainable").get<bool>());
    }
    if (offset != weights.size()) {
      throw fail(weights_path, "longer than the parameter shapes in the manifest");
    }
    const auto model_id = manifest.at("model_id").get<std::string>();
    std::unique_ptr<MatchingModel> model;
    try {
      model = restore_model(model_id, manifest.at("hyper_parameters"), params);
    } catch (const LoadError& e) {
      throw fail(manifest_path, e.what());
    }
    return TrainedModel(std::move(model), Pipeline::from_json(manifest.at("pipeline")),
                        TrainConfig::from_json(manifest.at("train_config")));
  } catch (const LoadError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw fail(manifest_path, std::string("malformed: ") + e.what());
  } catch (const Error& e) {
    throw fail(manifest_path, e.what());
  }
}

// ---------------------------------------------------------------------------
// Toy data

namespace {

std::vector<std::string> toy_vocabulary(Rng& rng, std::size_t size) {
  static const std::vector<std::string> onsets = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                                  "r", "s", "t", "v", "z", "br", "st", "tr"};
  static const std::vector<std::string> vowels = {"a", "e", "i", "o", "u"};
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < size) {
    std::string w;
    const std::size_t syllables = 2 + rng.index(2);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += onsets[rng.index(onsets.size())];
      w += vowels[rng.index(vowels.size())];
    }
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

DatasetFiles generate_toy(const fs::path& out_dir, const ToyOptions& options) {
  if (options.queries < 1 || options.docs_per_query < 1) {
    throw ConfigError("toy data needs at least one query and one document per query");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw Error("cannot create directory " + out_dir.string());

  Rng rng(options.seed);
  const auto vocab = toy_vocabulary(rng, 300);
  std::string left, right, all;
  std::string split_text[3];
  for (std::size_t q = 0; q < options.queries; ++q) {
    const std::size_t qlen = 3 + rng.index(3);
    std::vector<std::size_t> pool(vocab.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    rng.shuffle(pool);
    const std::vector<std::size_t> query(pool.begin(), pool.begin() + static_cast<long>(qlen));
    const std::vector<std::size_t> others(pool.begin() + static_cast<long>(qlen), pool.end());

    std::vector<std::string> qwords;
    for (auto i : query) qwords.push_back(vocab[i]);
    const std::string qid = "q" + std::to_string(q);
    left += qid + "\t" + join_words(qwords) + "\n";

    for (std::size_t d = 0; d < options.docs_per_query; ++d) {
      const std::size_t len = 8 + rng.index(8);
      const std::size_t shared = std::min<std::size_t>(rng.index(4), qlen);
      std::vector<std::size_t> picks(query.begin(), query.end());
      rng.shuffle(picks);
      picks.resize(shared);
      std::vector<std::string> words;
      for (auto i : picks) words.push_back(vocab[i]);
      while (words.size() < len) words.push_back(vocab[others[rng.index(others.size())]]);
      rng.shuffle(words);
      words.front()[0] = static_cast<char>(words.front()[0] - 'a' + 'A');
      words.back() += '.';

      const std::string did = "d" + std::to_string(q) + "_" + std::to_string(d);
      right += did + "\t" + join_words(words) + "\n";
      const std::string line = std::string(shared >= 2 ? "1" : "0") + "\t" + qid + "\t" + did + "\n";
      all += line;
      split_text[q % 5 == 3 ? 1 : q % 5 == 4 ? 2 : 0] += line;
    }
  }

  DatasetFiles files{out_dir / "corpus_left.tsv", out_dir / "corpus_right.tsv",
                     out_dir / "relations.tsv", std::nullopt, std::nullopt};
  write_file_atomic(files.corpus_left, left);
  write_file_atomic(files.corpus_right, right);
  write_file_atomic(out_dir / "relations.tsv", all);
  if (options.queries >= 5) {
    files.relations_train = out_dir / "relations_train.tsv";
    files.relations_valid = out_dir / "relations_valid.tsv";
    files.relations_test = out_dir / "relations_test.tsv";
    write_file_atomic(files.relations_train, split_text[0]);
    write_file_atomic(*files.relations_valid, split_text[1]);
    write_file_atomic(*files.relations_test, split_text[2]);
  }
  return files;
}

}  // namespace textmatch
