#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "test_support.hpp"
#include "textmatch/errors.hpp"
#include "textmatch/workflow.hpp"

namespace textmatch {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::size_t line_count(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

TEST(Toy, ByteIdenticalForSameSeed) {
  TempDir a("toy_a"), b("toy_b");
  generate_toy(a.path(), {});
  generate_toy(b.path(), {});
  for (const char* f : {"corpus_left.tsv", "corpus_right.tsv", "relations.tsv",
                        "relations_train.tsv", "relations_valid.tsv", "relations_test.tsv"}) {
    EXPECT_EQ(read_file(a.path() / f), read_file(b.path() / f)) << f;
  }
  TempDir c("toy_c");
  generate_toy(c.path(), {50, 20, 8});
  EXPECT_NE(read_file(a.path() / "corpus_left.tsv"), read_file(c.path() / "corpus_left.tsv"));
}

TEST(Toy, SmallShapes) {
  TempDir d("toy_small");
  auto files = generate_toy(d.path(), {1, 2, 3});
  EXPECT_EQ(line_count(files.relations_train), 2u);
  EXPECT_EQ(line_count(files.corpus_left), 1u);
  EXPECT_EQ(line_count(files.corpus_right), 2u);
  EXPECT_FALSE(files.relations_valid.has_value());
  EXPECT_THROW(generate_toy(d.path(), {0, 2, 3}), ConfigError);
}

TEST(Toy, LabelsFollowSharedWordRule) {
  TempDir d("toy_rule");
  auto files = generate_toy(d.path(), {});
  const auto raw = load_dataset({files.corpus_left, files.corpus_right, d.path() / "relations.tsv",
                                 std::nullopt, std::nullopt});
  EXPECT_EQ(raw.train.size(), 50u * 20u);
  auto words = [](std::string text) {
    std::set<std::string> out;
    for (auto& ch : text) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    std::istringstream in(text);
    for (std::string w; in >> w;) {
      if (!w.empty() && w.back() == '.') w.pop_back();
      out.insert(w);
    }
    return out;
  };
  std::size_t positives = 0;
  for (const auto& r : raw.train) {
    const auto q = words(raw.left.find(r.left_id)->second);
    const auto doc = words(raw.right.find(r.right_id)->second);
    std::size_t shared = 0;
    for (const auto& w : q) shared += doc.count(w);
    EXPECT_EQ(r.label, shared >= 2 ? 1 : 0) << r.left_id << " " << r.right_id;
    positives += r.label;
  }
  EXPECT_GT(positives, 0u);
  EXPECT_LT(positives, raw.train.size());
}

TEST(Toy, SplitsPartitionQueries) {
  TempDir d("toy_split");
  auto files = generate_toy(d.path(), {});
  const auto raw = load_dataset(files);
  EXPECT_EQ(raw.train.size() + raw.valid.size() + raw.test.size(), 1000u);
  for (const auto& r : raw.valid) EXPECT_EQ(std::stoi(r.left_id.substr(1)) % 5, 3);
  for (const auto& r : raw.test) EXPECT_EQ(std::stoi(r.left_id.substr(1)) % 5, 4);
}

TEST(Ingestion, MissingIdsAreNamed) {
  RawDataset raw;
  raw.left = {{"q1", "a b"}};
  raw.right = {{"d1", "a c"}};
  raw.train = {{"q1", "d1", 1}, {"q9", "d1", 0}, {"q1", "d7", 0}};
  try {
    raw.check_ids();
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("q9"), std::string::npos);
    EXPECT_NE(msg.find("d7"), std::string::npos);
  }
}

TEST(Transformers, PerModel) {
  EXPECT_EQ(data_transformer_for("dssm").output_category(), Category::kTrigramCounts);
  EXPECT_EQ(data_transformer_for("knrm").output_category(), Category::kIndices);
  EXPECT_EQ(data_transformer_for("drmm").output_category(), Category::kIndices);
  EXPECT_THROW(data_transformer_for("bert"), ConfigError);
}

class PreparedToy : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("prepared");
    raw_ = new RawDataset(load_dataset(generate_toy(dir_->path(), {10, 6, 3})));
  }
  static void TearDownTestSuite() {
    delete raw_;
    delete dir_;
  }
  static TempDir* dir_;
  static RawDataset* raw_;
};
TempDir* PreparedToy::dir_ = nullptr;
RawDataset* PreparedToy::raw_ = nullptr;

TEST_F(PreparedToy, ContextMatchesVocabulary) {
  auto knrm = prepare_data("knrm", *raw_, {{"embedding_dim", 8}}, 1);
  ASSERT_TRUE(knrm.valid && knrm.test);
  EXPECT_EQ(knrm.train.relations().size(), raw_->train.size());
  EXPECT_EQ(knrm.context.vocab_size, knrm.pipeline.vocabulary()->size());
  EXPECT_EQ(knrm.context.embeddings->shape(), (Shape{knrm.context.vocab_size, 8}));
  EXPECT_EQ(knrm.context.idf->size(), knrm.context.vocab_size);

  auto dssm = prepare_data("dssm", *raw_, {{"layer_widths", "32"}}, 1);
  EXPECT_EQ(dssm.context.trigram_dim, dssm.pipeline.vocabulary()->size());
  EXPECT_FALSE(dssm.context.embeddings.has_value());
}

TEST_F(PreparedToy, DeterministicForSeed) {
  auto a = prepare_data("drmm", *raw_, {{"embedding_dim", 4}}, 5);
  auto b = prepare_data("drmm", *raw_, {{"embedding_dim", 4}}, 5);
  auto c = prepare_data("drmm", *raw_, {{"embedding_dim", 4}}, 6);
  EXPECT_EQ(a.pipeline.to_json(), b.pipeline.to_json());
  auto values = [](const PreparedData& d) {
    const auto span = d.context.embeddings->data();
    return std::vector<double>(span.begin(), span.end());
  };
  EXPECT_EQ(values(a), values(b));
  EXPECT_NE(values(a), values(c));
}

TEST_F(PreparedToy, RejectsBadHyperParameters) {
  EXPECT_THROW(prepare_data("knrm", *raw_, {{"kernel_num", 1}}, 1), ConfigError);
  RawDataset empty = *raw_;
  empty.train.clear();
  EXPECT_THROW(prepare_data("knrm", empty, {}, 1), IngestionError);
}

TrainedModel train_small(const RawDataset& raw, const std::string& id, const nlohmann::json& hp) {
  auto data = prepare_data(id, raw, hp, 2);
  auto model = build_model(id, hp, data.context, 2);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 2;
  train(*model, data.train, nullptr, cfg);
  return TrainedModel(std::move(model), std::move(data.pipeline), cfg);
}

nlohmann::json small_hp(const std::string& id) {
  if (id == "dssm") return {{"layer_widths", "32"}};
  if (id == "drmm") return {{"embedding_dim", 6}, {"hist_bins", 5}};
  return {{"embedding_dim", 6}, {"kernel_num", 5}};
}

class PersistenceTest : public PreparedToy, public ::testing::WithParamInterface<std::string> {};

TEST_P(PersistenceTest, RoundTripIsBitIdentical) {
  const auto trained = train_small(*raw_, GetParam(), small_hp(GetParam()));
  TempDir out("save_" + GetParam());
  save_model(out.path(), trained);
  const auto loaded = load_model(out.path());
  EXPECT_EQ(loaded.model->spec().id, GetParam());
  EXPECT_EQ(loaded.pipeline.to_json(), trained.pipeline.to_json());
  EXPECT_EQ(loaded.config.to_json(), trained.config.to_json());
  for (const auto& r : raw_->valid) {
    const auto& l = raw_->left.find(r.left_id)->second;
    const auto& rt = raw_->right.find(r.right_id)->second;
    const double a = trained.score_text(l, rt);
    const double b = loaded.score_text(l, rt);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0) << r.left_id << " " << r.right_id;
  }
}

TEST_P(PersistenceTest, CorruptArtifactsNameTheFile) {
  const auto trained = train_small(*raw_, GetParam(), small_hp(GetParam()));
  TempDir out("corrupt_" + GetParam());
  save_model(out.path(), trained);
  const std::string weights = read_file(out.path() / "weights.bin");
  const std::string manifest = read_file(out.path() / "manifest.json");
  auto expect_load_error = [&](const std::string& file) {
    try {
      load_model(out.path());
      ADD_FAILURE() << "expected LoadError naming " << file;
    } catch (const LoadError& e) {
      EXPECT_NE(std::string(e.what()).find(file), std::string::npos) << e.what();
    }
  };

  write_file_atomic(out.path() / "weights.bin", weights.substr(0, weights.size() - 8));
  expect_load_error("weights.bin");

  std::string flipped = weights;
  flipped[flipped.size() / 2] ^= 0x01;
  write_file_atomic(out.path() / "weights.bin", flipped);
  expect_load_error("weights.bin");

  write_file_atomic(out.path() / "weights.bin", weights);
  write_file_atomic(out.path() / "manifest.json", manifest.substr(0, manifest.size() / 2));
  expect_load_error("manifest.json");

  auto j = nlohmann::json::parse(manifest);
  j["parameters"].erase(j["parameters"].size() - 1);
  write_file_atomic(out.path() / "manifest.json", j.dump());
  expect_load_error("weights.bin");

  fs::remove(out.path() / "manifest.json");
  expect_load_error("manifest.json");
}

INSTANTIATE_TEST_SUITE_P(Models, PersistenceTest, ::testing::Values("dssm", "drmm", "knrm"));

TEST_F(PreparedToy, ScoreTextValidatesInput) {
  const auto trained = train_small(*raw_, "knrm", small_hp("knrm"));
  const auto& rel = raw_->train.front();
  const std::string& left = raw_->left.find(rel.left_id)->second;
  const std::string& right = raw_->right.find(rel.right_id)->second;
  EXPECT_TRUE(std::isfinite(trained.score_text(left, right)));
  EXPECT_THROW(trained.score_text("", "x"), ConfigError);
  EXPECT_THROW(trained.score_text("x", " \t "), ConfigError);
  EXPECT_THROW(trained.score_text("zzzq xxxv", right), ConfigError);
  const auto ex = trained.explain_text(left, right);
  EXPECT_EQ(ex.family, Family::kInteraction);
  EXPECT_EQ(ex.score, trained.score_text(left, right));

  TrainedModel copy = trained;
  EXPECT_EQ(copy.score_text(left, right), trained.score_text(left, right));
}

TEST(AtomicWrite, ReplacesContent) {
  TempDir d("atomic");
  write_file_atomic(d.path() / "f.txt", "one");
  write_file_atomic(d.path() / "f.txt", "two");
  EXPECT_EQ(read_file(d.path() / "f.txt"), "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(d.path())) ++files;
  EXPECT_EQ(files, 1u);
}

}  // namespace
}  // namespace textmatch
