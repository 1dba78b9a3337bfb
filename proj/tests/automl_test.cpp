#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "test_support.hpp"
#include "textmatch/automl.hpp"
#include "textmatch/errors.hpp"

namespace textmatch {
namespace {

using testing::TempDir;
using nlohmann::json;

json mixed_space() {
  return {{"kernel_num", {{"type", "int_uniform"}, {"low", 2}, {"high", 9}}},
          {"sigma", {{"type", "float_uniform"}, {"low", 0.05}, {"high", 0.5}}},
          {"learning_rate", {{"type", "float_log_uniform"}, {"low", 1e-4}, {"high", 1e-1}}},
          {"train_embeddings", {{"type", "categorical"}, {"values", {true, false}}}}};
}

TEST(SearchSpaceTest, JsonRoundTrip) {
  const auto s = SearchSpace::from_json(mixed_space());
  EXPECT_EQ(s.to_json(), mixed_space());
  EXPECT_EQ(SearchSpace::from_json(s.to_json()).to_json(), s.to_json());
}

TEST(SearchSpaceTest, MalformedDomains) {
  const json bad[] = {
      json::array(),
      json::object(),
      {{"sigma", {{"type", "gaussian"}}}},
      {{"sigma", {{"type", "categorical"}, {"values", json::array()}}}},
      {{"sigma", {{"type", "float_uniform"}, {"low", 0.5}, {"high", 0.5}}}},
      {{"sigma", {{"type", "float_uniform"}, {"low", 0.1}}}},
      {{"sigma", {{"type", "float_log_uniform"}, {"low", 0.0}, {"high", 1.0}}}},
      {{"kernel_num", {{"type", "int_uniform"}, {"low", 2.5}, {"high", 4}}}},
  };
  for (const auto& j : bad) EXPECT_THROW(SearchSpace::from_json(j), ConfigError) << j.dump();
}

TEST(SearchSpaceTest, ValidatesAgainstSchemas) {
  SearchSpace::from_json(mixed_space()).validate_for("knrm");
  auto expect_invalid = [](const json& j, const std::string& model, const std::string& needle) {
    try {
      SearchSpace::from_json(j).validate_for(model);
      ADD_FAILURE() << "expected ConfigError for " << j.dump();
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_invalid(mixed_space(), "drmm", "kernel_num");
  expect_invalid({{"kernel_num", {{"type", "int_uniform"}, {"low", 2}, {"high", 99}}}}, "knrm",
                 "kernel_num");
  expect_invalid({{"kernel_num", {{"type", "float_uniform"}, {"low", 2}, {"high", 9}}}}, "knrm",
                 "integer");
  expect_invalid({{"hist_mode", {{"type", "float_uniform"}, {"low", 0}, {"high", 1}}}}, "drmm",
                 "categorical");
  expect_invalid({{"hist_mode", {{"type", "categorical"}, {"values", {"lch", "xx"}}}}}, "drmm",
                 "xx");
  expect_invalid({{"nope", {{"type", "categorical"}, {"values", {1}}}}}, "dssm", "nope");
}

TEST(Sampling, DrawsStayInDomain) {
  const auto s = SearchSpace::from_json(mixed_space());
  Rng rng(11);
  std::map<long long, int> ints;
  double log_lo = 1.0, log_hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const json v = sample(s, rng);
    ASSERT_EQ(v.size(), s.params.size());
    for (const auto& [name, d] : s.params) ASSERT_TRUE(d.contains(v.at(name))) << name << v.dump();
    ASSERT_TRUE(v.at("kernel_num").is_number_integer());
    ++ints[v.at("kernel_num").get<long long>()];
    log_lo = std::min(log_lo, v.at("learning_rate").get<double>());
    log_hi = std::max(log_hi, v.at("learning_rate").get<double>());
  }
  EXPECT_EQ(ints.size(), 8u);
  EXPECT_EQ(ints.begin()->first, 2);
  EXPECT_EQ(ints.rbegin()->first, 9);
  EXPECT_LT(log_lo, 2e-4);
  EXPECT_GT(log_hi, 5e-2);
}

TEST(Sampling, LogUniformIsUniformInLogSpace) {
  const auto s = SearchSpace::from_json(
      {{"learning_rate", {{"type", "float_log_uniform"}, {"low", 1e-4}, {"high", 1.0}}}});
  Rng rng(3);
  int below = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) below += sample(s, rng).at("learning_rate").get<double>() < 1e-2;
  EXPECT_NEAR(static_cast<double>(below) / n, 0.5, 0.03);
}

TEST(Sampling, DeterministicPerSeed) {
  const auto s = SearchSpace::from_json(mixed_space());
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample(s, a), sample(s, b));
}

class TuneTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("tune");
    raw_ = new RawDataset(load_dataset(generate_toy(dir_->path(), {10, 8, 4})));
  }
  static void TearDownTestSuite() {
    delete raw_;
    delete dir_;
  }
  static TuneOptions options(std::size_t trials) {
    TuneOptions o;
    o.trials = trials;
    o.seed = 9;
    o.base_config.epochs = 2;
    o.base_hyper_parameters = {{"embedding_dim", 8}, {"kernel_num", 5}};
    return o;
  }
  static TempDir* dir_;
  static RawDataset* raw_;
};
TempDir* TuneTest::dir_ = nullptr;
RawDataset* TuneTest::raw_ = nullptr;

TEST_F(TuneTest, TableIsReproducibleAndBestIsMaximal) {
  const auto space = SearchSpace::from_json(
      {{"sigma", {{"type", "float_uniform"}, {"low", 0.05}, {"high", 0.5}}},
       {"learning_rate", {{"type", "float_log_uniform"}, {"low", 1e-3}, {"high", 1e-1}}}});
  std::vector<std::size_t> seen;
  const auto a = tune("knrm", space, *raw_, options(3), [&](const Trial& t) { seen.push_back(t.index); });
  const auto b = tune("knrm", space, *raw_, options(3));
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2}));
  ASSERT_EQ(a.trials.size(), 3u);
  for (const auto& t : a.trials) {
    ASSERT_EQ(t.status, TrialStatus::kDone) << t.error;
    EXPECT_LE(*t.metric, *a.trials[a.best_index].metric);
    EXPECT_EQ(t.config.at("sigma"), a.trials[t.index].config.at("sigma"));
  }
  for (std::size_t i = 0; i < a.best_index; ++i) {
    EXPECT_LT(*a.trials[i].metric, *a.trials[a.best_index].metric);
  }
  EXPECT_DOUBLE_EQ(a.best.model->hyper_parameters().at("sigma").get<double>(),
                   a.trials[a.best_index].config.at("sigma").get<double>());
  EXPECT_EQ(a.best.config.optimizer.learning_rate,
            a.trials[a.best_index].config.at("learning_rate").get<double>());
}

TEST_F(TuneTest, TrialConfigDependsOnlyOnSeedAndIndex) {
  const auto space = SearchSpace::from_json(
      {{"sigma", {{"type", "float_uniform"}, {"low", 0.05}, {"high", 0.5}}}});
  const auto two = tune("knrm", space, *raw_, options(2));
  const auto three = tune("knrm", space, *raw_, options(3));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(two.trials[i].to_json(), three.trials[i].to_json());
  }
  auto parallel = options(3);
  parallel.workers = 2;
  EXPECT_EQ(tune("knrm", space, *raw_, parallel).to_json(), three.to_json());
}

RawDataset without_train_positives(const RawDataset& raw) {
  RawDataset out = raw;
  for (auto& r : out.train) r.label = 0;
  return out;
}

TEST_F(TuneTest, FailedTrialsAreRecorded) {
  const auto space = SearchSpace::from_json(
      {{"loss", {{"type", "categorical"}, {"values", {"pairwise_hinge", "mse"}}}}});
  auto opts = options(6);
  opts.seed = 1;
  const auto result = tune("knrm", space, without_train_positives(*raw_), opts);
  std::set<std::string> statuses;
  for (const auto& t : result.trials) {
    if (t.config.at("loss") == "pairwise_hinge") {
      EXPECT_EQ(t.status, TrialStatus::kFailed);
      EXPECT_FALSE(t.error.empty());
      EXPECT_FALSE(t.metric.has_value());
      EXPECT_EQ(t.to_json().at("metric"), nullptr);
    } else {
      EXPECT_EQ(t.status, TrialStatus::kDone) << t.error;
    }
    statuses.insert(std::string(trial_status_name(t.status)));
  }
  EXPECT_EQ(statuses.size(), 2u) << "seed should draw both losses";
  EXPECT_EQ(result.trials[result.best_index].status, TrialStatus::kDone);
}

TEST_F(TuneTest, AllFailedThrowsWithDiagnostics) {
  const auto space = SearchSpace::from_json(
      {{"sigma", {{"type", "float_uniform"}, {"low", 0.05}, {"high", 0.5}}}});
  try {
    tune("knrm", space, without_train_positives(*raw_), options(2));
    FAIL() << "expected Error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("trial 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("trial 1"), std::string::npos) << msg;
  }
}

TEST_F(TuneTest, RejectsBadRequests) {
  const auto space = SearchSpace::from_json(
      {{"sigma", {{"type", "float_uniform"}, {"low", 0.05}, {"high", 0.5}}}});
  EXPECT_THROW(tune("knrm", space, *raw_, options(0)), ConfigError);
  auto bad_metric = options(1);
  bad_metric.metric = "auc";
  EXPECT_THROW(tune("knrm", space, *raw_, bad_metric), ConfigError);
  EXPECT_THROW(tune("drmm", space, *raw_, options(1)), ConfigError);
  RawDataset no_valid = *raw_;
  no_valid.valid.clear();
  EXPECT_THROW(tune("knrm", space, no_valid, options(1)), ConfigError);
}

}  // namespace
}  // namespace textmatch
