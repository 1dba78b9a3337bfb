#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "textmatch/dataset.hpp"
#include "textmatch/errors.hpp"
#include "textmatch/random.hpp"

namespace textmatch {
namespace {

DataPack make_pack(const std::vector<Relation>& rels) {
  DataPack::Corpus left, right;
  for (const auto& r : rels) {
    left.emplace(r.left_id, Indices{2});
    right.emplace(r.right_id, Indices{3});
  }
  return DataPack(left, right, rels, Split::kTrain);
}

TEST(LoadCorpus, ParsesLines) {
  auto c = parse_corpus("d1\thello world\n");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.at("d1"), "hello world");
  EXPECT_TRUE(parse_corpus("").empty());
  EXPECT_EQ(parse_corpus("q\ta\tb\r\n").at("q"), "a\tb");
}

TEST(LoadCorpus, DuplicateIdNamesLine) {
  try {
    parse_corpus("d1\tx\nd1\ty\n", "left.tsv");
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("left.tsv line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_corpus("no tab here\n"), IngestionError);
}

TEST(LoadRelations, ParsesAndValidates) {
  auto r = parse_relations("1\tq1\td1\n0\tq1\td2\n");
  EXPECT_EQ(r, (std::vector<Relation>{{"q1", "d1", 1}, {"q1", "d2", 0}}));
  EXPECT_THROW(parse_relations("-1\tq1\td1"), IngestionError);
  EXPECT_THROW(parse_relations("1.5\tq1\td1"), IngestionError);
  EXPECT_THROW(parse_relations("1\tq1"), IngestionError);
  EXPECT_THROW(parse_relations(""), IngestionError);
}

TEST(LoadFromDisk, ReadsFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "textmatch_dataset_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.tsv") << "a\tx y\n";
  std::ofstream(dir / "r.tsv") << "2\ta\ta\n";
  EXPECT_EQ(load_corpus(dir / "c.tsv").at("a"), "x y");
  EXPECT_EQ(load_relations(dir / "r.tsv")[0].label, 2);
  EXPECT_THROW(load_corpus(dir / "missing.tsv"), IngestionError);
  std::filesystem::remove_all(dir);
}

TEST(DataPackTest, UnknownIdsAreListed) {
  try {
    DataPack({{"q1", Indices{}}}, {{"d1", Indices{}}},
             {{"q1", "d1", 1}, {"q2", "d9", 0}}, Split::kTrain);
    FAIL();
  } catch (const IngestionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("left:q2"), std::string::npos);
    EXPECT_NE(msg.find("right:d9"), std::string::npos);
  }
  EXPECT_THROW(DataPack({}, {}, {}, Split::kTrain), IngestionError);
}

TEST(Pointwise, ChunksShuffledRelations) {
  std::vector<Relation> rels;
  for (int i = 0; i < 5; ++i) rels.push_back({"q", "d" + std::to_string(i), i % 2});
  auto pack = make_pack(rels);
  auto batches = pointwise_batches(pack, 2, 1);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 2u);
  EXPECT_EQ(batches[2].size(), 1u);
  EXPECT_EQ(pointwise_batches(pack, 2, 1), batches);
  EXPECT_EQ(pointwise_batches(pack, 10, 1).size(), 1u);
  std::multiset<std::string> seen;
  for (const auto& b : batches) {
    for (const auto& r : b.points) seen.insert(r.right_id);
  }
  EXPECT_EQ(seen, (std::multiset<std::string>{"d0", "d1", "d2", "d3", "d4"}));
}

TEST(Pairwise, SinglePair) {
  auto pack = make_pack({{"q1", "d1", 1}, {"q1", "d2", 0}});
  auto batches = pairwise_batches(pack, 1, 8, 3);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].pairs, (std::vector<PairExample>{{"q1", "d1", "d2"}}));
}

TEST(Pairwise, GradedLabels) {
  auto pack = make_pack({{"q1", "d1", 2}, {"q1", "d2", 1}, {"q1", "d3", 0}});
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& b : pairwise_batches(pack, 2, 8, 3)) {
    for (const auto& p : b.pairs) got.emplace(p.positive_id, p.negative_id);
  }
  EXPECT_EQ(got, (std::set<std::pair<std::string, std::string>>{
                     {"d1", "d2"}, {"d1", "d3"}, {"d2", "d3"}}));
}

TEST(Pairwise, EqualLabelsHaveNoPairs) {
  auto pack = make_pack({{"q1", "d1", 1}, {"q1", "d2", 1}});
  EXPECT_THROW(pairwise_batches(pack, 1, 8, 3), ConfigError);
}

TEST(Pairwise, NegativeSamplingCapsPerPositive) {
  auto pack = make_pack({{"q", "p", 1}, {"q", "n1", 0}, {"q", "n2", 0}, {"q", "n3", 0}});
  auto batches = pairwise_batches(pack, 2, 100, 9);
  ASSERT_EQ(batches.size(), 1u);
  ASSERT_EQ(batches[0].pairs.size(), 2u);
  EXPECT_NE(batches[0].pairs[0].negative_id, batches[0].pairs[1].negative_id);
}

TEST(Listwise, GroupsByLeftId) {
  auto pack = make_pack({{"q2", "d3", 1}, {"q1", "d1", 1}, {"q1", "d2", 0}});
  auto batches = listwise_batches(pack);
  ASSERT_EQ(batches.size(), 2u);
  EXPECT_EQ(batches[0].groups[0], (ListGroup{"q1", {"d1", "d2"}, {1, 0}}));
  EXPECT_EQ(batches[1].groups[0], (ListGroup{"q2", {"d3"}, {1}}));
  EXPECT_EQ(listwise_batches(pack), batches);
  auto single = listwise_batches(make_pack({{"q", "d", 0}}));
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].groups[0].right_ids.size(), 1u);
}

TEST(Listwise, SeededShuffleIsDeterministic) {
  std::vector<Relation> rels;
  for (int q = 0; q < 12; ++q) rels.push_back({"q" + std::to_string(q), "d", q % 2});
  auto pack = make_pack(rels);
  EXPECT_EQ(listwise_batches(pack, 3, 4), listwise_batches(pack, 3, 4));
  EXPECT_NE(listwise_batches(pack, 3, 4), listwise_batches(pack, 3));
}

TEST(Embeddings, CopiesKnownRowsAndSeedsTheRest) {
  auto vocab = Vocabulary::fit({{"a", "a", "b"}});  // a->2, b->3
  auto m = parse_embeddings("a 0.1 0.2\n", vocab, 2, 42);
  EXPECT_EQ(m.shape(), (Shape{4, 2}));
  EXPECT_EQ(m.at(2, 0), 0.1);
  EXPECT_EQ(m.at(2, 1), 0.2);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_EQ(m.at(0, j), 0.0);
    EXPECT_GE(m.at(3, j), -0.2);
    EXPECT_LT(m.at(3, j), 0.2);
  }
  EXPECT_EQ(parse_embeddings("a 0.1 0.2\n", vocab, 2, 42), m);
  EXPECT_EQ(parse_embeddings("2 2\na 0.1 0.2\nzzz 1 1\n", vocab, 2, 42), m);
}

TEST(Embeddings, WrongLengthNamesToken) {
  auto vocab = Vocabulary::fit({{"a"}});
  try {
    parse_embeddings("a 0.1\n", vocab, 2, 1);
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
  EXPECT_THROW(parse_embeddings("a 0.1 abc\n", vocab, 2, 1), IngestionError);
}

TEST(Idf, SmoothedFormula) {
  DataPack pack({{"q", Indices{2}}}, {{"d1", Indices{2, 3, 0}}, {"d2", Indices{2, 2}}},
                {{"q", "d1", 1}, {"q", "d2", 0}}, Split::kTrain);
  IdfTable idf(pack);
  EXPECT_DOUBLE_EQ(idf(2), 1.0);                              // in every text
  EXPECT_NEAR(idf(3), std::log(3.0 / 2.0) + 1.0, 1e-15);      // N=2, df=1
  EXPECT_NEAR(idf(3), 1.405, 5e-4);
  EXPECT_NEAR(idf(42), std::log(3.0) + 1.0, 1e-15);           // unseen
  auto weights = idf_weights(pack);
  EXPECT_EQ(weights.size(), 2u);
  EXPECT_FALSE(weights.contains(kPaddingIndex));
}

}  // namespace
}  // namespace textmatch
