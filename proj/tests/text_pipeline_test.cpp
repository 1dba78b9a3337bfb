#include <gtest/gtest.h>

#include "textmatch/errors.hpp"
#include "textmatch/random.hpp"
#include "textmatch/text_pipeline.hpp"

namespace textmatch {
namespace {

TEST(Tokenize, SplitsOnWhitespaceKeepingPunctuation) {
  EXPECT_EQ(tokenize("Hello, World"), (Tokens{"Hello,", "World"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("a  b"), (Tokens{"a", "b"}));
  EXPECT_EQ(tokenize("\ta\nb\r\n"), (Tokens{"a", "b"}));
  EXPECT_EQ(tokenize("x　y z"), (Tokens{"x", "y", "z"}));
}

TEST(Lowercase, Examples) {
  EXPECT_EQ(lowercase({"Hello", "WORLD"}), (Tokens{"hello", "world"}));
  EXPECT_EQ(lowercase({}), Tokens{});
  EXPECT_EQ(lowercase({"already"}), Tokens{"already"});
}

TEST(Lowercase, NonAscii) {
  EXPECT_EQ(lowercase({"ÉCOLE", "ΑΒΓ", "ПРИВЕТ", "Łódź"}),
            (Tokens{"école", "αβγ", "привет", "łódź"}));
}

TEST(PuncRemoval, Examples) {
  EXPECT_EQ(punc_removal({"it's", "a", "test", "."}), (Tokens{"its", "a", "test"}));
  EXPECT_EQ(punc_removal({"..."}), Tokens{});
  EXPECT_EQ(punc_removal({"plain"}), Tokens{"plain"});
  EXPECT_EQ(punc_removal({"«quoted»", "—"}), Tokens{"quoted"});
}

TEST(FrequencyFilter, FitAndTransform) {
  auto f = FrequencyFilter::fit({{"a", "b", "a"}, {"a", "c"}}, 2);
  EXPECT_EQ(f.keep_set(), std::set<std::string>{"a"});
  EXPECT_EQ(f.transform({"a", "b", "a"}), (Tokens{"a", "a"}));

  auto all = FrequencyFilter::fit({{"a", "b", "a"}, {"a", "c"}}, 1);
  EXPECT_EQ(all.keep_set(), (std::set<std::string>{"a", "b", "c"}));
  EXPECT_EQ(all.transform({"c", "a", "b"}), (Tokens{"c", "a", "b"}));

  auto empty = FrequencyFilter::fit({}, 3);
  EXPECT_TRUE(empty.keep_set().empty());
  EXPECT_EQ(empty.transform({"x"}), Tokens{});

  EXPECT_THROW(FrequencyFilter::fit({}, 0), ConfigError);
}

TEST(VocabularyTest, FrequencyOrderWithLexicographicTies) {
  auto v = Vocabulary::fit({{"b", "a", "b"}});
  EXPECT_EQ(v.index("b"), 2);
  EXPECT_EQ(v.index("a"), 3);
  EXPECT_EQ(v.transform({"a", "b"}), (Indices{3, 2}));
  EXPECT_EQ(v.transform({}), Indices{});
  EXPECT_EQ(v.transform({"zzz"}), Indices{kOovIndex});

  auto tie = Vocabulary::fit({{"a"}, {"b"}});
  EXPECT_EQ(tie.index("a"), 2);
  EXPECT_EQ(tie.index("b"), 3);

  auto reserved = Vocabulary::fit({});
  EXPECT_EQ(reserved.size(), 2u);
  EXPECT_TRUE(reserved.entries().empty());
}

TEST(VocabularyTest, EntriesRoundTripAndValidation) {
  auto v = Vocabulary::fit({{"x", "y", "y", "z"}});
  auto rebuilt = Vocabulary::from_entries(v.entries());
  EXPECT_EQ(rebuilt.map(), v.map());
  EXPECT_THROW(Vocabulary::from_entries({{"a", 1}}), LoadError);
  EXPECT_THROW(Vocabulary::from_entries({{"a", 2}, {"b", 2}}), LoadError);
}

TEST(WordHashing, Trigrams) {
  EXPECT_EQ(word_hashing("good"), (Tokens{"#go", "goo", "ood", "od#"}));
  EXPECT_EQ(word_hashing("a"), Tokens{"#a#"});
  EXPECT_EQ(word_hashing("ab"), (Tokens{"#ab", "ab#"}));
  EXPECT_EQ(word_hashing("éa"), (Tokens{"#éa", "éa#"}));
  EXPECT_THROW(word_hashing(""), ConfigError);
}

TEST(FixedLength, TruncatesTailAndPads) {
  EXPECT_EQ(fixed_length(Indices{5, 6, 7}, 2, 0), (Indices{5, 6}));
  EXPECT_EQ(fixed_length(Indices{5}, 3, 0), (Indices{5, 0, 0}));
  EXPECT_EQ(fixed_length(Indices{}, 2, 0), (Indices{0, 0}));
  EXPECT_THROW(fixed_length(Indices{1}, 0, 0), ConfigError);
  EXPECT_THROW(make_fixed_length_unit(0), ConfigError);
}

TEST(Units, StatefulUnitsMustBeFitted) {
  auto vocab = make_vocabulary_unit();
  EXPECT_FALSE(vocab->fitted());
  EXPECT_THROW(vocab->transform(Tokens{"a"}), NotFittedError);
  auto filter = make_frequency_filter_unit(1);
  EXPECT_THROW(filter->transform(Tokens{"a"}), NotFittedError);
  EXPECT_THROW(make_frequency_filter_unit(0), ConfigError);
  EXPECT_TRUE(make_lowercase_unit()->fitted());
}

std::vector<std::unique_ptr<ProcessorUnit>> units(std::initializer_list<UnitKind> kinds) {
  std::vector<std::unique_ptr<ProcessorUnit>> out;
  for (auto k : kinds) {
    switch (k) {
      case UnitKind::kTokenize: out.push_back(make_tokenize_unit()); break;
      case UnitKind::kLowercase: out.push_back(make_lowercase_unit()); break;
      case UnitKind::kPuncRemoval: out.push_back(make_punc_removal_unit()); break;
      case UnitKind::kFrequencyFilter: out.push_back(make_frequency_filter_unit(1)); break;
      case UnitKind::kVocabulary: out.push_back(make_vocabulary_unit()); break;
      case UnitKind::kWordHashing: out.push_back(make_word_hashing_unit()); break;
      case UnitKind::kFixedLength: out.push_back(make_fixed_length_unit(3)); break;
      case UnitKind::kTrigramVectorize: out.push_back(make_trigram_vectorize_unit()); break;
    }
  }
  return out;
}

TEST(PipelineTest, Composition) {
  Pipeline lower(units({UnitKind::kTokenize, UnitKind::kLowercase}));
  auto out = lower.fit_transform(std::vector<std::string>{"A b"});
  EXPECT_EQ(std::get<Tokens>(out[0]), (Tokens{"a", "b"}));

  Pipeline indexed(units({UnitKind::kTokenize, UnitKind::kVocabulary}));
  auto idx = indexed.fit_transform(std::vector<std::string>{"b a b"});
  EXPECT_EQ(std::get<Indices>(idx[0]), (Indices{2, 3, 2}));

  Pipeline empty;
  auto same = empty.fit_transform(std::vector<std::string>{"A b"});
  EXPECT_EQ(std::get<std::string>(same[0]), "A b");
}

TEST(PipelineTest, CategoryMismatchRejectedAtConstruction) {
  EXPECT_THROW(Pipeline(units({UnitKind::kVocabulary, UnitKind::kLowercase})), ConfigError);
  EXPECT_THROW(Pipeline(units({UnitKind::kTokenize, UnitKind::kTokenize})), ConfigError);
  EXPECT_NO_THROW(Pipeline(units({UnitKind::kTokenize, UnitKind::kVocabulary, UnitKind::kFixedLength})));
}

TEST(PipelineTest, FittedPipelineHandlesUnseenText) {
  Pipeline p(units({UnitKind::kTokenize, UnitKind::kLowercase, UnitKind::kPuncRemoval,
                    UnitKind::kFrequencyFilter, UnitKind::kVocabulary, UnitKind::kFixedLength}));
  p.fit_transform(std::vector<std::string>{"The cat.", "the dog"});
  EXPECT_TRUE(p.fitted());
  EXPECT_EQ(std::get<Indices>(p.transform(Datum(std::string("THE bird")))), (Indices{2, 0, 0}));
  EXPECT_EQ(p.output_category(), Category::kIndices);
}

TEST(PipelineTest, TrigramVectorization) {
  Pipeline p(units({UnitKind::kTokenize, UnitKind::kWordHashing, UnitKind::kTrigramVectorize}));
  auto out = p.fit_transform(std::vector<std::string>{"aa aa"});
  // "#aa#" twice: #aa x2, aa# x2 -> indices 2 and 3 (tie broken lexicographically)
  const auto& counts = std::get<TrigramCounts>(out[0]);
  EXPECT_EQ(counts.dimension, 4u);
  ASSERT_EQ(counts.entries.size(), 2u);
  EXPECT_EQ(counts.entries[0], (std::pair<std::size_t, double>{2, 2.0}));
  EXPECT_EQ(counts.entries[1], (std::pair<std::size_t, double>{3, 2.0}));
  auto unseen = std::get<TrigramCounts>(p.transform(Datum(std::string("b"))));
  ASSERT_EQ(unseen.entries.size(), 1u);
  EXPECT_EQ(unseen.entries[0].first, static_cast<std::size_t>(kOovIndex));
}

TEST(PipelineTest, JsonRoundTripPreservesFittedState) {
  Pipeline p(units({UnitKind::kTokenize, UnitKind::kLowercase, UnitKind::kFrequencyFilter,
                    UnitKind::kVocabulary, UnitKind::kFixedLength}));
  p.fit_transform(std::vector<std::string>{"b a b c", "c d"});
  const auto j = p.to_json();
  EXPECT_EQ(j["units"][2]["state"], nlohmann::json({"a", "b", "c", "d"}));
  EXPECT_EQ(j["units"][3]["state"][0], nlohmann::json({"b", 2}));
  Pipeline back = Pipeline::from_json(j);
  EXPECT_EQ(back.to_json(), j);
  const Datum probe(std::string("D c b zz"));
  EXPECT_EQ(back.transform(probe), p.transform(probe));
}

// Random token lists over a small alphabet with mixed case and punctuation.
Tokens random_tokens(Rng& rng) {
  static const std::vector<std::string> pieces = {"a", "B", "c", "Dé", ".", ",", "'", "x", "Ω", "!"};
  Tokens out(rng.index(8));
  for (auto& t : out) {
    const std::size_t len = 1 + rng.index(4);
    for (std::size_t i = 0; i < len; ++i) t += pieces[rng.index(pieces.size())];
  }
  return out;
}

TEST(PipelineProperties, IdempotenceAndOrder) {
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    const Tokens t = random_tokens(rng);
    const Tokens low = lowercase(t);
    EXPECT_EQ(lowercase(low), low);
    const Tokens clean = punc_removal(t);
    EXPECT_EQ(punc_removal(clean), clean);
    EXPECT_EQ(low.size(), t.size());
    // Surviving tokens keep their relative order.
    std::size_t cursor = 0;
    for (const auto& kept : clean) {
      while (cursor < t.size() && punc_removal({t[cursor]}) != Tokens{kept}) ++cursor;
      ASSERT_LT(cursor, t.size());
      ++cursor;
    }
  }
}

TEST(PipelineProperties, VocabularyNeverEmitsPadding) {
  Rng rng(5);
  std::vector<Tokens> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back(random_tokens(rng));
  auto v = Vocabulary::fit(corpus);
  EXPECT_EQ(Vocabulary::fit(corpus).map(), v.map());
  for (const auto& doc : corpus) {
    for (auto idx : v.transform(doc)) EXPECT_GE(idx, 2);
  }
}

}  // namespace
}  // namespace textmatch
