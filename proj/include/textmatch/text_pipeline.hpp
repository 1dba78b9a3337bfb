#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace textmatch {

using Tokens = std::vector<std::string>;
using Indices = std::vector<std::int64_t>;

/// Sparse letter-trigram frequency vector over a fitted trigram vocabulary.
struct TrigramCounts {
  std::size_t dimension = 0;
  std::vector<std::pair<std::size_t, double>> entries;  // ascending index
  friend bool operator==(const TrigramCounts&, const TrigramCounts&) = default;
};

/// One text at some stage of processing.
using Datum = std::variant<std::string, Tokens, Indices, TrigramCounts>;

enum class Category { kText, kTokens, kIndices, kTrigramCounts };
std::string_view category_name(Category c);
Category category_of(const Datum& d);

inline constexpr std::int64_t kPaddingIndex = 0;
inline constexpr std::int64_t kOovIndex = 1;

// Stateless transformations.

/// Splits on Unicode whitespace; punctuation stays attached.
Tokens tokenize(std::string_view text);
Tokens lowercase(const Tokens& tokens);
/// Strips punctuation code points from each token and drops emptied tokens.
Tokens punc_removal(const Tokens& tokens);
/// Letter trigrams of "#" + token + "#", duplicates retained.
Tokens word_hashing(std::string_view token);
Tokens fixed_length(const Tokens& tokens, std::size_t length, const std::string& pad);
Indices fixed_length(const Indices& indices, std::size_t length, std::int64_t pad);

/// Terms whose corpus frequency reaches `min_freq`.
class FrequencyFilter {
 public:
  static FrequencyFilter fit(const std::vector<Tokens>& corpus, std::int64_t min_freq);
  static FrequencyFilter from_keep_set(std::set<std::string> keep);

  Tokens transform(const Tokens& tokens) const;
  const std::set<std::string>& keep_set() const { return keep_; }

 private:
  std::set<std::string> keep_;
};

/// Term to index map. Index 0 is padding and 1 is out-of-vocabulary; terms
/// take 2, 3, ... by descending corpus frequency, ties lexicographic.
class Vocabulary {
 public:
  static Vocabulary fit(const std::vector<Tokens>& corpus);
  /// Rebuilds from (term, index) pairs; indices must be exactly 2..n+1.
  static Vocabulary from_entries(const std::vector<std::pair<std::string, std::int64_t>>& entries);

  std::int64_t index(std::string_view term) const;
  Indices transform(const Tokens& tokens) const;
  /// Number of indices including the two reserved ones.
  std::size_t size() const { return terms_.size() + 2; }
  /// Term of index i >= 2.
  const std::string& term(std::int64_t i) const;
  std::vector<std::pair<std::string, std::int64_t>> entries() const;
  const std::map<std::string, std::int64_t, std::less<>>& map() const { return index_; }

 private:
  std::map<std::string, std::int64_t, std::less<>> index_;
  std::vector<std::string> terms_;  // terms_[i - 2]
};

enum class UnitKind {
  kTokenize,
  kLowercase,
  kPuncRemoval,
  kFrequencyFilter,
  kVocabulary,
  kWordHashing,
  kFixedLength,
  kTrigramVectorize,
};

std::string_view unit_kind_name(UnitKind kind);
UnitKind parse_unit_kind(std::string_view name);

/// A processing unit with the shared fit / transform interface.
class ProcessorUnit {
 public:
  virtual ~ProcessorUnit() = default;

  virtual UnitKind kind() const = 0;
  virtual bool accepts(Category in) const = 0;
  virtual Category output(Category in) const = 0;
  virtual bool stateful() const { return false; }
  virtual bool fitted() const { return true; }
  virtual void fit(const std::vector<Datum>& data);
  virtual Datum transform(const Datum& in) const = 0;

  virtual nlohmann::json params() const { return nlohmann::json::object(); }
  virtual nlohmann::json state() const { return nullptr; }
  /// Fitted term index of vocabulary-like units, else null.
  virtual const Vocabulary* vocabulary() const { return nullptr; }
  virtual std::unique_ptr<ProcessorUnit> clone() const = 0;

  nlohmann::json to_json() const;
};

std::unique_ptr<ProcessorUnit> make_tokenize_unit();
std::unique_ptr<ProcessorUnit> make_lowercase_unit();
std::unique_ptr<ProcessorUnit> make_punc_removal_unit();
std::unique_ptr<ProcessorUnit> make_frequency_filter_unit(std::int64_t min_freq);
std::unique_ptr<ProcessorUnit> make_vocabulary_unit();
std::unique_ptr<ProcessorUnit> make_word_hashing_unit();
std::unique_ptr<ProcessorUnit> make_fixed_length_unit(std::int64_t length, std::int64_t pad = 0);
/// Counts trigram tokens into a frequency vector over a fitted trigram vocabulary.
std::unique_ptr<ProcessorUnit> make_trigram_vectorize_unit();
/// Rebuilds a unit, fitted state included, from `ProcessorUnit::to_json`.
std::unique_ptr<ProcessorUnit> unit_from_json(const nlohmann::json& j);

/// Ordered chain of units whose categories line up.
class Pipeline {
 public:
  Pipeline() = default;
  explicit Pipeline(std::vector<std::unique_ptr<ProcessorUnit>> units);
  Pipeline(const Pipeline& other);
  Pipeline& operator=(const Pipeline& other);
  Pipeline(Pipeline&&) noexcept = default;
  Pipeline& operator=(Pipeline&&) noexcept = default;

  /// Fits stateful units in order on the progressively transformed corpus and
  /// returns the transformed corpus.
  std::vector<Datum> fit_transform(std::vector<Datum> corpus);
  std::vector<Datum> fit_transform(const std::vector<std::string>& texts);
  Datum transform(Datum in) const;
  std::vector<Datum> transform(std::vector<Datum> corpus) const;

  bool fitted() const;
  std::size_t size() const { return units_.size(); }
  const ProcessorUnit& unit(std::size_t i) const { return *units_.at(i); }
  /// Output category for raw text input.
  Category output_category() const;
  /// Vocabulary of the last fitted vocabulary or trigram unit, if any.
  const Vocabulary* vocabulary() const;

  nlohmann::json to_json() const;
  static Pipeline from_json(const nlohmann::json& j);

 private:
  std::vector<std::unique_ptr<ProcessorUnit>> units_;
};

}  // namespace textmatch
