#include "textmatch/text_pipeline.hpp"

#include <algorithm>
#include <unordered_map>

#include "textmatch/errors.hpp"

namespace textmatch {

namespace {

// ---------------------------------------------------------------------------
// UTF-8 helpers. Invalid bytes decode to U+FFFD and are re-encoded as such.

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) { cp = b0; len = 1; }
    else if ((b0 & 0xE0) == 0xC0) { cp = b0 & 0x1F; len = 2; }
    else if ((b0 & 0xF0) == 0xE0) { cp = b0 & 0x0F; len = 3; }
    else if ((b0 & 0xF8) == 0xF0) { cp = b0 & 0x07; len = 4; }
    else { out.push_back(0xFFFD); ++i; continue; }
    if (i + len > s.size()) { out.push_back(0xFFFD); ++i; continue; }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) { ok = false; break; }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) { out.push_back(0xFFFD); ++i; continue; }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (auto cp : cps) append_utf8(out, cp);
  return out;
}

bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

// ASCII punctuation and symbols, plus the Unicode punctuation blocks that
// show up in ordinary prose.
bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
    case 0x37E: case 0x387: case 0x55A: case 0x55B: case 0x55C: case 0x55D: case 0x55E:
    case 0x55F: case 0x589: case 0x5BE: case 0x5C0: case 0x5C3: case 0x5F3: case 0x5F4:
    case 0x60C: case 0x60D: case 0x61B: case 0x61F: case 0x6D4:
      return true;
    default:
      break;
  }
  return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0x2E00 && c <= 0x2E4F) || (c >= 0x3001 && c <= 0x3003) ||
         (c >= 0x3008 && c <= 0x3011) || (c >= 0x3014 && c <= 0x301F) ||
         (c >= 0xFE10 && c <= 0xFE19) || (c >= 0xFE30 && c <= 0xFE4F) ||
         (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
         (c >= 0xFF3B && c <= 0xFF3D) || c == 0xFF3F || c == 0xFF5B || c == 0xFF5D;
}

// Simple (one-to-one) lowercase mapping for Latin, Greek and Cyrillic.
char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c < 0xC0) return c;
  if ((c >= 0xC0 && c <= 0xD6) || (c >= 0xD8 && c <= 0xDE)) return c + 32;
  if (c >= 0x100 && c <= 0x17F) {
    if (c == 0x130) return 'i';
    if (c == 0x178) return 0xFF;
    const bool odd_upper = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
    if (c == 0x131 || c == 0x138 || c == 0x149 || c == 0x17F) return c;
    if (odd_upper) return (c % 2 == 1) ? c + 1 : c;
    return (c % 2 == 0) ? c + 1 : c;
  }
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 37;
  if (c == 0x38C) return 0x3CC;
  if (c == 0x38E || c == 0x38F) return c + 63;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x460 && c <= 0x4FF && c % 2 == 0 && !(c >= 0x482 && c <= 0x489)) {
    if (c == 0x4C0) return 0x4CF;
    if (c >= 0x4C1 && c <= 0x4CE) return c;
    return c + 1;
  }
  if (c >= 0x4C1 && c <= 0x4CD && c % 2 == 1) return c + 1;
  return c;
}

template <typename... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const Tokens& expect_tokens(const Datum& d, std::string_view unit) {
  if (auto* t = std::get_if<Tokens>(&d)) return *t;
  throw ConfigError(std::string(unit) + " expects tokens, got " +
                    std::string(category_name(category_of(d))));
}

}  // namespace

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kText: return "text";
    case Category::kTokens: return "tokens";
    case Category::kIndices: return "indices";
    case Category::kTrigramCounts: return "trigram-counts";
  }
  return "unknown";
}

Category category_of(const Datum& d) { return static_cast<Category>(d.index()); }

// ---------------------------------------------------------------------------
// Stateless transformations

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::vector<char32_t> current;
  for (char32_t c : decode_utf8(text)) {
    if (is_space(c)) {
      if (!current.empty()) out.push_back(encode_utf8(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(encode_utf8(current));
  return out;
}

Tokens lowercase(const Tokens& tokens) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto cps = decode_utf8(t);
    for (auto& c : cps) c = to_lower(c);
    out.push_back(encode_utf8(cps));
  }
  return out;
}

Tokens punc_removal(const Tokens& tokens) {
  Tokens out;
  for (const auto& t : tokens) {
    auto cps = decode_utf8(t);
    std::erase_if(cps, is_punct);
    if (!cps.empty()) out.push_back(encode_utf8(cps));
  }
  return out;
}

Tokens word_hashing(std::string_view token) {
  if (token.empty()) throw ConfigError("word_hashing needs a non-empty token");
  std::vector<char32_t> cps{U'#'};
  for (auto c : decode_utf8(token)) cps.push_back(c);
  cps.push_back(U'#');
  Tokens out;
  out.reserve(cps.size() - 2);
  for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
    out.push_back(encode_utf8({cps[i], cps[i + 1], cps[i + 2]}));
  }
  return out;
}

Tokens fixed_length(const Tokens& tokens, std::size_t length, const std::string& pad) {
  if (length < 1) throw ConfigError("fixed_length needs length >= 1");
  Tokens out(tokens.begin(), tokens.begin() + std::min(length, tokens.size()));
  out.resize(length, pad);
  return out;
}

Indices fixed_length(const Indices& indices, std::size_t length, std::int64_t pad) {
  if (length < 1) throw ConfigError("fixed_length needs length >= 1");
  Indices out(indices.begin(), indices.begin() + std::min(length, indices.size()));
  out.resize(length, pad);
  return out;
}

// ---------------------------------------------------------------------------
// FrequencyFilter

FrequencyFilter FrequencyFilter::fit(const std::vector<Tokens>& corpus, std::int64_t min_freq) {
  if (min_freq < 1) throw ConfigError("frequency_filter min_freq must be >= 1");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& t : doc) ++counts[t];
  }
  FrequencyFilter f;
  for (const auto& [term, n] : counts) {
    if (n >= min_freq) f.keep_.insert(term);
  }
  return f;
}

FrequencyFilter FrequencyFilter::from_keep_set(std::set<std::string> keep) {
  FrequencyFilter f;
  f.keep_ = std::move(keep);
  return f;
}

Tokens FrequencyFilter::transform(const Tokens& tokens) const {
  Tokens out;
  for (const auto& t : tokens) {
    if (keep_.contains(t)) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::fit(const std::vector<Tokens>& corpus) {
  std::map<std::string, std::int64_t, std::less<>> counts;
  for (const auto& doc : corpus) {
    for (const auto& t : doc) ++counts[t];
  }
  std::vector<std::pair<std::string, std::int64_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [term, n] : ordered) {
    v.index_.emplace(term, static_cast<std::int64_t>(v.terms_.size()) + 2);
    v.terms_.push_back(term);
  }
  return v;
}

Vocabulary Vocabulary::from_entries(
    const std::vector<std::pair<std::string, std::int64_t>>& entries) {
  Vocabulary v;
  v.terms_.resize(entries.size());
  std::vector<bool> seen(entries.size(), false);
  for (const auto& [term, idx] : entries) {
    const auto slot = idx - 2;
    if (idx < 2 || slot >= static_cast<std::int64_t>(entries.size()) || seen[slot]) {
      throw LoadError("vocabulary entry '" + term + "' has invalid index " + std::to_string(idx));
    }
    if (!v.index_.emplace(term, idx).second) {
      throw LoadError("vocabulary term '" + term + "' appears twice");
    }
    seen[slot] = true;
    v.terms_[slot] = term;
  }
  return v;
}

std::int64_t Vocabulary::index(std::string_view term) const {
  auto it = index_.find(term);
  return it == index_.end() ? kOovIndex : it->second;
}

Indices Vocabulary::transform(const Tokens& tokens) const {
  Indices out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

const std::string& Vocabulary::term(std::int64_t i) const { return terms_.at(i - 2); }

std::vector<std::pair<std::string, std::int64_t>> Vocabulary::entries() const {
  std::vector<std::pair<std::string, std::int64_t>> out;
  out.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    out.emplace_back(terms_[i], static_cast<std::int64_t>(i) + 2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Units

std::string_view unit_kind_name(UnitKind kind) {
  switch (kind) {
    case UnitKind::kTokenize: return "tokenize";
    case UnitKind::kLowercase: return "lowercase";
    case UnitKind::kPuncRemoval: return "punc_removal";
    case UnitKind::kFrequencyFilter: return "frequency_filter";
    case UnitKind::kVocabulary: return "vocabulary";
    case UnitKind::kWordHashing: return "word_hashing";
    case UnitKind::kFixedLength: return "fixed_length";
    case UnitKind::kTrigramVectorize: return "trigram_vectorize";
  }
  return "unknown";
}

UnitKind parse_unit_kind(std::string_view name) {
  for (auto k : {UnitKind::kTokenize, UnitKind::kLowercase, UnitKind::kPuncRemoval,
                 UnitKind::kFrequencyFilter, UnitKind::kVocabulary, UnitKind::kWordHashing,
                 UnitKind::kFixedLength, UnitKind::kTrigramVectorize}) {
    if (unit_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown processor unit kind '" + std::string(name) + "'");
}

void ProcessorUnit::fit(const std::vector<Datum>&) {}

nlohmann::json ProcessorUnit::to_json() const {
  return {{"kind", unit_kind_name(kind())}, {"params", params()}, {"state", state()}};
}

namespace {

std::vector<Tokens> tokens_of(const std::vector<Datum>& data, std::string_view unit) {
  std::vector<Tokens> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back(expect_tokens(d, unit));
  return out;
}

class TokenizeUnit final : public ProcessorUnit {
 public:
  UnitKind kind() const override { return UnitKind::kTokenize; }
  bool accepts(Category in) const override { return in == Category::kText; }
  Category output(Category) const override { return Category::kTokens; }
  Datum transform(const Datum& in) const override {
    if (auto* s = std::get_if<std::string>(&in)) return tokenize(*s);
    throw ConfigError("tokenize expects text");
  }
  std::unique_ptr<ProcessorUnit> clone() const override { return std::make_unique<TokenizeUnit>(*this); }
};

class LowercaseUnit final : public ProcessorUnit {
 public:
  UnitKind kind() const override { return UnitKind::kLowercase; }
  bool accepts(Category in) const override { return in == Category::kTokens; }
  Category output(Category) const override { return Category::kTokens; }
  Datum transform(const Datum& in) const override { return lowercase(expect_tokens(in, "lowercase")); }
  std::unique_ptr<ProcessorUnit> clone() const override { return std::make_unique<LowercaseUnit>(*this); }
};

class PuncRemovalUnit final : public ProcessorUnit {
 public:
  UnitKind kind() const override { return UnitKind::kPuncRemoval; }
  bool accepts(Category in) const override { return in == Category::kTokens; }
  Category output(Category) const override { return Category::kTokens; }
  Datum transform(const Datum& in) const override {
    return punc_removal(expect_tokens(in, "punc_removal"));
  }
  std::unique_ptr<ProcessorUnit> clone() const override { return std::make_unique<PuncRemovalUnit>(*this); }
};

class WordHashingUnit final : public ProcessorUnit {
 public:
  UnitKind kind() const override { return UnitKind::kWordHashing; }
  bool accepts(Category in) const override { return in == Category::kTokens; }
  Category output(Category) const override { return Category::kTokens; }
  Datum transform(const Datum& in) const override {
    Tokens out;
    for (const auto& t : expect_tokens(in, "word_hashing")) {
      auto grams = word_hashing(t);
      out.insert(out.end(), grams.begin(), grams.end());
    }
    return out;
  }
  std::unique_ptr<ProcessorUnit> clone() const override { return std::make_unique<WordHashingUnit>(*this); }
};

class FixedLengthUnit final : public ProcessorUnit {
 public:
  FixedLengthUnit(std::int64_t length, std::int64_t pad) : length_(length), pad_(pad) {
    if (length_ < 1) throw ConfigError("fixed_length needs length >= 1");
  }
  UnitKind kind() const override { return UnitKind::kFixedLength; }
  bool accepts(Category in) const override {
    return in == Category::kTokens || in == Category::kIndices;
  }
  Category output(Category in) const override { return in; }
  Datum transform(const Datum& in) const override {
    const auto n = static_cast<std::size_t>(length_);
    if (auto* idx = std::get_if<Indices>(&in)) return fixed_length(*idx, n, pad_);
    if (auto* tok = std::get_if<Tokens>(&in)) return fixed_length(*tok, n, std::string());
    throw ConfigError("fixed_length expects tokens or indices");
  }
  nlohmann::json params() const override { return {{"length", length_}, {"pad", pad_}}; }
  std::unique_ptr<ProcessorUnit> clone() const override { return std::make_unique<FixedLengthUnit>(*this); }

 private:
  std::int64_t length_;
  std::int64_t pad_;
};

class FrequencyFilterUnit final : public ProcessorUnit {
 public:
  explicit FrequencyFilterUnit(std::int64_t min_freq) : min_freq_(min_freq) {
    if (min_freq_ < 1) throw ConfigError("frequency_filter min_freq must be >= 1");
  }
  UnitKind kind() const override { return UnitKind::kFrequencyFilter; }
  bool accepts(Category in) const override { return in == Category::kTokens; }
  Category output(Category) const override { return Category::kTokens; }
  bool stateful() const override { return true; }
  bool fitted() const override { return filter_.has_value(); }
  void fit(const std::vector<Datum>& data) override {
    filter_ = FrequencyFilter::fit(tokens_of(data, "frequency_filter"), min_freq_);
  }
  Datum transform(const Datum& in) const override {
    if (!filter_) throw NotFittedError("frequency_filter used before fit");
    return filter_->transform(expect_tokens(in, "frequency_filter"));
  }
  nlohmann::json params() const override { return {{"min_freq", min_freq_}}; }
  nlohmann::json state() const override {
    if (!filter_) return nullptr;
    return nlohmann::json(std::vector<std::string>(filter_->keep_set().begin(),
                                                   filter_->keep_set().end()));
  }
  void load_state(const nlohmann::json& s) {
    if (s.is_null()) return;
    filter_ = FrequencyFilter::from_keep_set(s.get<std::set<std::string>>());
  }
  std::unique_ptr<ProcessorUnit> clone() const override { return std::make_unique<FrequencyFilterUnit>(*this); }

 private:
  std::int64_t min_freq_;
  std::optional<FrequencyFilter> filter_;
};

nlohmann::json vocab_state(const std::optional<Vocabulary>& v) {
  if (!v) return nullptr;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [term, idx] : v->entries()) arr.push_back({term, idx});
  return arr;
}

std::optional<Vocabulary> vocab_from_state(const nlohmann::json& s) {
  if (s.is_null()) return std::nullopt;
  std::vector<std::pair<std::string, std::int64_t>> entries;
  for (const auto& e : s) entries.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::int64_t>());
  return Vocabulary::from_entries(entries);
}

class VocabularyUnit final : public ProcessorUnit {
 public:
  UnitKind kind() const override { return UnitKind::kVocabulary; }
  bool accepts(Category in) const override { return in == Category::kTokens; }
  Category output(Category) const override { return Category::kIndices; }
  bool stateful() const override { return true; }
  bool fitted() const override { return vocab_.has_value(); }
  void fit(const std::vector<Datum>& data) override {
    vocab_ = Vocabulary::fit(tokens_of(data, "vocabulary"));
  }
  Datum transform(const Datum& in) const override {
    if (!vocab_) throw NotFittedError("vocabulary used before fit");
    return vocab_->transform(expect_tokens(in, "vocabulary"));
  }
  nlohmann::json state() const override { return vocab_state(vocab_); }
  void load_state(const nlohmann::json& s) { vocab_ = vocab_from_state(s); }
  const Vocabulary* vocabulary() const override { return vocab_ ? &*vocab_ : nullptr; }
  std::unique_ptr<ProcessorUnit> clone() const override { return std::make_unique<VocabularyUnit>(*this); }

 private:
  std::optional<Vocabulary> vocab_;
};

class TrigramVectorizeUnit final : public ProcessorUnit {
 public:
  UnitKind kind() const override { return UnitKind::kTrigramVectorize; }
  bool accepts(Category in) const override { return in == Category::kTokens; }
  Category output(Category) const override { return Category::kTrigramCounts; }
  bool stateful() const override { return true; }
  bool fitted() const override { return vocab_.has_value(); }
  void fit(const std::vector<Datum>& data) override {
    vocab_ = Vocabulary::fit(tokens_of(data, "trigram_vectorize"));
  }
  Datum transform(const Datum& in) const override {
    if (!vocab_) throw NotFittedError("trigram_vectorize used before fit");
    std::map<std::size_t, double> counts;
    for (auto idx : vocab_->transform(expect_tokens(in, "trigram_vectorize"))) {
      counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    TrigramCounts out;
    out.dimension = vocab_->size();
    out.entries.assign(counts.begin(), counts.end());
    return out;
  }
  nlohmann::json state() const override { return vocab_state(vocab_); }
  void load_state(const nlohmann::json& s) { vocab_ = vocab_from_state(s); }
  const Vocabulary* vocabulary() const override { return vocab_ ? &*vocab_ : nullptr; }
  std::unique_ptr<ProcessorUnit> clone() const override { return std::make_unique<TrigramVectorizeUnit>(*this); }

 private:
  std::optional<Vocabulary> vocab_;
};

}  // namespace

std::unique_ptr<ProcessorUnit> make_tokenize_unit() { return std::make_unique<TokenizeUnit>(); }
std::unique_ptr<ProcessorUnit> make_lowercase_unit() { return std::make_unique<LowercaseUnit>(); }
std::unique_ptr<ProcessorUnit> make_punc_removal_unit() { return std::make_unique<PuncRemovalUnit>(); }
std::unique_ptr<ProcessorUnit> make_frequency_filter_unit(std::int64_t min_freq) {
  return std::make_unique<FrequencyFilterUnit>(min_freq);
}
std::unique_ptr<ProcessorUnit> make_vocabulary_unit() { return std::make_unique<VocabularyUnit>(); }
std::unique_ptr<ProcessorUnit> make_word_hashing_unit() { return std::make_unique<WordHashingUnit>(); }
std::unique_ptr<ProcessorUnit> make_fixed_length_unit(std::int64_t length, std::int64_t pad) {
  return std::make_unique<FixedLengthUnit>(length, pad);
}
std::unique_ptr<ProcessorUnit> make_trigram_vectorize_unit() {
  return std::make_unique<TrigramVectorizeUnit>();
}

std::unique_ptr<ProcessorUnit> unit_from_json(const nlohmann::json& j) {
  const auto kind = parse_unit_kind(j.at("kind").get<std::string>());
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  const nlohmann::json state = j.value("state", nlohmann::json());
  switch (kind) {
    case UnitKind::kTokenize: return make_tokenize_unit();
    case UnitKind::kLowercase: return make_lowercase_unit();
    case UnitKind::kPuncRemoval: return make_punc_removal_unit();
    case UnitKind::kWordHashing: return make_word_hashing_unit();
    case UnitKind::kFixedLength:
      return make_fixed_length_unit(params.at("length").get<std::int64_t>(),
                                    params.value("pad", std::int64_t{0}));
    case UnitKind::kFrequencyFilter: {
      auto u = std::make_unique<FrequencyFilterUnit>(params.at("min_freq").get<std::int64_t>());
      u->load_state(state);
      return u;
    }
    case UnitKind::kVocabulary: {
      auto u = std::make_unique<VocabularyUnit>();
      u->load_state(state);
      return u;
    }
    case UnitKind::kTrigramVectorize: {
      auto u = std::make_unique<TrigramVectorizeUnit>();
      u->load_state(state);
      return u;
    }
  }
  throw ConfigError("unhandled unit kind");
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(std::vector<std::unique_ptr<ProcessorUnit>> units) : units_(std::move(units)) {
  for (std::size_t i = 0; i + 1 < units_.size(); ++i) {
    // Find any input category the first unit takes that also chains through.
    bool chained = false;
    for (auto c : {Category::kText, Category::kTokens, Category::kIndices, Category::kTrigramCounts}) {
      if (units_[i]->accepts(c) && units_[i + 1]->accepts(units_[i]->output(c))) chained = true;
    }
    if (!chained) {
      throw ConfigError("pipeline unit " + std::to_string(i + 1) + " (" +
                        std::string(unit_kind_name(units_[i + 1]->kind())) +
                        ") cannot consume the output of unit " + std::to_string(i) + " (" +
                        std::string(unit_kind_name(units_[i]->kind())) + ")");
    }
  }
}

Pipeline::Pipeline(const Pipeline& other) {
  for (const auto& u : other.units_) units_.push_back(u->clone());
}

Pipeline& Pipeline::operator=(const Pipeline& other) {
  if (this != &other) {
    Pipeline copy(other);
    units_ = std::move(copy.units_);
  }
  return *this;
}

std::vector<Datum> Pipeline::fit_transform(std::vector<Datum> corpus) {
  for (auto& u : units_) {
    if (u->stateful()) u->fit(corpus);
    for (auto& d : corpus) d = u->transform(d);
  }
  return corpus;
}

std::vector<Datum> Pipeline::fit_transform(const std::vector<std::string>& texts) {
  return fit_transform(std::vector<Datum>(texts.begin(), texts.end()));
}

Datum Pipeline::transform(Datum in) const {
  for (const auto& u : units_) in = u->transform(in);
  return in;
}

std::vector<Datum> Pipeline::transform(std::vector<Datum> corpus) const {
  for (auto& d : corpus) d = transform(std::move(d));
  return corpus;
}

bool Pipeline::fitted() const {
  return std::all_of(units_.begin(), units_.end(), [](const auto& u) { return u->fitted(); });
}

Category Pipeline::output_category() const {
  Category c = Category::kText;
  for (const auto& u : units_) {
    if (!u->accepts(c)) {
      throw ConfigError(std::string(unit_kind_name(u->kind())) + " cannot consume " +
                        std::string(category_name(c)));
    }
    c = u->output(c);
  }
  return c;
}

const Vocabulary* Pipeline::vocabulary() const {
  for (auto it = units_.rbegin(); it != units_.rend(); ++it) {
    if (const auto* v = (*it)->vocabulary()) return v;
  }
  return nullptr;
}

nlohmann::json Pipeline::to_json() const {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : units_) units.push_back(u->to_json());
  return {{"units", units}};
}

Pipeline Pipeline::from_json(const nlohmann::json& j) {
  std::vector<std::unique_ptr<ProcessorUnit>> units;
  for (const auto& u : j.at("units")) units.push_back(unit_from_json(u));
  return Pipeline(std::move(units));
}

}  // namespace textmatch
