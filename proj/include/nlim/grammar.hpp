#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlim/encoding.hpp"
#include "nlim/rng.hpp"

namespace nlim {

// Word categories: lexicon name -> surface entries.
struct LexiconSet {
  std::map<std::string, std::vector<std::string>> entries;

  bool contains(const std::string& name) const { return entries.contains(name); }
  const std::vector<std::string>& at(const std::string& name) const;
};

struct PatternToken {
  enum class Kind { Literal, Slot, Separator };
  Kind kind = Kind::Literal;
  Tag tag = Tag::None;
  std::string text;     // Literal only
  std::string lexicon;  // Slot only
};

// Pattern micro-syntax:
//   {TAG}            slot tagged TAG drawing from the lexicon named TAG
//   {TAG:lexname}    slot tagged TAG drawing from lexicon `lexname`
//   {=TAG:text}      literal text tagged TAG (internal spaces carry TAG)
//   bare text        NONE-tagged literal
//   whitespace run   one SEPARATOR-tagged space
struct Template {
  Intent intent = Intent::None;
  std::vector<PatternToken> pattern;
  std::string source;
};

struct NoiseConfig {
  double swap_prob = 0.0;
  double drop_prob = 0.0;
  double filler_prob = 0.0;
  std::string filler_lexicon;
};

struct NegativeSource {
  std::filesystem::path path;
  std::size_t count = 0;
};

struct CorpusSpec {
  LexiconSet lexicons;
  std::vector<Template> templates;
  NoiseConfig noise;
  std::optional<NegativeSource> negatives;
};

// With `lexicons`, slot references are checked against it (UnknownLexicon).
std::vector<PatternToken> parse_pattern(std::string_view pattern, const LexiconSet* lexicons = nullptr);

// Relative negative-source paths are resolved against `base_dir`.
CorpusSpec parse_corpus_spec(std::string_view document, const std::filesystem::path& base_dir = {});
CorpusSpec load_corpus_spec(const std::filesystem::path& path);

// Stable content hash of a spec document (FNV-1a 64), used as a corpus fingerprint.
std::uint64_t spec_fingerprint(std::string_view document);

LabeledSentence expand_template(const Template& t, const LexiconSet& lex, Rng& rng);

// Transposes characters `pos` and `pos + 1`; skipped when their tags differ.
LabeledSentence swap_adjacent(const LabeledSentence& s, std::size_t pos);
// Deletes the character at `index` together with its tag.
LabeledSentence drop_char(const LabeledSentence& s, std::size_t index);

LabeledSentence inject_noise(const LabeledSentence& s, const NoiseConfig& cfg, Rng& rng);

// Insertion points, in order: the front, after every SEPARATOR-tagged space,
// and the end. Values are character offsets into the text.
std::vector<std::size_t> filler_points(const LabeledSentence& s);
// Inserts `word` at insertion point number `point` of filler_points(s).
LabeledSentence insert_filler_at(const LabeledSentence& s, std::size_t point, std::string_view word);

LabeledSentence insert_fillers(const LabeledSentence& s, std::span<const std::string> filler,
                               const NoiseConfig& cfg, Rng& rng);

// Non-ASCII code points become '?'.
std::string ascii_normalize(std::string_view utf8);

std::vector<LabeledSentence> sample_negatives(std::istream& source, std::size_t n, Rng& rng);

std::vector<LabeledSentence> augment(const CorpusSpec& spec, std::uint64_t seed, std::size_t target);

// One JSON record per line: {"intent": ..., "tags": [...], "text": ...}.
void write_corpus(std::ostream& out, std::span<const LabeledSentence> corpus);
std::vector<LabeledSentence> read_corpus(std::istream& in);
std::vector<LabeledSentence> load_corpus(const std::filesystem::path& path);

}  // namespace nlim
