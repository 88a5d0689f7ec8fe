#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nlim {

inline constexpr int kCharDim = 128;
inline constexpr int kTagDim = 19;
inline constexpr int kIntentDim = 8;

// Decoder alphabet. START and END live inside the one-hot space but never
// appear in a stored corpus.
enum class Tag : std::uint8_t {
  Start = 0,
  End = 1,
  None = 2,
  Separator = 3,
  Buy = 4,
  Sell = 5,
  Open = 6,
  Close = 7,
  Add = 8,
  Remove = 9,
  Filter = 10,
  Instrument = 11,
  Indicator = 12,
  Company = 13,
  Price = 14,
  Quantity = 15,
  Number = 16,
  Timeframe = 17,
  NewsTopic = 18,
};

enum class Intent : std::uint8_t {
  None = 0,
  OpenChart = 1,
  CloseChart = 2,
  AddIndicator = 3,
  RemoveIndicator = 4,
  FilterNews = 5,
  Buy = 6,
  Sell = 7,
};

std::string_view tag_name(Tag t);
std::string_view intent_name(Intent i);
std::optional<Tag> tag_from_name(std::string_view name);
std::optional<Intent> intent_from_name(std::string_view name);

const std::array<std::string_view, kTagDim>& tag_names();
const std::array<std::string_view, kIntentDim>& intent_names();

inline bool is_special(Tag t) { return t == Tag::Start || t == Tag::End; }

struct LabeledSentence {
  std::string text;
  std::vector<Tag> tags;
  Intent intent = Intent::None;

  bool operator==(const LabeledSentence&) const = default;
};

// Checks the per-sentence invariants; throws MalformedSpec-free errors
// (IllegalSpecialTag / NonAsciiChar / ShapeMismatch) on violation.
void validate(const LabeledSentence& s);

bool is_ascii(std::string_view text);

// Character index per position: the 7-bit ASCII code.
std::vector<int> encode_chars(std::string_view text);

struct DecoderIo {
  std::vector<Tag> input;   // START ++ tags
  std::vector<Tag> target;  // tags ++ END
};

DecoderIo make_decoder_io(std::span<const Tag> tags);

// Row-major [rows x cols] integer matrix.
struct IndexMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> data;

  int operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  int& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct Batch {
  IndexMatrix chars;           // [batch x maxLen]
  IndexMatrix tags;            // [batch x maxLen]
  IndexMatrix decoder_input;   // [batch x maxLen+1]
  IndexMatrix decoder_target;  // [batch x maxLen+1]
  std::vector<int> intents;
  IndexMatrix mask;            // [batch x maxLen]
  std::vector<int> lengths;

  int size() const { return static_cast<int>(lengths.size()); }
  int max_len() const { return chars.cols; }
};

// `order` selects (and orders) the rows of the batch from `examples`.
Batch make_batch(std::span<const LabeledSentence> examples, std::span<const std::size_t> order);
Batch make_batch(std::span<const LabeledSentence> examples);

std::vector<std::string> decode_tags(std::span<const int> ids);

// Writes tags.txt and intents.txt (id<TAB>name per line) into `dir`.
void write_vocab_tables(const std::filesystem::path& dir);

}  // namespace nlim
