#include "nlim/encoding.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "nlim/error.hpp"

namespace nlim {

namespace {

constexpr std::array<std::string_view, kTagDim> kTagNames = {
    "START",      "END",   "NONE",   "SEPARATOR", "BUY",       "SELL",     "OPEN",
    "CLOSE",      "ADD",   "REMOVE", "FILTER",    "INSTRUMENT", "INDICATOR", "COMPANY",
    "PRICE",      "QUANTITY", "NUMBER", "TIMEFRAME", "NEWS_TOPIC",
};

constexpr std::array<std::string_view, kIntentDim> kIntentNames = {
    "NONE", "OPEN_CHART", "CLOSE_CHART", "ADD_INDICATOR", "REMOVE_INDICATOR", "FILTER_NEWS", "BUY", "SELL",
};

}  // namespace

const std::array<std::string_view, kTagDim>& tag_names() { return kTagNames; }
const std::array<std::string_view, kIntentDim>& intent_names() { return kIntentNames; }

std::string_view tag_name(Tag t) { return kTagNames.at(static_cast<std::size_t>(t)); }
std::string_view intent_name(Intent i) { return kIntentNames.at(static_cast<std::size_t>(i)); }

std::optional<Tag> tag_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (kTagNames[i] == name) return static_cast<Tag>(i);
  }
  return std::nullopt;
}

std::optional<Intent> intent_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kIntentNames.size(); ++i) {
    if (kIntentNames[i] == name) return static_cast<Intent>(i);
  }
  return std::nullopt;
}

bool is_ascii(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](char c) { return static_cast<unsigned char>(c) < 128; });
}

void validate(const LabeledSentence& s) {
  if (s.text.empty()) throw Error(ErrorCode::ShapeMismatch, "empty sentence");
  if (s.tags.size() != s.text.size()) {
    throw Error(ErrorCode::ShapeMismatch, "tag count " + std::to_string(s.tags.size()) + " != text length " +
                                              std::to_string(s.text.size()) + " for \"" + s.text + "\"");
  }
  encode_chars(s.text);
  for (Tag t : s.tags) {
    if (static_cast<int>(t) >= kTagDim) throw Error(ErrorCode::OutOfRangeId, "tag id " + std::to_string(int(t)));
    if (is_special(t)) throw Error(ErrorCode::IllegalSpecialTag, "START/END in \"" + s.text + "\"");
  }
  if (static_cast<int>(s.intent) >= kIntentDim) {
    throw Error(ErrorCode::OutOfRangeId, "intent id " + std::to_string(int(s.intent)));
  }
}

std::vector<int> encode_chars(std::string_view text) {
  std::vector<int> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto code = static_cast<unsigned char>(text[i]);
    if (code > 127) throw Error(ErrorCode::NonAsciiChar, "position " + std::to_string(i));
    out.push_back(code);
  }
  return out;
}

DecoderIo make_decoder_io(std::span<const Tag> tags) {
  DecoderIo io;
  io.input.reserve(tags.size() + 1);
  io.target.reserve(tags.size() + 1);
  io.input.push_back(Tag::Start);
  for (Tag t : tags) {
    if (is_special(t)) throw Error(ErrorCode::IllegalSpecialTag, std::string(tag_name(t)) + " in tag sequence");
    io.input.push_back(t);
    io.target.push_back(t);
  }
  io.target.push_back(Tag::End);
  return io;
}

Batch make_batch(std::span<const LabeledSentence> examples, std::span<const std::size_t> order) {
  if (order.empty()) throw Error(ErrorCode::EmptyBatch, "no examples");
  const int n = static_cast<int>(order.size());
  int max_len = 0;
  for (std::size_t idx : order) max_len = std::max<int>(max_len, static_cast<int>(examples[idx].text.size()));

  auto matrix = [](int rows, int cols, int fill) {
    return IndexMatrix{rows, cols, std::vector<int>(static_cast<std::size_t>(rows) * cols, fill)};
  };
  const int pad_tag = static_cast<int>(Tag::None);
  Batch b;
  b.chars = matrix(n, max_len, 0);
  b.tags = matrix(n, max_len, pad_tag);
  b.mask = matrix(n, max_len, 0);
  b.decoder_input = matrix(n, max_len + 1, pad_tag);
  b.decoder_target = matrix(n, max_len + 1, pad_tag);
  b.intents.resize(n);
  b.lengths.resize(n);

  for (int r = 0; r < n; ++r) {
    const LabeledSentence& s = examples[order[r]];
    const auto codes = encode_chars(s.text);
    const auto io = make_decoder_io(s.tags);
    const int len = static_cast<int>(codes.size());
    b.lengths[r] = len;
    b.intents[r] = static_cast<int>(s.intent);
    for (int j = 0; j < len; ++j) {
      b.chars(r, j) = codes[j];
      b.tags(r, j) = static_cast<int>(s.tags[j]);
      b.mask(r, j) = 1;
    }
    for (int j = 0; j <= len; ++j) {
      b.decoder_input(r, j) = static_cast<int>(io.input[j]);
      b.decoder_target(r, j) = static_cast<int>(io.target[j]);
    }
  }
  return b;
}

Batch make_batch(std::span<const LabeledSentence> examples) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return make_batch(examples, order);
}

std::vector<std::string> decode_tags(std::span<const int> ids) {
  std::vector<std::string> names;
  for (int id : ids) {
    if (id < 0 || id >= kTagDim) throw Error(ErrorCode::OutOfRangeId, "tag id " + std::to_string(id));
    if (id == static_cast<int>(Tag::End)) break;
    names.emplace_back(kTagNames[id]);
  }
  return names;
}

void write_vocab_tables(const std::filesystem::path& dir) {
  auto write = [&](const std::filesystem::path& file, const auto& names) {
    std::ofstream out(file);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + file.string());
    for (std::size_t i = 0; i < names.size(); ++i) out << i << '\t' << names[i] << '\n';
  };
  write(dir / "tags.txt", kTagNames);
  write(dir / "intents.txt", kIntentNames);
}

}  // namespace nlim
