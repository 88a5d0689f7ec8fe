#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nlim/encoding.hpp"
#include "nlim/rng.hpp"

namespace nlim::test {

inline std::filesystem::path source_dir() { return NLIM_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nlim-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Labels a sentence word by word: each (word, tag) pair, separated by single
// SEPARATOR spaces.
inline LabeledSentence sentence(Intent intent, const std::vector<std::pair<std::string, Tag>>& words) {
  LabeledSentence s;
  s.intent = intent;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k > 0) {
      s.text += ' ';
      s.tags.push_back(Tag::Separator);
    }
    s.text += words[k].first;
    s.tags.insert(s.tags.end(), words[k].first.size(), words[k].second);
  }
  return s;
}

// Three short sentences of different lengths covering both heads.
inline std::vector<LabeledSentence> toy_batch() {
  return {
      sentence(Intent::Buy, {{"buy", Tag::Buy}, {"5", Tag::Quantity}, {"tsla", Tag::Instrument}}),
      sentence(Intent::OpenChart, {{"open", Tag::Open}, {"EURUSD", Tag::Instrument}}),
      sentence(Intent::None, {{"hi", Tag::None}}),
  };
}

inline std::string random_ascii(Rng& rng, std::size_t min_len, std::size_t max_len) {
  const std::size_t n = min_len + rng.below(max_len - min_len + 1);
  std::string s(n, ' ');
  for (auto& ch : s) ch = static_cast<char>(32 + rng.below(95));
  return s;
}

}  // namespace nlim::test
