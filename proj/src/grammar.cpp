#include "nlim/grammar.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nlim/error.hpp"

namespace nlim {

using json = nlohmann::json;

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

Tag pattern_tag(std::string_view name) {
  auto tag = tag_from_name(name);
  if (!tag || is_special(*tag)) throw Error(ErrorCode::UnknownTag, std::string(name));
  return *tag;
}

void append(LabeledSentence& s, std::string_view text, Tag tag) {
  s.text.append(text);
  s.tags.insert(s.tags.end(), text.size(), tag);
}

// Maximal runs of non-space characters as [begin, end) offsets.
std::vector<std::pair<std::size_t, std::size_t>> words_of(const std::string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ' ') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    words.emplace_back(i, j);
    i = j;
  }
  return words;
}

}  // namespace

const std::vector<std::string>& LexiconSet::at(const std::string& name) const {
  auto it = entries.find(name);
  if (it == entries.end()) throw Error(ErrorCode::UnknownLexicon, name);
  return it->second;
}

std::vector<PatternToken> parse_pattern(std::string_view pattern, const LexiconSet* lexicons) {
  std::vector<PatternToken> tokens;
  std::size_t i = 0;
  while (i < pattern.size() && is_space(pattern[i])) ++i;
  std::size_t end = pattern.size();
  while (end > i && is_space(pattern[end - 1])) --end;

  while (i < end) {
    const char c = pattern[i];
    if (is_space(c)) {
      while (i < end && is_space(pattern[i])) ++i;
      tokens.push_back({PatternToken::Kind::Separator, Tag::Separator, " ", {}});
    } else if (c == '{') {
      const auto close = pattern.find('}', i);
      if (close == std::string_view::npos || close >= end) {
        throw Error(ErrorCode::MalformedSpec, "unterminated '{' in pattern \"" + std::string(pattern) + "\"");
      }
      std::string_view body = pattern.substr(i + 1, close - i - 1);
      i = close + 1;
      if (!body.empty() && body.front() == '=') {
        body.remove_prefix(1);
        const auto colon = body.find(':');
        if (colon == std::string_view::npos || colon + 1 == body.size()) {
          throw Error(ErrorCode::MalformedSpec, "tagged literal needs {=TAG:text}: \"" + std::string(body) + "\"");
        }
        tokens.push_back({PatternToken::Kind::Literal, pattern_tag(body.substr(0, colon)),
                          std::string(body.substr(colon + 1)), {}});
      } else {
        const auto colon = body.find(':');
        const std::string_view tag = body.substr(0, colon);
        const std::string_view lex = colon == std::string_view::npos ? tag : body.substr(colon + 1);
        if (tag.empty() || lex.empty()) throw Error(ErrorCode::MalformedSpec, "empty slot in pattern");
        if (lexicons && !lexicons->contains(std::string(lex))) throw Error(ErrorCode::UnknownLexicon, std::string(lex));
        tokens.push_back({PatternToken::Kind::Slot, pattern_tag(tag), {}, std::string(lex)});
      }
    } else if (c == '}') {
      throw Error(ErrorCode::MalformedSpec, "stray '}' in pattern \"" + std::string(pattern) + "\"");
    } else {
      std::size_t j = i;
      while (j < end && !is_space(pattern[j]) && pattern[j] != '{' && pattern[j] != '}') ++j;
      tokens.push_back({PatternToken::Kind::Literal, Tag::None, std::string(pattern.substr(i, j - i)), {}});
      i = j;
    }
  }
  if (tokens.empty()) throw Error(ErrorCode::EmptyTemplate, "pattern \"" + std::string(pattern) + "\"");
  return tokens;
}

CorpusSpec parse_corpus_spec(std::string_view document, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedSpec, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::MalformedSpec, "top level must be an object");

  CorpusSpec spec;
  try {
    const json lexicons = doc.value("lexicons", json::object());
    for (const auto& [name, arr] : lexicons.items()) {
      std::vector<std::string> entries;
      for (const auto& e : arr) {
        const auto entry = e.get<std::string>();
        if (entry.empty()) throw Error(ErrorCode::MalformedSpec, "empty entry in lexicon " + name);
        if (!is_ascii(entry)) throw Error(ErrorCode::NonAsciiEntry, "lexicon " + name + ": \"" + entry + "\"");
        if (std::find(entries.begin(), entries.end(), entry) != entries.end()) {
          throw Error(ErrorCode::MalformedSpec, "duplicate entry \"" + entry + "\" in lexicon " + name);
        }
        entries.push_back(entry);
      }
      if (entries.empty()) throw Error(ErrorCode::MalformedSpec, "lexicon " + name + " is empty");
      spec.lexicons.entries.emplace(name, std::move(entries));
    }

    const auto& templates = doc.at("templates");
    for (std::size_t k = 0; k < templates.size(); ++k) {
      const auto& t = templates[k];
      const auto intent_str = t.at("intent").get<std::string>();
      const auto pattern = t.at("pattern").get<std::string>();
      const std::string where = "template #" + std::to_string(k) + " \"" + pattern + "\"";
      auto intent = intent_from_name(intent_str);
      if (!intent) throw Error(ErrorCode::UnknownIntent, intent_str + " in " + where);
      if (!is_ascii(pattern)) throw Error(ErrorCode::NonAsciiEntry, where);
      Template tmpl;
      tmpl.intent = *intent;
      tmpl.source = pattern;
      try {
        tmpl.pattern = parse_pattern(pattern, &spec.lexicons);
      } catch (const Error& e) {
        throw Error(e.code(), e.detail() + " in " + where);
      }
      spec.templates.push_back(std::move(tmpl));
    }
    if (spec.templates.empty()) throw Error(ErrorCode::EmptyTemplate, "spec declares no templates");

    if (doc.contains("noise")) {
      const auto& n = doc["noise"];
      spec.noise.swap_prob = n.value("swap_prob", 0.0);
      spec.noise.drop_prob = n.value("drop_prob", 0.0);
      spec.noise.filler_prob = n.value("filler_prob", 0.0);
      spec.noise.filler_lexicon = n.value("filler_lexicon", std::string{});
    }
    for (double p : {spec.noise.swap_prob, spec.noise.drop_prob, spec.noise.filler_prob}) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::MalformedSpec, "noise probability outside [0,1]");
    }
    if (spec.noise.filler_prob > 0.0 && !spec.lexicons.contains(spec.noise.filler_lexicon)) {
      throw Error(ErrorCode::UnknownLexicon, spec.noise.filler_lexicon.empty() ? "<filler_lexicon unset>"
                                                                              : spec.noise.filler_lexicon);
    }

    if (doc.contains("negatives")) {
      const auto& n = doc["negatives"];
      NegativeSource src;
      src.path = n.at("path").get<std::string>();
      if (src.path.is_relative() && !base_dir.empty()) src.path = base_dir / src.path;
      src.count = n.at("count").get<std::size_t>();
      spec.negatives = src;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedSpec, e.what());
  }
  return spec;
}

CorpusSpec load_corpus_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_corpus_spec(ss.str(), path.parent_path());
}

std::uint64_t spec_fingerprint(std::string_view document) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : document) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

LabeledSentence expand_template(const Template& t, const LexiconSet& lex, Rng& rng) {
  LabeledSentence s;
  s.intent = t.intent;
  for (const auto& tok : t.pattern) {
    switch (tok.kind) {
      case PatternToken::Kind::Separator:
        append(s, " ", Tag::Separator);
        break;
      case PatternToken::Kind::Literal:
        append(s, tok.text, tok.tag);
        break;
      case PatternToken::Kind::Slot: {
        const auto& entries = lex.at(tok.lexicon);
        append(s, entries[rng.below(entries.size())], tok.tag);
        break;
      }
    }
  }
  return s;
}

LabeledSentence swap_adjacent(const LabeledSentence& s, std::size_t pos) {
  LabeledSentence out = s;
  if (pos + 1 < out.text.size() && out.tags[pos] == out.tags[pos + 1]) std::swap(out.text[pos], out.text[pos + 1]);
  return out;
}

LabeledSentence drop_char(const LabeledSentence& s, std::size_t index) {
  LabeledSentence out = s;
  if (index < out.text.size() && out.text.size() > 1) {
    out.text.erase(index, 1);
    out.tags.erase(out.tags.begin() + static_cast<std::ptrdiff_t>(index));
  }
  return out;
}

LabeledSentence inject_noise(const LabeledSentence& s, const NoiseConfig& cfg, Rng& rng) {
  LabeledSentence out = s;
  // Right to left so that a deletion never shifts a word still to be visited.
  auto words = words_of(out.text);
  for (auto it = words.rbegin(); it != words.rend(); ++it) {
    const auto [begin, end] = *it;
    const std::size_t len = end - begin;
    if (len < 3) continue;
    if (rng.bernoulli(cfg.swap_prob) && len >= 4) {
      // Both characters interior: begin+1 .. end-2.
      const std::size_t pos = begin + 1 + rng.below(len - 3);
      out = swap_adjacent(out, pos);
    }
    if (rng.bernoulli(cfg.drop_prob)) {
      out = drop_char(out, begin + 1 + rng.below(len - 2));
    }
  }
  return out;
}

std::vector<std::size_t> filler_points(const LabeledSentence& s) {
  std::vector<std::size_t> points{0};
  for (std::size_t i = 0; i < s.text.size(); ++i) {
    if (s.tags[i] == Tag::Separator) points.push_back(i + 1);
  }
  points.push_back(s.text.size());
  return points;
}

LabeledSentence insert_filler_at(const LabeledSentence& s, std::size_t point, std::string_view word) {
  const auto points = filler_points(s);
  const std::size_t at = points.at(point);
  LabeledSentence out;
  out.intent = s.intent;
  out.text.reserve(s.text.size() + word.size() + 1);
  out.text.append(s.text, 0, at);
  out.tags.assign(s.tags.begin(), s.tags.begin() + static_cast<std::ptrdiff_t>(at));
  if (point + 1 == points.size()) {
    append(out, " ", Tag::Separator);
    append(out, word, Tag::None);
  } else {
    append(out, word, Tag::None);
    append(out, " ", Tag::Separator);
  }
  out.text.append(s.text, at);
  out.tags.insert(out.tags.end(), s.tags.begin() + static_cast<std::ptrdiff_t>(at), s.tags.end());
  return out;
}

LabeledSentence insert_fillers(const LabeledSentence& s, std::span<const std::string> filler,
                               const NoiseConfig& cfg, Rng& rng) {
  if (cfg.filler_prob <= 0.0 || filler.empty()) return s;
  const std::size_t n_points = filler_points(s).size();
  std::vector<std::pair<std::size_t, std::size_t>> chosen;  // (point, filler index)
  for (std::size_t p = 0; p < n_points; ++p) {
    if (rng.bernoulli(cfg.filler_prob)) chosen.emplace_back(p, rng.below(filler.size()));
  }
  // Insert from the back so earlier point indices stay valid.
  LabeledSentence out = s;
  for (auto it = chosen.rbegin(); it != chosen.rend(); ++it) {
    out = insert_filler_at(out, it->first, filler[it->second]);
  }
  return out;
}

std::string ascii_normalize(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  for (char ch : utf8) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80) {
      out.push_back(ch);
    } else if ((c & 0xC0) != 0x80) {
      out.push_back('?');  // lead byte of a multi-byte sequence; continuation bytes are dropped
    }
  }
  return out;
}

std::vector<LabeledSentence> sample_negatives(std::istream& source, std::size_t n, Rng& rng) {
  std::vector<std::string> lines;
  std::string line;
  while (lines.size() < (1u << 20) && std::getline(source, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    lines.push_back(ascii_normalize(std::string_view(line).substr(first, last - first + 1)));
  }
  if (lines.size() < n) {
    throw Error(ErrorCode::InsufficientSource,
                "need " + std::to_string(n) + " sentences, source has " + std::to_string(lines.size()));
  }
  // Partial Fisher-Yates: the first n slots become a uniform sample without replacement.
  std::vector<LabeledSentence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(lines[i], lines[i + rng.below(lines.size() - i)]);
    LabeledSentence s;
    s.text = lines[i];
    s.tags.assign(s.text.size(), Tag::None);
    s.intent = Intent::None;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSentence> augment(const CorpusSpec& spec, std::uint64_t seed, std::size_t target) {
  const std::size_t n_neg = spec.negatives ? spec.negatives->count : 0;
  if (target < spec.templates.size() + n_neg) {
    throw Error(ErrorCode::MalformedSpec, "target " + std::to_string(target) + " smaller than " +
                                              std::to_string(spec.templates.size()) + " templates + " +
                                              std::to_string(n_neg) + " negatives");
  }
  Rng master(seed);
  static const std::vector<std::string> kNoFiller;
  const auto& filler = spec.lexicons.contains(spec.noise.filler_lexicon) ? spec.lexicons.at(spec.noise.filler_lexicon)
                                                                         : kNoFiller;

  std::vector<LabeledSentence> corpus;
  corpus.reserve(target);
  const std::size_t n_pos = target - n_neg;
  for (std::size_t i = 0; i < n_pos; ++i) {
    Rng stream = master.split();
    const Template& t = spec.templates[i % spec.templates.size()];
    auto s = expand_template(t, spec.lexicons, stream);
    s = inject_noise(s, spec.noise, stream);
    s = insert_fillers(s, filler, spec.noise, stream);
    corpus.push_back(std::move(s));
  }
  if (n_neg > 0) {
    std::ifstream in(spec.negatives->path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read negatives " + spec.negatives->path.string());
    Rng stream = master.split();
    auto negatives = sample_negatives(in, n_neg, stream);
    std::move(negatives.begin(), negatives.end(), std::back_inserter(corpus));
  }
  master.shuffle(corpus);
  return corpus;
}

void write_corpus(std::ostream& out, std::span<const LabeledSentence> corpus) {
  for (const auto& s : corpus) {
    json tags = json::array();
    for (Tag t : s.tags) tags.push_back(tag_name(t));
    json rec = {{"text", s.text}, {"intent", intent_name(s.intent)}, {"tags", std::move(tags)}};
    out << rec.dump() << '\n';
  }
}

std::vector<LabeledSentence> read_corpus(std::istream& in) {
  std::vector<LabeledSentence> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "corpus line " + std::to_string(line_no);
    LabeledSentence s;
    try {
      const auto rec = json::parse(line);
      s.text = rec.at("text").get<std::string>();
      const auto intent = intent_from_name(rec.at("intent").get<std::string>());
      if (!intent) throw Error(ErrorCode::UnknownIntent, where);
      s.intent = *intent;
      for (const auto& t : rec.at("tags")) {
        const auto tag = tag_from_name(t.get<std::string>());
        if (!tag) throw Error(ErrorCode::UnknownTag, t.get<std::string>() + " at " + where);
        s.tags.push_back(*tag);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedSpec, where + ": " + e.what());
    }
    try {
      validate(s);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail() + " at " + where);
    }
    corpus.push_back(std::move(s));
  }
  return corpus;
}

std::vector<LabeledSentence> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  return read_corpus(in);
}

}  // namespace nlim
