#include "nlim/interpreter.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nlim/error.hpp"

namespace nlim {

using json = nlohmann::json;

std::vector<Span> spans_from_tags(std::string_view text, std::span<const Tag> tags) {
  auto tag_at = [&](std::size_t i) { return i < tags.size() ? tags[i] : Tag::None; };
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    const Tag t = tag_at(i);
    std::size_t j = i + 1;
    while (j < text.size() && tag_at(j) == t) ++j;
    if (t != Tag::None && t != Tag::Separator && !is_special(t)) {
      spans.push_back({t, i, j, std::string(text.substr(i, j - i))});
    }
    i = j;
  }
  return spans;
}

std::size_t Registry::threshold(std::size_t surface_length) const {
  if (max_distance) return *max_distance;
  return std::max<std::size_t>(1, (surface_length + 3) / 4);
}

Registry parse_registry(std::string_view document) {
  Registry reg;
  try {
    const auto doc = json::parse(document);
    reg.indicators = doc.value("indicators", std::vector<std::string>{});
    reg.tickers = doc.value("tickers", std::vector<std::string>{});
    reg.companies = doc.value("companies", std::map<std::string, std::string>{});
    if (doc.contains("max_distance") && !doc["max_distance"].is_null()) {
      reg.max_distance = doc["max_distance"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedSpec, std::string("registry: ") + e.what());
  }
  for (const auto* list : {&reg.indicators, &reg.tickers}) {
    std::set<std::string> seen;
    for (const auto& name : *list) {
      if (name.empty() || !is_ascii(name)) throw Error(ErrorCode::NonAsciiEntry, "registry name \"" + name + "\"");
      if (!seen.insert(name).second) throw Error(ErrorCode::MalformedSpec, "duplicate registry name " + name);
    }
  }
  for (const auto& [company, ticker] : reg.companies) {
    if (!is_ascii(company)) throw Error(ErrorCode::NonAsciiEntry, "company \"" + company + "\"");
    if (std::find(reg.tickers.begin(), reg.tickers.end(), ticker) == reg.tickers.end()) {
      throw Error(ErrorCode::MalformedSpec, "company " + company + " maps to unknown ticker " + ticker);
    }
  }
  return reg;
}

Registry load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_registry(ss.str());
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  // Two-row DP over case-folded characters.
  auto fold = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (fold(a[i - 1]) == fold(b[j - 1]) ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

FuzzyMatch fuzzy_match(std::string_view word, std::span<const std::string> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::UnresolvedEntity, "no candidates for \"" + std::string(word) + "\"");
  FuzzyMatch best{candidates.front(), levenshtein(word, candidates.front())};
  for (const auto& c : candidates.subspan(1)) {
    const std::size_t d = levenshtein(word, c);
    if (d < best.distance || (d == best.distance && c < best.name)) best = {c, d};
  }
  return best;
}

namespace {

__int128 pow10(int n) {
  __int128 p = 1;
  while (n-- > 0) p *= 10;
  return p;
}

}  // namespace

double Decimal::to_double() const {
  // Via the decimal string so that e.g. 295.9 maps to the nearest double.
  return std::stod(to_string());
}

std::string Decimal::to_string() const {
  std::string digits = std::to_string(units < 0 ? -units : units);
  if (scale > 0) {
    if (digits.size() <= static_cast<std::size_t>(scale)) digits.insert(0, scale - digits.size() + 1, '0');
    digits.insert(digits.size() - scale, 1, '.');
  }
  return units < 0 ? "-" + digits : digits;
}

bool Decimal::operator==(const Decimal& o) const {
  const int s = std::max(scale, o.scale);
  return static_cast<__int128>(units) * pow10(s - scale) == static_cast<__int128>(o.units) * pow10(s - o.scale);
}

Decimal parse_number(std::string_view text) {
  const auto bad = [&] { return Error(ErrorCode::MalformedNumber, "\"" + std::string(text) + "\""); };
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  auto digits_only = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (text.empty() || !digits_only(whole) || !digits_only(frac)) throw bad();
  if (dot != std::string_view::npos && frac.empty()) throw bad();
  if (whole.size() + frac.size() > 18) throw bad();
  Decimal d;
  for (char c : whole) d.units = d.units * 10 + (c - '0');
  for (char c : frac) d.units = d.units * 10 + (c - '0');
  d.scale = static_cast<int>(frac.size());
  return d;
}

std::string_view command_name(const Command& c) {
  static constexpr std::string_view names[] = {"OpenChart", "CloseChart", "AddIndicator", "RemoveIndicator",
                                               "FilterNews", "Buy",        "Sell",         "NoOp"};
  return names[c.index()];
}

Intent intent_from_spans(std::span<const Span> spans) {
  for (const auto& s : spans) {
    switch (s.tag) {
      case Tag::Buy: return Intent::Buy;
      case Tag::Sell: return Intent::Sell;
      case Tag::Open: return Intent::OpenChart;
      case Tag::Close: return Intent::CloseChart;
      case Tag::Add: return Intent::AddIndicator;
      case Tag::Remove: return Intent::RemoveIndicator;
      case Tag::Filter: return Intent::FilterNews;
      default: break;
    }
  }
  return Intent::None;
}

namespace {

const Span* first_span(std::span<const Span> spans, Tag tag) {
  for (const auto& s : spans) {
    if (s.tag == tag) return &s;
  }
  return nullptr;
}

std::string resolve(const Span& span, std::span<const std::string> candidates, const Registry& reg) {
  if (candidates.empty()) {
    throw Error(ErrorCode::UnresolvedEntity, "\"" + span.text + "\" (registry has no " +
                                                 std::string(tag_name(span.tag)) + " entries)");
  }
  const FuzzyMatch m = fuzzy_match(span.text, candidates);
  if (m.distance > reg.threshold(span.text.size())) {
    throw Error(ErrorCode::UnresolvedEntity, "\"" + span.text + "\" best \"" + m.name + "\" at distance " +
                                                 std::to_string(m.distance));
  }
  return m.name;
}

std::string resolve_company(const Span& span, const Registry& reg) {
  std::vector<std::string> names;
  for (const auto& [name, ticker] : reg.companies) names.push_back(name);
  return reg.companies.at(resolve(span, names, reg));
}

std::optional<std::string> instrument_of(std::span<const Span> spans, const Registry& reg) {
  if (const Span* s = first_span(spans, Tag::Instrument)) return resolve(*s, reg.tickers, reg);
  if (const Span* s = first_span(spans, Tag::Company)) return resolve_company(*s, reg);
  return std::nullopt;
}

std::string required_instrument(std::span<const Span> spans, const Registry& reg) {
  auto instrument = instrument_of(spans, reg);
  if (!instrument) throw Error(ErrorCode::MissingSlot, "INSTRUMENT");
  return *instrument;
}

const Span& required(std::span<const Span> spans, Tag tag) {
  const Span* s = first_span(spans, tag);
  if (s == nullptr) throw Error(ErrorCode::MissingSlot, std::string(tag_name(tag)));
  return *s;
}

Decimal positive_number(const Span& s) {
  const Decimal d = parse_number(s.text);
  if (!d.positive()) throw Error(ErrorCode::MalformedNumber, "\"" + s.text + "\" must be positive");
  return d;
}

Order order_of(std::span<const Span> spans, const Registry& reg) {
  Order o;
  o.quantity = positive_number(required(spans, Tag::Quantity));
  if (const Span* p = first_span(spans, Tag::Price)) o.price = positive_number(*p);
  o.instrument = required_instrument(spans, reg);
  return o;
}

}  // namespace

Command build_command(Intent intent, std::span<const Span> spans, const Registry& reg) {
  switch (intent) {
    case Intent::None:
      return NoOp{};
    case Intent::OpenChart:
      return OpenChart{required_instrument(spans, reg)};
    case Intent::CloseChart:
      return CloseChart{required_instrument(spans, reg)};
    case Intent::AddIndicator: {
      auto indicator = resolve(required(spans, Tag::Indicator), reg.indicators, reg);
      return AddIndicator{std::move(indicator), instrument_of(spans, reg)};
    }
    case Intent::RemoveIndicator: {
      auto indicator = resolve(required(spans, Tag::Indicator), reg.indicators, reg);
      return RemoveIndicator{std::move(indicator), instrument_of(spans, reg)};
    }
    case Intent::FilterNews:
      if (const Span* s = first_span(spans, Tag::NewsTopic)) return FilterNews{s->text};
      if (const Span* s = first_span(spans, Tag::Company)) return FilterNews{resolve_company(*s, reg)};
      throw Error(ErrorCode::MissingSlot, "NEWS_TOPIC");
    case Intent::Buy:
      return Buy{order_of(spans, reg)};
    case Intent::Sell:
      return Sell{order_of(spans, reg)};
  }
  return NoOp{};
}

}  // namespace nlim
