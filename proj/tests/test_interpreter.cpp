#include <doctest.h>

#include <cctype>

#include "nlim/error.hpp"
#include "nlim/interpreter.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nlim;

namespace {

Registry demo_registry() { return load_registry(test::data_dir() / "registry.json"); }

Span span(Tag t, std::string text) { return {t, 0, text.size(), std::move(text)}; }

template <class F>
ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected nlim::Error");
  return ErrorCode::IoFailure;
}

}  // namespace

TEST_CASE("spans_from_tags") {
  const auto s = test::sentence(Intent::Buy, {{"buy", Tag::Buy}, {"EURUSD", Tag::Instrument}});
  const auto spans = spans_from_tags(s.text, s.tags);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == Span{Tag::Buy, 0, 3, "buy"});
  CHECK(spans[1] == Span{Tag::Instrument, 4, 10, "EURUSD"});

  const std::string text = "add bollinger bands";
  std::vector<Tag> tags(3, Tag::Add);
  tags.push_back(Tag::Separator);
  tags.insert(tags.end(), 15, Tag::Indicator);
  const auto ind = spans_from_tags(text, tags);
  REQUIRE(ind.size() == 2);
  CHECK(ind[1].text == "bollinger bands");
  CHECK(ind[1].end - ind[1].start == 15);

  CHECK(spans_from_tags("hello", std::vector<Tag>(5, Tag::None)).empty());
  // Missing trailing tags count as NONE.
  const auto partial = spans_from_tags("buy tsla", std::vector<Tag>(3, Tag::Buy));
  REQUIRE(partial.size() == 1);
  CHECK(partial[0].text == "buy");
}

TEST_CASE("spans tile the content-tagged positions") {
  Rng rng(12);
  for (int k = 0; k < 300; ++k) {
    const std::string text = test::random_ascii(rng, 0, 25);
    std::vector<Tag> tags;
    const std::size_t n = rng.below(text.size() + 1);
    for (std::size_t i = 0; i < n; ++i) tags.push_back(static_cast<Tag>(2 + rng.below(5) * (rng.below(3) ? 1 : 3)));
    const auto spans = spans_from_tags(text, tags);
    std::vector<Tag> covered(text.size(), Tag::None);
    std::size_t last_end = 0;
    for (const auto& sp : spans) {
      CHECK(sp.start < sp.end);
      CHECK(sp.start >= last_end);
      CHECK(sp.tag != Tag::None);
      CHECK(sp.tag != Tag::Separator);
      CHECK_FALSE(is_special(sp.tag));
      CHECK(sp.text == text.substr(sp.start, sp.end - sp.start));
      for (std::size_t i = sp.start; i < sp.end; ++i) covered[i] = sp.tag;
      last_end = sp.end;
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
      const Tag t = i < tags.size() ? tags[i] : Tag::None;
      const bool content = t != Tag::None && t != Tag::Separator;
      CHECK(covered[i] == (content ? t : Tag::None));
    }
    // Adjacent spans never share a tag unless separated.
    for (std::size_t j = 1; j < spans.size(); ++j) {
      if (spans[j].tag == spans[j - 1].tag) CHECK(spans[j].start > spans[j - 1].end);
    }
  }
}

TEST_CASE("fuzzy_match examples") {
  const std::vector<std::string> rsi_macd{"RSI", "MACD"};
  CHECK(fuzzy_match("rsi", rsi_macd).name == "RSI");
  CHECK(fuzzy_match("rsi", rsi_macd).distance == 0);
  const std::vector<std::string> bb{"Bollinger Bands", "MACD"};
  const auto m = fuzzy_match("bolinger bands", bb);
  CHECK(m.name == "Bollinger Bands");
  CHECK(m.distance == 1);
  const std::vector<std::string> one{"RSI"};
  CHECK(fuzzy_match("", one).distance == 3);
  const std::vector<std::string> tie{"EMA", "SMA"};
  CHECK(fuzzy_match("xMA", tie).name == "EMA");
  CHECK(code_of([] { fuzzy_match("x", std::vector<std::string>{}); }) == ErrorCode::UnresolvedEntity);
}

TEST_CASE("fuzzy_match equals the full-table oracle") {
  Rng rng(2024);
  auto word = [&](std::size_t max_len) {
    std::string s(rng.below(max_len + 1), 'a');
    for (auto& c : s) c = "abcABC xyz"[rng.below(10)];
    return s;
  };
  for (int k = 0; k < 1000; ++k) {
    const std::string a = word(20), b = word(20);
    CHECK(levenshtein(a, b) == test::oracle_distance(a, b));
    std::vector<std::string> cands;
    for (std::size_t n = 1 + rng.below(6); n > 0; --n) cands.push_back(word(8));
    const auto got = fuzzy_match(a, cands);
    const auto want = test::oracle_match(a, cands);
    CHECK(got.name == want.name);
    CHECK(got.distance == want.distance);
  }
}

TEST_CASE("registry threshold and parsing") {
  Registry r;
  CHECK(r.threshold(1) == 1);
  CHECK(r.threshold(4) == 1);
  CHECK(r.threshold(5) == 2);
  CHECK(r.threshold(15) == 4);
  r.max_distance = 0;
  CHECK(r.threshold(15) == 0);

  const auto reg = demo_registry();
  CHECK(std::find(reg.tickers.begin(), reg.tickers.end(), "TSLA") != reg.tickers.end());
  CHECK(reg.companies.at("Tesla") == "TSLA");
  CHECK(code_of([] { parse_registry(R"({"tickers": ["A", "A"]})"); }) == ErrorCode::MalformedSpec);
  CHECK(code_of([] { parse_registry(R"({"tickers": ["A"], "companies": {"X": "B"}})"); }) ==
        ErrorCode::MalformedSpec);
}

TEST_CASE("parse_number") {
  CHECK(parse_number("295.9") == Decimal{2959, 1});
  CHECK(parse_number("295.9").to_double() == 295.9);
  CHECK(parse_number("5") == Decimal{5, 0});
  CHECK(parse_number("5.0") == Decimal{5, 0});
  CHECK(parse_number(".5").to_string() == "0.5");
  CHECK(parse_number("007").to_string() == "7");
  for (const char* bad : {"2,5", "", ".", "5.", "1.2.3", "-3", "1e5", "5 "}) {
    CAPTURE(bad);
    CHECK(code_of([&] { parse_number(bad); }) == ErrorCode::MalformedNumber);
  }
}

TEST_CASE("build_command") {
  const auto reg = demo_registry();
  const std::vector<Span> order{span(Tag::Buy, "buy"), span(Tag::Quantity, "5"), span(Tag::Price, "295.9"),
                                span(Tag::Instrument, "tsla")};
  const auto cmd = build_command(Intent::Buy, order, reg);
  REQUIRE(std::holds_alternative<Buy>(cmd));
  const auto& b = std::get<Buy>(cmd);
  CHECK(b.quantity == Decimal{5, 0});
  REQUIRE(b.price.has_value());
  CHECK(*b.price == Decimal{2959, 1});
  CHECK(b.instrument == "TSLA");

  const std::vector<Span> no_qty{span(Tag::Buy, "buy"), span(Tag::Instrument, "tsla")};
  try {
    build_command(Intent::Buy, no_qty, reg);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingSlot);
    CHECK(e.detail() == "QUANTITY");
  }
  CHECK(std::holds_alternative<NoOp>(build_command(Intent::None, order, reg)));

  const std::vector<Span> zero{span(Tag::Quantity, "0"), span(Tag::Instrument, "tsla")};
  CHECK(code_of([&] { build_command(Intent::Sell, zero, reg); }) == ErrorCode::MalformedNumber);

  const std::vector<Span> garbage{span(Tag::Instrument, "qwertyuiop")};
  CHECK(code_of([&] { build_command(Intent::OpenChart, garbage, reg); }) == ErrorCode::UnresolvedEntity);

  const std::vector<Span> typo{span(Tag::Indicator, "bolinger bands"), span(Tag::Company, "tesla")};
  const auto add = build_command(Intent::AddIndicator, typo, reg);
  REQUIRE(std::holds_alternative<AddIndicator>(add));
  CHECK(std::get<AddIndicator>(add).indicator == "Bollinger Bands");
  CHECK(std::get<AddIndicator>(add).instrument == "TSLA");

  const std::vector<Span> bare{span(Tag::Indicator, "rsi")};
  CHECK_FALSE(std::get<RemoveIndicator>(build_command(Intent::RemoveIndicator, bare, reg)).instrument.has_value());

  const std::vector<Span> topic{span(Tag::NewsTopic, "crypto")};
  CHECK(std::get<FilterNews>(build_command(Intent::FilterNews, topic, reg)).topic == "crypto");
  const std::vector<Span> company{span(Tag::Company, "Appel")};
  CHECK(std::get<FilterNews>(build_command(Intent::FilterNews, company, reg)).topic == "AAPL");
  CHECK(code_of([&] { build_command(Intent::FilterNews, bare, reg); }) == ErrorCode::MissingSlot);

  const std::vector<Span> open{span(Tag::Open, "open"), span(Tag::Instrument, "eurusd")};
  CHECK(std::get<OpenChart>(build_command(Intent::OpenChart, open, reg)).instrument == "EURUSD");
  CHECK(std::get<CloseChart>(build_command(Intent::CloseChart, open, reg)).instrument == "EURUSD");
}

TEST_CASE("built commands always satisfy their invariants") {
  const auto reg = demo_registry();
  Rng rng(31);
  const std::vector<std::string> surfaces{"tsla", "TSL", "eurusd", "apple", "0", "12", "3.5", "rsi", "macd",
                                          "", "x", "1,5", "bollinger", "crypto"};
  int built = 0;
  for (int k = 0; k < 2000; ++k) {
    std::vector<Span> spans;
    for (std::size_t n = rng.below(5); n > 0; --n) {
      spans.push_back(span(static_cast<Tag>(4 + rng.below(15)), surfaces[rng.below(surfaces.size())]));
    }
    const auto intent = static_cast<Intent>(rng.below(8));
    Command c;
    try {
      c = build_command(intent, spans, reg);
    } catch (const Error&) {
      continue;
    }
    ++built;
    CHECK(c == build_command(intent, spans, reg));
    const auto canonical = [&](const std::string& s) {
      return std::find(reg.tickers.begin(), reg.tickers.end(), s) != reg.tickers.end();
    };
    if (auto* o = std::get_if<Buy>(&c)) {
      CHECK(o->quantity.positive());
      CHECK((!o->price || o->price->positive()));
      CHECK(canonical(o->instrument));
    }
    if (auto* o = std::get_if<Sell>(&c)) {
      CHECK(o->quantity.positive());
      CHECK(canonical(o->instrument));
    }
    if (auto* o = std::get_if<OpenChart>(&c)) CHECK(canonical(o->instrument));
    if (auto* o = std::get_if<AddIndicator>(&c)) {
      CHECK(std::find(reg.indicators.begin(), reg.indicators.end(), o->indicator) != reg.indicators.end());
    }
  }
  CHECK(built > 100);
}

TEST_CASE("intent_from_spans uses the first action span") {
  const std::vector<Span> spans{span(Tag::Instrument, "x"), span(Tag::Sell, "sell"), span(Tag::Buy, "buy")};
  CHECK(intent_from_spans(spans) == Intent::Sell);
  CHECK(intent_from_spans({}) == Intent::None);
}
