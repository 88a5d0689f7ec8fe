#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nlim/encoding.hpp"

namespace nlim {

struct Span {
  Tag tag = Tag::None;
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::string text;

  bool operator==(const Span&) const = default;
};

// Maximal runs of one tag, NONE and SEPARATOR runs dropped. Characters past
// the end of `tags` count as NONE.
std::vector<Span> spans_from_tags(std::string_view text, std::span<const Tag> tags);

struct Registry {
  std::vector<std::string> indicators;
  std::vector<std::string> tickers;
  std::map<std::string, std::string> companies;  // company name -> ticker
  std::optional<std::size_t> max_distance;       // fixed threshold override

  // max(1, ceil(len / 4)) unless overridden.
  std::size_t threshold(std::size_t surface_length) const;
};

Registry parse_registry(std::string_view document);
Registry load_registry(const std::filesystem::path& path);

std::size_t levenshtein(std::string_view a, std::string_view b);

struct FuzzyMatch {
  std::string name;
  std::size_t distance = 0;
};

// Case-insensitive; ties go to the lexicographically smallest candidate.
FuzzyMatch fuzzy_match(std::string_view word, std::span<const std::string> candidates);

// Exact decimal: value = units / 10^scale.
struct Decimal {
  std::int64_t units = 0;
  int scale = 0;

  double to_double() const;
  std::string to_string() const;
  bool positive() const { return units > 0; }

  bool operator==(const Decimal& o) const;  // numeric equality
};

// Digits with at most one '.', at least one digit after it when present.
Decimal parse_number(std::string_view text);

struct OpenChart {
  std::string instrument;
  bool operator==(const OpenChart&) const = default;
};
struct CloseChart {
  std::string instrument;
  bool operator==(const CloseChart&) const = default;
};
struct AddIndicator {
  std::string indicator;
  std::optional<std::string> instrument;
  bool operator==(const AddIndicator&) const = default;
};
struct RemoveIndicator {
  std::string indicator;
  std::optional<std::string> instrument;
  bool operator==(const RemoveIndicator&) const = default;
};
struct FilterNews {
  std::string topic;
  bool operator==(const FilterNews&) const = default;
};
struct Order {
  Decimal quantity;
  std::optional<Decimal> price;
  std::string instrument;
  bool operator==(const Order&) const = default;
};
struct Buy : Order {
  bool operator==(const Buy&) const = default;
};
struct Sell : Order {
  bool operator==(const Sell&) const = default;
};
struct NoOp {
  bool operator==(const NoOp&) const = default;
};

using Command = std::variant<OpenChart, CloseChart, AddIndicator, RemoveIndicator, FilterNews, Buy, Sell, NoOp>;

std::string_view command_name(const Command& c);

Command build_command(Intent intent, std::span<const Span> spans, const Registry& registry);

// Intent implied by the first action span, for models without an intent head.
Intent intent_from_spans(std::span<const Span> spans);

}  // namespace nlim
