#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlim/error.hpp"
#include "nlim/interpreter.hpp"
#include "nlim/models.hpp"
#include "nlim/persistence.hpp"

namespace nlim {

struct Chart {
  std::string instrument;
  std::vector<std::string> indicators;

  bool operator==(const Chart&) const = default;
};

struct OrderRecord {
  Intent side = Intent::Buy;  // Buy or Sell
  Decimal quantity;
  std::optional<Decimal> price;
  std::string instrument;
  std::uint64_t sequence = 0;

  bool operator==(const OrderRecord&) const = default;
};

struct TradingState {
  std::vector<Chart> charts;
  std::vector<std::string> news_filters;
  std::vector<OrderRecord> orders;
  std::uint64_t next_sequence = 1;

  bool operator==(const TradingState&) const = default;
};

// Pure: returns the successor state or throws UnknownChart / AmbiguousChart.
TradingState apply_command(const TradingState& state, const Command& command);

nlohmann::json state_to_json(const TradingState& state);
nlohmann::json command_to_json(const Command& command);
nlohmann::json registry_to_json(const Registry& registry);

inline constexpr std::size_t kMaxCommandLength = 512;

struct InterpretResponse {
  std::string text;
  std::optional<Intent> intent;
  double confidence = 0.0;
  std::vector<Span> spans;
  std::optional<Command> command;
  std::optional<ErrorCode> error_code;
  std::string error_message;
  TradingState state;
};

nlohmann::json response_to_json(const InterpretResponse& r);

using Predictor = std::function<Prediction(std::string_view text)>;

Predictor model_predictor(std::shared_ptr<const LoadedModel> model);

// Text -> prediction -> spans -> command, without touching any state.
InterpretResponse interpret_text(const Predictor& predictor, const Registry& registry, std::string_view text);

// One mock trading session. Mutations are serialized; the predictor and
// registry are shared read-only.
class Session {
 public:
  Session(Predictor predictor, Registry registry, std::string model_fingerprint = {});

  InterpretResponse handle_interpret(std::string_view text);
  TradingState state() const;
  void reset();

  const Registry& registry() const { return registry_; }
  const std::string& model_fingerprint() const { return fingerprint_; }

 private:
  Predictor predictor_;
  Registry registry_;
  std::string fingerprint_;
  mutable std::mutex mutex_;
  TradingState state_;
};

// HTTP front end for a Session:
//   POST /api/interpret {text}  GET /api/state  POST /api/reset
//   GET /api/registry           GET /api/health
class HttpService {
 public:
  explicit HttpService(Session& session);
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string model_fingerprint(std::span<const std::uint8_t> model_bytes);

}  // namespace nlim
