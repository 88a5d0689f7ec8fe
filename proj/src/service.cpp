#include "nlim/service.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <type_traits>

#include <httplib.h>

#include "nlim/error.hpp"

namespace nlim {

using json = nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Chart& target_chart(TradingState& s, const std::optional<std::string>& instrument) {
  if (instrument) {
    auto it = std::find_if(s.charts.begin(), s.charts.end(), [&](const Chart& c) { return c.instrument == *instrument; });
    if (it == s.charts.end()) throw Error(ErrorCode::UnknownChart, *instrument);
    return *it;
  }
  if (s.charts.empty()) throw Error(ErrorCode::UnknownChart, "no chart is open");
  if (s.charts.size() > 1) throw Error(ErrorCode::AmbiguousChart, std::to_string(s.charts.size()) + " charts open");
  return s.charts.front();
}

void place(TradingState& s, Intent side, const Order& o) {
  s.orders.push_back({side, o.quantity, o.price, o.instrument, s.next_sequence++});
}

json decimal_json(const Decimal& d) { return d.to_double(); }

}  // namespace

TradingState apply_command(const TradingState& state, const Command& command) {
  TradingState s = state;
  std::visit(overloaded{
                 [&](const OpenChart& c) {
                   if (std::none_of(s.charts.begin(), s.charts.end(),
                                    [&](const Chart& ch) { return ch.instrument == c.instrument; })) {
                     s.charts.push_back({c.instrument, {}});
                   }
                 },
                 [&](const CloseChart& c) {
                   auto it = std::find_if(s.charts.begin(), s.charts.end(),
                                          [&](const Chart& ch) { return ch.instrument == c.instrument; });
                   if (it == s.charts.end()) throw Error(ErrorCode::UnknownChart, c.instrument);
                   s.charts.erase(it);
                 },
                 [&](const AddIndicator& c) {
                   Chart& chart = target_chart(s, c.instrument);
                   auto& ind = chart.indicators;
                   if (std::find(ind.begin(), ind.end(), c.indicator) == ind.end()) ind.push_back(c.indicator);
                 },
                 [&](const RemoveIndicator& c) {
                   Chart& chart = target_chart(s, c.instrument);
                   std::erase(chart.indicators, c.indicator);
                 },
                 [&](const FilterNews& c) {
                   if (std::find(s.news_filters.begin(), s.news_filters.end(), c.topic) == s.news_filters.end()) {
                     s.news_filters.push_back(c.topic);
                   }
                 },
                 [&](const Buy& c) { place(s, Intent::Buy, c); },
                 [&](const Sell& c) { place(s, Intent::Sell, c); },
                 [](const NoOp&) {},
             },
             command);
  return s;
}

json state_to_json(const TradingState& state) {
  json charts = json::array();
  for (const auto& c : state.charts) charts.push_back({{"instrument", c.instrument}, {"indicators", c.indicators}});
  json orders = json::array();
  for (const auto& o : state.orders) {
    orders.push_back({{"side", intent_name(o.side)},
                      {"quantity", decimal_json(o.quantity)},
                      {"price", o.price ? decimal_json(*o.price) : json(nullptr)},
                      {"instrument", o.instrument},
                      {"sequence", o.sequence}});
  }
  return {{"charts", std::move(charts)}, {"news_filters", state.news_filters}, {"orders", std::move(orders)}};
}

json command_to_json(const Command& command) {
  json j = {{"type", command_name(command)}};
  auto order = [&](const Order& o) {
    j["quantity"] = decimal_json(o.quantity);
    j["price"] = o.price ? decimal_json(*o.price) : json(nullptr);
    j["instrument"] = o.instrument;
  };
  auto maybe = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
  std::visit(overloaded{
                 [&](const OpenChart& c) { j["instrument"] = c.instrument; },
                 [&](const CloseChart& c) { j["instrument"] = c.instrument; },
                 [&](const AddIndicator& c) {
                   j["indicator"] = c.indicator;
                   j["instrument"] = maybe(c.instrument);
                 },
                 [&](const RemoveIndicator& c) {
                   j["indicator"] = c.indicator;
                   j["instrument"] = maybe(c.instrument);
                 },
                 [&](const FilterNews& c) { j["topic"] = c.topic; },
                 [&](const Buy& c) { order(c); },
                 [&](const Sell& c) { order(c); },
                 [](const NoOp&) {},
             },
             command);
  return j;
}

json registry_to_json(const Registry& r) {
  return {{"indicators", r.indicators},
          {"tickers", r.tickers},
          {"companies", r.companies},
          {"max_distance", r.max_distance ? json(*r.max_distance) : json(nullptr)}};
}

json response_to_json(const InterpretResponse& r) {
  json spans = json::array();
  for (const auto& s : r.spans) {
    spans.push_back({{"tag", tag_name(s.tag)}, {"text", s.text}, {"start", s.start}, {"end", s.end}});
  }
  return {{"text", r.text},
          {"intent", r.intent ? json(intent_name(*r.intent)) : json(nullptr)},
          {"confidence", r.confidence},
          {"spans", std::move(spans)},
          {"command", r.command ? command_to_json(*r.command) : json(nullptr)},
          {"error", r.error_code ? json{{"code", error_code_name(*r.error_code)}, {"message", r.error_message}}
                                 : json(nullptr)},
          {"state", state_to_json(r.state)}};
}

Predictor model_predictor(std::shared_ptr<const LoadedModel> model) {
  return [model = std::move(model)](std::string_view text) { return predict(model->params, model->arch, text); };
}

InterpretResponse interpret_text(const Predictor& predictor, const Registry& registry, std::string_view text) {
  InterpretResponse r;
  r.text = std::string(text);
  try {
    if (text.size() > kMaxCommandLength) {
      throw Error(ErrorCode::PayloadTooLarge, std::to_string(text.size()) + " characters (limit " +
                                                  std::to_string(kMaxCommandLength) + ")");
    }
    if (text.empty()) throw Error(ErrorCode::MissingSlot, "empty command");
    encode_chars(text);
    const Prediction p = predictor(text);
    r.spans = spans_from_tags(text, p.tags);
    r.intent = p.intent() ? *p.intent() : intent_from_spans(r.spans);
    r.confidence = p.confidence();
    r.command = build_command(*r.intent, r.spans, registry);
  } catch (const Error& e) {
    r.error_code = e.code();
    r.error_message = e.detail();
  }
  return r;
}

Session::Session(Predictor predictor, Registry registry, std::string model_fingerprint)
    : predictor_(std::move(predictor)), registry_(std::move(registry)), fingerprint_(std::move(model_fingerprint)) {}

InterpretResponse Session::handle_interpret(std::string_view text) {
  InterpretResponse r = interpret_text(predictor_, registry_, text);
  std::lock_guard lock(mutex_);
  if (r.command && !r.error_code) {
    try {
      state_ = apply_command(state_, *r.command);
    } catch (const Error& e) {
      r.error_code = e.code();
      r.error_message = e.detail();
    }
  }
  r.state = state_;
  return r;
}

TradingState Session::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

void Session::reset() {
  std::lock_guard lock(mutex_);
  state_ = TradingState{};
}

std::string model_fingerprint(std::span<const std::uint8_t> model_bytes) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc32(model_bytes));
  return buf;
}

struct HttpService::Impl {
  Session& session;
  httplib::Server server;

  explicit Impl(Session& s) : session(s) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    auto send = [](httplib::Response& res, const json& body, int status = 200) {
      res.status = status;
      res.set_content(body.dump(), "application/json");
    };
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Post("/api/interpret", [this, send](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        send(res, {{"error", {{"code", "MalformedBody"}, {"message", e.what()}}}}, 400);
        return;
      }
      if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
        send(res, {{"error", {{"code", "MalformedBody"}, {"message", "expected {\"text\": string}"}}}}, 400);
        return;
      }
      const InterpretResponse r = session.handle_interpret(body["text"].get<std::string>());
      send(res, response_to_json(r), r.error_code == ErrorCode::PayloadTooLarge ? 413 : 200);
    });
    server.Get("/api/state", [this, send](const httplib::Request&, httplib::Response& res) {
      send(res, state_to_json(session.state()));
    });
    server.Post("/api/reset", [this, send](const httplib::Request&, httplib::Response& res) {
      session.reset();
      send(res, state_to_json(session.state()));
    });
    server.Get("/api/registry", [this, send](const httplib::Request&, httplib::Response& res) {
      send(res, registry_to_json(session.registry()));
    });
    server.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) {
      send(res, {{"status", "ok"}, {"model", session.model_fingerprint()}});
    });
  }
};

HttpService::HttpService(Session& session) : impl_(std::make_unique<Impl>(session)) {}
HttpService::~HttpService() { stop(); }

bool HttpService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int HttpService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpService::listen_after_bind() { return impl_->server.listen_after_bind(); }
void HttpService::stop() {
  if (impl_) impl_->server.stop();
}
void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace nlim
