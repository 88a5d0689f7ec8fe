#include "nlim/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nlim/error.hpp"
#include "nlim/evaluation.hpp"
#include "nlim/grammar.hpp"
#include "nlim/persistence.hpp"
#include "nlim/service.hpp"
#include "nlim/training.hpp"

namespace nlim::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const std::string s = read_file(path);
  return {s.begin(), s.end()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

std::string format_losses(const Losses& l) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << l.total;
  return ss.str();
}

// "buy 5 tsla" -> "[buy]BUY [5]QUANTITY [tsla]INSTRUMENT"
std::string highlight(std::string_view text, std::span<const Span> spans) {
  std::string out;
  std::size_t at = 0;
  for (const auto& s : spans) {
    out.append(text.substr(at, s.start - at));
    out += '[';
    out.append(s.text);
    out += ']';
    out.append(tag_name(s.tag));
    at = s.end;
  }
  out.append(text.substr(at));
  return out;
}

void print_epoch(std::ostream& err, std::string_view label, const EpochStats& e) {
  err << label << "epoch " << e.epoch << " train " << format_losses(e.train) << " val "
      << format_losses(e.validation) << std::fixed << std::setprecision(4)
      << " intent_acc " << e.validation_intent_accuracy << " tag_acc " << e.validation_tag_accuracy
      << std::setprecision(1) << " (" << e.seconds << "s)\n";
}

struct Loaded {
  std::shared_ptr<const LoadedModel> model;
  std::string fingerprint;
};

Loaded load(const fs::path& path) {
  const auto bytes = read_bytes(path);
  auto model = std::make_shared<const LoadedModel>(deserialize_model(bytes));
  return {std::move(model), model_fingerprint(bytes)};
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Character-level command interpreter for a mock trading desk"};
  app.require_subcommand(1);

  // augment
  std::string spec_path, corpus_out;
  std::uint64_t aug_seed = 1;
  std::size_t aug_count = 5000;
  auto* augment_cmd = app.add_subcommand("augment", "Expand a corpus spec into labeled sentences (JSONL)");
  augment_cmd->add_option("--spec", spec_path, "Corpus spec JSON")->required();
  augment_cmd->add_option("--seed", aug_seed, "Augmentation seed");
  augment_cmd->add_option("--count", aug_count, "Number of sentences");
  augment_cmd->add_option("--out", corpus_out, "Output JSONL")->required();

  // train
  std::string train_corpus, arch_name_str = "s2s-mtl", model_out;
  int hidden = 128;
  TrainConfig tc;
  auto* train_cmd = app.add_subcommand("train", "Train one architecture");
  train_cmd->add_option("--corpus", train_corpus)->required();
  train_cmd->add_option("--arch", arch_name_str, "single-intent|e2e-tagger|mtl-e2e|s2s-tagger|s2s-mtl");
  train_cmd->add_option("--hidden", hidden);
  train_cmd->add_option("--epochs", tc.max_epochs);
  train_cmd->add_option("--batch", tc.batch_size);
  train_cmd->add_option("--lr", tc.learning_rate);
  train_cmd->add_option("--patience", tc.patience);
  train_cmd->add_option("--seed", tc.seed);
  train_cmd->add_option("--out", model_out, "Model file")->required();

  // eval
  std::string eval_model, eval_corpus;
  bool pretty = false;
  auto* eval_cmd = app.add_subcommand("eval", "Score a model on a labeled corpus");
  eval_cmd->add_option("--model", eval_model)->required();
  eval_cmd->add_option("--corpus", eval_corpus)->required();
  eval_cmd->add_flag("--pretty", pretty);

  // compare
  std::string cmp_corpus, cmp_config, cmp_out;
  bool no_timing = false;
  auto* compare_cmd = app.add_subcommand("compare", "Train and evaluate every architecture on one split");
  compare_cmd->add_option("--corpus", cmp_corpus)->required();
  compare_cmd->add_option("--config", cmp_config);
  compare_cmd->add_option("--out", cmp_out, "Report JSON")->required();
  compare_cmd->add_flag("--pretty", pretty);
  compare_cmd->add_flag("--no-timing", no_timing, "Leave wall-clock fields out of the report");

  // interpret
  std::string model_path, registry_path, text;
  auto* interpret_cmd = app.add_subcommand("interpret", "Interpret one command");
  interpret_cmd->add_option("--model", model_path)->required();
  interpret_cmd->add_option("--registry", registry_path);
  interpret_cmd->add_option("text", text)->required();

  // repl
  auto* repl_cmd = app.add_subcommand("repl", "Interactive session against mock trading state");
  repl_cmd->add_option("--model", model_path)->required();
  repl_cmd->add_option("--registry", registry_path)->required();

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP API for the trading console");
  serve_cmd->add_option("--model", model_path)->required();
  serve_cmd->add_option("--registry", registry_path)->required();
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  try {
    if (augment_cmd->parsed()) {
      const CorpusSpec spec = load_corpus_spec(spec_path);
      const auto corpus = augment(spec, aug_seed, aug_count);
      std::ostringstream ss;
      write_corpus(ss, corpus);
      write_text(corpus_out, ss.str());
      err << "wrote " << corpus.size() << " sentences to " << corpus_out << "\n";
    } else if (train_cmd->parsed()) {
      const auto kind = arch_from_name(arch_name_str);
      if (!kind) throw Error(ErrorCode::InvalidArch, "unknown architecture '" + arch_name_str + "'");
      const ArchSpec arch{*kind, hidden};
      const auto corpus = load_corpus(train_corpus);
      const auto result = train(arch, corpus, tc, [&](const EpochStats& e) { print_epoch(err, "", e); });
      const fs::path out_path(model_out);
      if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
      const std::size_t bytes = save_model(result.params, arch, out_path);
      write_vocab_tables(out_path.has_parent_path() ? out_path.parent_path() : fs::path("."));
      err << "best epoch " << result.report.best_epoch << ", " << result.report.parameter_count
          << " parameters, " << bytes << " bytes -> " << model_out << "\n";
    } else if (eval_cmd->parsed()) {
      const auto model = load(eval_model).model;
      const auto corpus = load_corpus(eval_corpus);
      Metrics m = evaluate(model->params, model->arch, corpus);
      m.model_bytes = fs::file_size(eval_model);
      json j = metrics_to_json(m);
      j["arch"] = arch_name(model->arch.kind);
      j["hidden"] = model->arch.hidden;
      out << j.dump(pretty ? 2 : -1) << "\n";
    } else if (compare_cmd->parsed()) {
      CompareConfig cfg;
      if (!cmp_config.empty()) {
        json doc;
        try {
          doc = json::parse(read_file(cmp_config));
        } catch (const json::exception& e) {
          throw Error(ErrorCode::MalformedSpec, std::string("compare config: ") + e.what());
        }
        cfg = parse_compare_config(doc);
      }
      const auto corpus = load_corpus(cmp_corpus);
      const auto report = compare_architectures(corpus, cfg, [&](ArchKind k, const EpochStats& e) {
        print_epoch(err, std::string(arch_name(k)) + " ", e);
      });
      write_text(cmp_out, report_to_json(report, !no_timing).dump(pretty ? 2 : -1) + "\n");
      if (pretty) out << report_to_table(report);
    } else if (interpret_cmd->parsed()) {
      const auto model = load(model_path).model;
      const Registry registry = registry_path.empty() ? Registry{} : load_registry(registry_path);
      const auto r = interpret_text(model_predictor(model), registry, text);
      json j = response_to_json(r);
      j.erase("state");
      out << j.dump() << "\n";
      return r.error_code ? kDataError : kOk;
    } else if (repl_cmd->parsed()) {
      auto [model, fingerprint] = load(model_path);
      Session session(model_predictor(model), load_registry(registry_path), fingerprint);
      out << "> " << std::flush;
      for (std::string line; std::getline(in, line); out << "> " << std::flush) {
        if (line == ":quit" || line == ":q") break;
        if (line == ":state") {
          out << state_to_json(session.state()).dump(2) << "\n";
          continue;
        }
        if (line == ":reset") {
          session.reset();
          continue;
        }
        if (line.empty()) continue;
        try {
          const auto r = session.handle_interpret(line);
          if (r.intent) {
            char conf[16];
            std::snprintf(conf, sizeof conf, "%.3f", r.confidence);
            out << "intent " << intent_name(*r.intent) << " (" << conf << ")\n";
          }
          if (!r.spans.empty()) out << highlight(line, r.spans) << "\n";
          if (r.error_code) {
            out << error_code_name(*r.error_code) << ": " << r.error_message << "\n";
          } else {
            out << command_to_json(*r.command).dump() << "\n";
          }
        } catch (const std::exception& e) {
          out << "error: " << e.what() << "\n";
        }
      }
      out << "\n";
    } else if (serve_cmd->parsed()) {
      auto [model, fingerprint] = load(model_path);
      Session session(model_predictor(model), load_registry(registry_path), fingerprint);
      HttpService service(session);
      err << "listening on http://" << host << ":" << port << "\n";
      if (!service.listen(host, port)) {
        err << "cannot listen on " << host << ":" << port << "\n";
        return kRuntimeFailure;
      }
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "fatal: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace nlim::cli
