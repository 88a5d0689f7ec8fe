#include "nlim/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "nlim/error.hpp"
#include "nlim/grammar.hpp"
#include "nlim/layers.hpp"
#include "nlim/persistence.hpp"

namespace nlim {

using json = nlohmann::json;

namespace {

Vector log_softmax(const Eigen::Ref<const Vector>& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

}  // namespace

std::vector<int> tag_targets(ArchKind kind, const LabeledSentence& s) {
  std::vector<int> t;
  if (!has_tag_head(kind)) return t;
  for (Tag tag : s.tags) t.push_back(static_cast<int>(tag));
  if (is_seq2seq(kind)) t.push_back(static_cast<int>(Tag::End));
  return t;
}

std::vector<ExampleOutputs> run_model(const ParamStore& params, const ArchSpec& arch,
                                      std::span<const LabeledSentence> dataset, int batch_size) {
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dataset[a].text.size() < dataset[b].text.size(); });

  std::vector<ExampleOutputs> out(dataset.size());
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::span<const std::size_t> rows(order.data() + start,
                                            std::min(order.size() - start, static_cast<std::size_t>(batch_size)));
    const Batch batch = make_batch(dataset, rows);
    const BatchOutputs tf = forward_outputs(params, arch, batch);
    const std::vector<Prediction> fr = predict_batch(params, arch, batch);
    for (int r = 0; r < batch.size(); ++r) {
      ExampleOutputs& o = out[rows[r]];
      if (has_intent_head(arch.kind)) {
        const Vector lp = log_softmax(tf.intent_logits.col(r));
        std::array<double, kIntentDim> a{};
        for (int k = 0; k < kIntentDim; ++k) a[k] = lp(k);
        o.intent_log_probs = a;
      }
      if (has_tag_head(arch.kind)) {
        const IndexMatrix& target = is_seq2seq(arch.kind) ? batch.decoder_target : batch.tags;
        const int positions = batch.lengths[r] + (is_seq2seq(arch.kind) ? 1 : 0);
        for (int t = 0; t < positions; ++t) {
          const auto col = tf.tag_logits[t].col(r);
          o.gold_tag_log_prob.push_back(log_softmax(col)(target(r, t)));
          o.tag_argmax.push_back(decode_argmax(arch.kind, col));
        }
        for (Tag tag : fr[r].tags) o.free_running.push_back(static_cast<int>(tag));
        if (fr[r].halted_by == HaltedBy::EndToken) o.free_running.push_back(static_cast<int>(Tag::End));
      }
    }
  }
  return out;
}

Metrics compute_metrics(ArchKind kind, std::span<const LabeledSentence> dataset,
                        std::span<const ExampleOutputs> outputs) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to evaluate");
  if (dataset.size() != outputs.size()) throw Error(ErrorCode::ShapeMismatch, "outputs/dataset size");
  Metrics m;
  m.examples = dataset.size();
  const double n = static_cast<double>(dataset.size());

  if (has_intent_head(kind)) {
    double hits = 0.0, loss = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto& lp = *outputs[i].intent_log_probs;
      const auto gold = static_cast<std::size_t>(dataset[i].intent);
      const auto best = static_cast<std::size_t>(std::distance(lp.begin(), std::max_element(lp.begin(), lp.end())));
      hits += best == gold ? 1.0 : 0.0;
      loss -= lp[gold];
    }
    m.intent_accuracy = hits / n;
    m.intent_loss = loss / n;
  }

  if (has_tag_head(kind)) {
    double tf_hits = 0.0, fr_hits = 0.0, loss = 0.0;
    std::size_t positions = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto target = tag_targets(kind, dataset[i]);
      const auto& o = outputs[i];
      if (o.tag_argmax.size() != target.size() || o.gold_tag_log_prob.size() != target.size()) {
        throw Error(ErrorCode::ShapeMismatch, "tag outputs do not cover the target");
      }
      for (std::size_t j = 0; j < target.size(); ++j) {
        tf_hits += o.tag_argmax[j] == target[j] ? 1.0 : 0.0;
        fr_hits += j < o.free_running.size() && o.free_running[j] == target[j] ? 1.0 : 0.0;
        loss -= o.gold_tag_log_prob[j];
      }
      positions += target.size();
    }
    const double p = static_cast<double>(positions);
    m.tag_positions = positions;
    m.tag_accuracy = tf_hits / p;
    m.free_running_tag_accuracy = fr_hits / p;
    m.tag_loss = loss / p;
  }
  return m;
}

Metrics evaluate(const ParamStore& params, const ArchSpec& arch, std::span<const LabeledSentence> dataset) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to evaluate");
  Metrics m = compute_metrics(arch.kind, dataset, run_model(params, arch, dataset));
  m.parameter_count = parameter_count(params);
  m.model_bytes = serialize_model(params, arch).size();
  return m;
}

std::optional<PublishedReference> published_reference(ArchKind kind) {
  switch (kind) {
    case ArchKind::S2sMtl: return PublishedReference{"S2S MTL LSTM", 0.996, 0.006, 0.994, 0.007};
    case ArchKind::MtlE2e: return PublishedReference{"MTL LSTM", 0.98, 0.03, 0.991, 0.02};
    case ArchKind::SingleIntent: return PublishedReference{"Single LSTM", 0.96, 0.08, std::nullopt, std::nullopt};
    case ArchKind::S2sTagger: return PublishedReference{"S2S LSTM", std::nullopt, std::nullopt, 0.97, 0.02};
    case ArchKind::E2eTagger: return std::nullopt;
  }
  return std::nullopt;
}

CompareConfig parse_compare_config(const json& doc) {
  CompareConfig cfg;
  try {
    const json train = doc.value("train", json::object());
    cfg.train.batch_size = train.value("batch_size", cfg.train.batch_size);
    cfg.train.max_epochs = train.value("max_epochs", cfg.train.max_epochs);
    cfg.train.learning_rate = train.value("learning_rate", cfg.train.learning_rate);
    cfg.train.patience = train.value("patience", cfg.train.patience);
    cfg.train.validation_fraction = train.value("validation_fraction", cfg.train.validation_fraction);
    cfg.train.seed = train.value("seed", cfg.train.seed);
    cfg.train.weights.intent = train.value("intent_weight", cfg.train.weights.intent);
    cfg.train.weights.tag = train.value("tag_weight", cfg.train.weights.tag);
    cfg.train.clip_norm = train.value("clip_norm", cfg.train.clip_norm);
    cfg.baseline_hidden = doc.value("baseline_hidden", cfg.baseline_hidden);
    cfg.s2s_mtl_hidden = doc.value("s2s_mtl_hidden", cfg.s2s_mtl_hidden);
    if (doc.contains("kinds")) {
      cfg.kinds.clear();
      for (const auto& k : doc["kinds"]) {
        const auto kind = arch_from_name(k.get<std::string>());
        if (!kind) throw Error(ErrorCode::InvalidArch, k.get<std::string>());
        cfg.kinds.push_back(*kind);
      }
    }
    if (doc.contains("corpus_seed")) cfg.corpus_seed = doc["corpus_seed"].get<std::uint64_t>();
    if (doc.contains("spec_hash")) cfg.spec_hash = doc["spec_hash"].get<std::string>();
    cfg.models_dir = doc.value("models_dir", std::string{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedSpec, std::string("compare config: ") + e.what());
  }
  validate(cfg.train);
  return cfg;
}

const ArchitectureResult* ComparisonReport::find(ArchKind kind) const {
  for (const auto& r : results) {
    if (r.arch.kind == kind) return &r;
  }
  return nullptr;
}

std::optional<double> ComparisonReport::size_ratio() const {
  const auto* mtl = find(ArchKind::MtlE2e);
  const auto* s2s = find(ArchKind::S2sMtl);
  if (!mtl || !s2s) return std::nullopt;
  return static_cast<double>(mtl->metrics.parameter_count) / static_cast<double>(s2s->metrics.parameter_count);
}

std::optional<double> ComparisonReport::hidden_ratio() const {
  const auto* mtl = find(ArchKind::MtlE2e);
  const auto* s2s = find(ArchKind::S2sMtl);
  if (!mtl || !s2s) return std::nullopt;
  return static_cast<double>(mtl->arch.hidden) / static_cast<double>(s2s->arch.hidden);
}

std::string corpus_hash(std::span<const LabeledSentence> corpus) {
  std::ostringstream ss;
  write_corpus(ss, corpus);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(spec_fingerprint(ss.str())));
  return buf;
}

ComparisonReport compare_architectures(std::span<const LabeledSentence> corpus, const CompareConfig& cfg,
                                       const CompareProgress& progress) {
  ComparisonReport report;
  report.corpus_size = corpus.size();
  report.corpus_hash = corpus_hash(corpus);
  report.corpus_seed = cfg.corpus_seed;
  report.spec_hash = cfg.spec_hash;

  const Split split = split_corpus(corpus.size(), cfg.train.validation_fraction, cfg.train.seed);
  std::vector<LabeledSentence> held_out;
  for (std::size_t i : split.validation) held_out.push_back(corpus[i]);
  report.validation_size = held_out.size();

  for (ArchKind kind : cfg.kinds) {
    const ArchSpec arch{kind, kind == ArchKind::S2sMtl ? cfg.s2s_mtl_hidden : cfg.baseline_hidden};
    const auto started = std::chrono::steady_clock::now();
    TrainResult trained = train(arch, corpus, cfg.train, [&](const EpochStats& s) {
      if (progress) progress(kind, s);
    });
    ArchitectureResult r;
    r.arch = arch;
    r.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    r.training = std::move(trained.report);
    // Scored with the weights as stored: 32-bit.
    const ParamStore stored = round_to_float(trained.params);
    r.metrics = evaluate(stored, arch, held_out);

    const std::size_t probes = std::min<std::size_t>(held_out.size(), 50);
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < probes; ++i) predict(stored, arch, held_out[i].text);
    r.latency_ms = probes == 0 ? 0.0
                               : std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                                         .count() / static_cast<double>(probes);
    if (!cfg.models_dir.empty()) {
      std::filesystem::create_directories(cfg.models_dir);
      save_model(trained.params, arch, std::filesystem::path(cfg.models_dir) / (std::string(arch_name(kind)) + ".bin"));
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

json metrics_to_json(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"intent_accuracy", opt(m.intent_accuracy)},
          {"intent_loss", opt(m.intent_loss)},
          {"tag_accuracy", opt(m.tag_accuracy)},
          {"tag_loss", opt(m.tag_loss)},
          {"free_running_tag_accuracy", opt(m.free_running_tag_accuracy)},
          {"examples", m.examples},
          {"tag_positions", m.tag_positions},
          {"parameter_count", m.parameter_count},
          {"model_bytes", m.model_bytes}};
}

json report_to_json(const ComparisonReport& report, bool include_timing) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json results = json::array();
  for (const auto& r : report.results) {
    json entry = {{"arch", std::string(arch_name(r.arch.kind))},
                  {"hidden", r.arch.hidden},
                  {"metrics", metrics_to_json(r.metrics)},
                  {"training",
                   {{"epochs_run", r.training.epochs.size()},
                    {"best_epoch", r.training.best_epoch},
                    {"early_stopped", r.training.early_stopped},
                    {"train_size", r.training.train_size},
                    {"validation_size", r.training.validation_size}}}};
    if (const auto ref = published_reference(r.arch.kind)) {
      auto delta = [](const std::optional<double>& ours, const std::optional<double>& theirs) {
        return ours && theirs ? json(*ours - *theirs) : json(nullptr);
      };
      entry["reference"] = {{"row", ref->row},
                        {"intent_accuracy", opt(ref->intent_accuracy)},
                        {"intent_loss", opt(ref->intent_loss)},
                        {"tag_accuracy", opt(ref->tag_accuracy)},
                        {"tag_loss", opt(ref->tag_loss)}};
      entry["delta"] = {{"intent_accuracy", delta(r.metrics.intent_accuracy, ref->intent_accuracy)},
                        {"intent_loss", delta(r.metrics.intent_loss, ref->intent_loss)},
                        {"tag_accuracy", delta(r.metrics.tag_accuracy, ref->tag_accuracy)},
                        {"tag_loss", delta(r.metrics.tag_loss, ref->tag_loss)}};
    } else {
      entry["reference"] = nullptr;
      entry["delta"] = nullptr;
    }
    if (include_timing) {
      json epochs = json::array();
      for (const auto& e : r.training.epochs) epochs.push_back(e.seconds);
      entry["timing"] = {{"train_seconds", r.train_seconds}, {"epoch_seconds", epochs}, {"latency_ms", r.latency_ms}};
    }
    results.push_back(std::move(entry));
  }
  json omitted = json::array();
  for (ArchKind k : kAllArchKinds) {
    if (!report.find(k)) omitted.push_back(std::string(arch_name(k)));
  }
  return {{"corpus",
           {{"size", report.corpus_size},
            {"hash", report.corpus_hash},
            {"seed", report.corpus_seed ? json(*report.corpus_seed) : json(nullptr)},
            {"spec_hash", report.spec_hash ? json(*report.spec_hash) : json(nullptr)},
            {"validation_size", report.validation_size}}},
          {"results", std::move(results)},
          {"omitted", std::move(omitted)},
          {"size_reduction",
           {{"parameter_ratio_mtl_e2e_over_s2s_mtl", opt(report.size_ratio())},
            {"hidden_ratio_mtl_e2e_over_s2s_mtl", opt(report.hidden_ratio())},
            {"published_stored_bytes", {{"mtl", "230MB"}, {"s2s_mtl", "9MB"}}},
            {"published_bytes_reproduced", false},
            {"note", "raw stored sizes are not reproduced: the published layer inventory is unknown"}}}};
}

std::string report_to_table(const ComparisonReport& report) {
  std::ostringstream out;
  auto cell = [](const std::optional<double>& v, int width) {
    char buf[32];
    if (v) {
      std::snprintf(buf, sizeof buf, "%*.4f", width, *v);
    } else {
      std::snprintf(buf, sizeof buf, "%*s", width, "--");
    }
    return std::string(buf);
  };
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %6s %10s %10s %10s %10s %10s %10s %12s\n", "arch", "hidden", "int.acc",
                "int.loss", "tag.acc", "tag.loss", "free.acc", "params", "bytes");
  out << line;
  for (const auto& r : report.results) {
    const auto& m = r.metrics;
    out << std::string(arch_name(r.arch.kind)).append(15 - std::min<std::size_t>(14, arch_name(r.arch.kind).size()), ' ');
    std::snprintf(line, sizeof line, "%6d", r.arch.hidden);
    out << line << ' ' << cell(m.intent_accuracy, 10) << ' ' << cell(m.intent_loss, 10) << ' '
        << cell(m.tag_accuracy, 10) << ' ' << cell(m.tag_loss, 10) << ' ' << cell(m.free_running_tag_accuracy, 10);
    std::snprintf(line, sizeof line, " %10zu %12zu\n", m.parameter_count, m.model_bytes);
    out << line;
    if (const auto ref = published_reference(r.arch.kind)) {
      std::snprintf(line, sizeof line, "  %-19s", ("(" + ref->row + ")").c_str());
      out << line << ' ' << cell(ref->intent_accuracy, 10) << ' ' << cell(ref->intent_loss, 10) << ' '
          << cell(ref->tag_accuracy, 10) << ' ' << cell(ref->tag_loss, 10) << '\n';
    }
  }
  if (const auto ratio = report.size_ratio()) {
    std::snprintf(line, sizeof line, "parameter ratio mtl-e2e / s2s-mtl: %.3f (hidden ratio %.1f)\n", *ratio,
                  *report.hidden_ratio());
    out << line;
  }
  out << "published stored sizes 230MB -> 9MB: not reproduced (layer inventory unknown)\n";
  return out.str();
}

}  // namespace nlim
