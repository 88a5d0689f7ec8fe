#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlim/models.hpp"
#include "nlim/training.hpp"

namespace nlim {

struct Metrics {
  std::optional<double> intent_accuracy;
  std::optional<double> intent_loss;
  // Teacher-forced for S2S kinds (decoder fed gold history, END position included).
  std::optional<double> tag_accuracy;
  std::optional<double> tag_loss;
  // Greedy decode compared position by position with the gold target.
  std::optional<double> free_running_tag_accuracy;
  std::size_t examples = 0;
  std::size_t tag_positions = 0;
  std::size_t parameter_count = 0;
  std::size_t model_bytes = 0;

  bool operator==(const Metrics&) const = default;
};

// Per-example model outputs that metrics are computed from.
struct ExampleOutputs {
  std::optional<std::array<double, kIntentDim>> intent_log_probs;
  std::vector<double> gold_tag_log_prob;  // teacher-forced log-probability of the gold tag, per target position
  std::vector<int> tag_argmax;        // teacher-forced prediction, per target position
  std::vector<int> free_running;      // greedy output, END appended when decoding halted on it
};

// Gold tag targets scored for `kind`: tags (E2E) or tags ++ END (S2S).
std::vector<int> tag_targets(ArchKind kind, const LabeledSentence& s);

std::vector<ExampleOutputs> run_model(const ParamStore& params, const ArchSpec& arch,
                                      std::span<const LabeledSentence> dataset, int batch_size = 64);

Metrics compute_metrics(ArchKind kind, std::span<const LabeledSentence> dataset,
                        std::span<const ExampleOutputs> outputs);

Metrics evaluate(const ParamStore& params, const ArchSpec& arch, std::span<const LabeledSentence> dataset);

struct PublishedReference {
  std::string row;
  std::optional<double> intent_accuracy, intent_loss, tag_accuracy, tag_loss;
};

// Published per-architecture figures, for delta display only.
std::optional<PublishedReference> published_reference(ArchKind kind);

struct CompareConfig {
  TrainConfig train;
  int baseline_hidden = 512;
  int s2s_mtl_hidden = 128;
  std::vector<ArchKind> kinds{kAllArchKinds.begin(), kAllArchKinds.end()};
  std::optional<std::uint64_t> corpus_seed;
  std::optional<std::string> spec_hash;
  std::string models_dir;  // when set, each trained model is saved there as <arch>.bin
};

CompareConfig parse_compare_config(const nlohmann::json& doc);

struct ArchitectureResult {
  ArchSpec arch;
  Metrics metrics;
  TrainReport training;
  double train_seconds = 0.0;
  double latency_ms = 0.0;  // mean single-sentence predict latency
};

struct ComparisonReport {
  std::vector<ArchitectureResult> results;
  std::size_t corpus_size = 0;
  std::string corpus_hash;
  std::optional<std::uint64_t> corpus_seed;
  std::optional<std::string> spec_hash;
  std::size_t validation_size = 0;

  const ArchitectureResult* find(ArchKind kind) const;
  // parameter_count(MTL_E2E) / parameter_count(S2S_MTL), when both were trained.
  std::optional<double> size_ratio() const;
  std::optional<double> hidden_ratio() const;
};

using CompareProgress = std::function<void(ArchKind, const EpochStats&)>;

ComparisonReport compare_architectures(std::span<const LabeledSentence> corpus, const CompareConfig& cfg,
                                       const CompareProgress& progress = {});

// Machine-readable report (schema in docs/report-schema.md). Timing fields are
// grouped under "timing" and omitted when include_timing is false.
nlohmann::json report_to_json(const ComparisonReport& report, bool include_timing = true);
std::string report_to_table(const ComparisonReport& report);

nlohmann::json metrics_to_json(const Metrics& m);
std::string corpus_hash(std::span<const LabeledSentence> corpus);

}  // namespace nlim
