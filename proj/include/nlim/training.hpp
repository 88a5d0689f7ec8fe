#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nlim/encoding.hpp"
#include "nlim/models.hpp"
#include "nlim/rng.hpp"

namespace nlim {

struct TrainConfig {
  int batch_size = 16;
  int max_epochs = 50;
  double learning_rate = 1e-3;
  // Validation loss on the desk-scale corpus is noisy epoch to epoch.
  int patience = 10;
  double validation_fraction = 0.2;
  std::uint64_t seed = 7;
  LossWeights weights;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 5.0;
};

void validate(const TrainConfig& cfg);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Seeded shuffle of 0..n-1; the first round(n * fraction) indices become the
// validation set.
Split split_corpus(std::size_t n, double validation_fraction, std::uint64_t seed);

struct EpochStats {
  int epoch = 0;  // 1-based
  Losses train;
  Losses validation;
  double validation_intent_accuracy = 0.0;  // teacher-forced; 0 without an intent head
  double validation_tag_accuracy = 0.0;     // teacher-forced; 0 without a tag head
  double seconds = 0.0;

  // Timing is excluded from equality.
  bool operator==(const EpochStats& o) const;
};

struct TrainReport {
  ArchSpec arch;
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  std::size_t parameter_count = 0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  bool early_stopped = false;

  bool operator==(const TrainReport&) const = default;
};

struct TrainResult {
  ParamStore params;  // from the best validation epoch
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Batches of at most `batch_size` rows. Rows are grouped by length within
// windows of the (already shuffled) order to limit padding.
std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order,
                                                   std::span<const LabeledSentence> corpus, int batch_size,
                                                   Rng* rng);

TrainResult train(const ArchSpec& arch, std::span<const LabeledSentence> corpus, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace nlim
