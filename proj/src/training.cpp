#include "nlim/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "nlim/error.hpp"
#include "nlim/layers.hpp"

namespace nlim {

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw Error(ErrorCode::InvalidArch, "batch size must be >= 1");
  if (cfg.max_epochs < 1) throw Error(ErrorCode::InvalidArch, "max epochs must be >= 1");
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArch, "validation fraction must lie in (0, 1)");
  }
  if (cfg.patience < 1) throw Error(ErrorCode::InvalidArch, "patience must be >= 1");
  if (!(cfg.weights.intent > 0.0 && cfg.weights.tag > 0.0)) {
    throw Error(ErrorCode::InvalidArch, "loss weights must be positive");
  }
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorCode::InvalidArch, "learning rate must be positive");
}

bool EpochStats::operator==(const EpochStats& o) const {
  auto same = [](const Losses& a, const Losses& b) {
    return a.intent == b.intent && a.tag == b.tag && a.total == b.total;
  };
  return epoch == o.epoch && same(train, o.train) && same(validation, o.validation) &&
         validation_intent_accuracy == o.validation_intent_accuracy &&
         validation_tag_accuracy == o.validation_tag_accuracy;
}

Split split_corpus(std::size_t n, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed ^ 0x5eed5011ULL);
  rng.shuffle(order);
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * validation_fraction));
  Split s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  return s;
}

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order,
                                                   std::span<const LabeledSentence> corpus, int batch_size,
                                                   Rng* rng) {
  const std::size_t bs = static_cast<std::size_t>(batch_size);
  const std::size_t window = bs * 20;
  for (std::size_t start = 0; start < order.size(); start += window) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + window));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return corpus[a].text.size() < corpus[b].text.size();
    });
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + bs)));
  }
  if (rng != nullptr) rng->shuffle(batches);
  return batches;
}

namespace {

struct ValidationPass {
  Losses losses;
  double intent_accuracy = 0.0;
  double tag_accuracy = 0.0;
};

ValidationPass run_validation(const ParamStore& params, const ArchSpec& arch, std::span<const LabeledSentence> corpus,
                              const std::vector<std::vector<std::size_t>>& batches, const LossWeights& w) {
  ValidationPass v;
  double intent_loss = 0.0, tag_loss = 0.0, tag_positions = 0.0;
  double intent_hits = 0.0, tag_hits = 0.0, examples = 0.0;
  for (const auto& idx : batches) {
    const Batch batch = make_batch(corpus, idx);
    const BatchOutputs out = forward_outputs(params, arch, batch);
    const int B = batch.size();
    if (has_intent_head(arch.kind)) {
      const std::vector<double> ones(B, 1.0);
      intent_loss += softmax_xent(out.intent_logits, batch.intents, ones).loss * B;
      for (int r = 0; r < B; ++r) intent_hits += argmax(out.intent_logits.col(r)) == batch.intents[r];
    }
    if (has_tag_head(arch.kind)) {
      const IndexMatrix& target = is_seq2seq(arch.kind) ? batch.decoder_target : batch.tags;
      const int extra = is_seq2seq(arch.kind) ? 1 : 0;
      for (std::size_t t = 0; t < out.tag_logits.size(); ++t) {
        const Matrix p = softmax_columns(out.tag_logits[t]);
        for (int r = 0; r < B; ++r) {
          if (static_cast<int>(t) >= batch.lengths[r] + extra) continue;
          const int y = target(r, static_cast<int>(t));
          tag_loss -= std::log(p(y, r));
          tag_hits += decode_argmax(arch.kind, out.tag_logits[t].col(r)) == y;
          tag_positions += 1.0;
        }
      }
    }
    examples += B;
  }
  if (has_intent_head(arch.kind)) {
    v.losses.intent = intent_loss / examples;
    v.intent_accuracy = intent_hits / examples;
  }
  if (has_tag_head(arch.kind)) {
    v.losses.tag = tag_loss / tag_positions;
    v.tag_accuracy = tag_hits / tag_positions;
  }
  v.losses.total = (has_intent_head(arch.kind) ? w.intent * v.losses.intent : 0.0) +
                   (has_tag_head(arch.kind) ? w.tag * v.losses.tag : 0.0);
  return v;
}

}  // namespace

TrainResult train(const ArchSpec& arch, std::span<const LabeledSentence> corpus, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  validate(cfg);
  if (corpus.size() < 10) {
    throw Error(ErrorCode::CorpusTooSmall, "need at least 10 examples, got " + std::to_string(corpus.size()));
  }
  const Split split = split_corpus(corpus.size(), cfg.validation_fraction, cfg.seed);
  const auto val_batches = make_batches(split.validation, corpus, cfg.batch_size, nullptr);

  TrainResult result;
  result.params = build(arch, cfg.seed);
  result.report.arch = arch;
  result.report.parameter_count = parameter_count(result.params);
  result.report.train_size = split.train.size();
  result.report.validation_size = split.validation.size();

  ParamStore params = result.params;
  AdamState adam;
  adam.lr = cfg.learning_rate;
  Rng rng(cfg.seed ^ 0xba7c4e5ULL);
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<std::size_t> order = split.train;
    rng.shuffle(order);
    const auto batches = make_batches(std::move(order), corpus, cfg.batch_size, &rng);

    EpochStats stats;
    stats.epoch = epoch;
    double seen = 0.0;
    for (const auto& idx : batches) {
      const Batch batch = make_batch(corpus, idx);
      TrainStep step = forward_train(params, arch, batch, cfg.weights);
      if (cfg.clip_norm > 0.0) {
        const double norm = global_norm(step.grads);
        if (norm > cfg.clip_norm) {
          for (auto& [name, t] : step.grads) t.vec() *= cfg.clip_norm / norm;
        }
      }
      adam_step(params, step.grads, adam);
      const double n = static_cast<double>(idx.size());
      stats.train.intent += step.losses.intent * n;
      stats.train.tag += step.losses.tag * n;
      stats.train.total += step.losses.total * n;
      seen += n;
    }
    stats.train.intent /= seen;
    stats.train.tag /= seen;
    stats.train.total /= seen;

    const ValidationPass v = run_validation(params, arch, corpus, val_batches, cfg.weights);
    stats.validation = v.losses;
    stats.validation_intent_accuracy = v.intent_accuracy;
    stats.validation_tag_accuracy = v.tag_accuracy;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (v.losses.total < best) {
      best = v.losses.total;
      since_best = 0;
      result.params = params;
      result.report.best_epoch = epoch;
    } else if (++since_best >= cfg.patience) {
      result.report.early_stopped = epoch < cfg.max_epochs;
      break;
    }
  }
  return result;
}

}  // namespace nlim
