#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlim/encoding.hpp"
#include "nlim/optim.hpp"
#include "nlim/tensor.hpp"

namespace nlim {

enum class ArchKind { SingleIntent, E2eTagger, MtlE2e, S2sTagger, S2sMtl };

inline constexpr std::array<ArchKind, 5> kAllArchKinds = {ArchKind::SingleIntent, ArchKind::E2eTagger,
                                                          ArchKind::MtlE2e, ArchKind::S2sTagger, ArchKind::S2sMtl};

// CLI spelling: single-intent, e2e-tagger, mtl-e2e, s2s-tagger, s2s-mtl.
std::string_view arch_name(ArchKind kind);
std::optional<ArchKind> arch_from_name(std::string_view name);

bool has_intent_head(ArchKind kind);
bool has_tag_head(ArchKind kind);
bool is_seq2seq(ArchKind kind);

struct ArchSpec {
  ArchKind kind = ArchKind::S2sMtl;
  int hidden = 128;

  bool operator==(const ArchSpec&) const = default;
};

// Tensor inventory per kind (h = hidden):
//   enc.{W,U,b}      LSTM 128 -> h                     (all kinds)
//   tag.out.{W,b}    dense h -> 19, per character      (E2E_TAGGER, MTL_E2E)
//   cls.out.{W,b}    dense h -> 8                      (SINGLE_INTENT, MTL_E2E, S2S_MTL)
//   dec.{W,U,b}      LSTM 19 -> h, starts from encoder (S2S_TAGGER, S2S_MTL)
//   dec.out.{W,b}    dense h -> 19                     (S2S_TAGGER, S2S_MTL)
//   cls.{W,U,b}      LSTM h -> h over encoder outputs  (S2S_MTL)
std::vector<ParamSpec> param_specs(const ArchSpec& arch);
std::size_t parameter_count(const ArchSpec& arch);

ParamStore build(const ArchSpec& arch, std::uint64_t seed);

// Throws InvalidArch unless `params` holds exactly the tensors of `arch`.
void check_params(const ParamStore& params, const ArchSpec& arch);

struct LossWeights {
  double intent = 1.0;
  double tag = 1.0;
};

struct Losses {
  double intent = 0.0;  // unweighted mean cross-entropy
  double tag = 0.0;     // unweighted, mean over unmasked positions
  double total = 0.0;   // weighted sum
};

struct TrainStep {
  Losses losses;
  ParamStore grads;
};

// Teacher-forced pass. S2S decoders consume the gold decoder input and are
// scored against the decoder target (END included); E2E taggers are scored
// per character.
TrainStep forward_train(const ParamStore& params, const ArchSpec& arch, const Batch& batch,
                        const LossWeights& weights = {});
Losses forward_loss(const ParamStore& params, const ArchSpec& arch, const Batch& batch,
                    const LossWeights& weights = {});

// Raw teacher-forced outputs.
struct BatchOutputs {
  Matrix intent_logits;             // 8 x batch, empty without an intent head
  std::vector<Matrix> tag_logits;   // per step, 19 x batch; steps = maxLen (E2E) or maxLen+1 (S2S)
};

BatchOutputs forward_outputs(const ParamStore& params, const ArchSpec& arch, const Batch& batch);

// Tags a decoder or tagger may emit: S2S excludes START, E2E excludes START and END.
int decode_argmax(ArchKind kind, const Eigen::Ref<const Vector>& logits);

enum class HaltedBy { EndToken, LengthCap };

struct Prediction {
  std::optional<std::array<double, kIntentDim>> intent_probs;
  std::vector<Tag> tags;
  // E2E taggers always run to the end of the text and report LengthCap.
  HaltedBy halted_by = HaltedBy::LengthCap;

  std::optional<Intent> intent() const;
  double confidence() const;
};

// Greedy free-running prediction for every row of the batch.
std::vector<Prediction> predict_batch(const ParamStore& params, const ArchSpec& arch, const Batch& batch);

Prediction predict(const ParamStore& params, const ArchSpec& arch, std::string_view text);

}  // namespace nlim
