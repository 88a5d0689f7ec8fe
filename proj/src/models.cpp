#include "nlim/models.hpp"

#include <algorithm>
#include <cmath>

#include "nlim/error.hpp"
#include "nlim/layers.hpp"

namespace nlim {

std::string_view arch_name(ArchKind kind) {
  switch (kind) {
    case ArchKind::SingleIntent: return "single-intent";
    case ArchKind::E2eTagger: return "e2e-tagger";
    case ArchKind::MtlE2e: return "mtl-e2e";
    case ArchKind::S2sTagger: return "s2s-tagger";
    case ArchKind::S2sMtl: return "s2s-mtl";
  }
  return "?";
}

std::optional<ArchKind> arch_from_name(std::string_view name) {
  for (ArchKind k : kAllArchKinds) {
    if (arch_name(k) == name) return k;
  }
  return std::nullopt;
}

bool has_intent_head(ArchKind kind) {
  return kind == ArchKind::SingleIntent || kind == ArchKind::MtlE2e || kind == ArchKind::S2sMtl;
}
bool has_tag_head(ArchKind kind) { return kind != ArchKind::SingleIntent; }
bool is_seq2seq(ArchKind kind) { return kind == ArchKind::S2sTagger || kind == ArchKind::S2sMtl; }

std::vector<ParamSpec> param_specs(const ArchSpec& arch) {
  if (arch.hidden < 8) throw Error(ErrorCode::InvalidArch, "hidden must be >= 8");
  const auto h = static_cast<std::size_t>(arch.hidden);
  using Init = ParamSpec::Init;
  std::vector<ParamSpec> specs;
  auto lstm = [&](const std::string& prefix, std::size_t in) {
    specs.push_back({prefix + ".W", {4 * h, in}, Init::Glorot});
    specs.push_back({prefix + ".U", {4 * h, h}, Init::Glorot});
    specs.push_back({prefix + ".b", {4 * h}, Init::LstmBias});
  };
  auto dense = [&](const std::string& prefix, std::size_t out) {
    specs.push_back({prefix + ".W", {out, h}, Init::Glorot});
    specs.push_back({prefix + ".b", {out}, Init::Zero});
  };
  lstm("enc", kCharDim);
  switch (arch.kind) {
    case ArchKind::SingleIntent:
      dense("cls.out", kIntentDim);
      break;
    case ArchKind::E2eTagger:
      dense("tag.out", kTagDim);
      break;
    case ArchKind::MtlE2e:
      dense("tag.out", kTagDim);
      dense("cls.out", kIntentDim);
      break;
    case ArchKind::S2sTagger:
      lstm("dec", kTagDim);
      dense("dec.out", kTagDim);
      break;
    case ArchKind::S2sMtl:
      lstm("dec", kTagDim);
      dense("dec.out", kTagDim);
      lstm("cls", h);
      dense("cls.out", kIntentDim);
      break;
  }
  return specs;
}

std::size_t parameter_count(const ArchSpec& arch) {
  std::size_t n = 0;
  for (const auto& s : param_specs(arch)) {
    std::size_t k = 1;
    for (auto d : s.shape) k *= d;
    n += k;
  }
  return n;
}

ParamStore build(const ArchSpec& arch, std::uint64_t seed) { return init_params(param_specs(arch), seed); }

void check_params(const ParamStore& params, const ArchSpec& arch) {
  const auto specs = param_specs(arch);
  if (specs.size() != params.size()) {
    throw Error(ErrorCode::InvalidArch, "expected " + std::to_string(specs.size()) + " tensors for " +
                                            std::string(arch_name(arch.kind)) + ", got " +
                                            std::to_string(params.size()));
  }
  for (const auto& s : specs) {
    auto it = params.find(s.name);
    if (it == params.end()) throw Error(ErrorCode::InvalidArch, "missing tensor " + s.name);
    if (it->second.shape != s.shape) throw Error(ErrorCode::InvalidArch, "shape of " + s.name);
  }
}

namespace {

struct Forward {
  int batch = 0;
  int steps = 0;  // tag-head steps
  SequenceInput enc_in;
  StepMask enc_mask;
  LstmRun enc;
  SequenceInput dec_in;
  StepMask dec_mask;
  LstmRun dec;
  SequenceInput cls_in;
  LstmRun cls;
  Matrix tag_hidden;  // h x (steps * batch), column t*batch + row
  Matrix tag_logits;
  std::vector<int> tag_targets;
  std::vector<double> tag_mask;
  Matrix intent_logits;
};

ConstMatrixMap wmat(const ParamStore& p, const std::string& name) { return param(p, name).mat(); }
ConstVectorMap wvec(const ParamStore& p, const std::string& name) { return param(p, name).vec(); }

std::string tag_head(ArchKind kind) { return is_seq2seq(kind) ? "dec.out" : "tag.out"; }

SequenceInput one_hot_steps(const IndexMatrix& m, int steps) {
  SequenceInput in;
  in.ids.assign(steps, std::vector<int>(m.rows));
  for (int t = 0; t < steps; ++t) {
    for (int r = 0; r < m.rows; ++r) in.ids[t][r] = m(r, t);
  }
  return in;
}

// Seq2seq encoders read each row back to front, so the first characters, whose
// tags the decoder emits first, are the most recent input when decoding starts.
SequenceInput encoder_steps(ArchKind kind, const Batch& b) {
  SequenceInput in = one_hot_steps(b.chars, b.max_len());
  if (!is_seq2seq(kind)) return in;
  for (int r = 0; r < b.size(); ++r) {
    const int len = b.lengths[r];
    for (int t = 0; t < len; ++t) in.ids[t][r] = b.chars(r, len - 1 - t);
  }
  return in;
}

StepMask step_mask(const Batch& b, int steps, int extra) {
  StepMask mask(steps, Vector::Zero(b.size()));
  for (int t = 0; t < steps; ++t) {
    for (int r = 0; r < b.size(); ++r) mask[t](r) = t < b.lengths[r] + extra ? 1.0 : 0.0;
  }
  return mask;
}

Forward run_forward(const ParamStore& params, const ArchSpec& arch, const Batch& batch) {
  check_params(params, arch);
  const int B = batch.size();
  const int T = batch.max_len();
  const Eigen::Index h = arch.hidden;
  Forward f;
  f.batch = B;

  f.enc_in = encoder_steps(arch.kind, batch);
  f.enc_mask = step_mask(batch, T, 0);
  const Matrix zero = Matrix::Zero(h, B);
  f.enc = lstm_sequence_forward(LstmParams::view(params, "enc"), f.enc_in, zero, zero, f.enc_mask);

  const std::vector<Matrix>* tag_source = nullptr;
  const IndexMatrix* targets = nullptr;
  const StepMask* mask = nullptr;
  if (is_seq2seq(arch.kind)) {
    f.steps = T + 1;
    f.dec_in = one_hot_steps(batch.decoder_input, f.steps);
    f.dec_mask = step_mask(batch, f.steps, 1);
    f.dec = lstm_sequence_forward(LstmParams::view(params, "dec"), f.dec_in, f.enc.h_final, f.enc.c_final,
                                  f.dec_mask);
    tag_source = &f.dec.outputs;
    targets = &batch.decoder_target;
    mask = &f.dec_mask;
  } else if (has_tag_head(arch.kind)) {
    f.steps = T;
    tag_source = &f.enc.outputs;
    targets = &batch.tags;
    mask = &f.enc_mask;
  }

  if (tag_source != nullptr) {
    f.tag_hidden.resize(h, static_cast<Eigen::Index>(f.steps) * B);
    f.tag_targets.resize(static_cast<std::size_t>(f.steps) * B);
    f.tag_mask.resize(f.tag_targets.size());
    for (int t = 0; t < f.steps; ++t) {
      f.tag_hidden.middleCols(static_cast<Eigen::Index>(t) * B, B) = (*tag_source)[t];
      for (int r = 0; r < B; ++r) {
        f.tag_targets[static_cast<std::size_t>(t) * B + r] = (*targets)(r, t);
        f.tag_mask[static_cast<std::size_t>(t) * B + r] = (*mask)[t](r);
      }
    }
    const std::string head = tag_head(arch.kind);
    f.tag_logits = dense_forward(f.tag_hidden, wmat(params, head + ".W"), wvec(params, head + ".b"));
  }

  if (arch.kind == ArchKind::S2sMtl) {
    f.cls_in.dense = f.enc.outputs;
    f.cls = lstm_sequence_forward(LstmParams::view(params, "cls"), f.cls_in, f.enc.h_final, f.enc.c_final,
                                  f.enc_mask);
    f.intent_logits = dense_forward(f.cls.h_final, wmat(params, "cls.out.W"), wvec(params, "cls.out.b"));
  } else if (has_intent_head(arch.kind)) {
    f.intent_logits = dense_forward(f.enc.h_final, wmat(params, "cls.out.W"), wvec(params, "cls.out.b"));
  }
  return f;
}

Losses losses_of(const Forward& f, const ArchSpec& arch, const Batch& batch, const LossWeights& w,
                 XentResult* tag_res, XentResult* intent_res) {
  Losses l;
  if (has_tag_head(arch.kind)) {
    auto r = softmax_xent(f.tag_logits, f.tag_targets, f.tag_mask);
    l.tag = r.loss;
    if (tag_res) *tag_res = std::move(r);
  }
  if (has_intent_head(arch.kind)) {
    const std::vector<double> ones(batch.size(), 1.0);
    auto r = softmax_xent(f.intent_logits, batch.intents, ones);
    l.intent = r.loss;
    if (intent_res) *intent_res = std::move(r);
  }
  l.total = (has_intent_head(arch.kind) ? w.intent * l.intent : 0.0) + (has_tag_head(arch.kind) ? w.tag * l.tag : 0.0);
  return l;
}

}  // namespace

TrainStep forward_train(const ParamStore& params, const ArchSpec& arch, const Batch& batch,
                        const LossWeights& weights) {
  const Forward f = run_forward(params, arch, batch);
  XentResult tag_res, intent_res;
  TrainStep step;
  step.losses = losses_of(f, arch, batch, weights, &tag_res, &intent_res);
  step.grads = zeros_like(params);
  ParamStore& g = step.grads;
  const int B = f.batch;
  const Eigen::Index h = arch.hidden;

  // Gradients arriving at the encoder.
  std::vector<Matrix> enc_grad_out;
  Matrix enc_dh = Matrix::Zero(h, B);
  Matrix enc_dc = Matrix::Zero(h, B);

  if (has_tag_head(arch.kind)) {
    const std::string head = tag_head(arch.kind);
    const Matrix dlogits = weights.tag * tag_res.grad;
    const Matrix dhidden = dense_backward(dlogits, f.tag_hidden, wmat(params, head + ".W"),
                                          param(g, head + ".W").mat(), param(g, head + ".b").vec());
    std::vector<Matrix> grad_out(f.steps);
    for (int t = 0; t < f.steps; ++t) grad_out[t] = dhidden.middleCols(static_cast<Eigen::Index>(t) * B, B);
    if (is_seq2seq(arch.kind)) {
      const Matrix zero = Matrix::Zero(h, B);
      auto dg = lstm_sequence_backward(LstmParams::view(params, "dec"), f.dec_in, f.dec, grad_out, zero, zero,
                                       f.dec_mask, LstmGrads::view(g, "dec"));
      enc_dh += dg.h0;
      enc_dc += dg.c0;
    } else {
      enc_grad_out = std::move(grad_out);
    }
  }

  if (has_intent_head(arch.kind)) {
    const Matrix dlogits = weights.intent * intent_res.grad;
    const Matrix& state = arch.kind == ArchKind::S2sMtl ? f.cls.h_final : f.enc.h_final;
    const Matrix dstate = dense_backward(dlogits, state, wmat(params, "cls.out.W"), param(g, "cls.out.W").mat(),
                                         param(g, "cls.out.b").vec());
    if (arch.kind == ArchKind::S2sMtl) {
      const Matrix zero = Matrix::Zero(h, B);
      auto cg = lstm_sequence_backward(LstmParams::view(params, "cls"), f.cls_in, f.cls, {}, dstate, zero,
                                       f.enc_mask, LstmGrads::view(g, "cls"));
      enc_dh += cg.h0;
      enc_dc += cg.c0;
      if (enc_grad_out.empty()) {
        enc_grad_out = std::move(cg.inputs);
      } else {
        for (std::size_t t = 0; t < enc_grad_out.size(); ++t) enc_grad_out[t] += cg.inputs[t];
      }
    } else {
      enc_dh += dstate;
    }
  }

  lstm_sequence_backward(LstmParams::view(params, "enc"), f.enc_in, f.enc, enc_grad_out, enc_dh, enc_dc, f.enc_mask,
                         LstmGrads::view(g, "enc"));
  return step;
}

Losses forward_loss(const ParamStore& params, const ArchSpec& arch, const Batch& batch, const LossWeights& weights) {
  const Forward f = run_forward(params, arch, batch);
  return losses_of(f, arch, batch, weights, nullptr, nullptr);
}

BatchOutputs forward_outputs(const ParamStore& params, const ArchSpec& arch, const Batch& batch) {
  const Forward f = run_forward(params, arch, batch);
  BatchOutputs out;
  out.intent_logits = f.intent_logits;
  for (int t = 0; t < f.steps; ++t) {
    out.tag_logits.push_back(f.tag_logits.middleCols(static_cast<Eigen::Index>(t) * f.batch, f.batch));
  }
  return out;
}

int decode_argmax(ArchKind kind, const Eigen::Ref<const Vector>& logits) {
  const int first = is_seq2seq(kind) ? static_cast<int>(Tag::End) : static_cast<int>(Tag::None);
  int best = first;
  for (int i = first + 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = i;
  }
  return best;
}

std::optional<Intent> Prediction::intent() const {
  if (!intent_probs) return std::nullopt;
  const auto& p = *intent_probs;
  return static_cast<Intent>(std::distance(p.begin(), std::max_element(p.begin(), p.end())));
}

double Prediction::confidence() const {
  if (!intent_probs) return 0.0;
  return *std::max_element(intent_probs->begin(), intent_probs->end());
}

std::vector<Prediction> predict_batch(const ParamStore& params, const ArchSpec& arch, const Batch& batch) {
  check_params(params, arch);
  const int B = batch.size();
  const int T = batch.max_len();
  const Eigen::Index h = arch.hidden;
  std::vector<Prediction> preds(B);

  const SequenceInput enc_in = encoder_steps(arch.kind, batch);
  const StepMask enc_mask = step_mask(batch, T, 0);
  const Matrix zero = Matrix::Zero(h, B);
  const LstmRun enc = lstm_sequence_forward(LstmParams::view(params, "enc"), enc_in, zero, zero, enc_mask);

  if (has_intent_head(arch.kind)) {
    Matrix state = enc.h_final;
    if (arch.kind == ArchKind::S2sMtl) {
      SequenceInput cls_in;
      cls_in.dense = enc.outputs;
      state = lstm_sequence_forward(LstmParams::view(params, "cls"), cls_in, enc.h_final, enc.c_final, enc_mask)
                  .h_final;
    }
    const Matrix probs =
        softmax_columns(dense_forward(state, wmat(params, "cls.out.W"), wvec(params, "cls.out.b")));
    for (int r = 0; r < B; ++r) {
      std::array<double, kIntentDim> p{};
      for (int k = 0; k < kIntentDim; ++k) p[k] = probs(k, r);
      preds[r].intent_probs = p;
    }
  }

  if (arch.kind == ArchKind::E2eTagger || arch.kind == ArchKind::MtlE2e) {
    const auto W = wmat(params, "tag.out.W");
    const auto b = wvec(params, "tag.out.b");
    for (int t = 0; t < T; ++t) {
      const Matrix logits = dense_forward(enc.outputs[t], W, b);
      for (int r = 0; r < B; ++r) {
        if (t < batch.lengths[r]) preds[r].tags.push_back(static_cast<Tag>(decode_argmax(arch.kind, logits.col(r))));
      }
    }
  } else if (is_seq2seq(arch.kind)) {
    const LstmParams dec = LstmParams::view(params, "dec");
    const auto W = wmat(params, "dec.out.W");
    const auto b = wvec(params, "dec.out.b");
    Matrix hs = enc.h_final;
    Matrix cs = enc.c_final;
    std::vector<int> prev(B, static_cast<int>(Tag::Start));
    std::vector<bool> done(B, false);
    int active = B;
    // At most |text| tags; the extra step lets a complete sequence end with END.
    for (int step = 0; step <= T && active > 0; ++step) {
      SequenceInput in;
      in.ids = {prev};
      StepMask m(1, Vector::Zero(B));
      for (int r = 0; r < B; ++r) m[0](r) = done[r] ? 0.0 : 1.0;
      LstmRun run = lstm_sequence_forward(dec, in, hs, cs, m);
      hs = std::move(run.h_final);
      cs = std::move(run.c_final);
      const Matrix logits = dense_forward(hs, W, b);
      for (int r = 0; r < B; ++r) {
        if (done[r]) continue;
        const int a = decode_argmax(arch.kind, logits.col(r));
        if (a == static_cast<int>(Tag::End)) {
          preds[r].halted_by = HaltedBy::EndToken;
          done[r] = true;
        } else if (static_cast<int>(preds[r].tags.size()) == batch.lengths[r]) {
          preds[r].halted_by = HaltedBy::LengthCap;
          done[r] = true;
        } else {
          preds[r].tags.push_back(static_cast<Tag>(a));
          prev[r] = a;
        }
        if (done[r]) --active;
      }
    }
  }
  return preds;
}

Prediction predict(const ParamStore& params, const ArchSpec& arch, std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::ShapeMismatch, "empty text");
  encode_chars(text);
  LabeledSentence s;
  s.text = std::string(text);
  s.tags.assign(s.text.size(), Tag::None);
  const LabeledSentence one[] = {s};
  return predict_batch(params, arch, make_batch(one)).front();
}

}  // namespace nlim
