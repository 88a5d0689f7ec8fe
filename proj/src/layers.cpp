#include "nlim/layers.hpp"

#include <cmath>

#include "nlim/error.hpp"

namespace nlim {

namespace {

Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

void check_lstm(const LstmParams& p) {
  const auto h = p.U.cols();
  if (p.U.rows() != 4 * h || p.W.rows() != 4 * h || p.b.size() != 4 * h) {
    throw Error(ErrorCode::ShapeMismatch, "LSTM tensors are not 4h-stacked");
  }
}

// Finishes a cell given gate pre-activations (4h x B).
void cell_from_preactivations(const Matrix& pre, const Matrix& h_prev, const Matrix& c_prev, Eigen::Index hidden,
                              LstmCache& cache, Matrix& h, Matrix& c) {
  const auto B = pre.cols();
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.i = sigmoid(pre.topRows(hidden));
  cache.f = sigmoid(pre.middleRows(hidden, hidden));
  cache.g = pre.middleRows(2 * hidden, hidden).array().tanh().matrix();
  cache.o = sigmoid(pre.bottomRows(hidden));
  cache.c = (cache.f.array() * c_prev.array() + cache.i.array() * cache.g.array()).matrix();
  cache.tanh_c = cache.c.array().tanh().matrix();
  c = cache.c;
  h = (cache.o.array() * cache.tanh_c.array()).matrix();
  (void)B;
}

// Gradient with respect to the gate pre-activations, plus the carried cell gradient.
void cell_backward(const Matrix& dh, const Matrix& dc_in, const LstmCache& k, Eigen::Index hidden, Matrix& dgates,
                   Matrix& dc_prev) {
  const auto B = dh.cols();
  dgates.resize(4 * hidden, B);
  const auto one = 1.0;
  auto dc = (dc_in.array() + dh.array() * k.o.array() * (one - k.tanh_c.array().square())).eval();
  dgates.topRows(hidden) = (dc * k.g.array() * k.i.array() * (one - k.i.array())).matrix();
  dgates.middleRows(hidden, hidden) = (dc * k.c_prev.array() * k.f.array() * (one - k.f.array())).matrix();
  dgates.middleRows(2 * hidden, hidden) = (dc * k.i.array() * (one - k.g.array().square())).matrix();
  dgates.bottomRows(hidden) = (dh.array() * k.tanh_c.array() * k.o.array() * (one - k.o.array())).matrix();
  dc_prev = (dc * k.f.array()).matrix();
}

}  // namespace

LstmParams LstmParams::view(const ParamStore& store, const std::string& prefix) {
  const Tensor& W = param(store, prefix + ".W");
  const Tensor& U = param(store, prefix + ".U");
  const Tensor& b = param(store, prefix + ".b");
  LstmParams p{W.mat(), U.mat(), b.vec()};
  check_lstm(p);
  return p;
}

LstmGrads LstmGrads::view(ParamStore& store, const std::string& prefix) {
  return {param(store, prefix + ".W").mat(), param(store, prefix + ".U").mat(), param(store, prefix + ".b").vec()};
}

LstmCellOutput lstm_cell_forward(const Matrix& x, const Matrix& h, const Matrix& c, const LstmParams& p) {
  check_lstm(p);
  const auto hidden = p.hidden_size();
  if (x.rows() != p.input_size() || h.rows() != hidden || c.rows() != hidden || h.cols() != x.cols() ||
      c.cols() != x.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "lstm_cell_forward operand shapes");
  }
  Matrix pre = p.W * x + p.U * h;
  pre.colwise() += p.b;
  LstmCellOutput out;
  cell_from_preactivations(pre, h, c, hidden, out.cache, out.h, out.c);
  return out;
}

LstmCellGrads lstm_cell_backward(const Matrix& grad_h, const Matrix& grad_c, const Matrix& x, const LstmCache& cache,
                                 const LstmParams& p) {
  const auto hidden = p.hidden_size();
  if (grad_h.rows() != hidden || grad_c.rows() != hidden || grad_h.cols() != cache.h_prev.cols() ||
      x.rows() != p.input_size()) {
    throw Error(ErrorCode::ShapeMismatch, "lstm_cell_backward operand shapes");
  }
  Matrix dgates;
  LstmCellGrads g;
  cell_backward(grad_h, grad_c, cache, hidden, dgates, g.c);
  g.x = p.W.transpose() * dgates;
  g.h = p.U.transpose() * dgates;
  g.W = dgates * x.transpose();
  g.U = dgates * cache.h_prev.transpose();
  g.b = dgates.rowwise().sum();
  return g;
}

LstmRun lstm_sequence_forward(const LstmParams& p, const SequenceInput& input, const Matrix& h0, const Matrix& c0,
                              const StepMask& mask) {
  const auto hidden = p.hidden_size();
  const auto B = h0.cols();
  const std::size_t T = input.steps();
  if (mask.size() != T || h0.rows() != hidden || c0.rows() != hidden || c0.cols() != B) {
    throw Error(ErrorCode::ShapeMismatch, "lstm_sequence_forward operand shapes");
  }
  LstmRun run;
  run.outputs.reserve(T);
  run.caches.resize(T);
  Matrix h = h0;
  Matrix c = c0;
  Matrix pre(4 * hidden, B);
  Matrix h_new, c_new;
  for (std::size_t t = 0; t < T; ++t) {
    pre.noalias() = p.U * h;
    pre.colwise() += p.b;
    if (input.one_hot()) {
      const auto& ids = input.ids[t];
      for (Eigen::Index col = 0; col < B; ++col) pre.col(col) += p.W.col(ids[col]);
    } else {
      if (input.dense[t].rows() != p.input_size() || input.dense[t].cols() != B) {
        throw Error(ErrorCode::ShapeMismatch, "lstm_sequence_forward input shape");
      }
      pre.noalias() += p.W * input.dense[t];
    }
    cell_from_preactivations(pre, h, c, hidden, run.caches[t], h_new, c_new);
    const auto m = mask[t].transpose().array();
    if ((m == 1.0).all()) {
      h.swap(h_new);
      c.swap(c_new);
    } else {
      for (Eigen::Index col = 0; col < B; ++col) {
        if (m(col) != 0.0) {
          h.col(col) = h_new.col(col);
          c.col(col) = c_new.col(col);
        }
      }
    }
    run.outputs.push_back(h);
  }
  run.h_final = h;
  run.c_final = c;
  return run;
}

LstmSequenceGrads lstm_sequence_backward(const LstmParams& p, const SequenceInput& input, const LstmRun& run,
                                         std::span<const Matrix> grad_outputs, const Matrix& grad_h_final,
                                         const Matrix& grad_c_final, const StepMask& mask, LstmGrads grads) {
  const auto hidden = p.hidden_size();
  const std::size_t T = input.steps();
  const auto B = grad_h_final.cols();
  if (!grad_outputs.empty() && grad_outputs.size() != T) {
    throw Error(ErrorCode::ShapeMismatch, "grad_outputs step count");
  }
  LstmSequenceGrads out;
  if (!input.one_hot()) out.inputs.resize(T);
  Matrix dh_next = grad_h_final;
  Matrix dc_next = grad_c_final;
  Matrix dgates, dc_prev, dh;
  for (std::size_t t = T; t-- > 0;) {
    dh = dh_next;
    if (!grad_outputs.empty()) dh += grad_outputs[t];
    const auto& m = mask[t];
    const bool full = (m.array() == 1.0).all();
    Matrix dh_carry, dc_carry;
    Matrix dc = dc_next;
    if (!full) {
      const auto keep = m.transpose().replicate(hidden, 1).array();
      dh_carry = (dh.array() * (1.0 - keep)).matrix();
      dc_carry = (dc.array() * (1.0 - keep)).matrix();
      dh = (dh.array() * keep).matrix();
      dc = (dc.array() * keep).matrix();
    }
    const LstmCache& k = run.caches[t];
    cell_backward(dh, dc, k, hidden, dgates, dc_prev);
    grads.U.noalias() += dgates * k.h_prev.transpose();
    grads.b += dgates.rowwise().sum();
    if (input.one_hot()) {
      const auto& ids = input.ids[t];
      for (Eigen::Index col = 0; col < B; ++col) {
        if (m(col) != 0.0) grads.W.col(ids[col]) += dgates.col(col);
      }
    } else {
      grads.W.noalias() += dgates * input.dense[t].transpose();
      out.inputs[t].noalias() = p.W.transpose() * dgates;
    }
    dh_next.noalias() = p.U.transpose() * dgates;
    dc_next = dc_prev;
    if (!full) {
      dh_next += dh_carry;
      dc_next += dc_carry;
    }
  }
  out.h0 = std::move(dh_next);
  out.c0 = std::move(dc_next);
  return out;
}

Matrix dense_forward(const Matrix& x, const ConstMatrixMap& W, const ConstVectorMap& b) {
  if (x.rows() != W.cols() || b.size() != W.rows()) throw Error(ErrorCode::ShapeMismatch, "dense_forward");
  Matrix y = W * x;
  y.colwise() += b;
  return y;
}

Matrix dense_backward(const Matrix& grad_y, const Matrix& x, const ConstMatrixMap& W, MatrixMap gW, VectorMap gb) {
  if (grad_y.rows() != W.rows() || grad_y.cols() != x.cols() || x.rows() != W.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "dense_backward");
  }
  gW.noalias() += grad_y * x.transpose();
  gb += grad_y.rowwise().sum();
  return W.transpose() * grad_y;
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix p = logits.rowwise() - logits.colwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

XentResult softmax_xent(const Matrix& logits, std::span<const int> targets, std::span<const double> mask) {
  const auto k = logits.rows();
  const auto n = logits.cols();
  if (k < 2 || static_cast<std::size_t>(n) != targets.size() || targets.size() != mask.size()) {
    throw Error(ErrorCode::ShapeMismatch, "softmax_xent");
  }
  double total_mask = 0.0;
  for (double m : mask) total_mask += m;
  if (total_mask <= 0.0) throw Error(ErrorCode::AllMasked, "no unmasked rows");

  XentResult r;
  r.grad = Matrix::Zero(k, n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (mask[j] == 0.0) continue;
    const int y = targets[j];
    if (y < 0 || y >= k) throw Error(ErrorCode::OutOfRangeId, "target " + std::to_string(y));
    const double mx = logits.col(j).maxCoeff();
    const Vector e = (logits.col(j).array() - mx).exp().matrix();
    const double z = e.sum();
    loss += mask[j] * (std::log(z) - (logits(y, j) - mx));
    r.grad.col(j) = e / z * (mask[j] / total_mask);
    r.grad(y, j) -= mask[j] / total_mask;
  }
  r.loss = loss / total_mask;
  return r;
}

int argmax(const Eigen::Ref<const Vector>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace nlim
