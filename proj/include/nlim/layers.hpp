#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlim/tensor.hpp"

namespace nlim {

// Batched activations are column-major: one column per batch row.

// Read-only view of an LSTM's tensors `<prefix>.W` (4h x in), `<prefix>.U`
// (4h x h) and `<prefix>.b` (4h). Gate blocks are stacked in the order
// input, forget, cell, output.
struct LstmParams {
  ConstMatrixMap W;
  ConstMatrixMap U;
  ConstVectorMap b;

  static LstmParams view(const ParamStore& store, const std::string& prefix);
  Eigen::Index input_size() const { return W.cols(); }
  Eigen::Index hidden_size() const { return U.cols(); }
};

struct LstmGrads {
  MatrixMap W;
  MatrixMap U;
  VectorMap b;

  static LstmGrads view(ParamStore& store, const std::string& prefix);
};

struct LstmCache {
  Matrix h_prev, c_prev;
  Matrix i, f, g, o;
  Matrix c, tanh_c;
};

struct LstmCellOutput {
  Matrix h;
  Matrix c;
  LstmCache cache;
};

LstmCellOutput lstm_cell_forward(const Matrix& x, const Matrix& h, const Matrix& c, const LstmParams& p);

struct LstmCellGrads {
  Matrix x, h, c;
  Matrix W, U;
  Vector b;
};

LstmCellGrads lstm_cell_backward(const Matrix& grad_h, const Matrix& grad_c, const Matrix& x,
                                 const LstmCache& cache, const LstmParams& p);

// Input sequence for an LSTM run: either one-hot ids (one per batch column,
// per step) or dense vectors (in x batch, per step).
struct SequenceInput {
  std::vector<std::vector<int>> ids;
  std::vector<Matrix> dense;

  bool one_hot() const { return !ids.empty(); }
  std::size_t steps() const { return one_hot() ? ids.size() : dense.size(); }
};

// Per step, per column: 1 for a real position, 0 for padding. Padded columns
// carry their state through unchanged, so the state after the last step is
// each row's state at its true length.
using StepMask = std::vector<Vector>;

struct LstmRun {
  std::vector<Matrix> outputs;  // h_t per step
  std::vector<LstmCache> caches;
  Matrix h_final, c_final;
};

LstmRun lstm_sequence_forward(const LstmParams& p, const SequenceInput& input, const Matrix& h0, const Matrix& c0,
                              const StepMask& mask);

struct LstmSequenceGrads {
  std::vector<Matrix> inputs;  // dense inputs only
  Matrix h0, c0;
};

// `grad_outputs` may be empty (no per-step loss) or hold one matrix per step.
LstmSequenceGrads lstm_sequence_backward(const LstmParams& p, const SequenceInput& input, const LstmRun& run,
                                         std::span<const Matrix> grad_outputs, const Matrix& grad_h_final,
                                         const Matrix& grad_c_final, const StepMask& mask, LstmGrads grads);

// y = W x + b, columnwise.
Matrix dense_forward(const Matrix& x, const ConstMatrixMap& W, const ConstVectorMap& b);

// Accumulates into gW/gb and returns the gradient with respect to x.
Matrix dense_backward(const Matrix& grad_y, const Matrix& x, const ConstMatrixMap& W, MatrixMap gW, VectorMap gb);

// Column-wise softmax with max subtraction.
Matrix softmax_columns(const Matrix& logits);

struct XentResult {
  double loss = 0.0;  // mean over masked columns
  Matrix grad;        // d loss / d logits
};

// logits: k x n (one column per example); targets and mask have n entries.
XentResult softmax_xent(const Matrix& logits, std::span<const int> targets, std::span<const double> mask);

// Lowest index wins ties.
int argmax(const Eigen::Ref<const Vector>& v);

}  // namespace nlim
