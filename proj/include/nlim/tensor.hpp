#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nlim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

// Dense row-major tensor of rank 1 or 2.
struct Tensor {
  std::vector<std::size_t> shape;
  // Aligned so that Eigen takes the same vectorized path for every tensor;
  // with plain malloc alignment, reductions could round differently between
  // otherwise identical runs.
  std::vector<double, Eigen::aligned_allocator<double>> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  MatrixMap mat();
  ConstMatrixMap mat() const;
  VectorMap vec();
  ConstVectorMap vec() const;

  bool operator==(const Tensor&) const = default;
};

// Ordered by name, so iteration order is lexicographic and deterministic.
using ParamStore = std::map<std::string, Tensor>;

std::size_t parameter_count(const ParamStore& store);

// Zero-filled store with the same names and shapes.
ParamStore zeros_like(const ParamStore& store);

// a += scale * b; name sets must match (NameMismatch otherwise).
void axpy(ParamStore& a, const ParamStore& b, double scale = 1.0);

double global_norm(const ParamStore& store);

const Tensor& param(const ParamStore& store, const std::string& name);
Tensor& param(ParamStore& store, const std::string& name);

}  // namespace nlim
