#include "nlim/tensor.hpp"

#include <cmath>
#include <numeric>

#include "nlim/error.hpp"

namespace nlim {

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  data.assign(n, 0.0);
}

MatrixMap Tensor::mat() { return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())}; }
ConstMatrixMap Tensor::mat() const {
  return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
}
VectorMap Tensor::vec() { return {data.data(), static_cast<Eigen::Index>(data.size())}; }
ConstVectorMap Tensor::vec() const { return {data.data(), static_cast<Eigen::Index>(data.size())}; }

std::size_t parameter_count(const ParamStore& store) {
  std::size_t n = 0;
  for (const auto& [name, t] : store) n += t.size();
  return n;
}

ParamStore zeros_like(const ParamStore& store) {
  ParamStore out;
  for (const auto& [name, t] : store) out.emplace(name, Tensor(t.shape));
  return out;
}

void axpy(ParamStore& a, const ParamStore& b, double scale) {
  if (a.size() != b.size()) throw Error(ErrorCode::NameMismatch, "stores differ in size");
  auto ia = a.begin();
  for (auto ib = b.begin(); ib != b.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.shape != ib->second.shape) {
      throw Error(ErrorCode::NameMismatch, ia->first + " vs " + ib->first);
    }
    ia->second.vec() += scale * ib->second.vec();
  }
}

double global_norm(const ParamStore& store) {
  double sq = 0.0;
  for (const auto& [name, t] : store) sq += t.vec().squaredNorm();
  return std::sqrt(sq);
}

const Tensor& param(const ParamStore& store, const std::string& name) {
  auto it = store.find(name);
  if (it == store.end()) throw Error(ErrorCode::NameMismatch, "missing tensor " + name);
  return it->second;
}

Tensor& param(ParamStore& store, const std::string& name) {
  auto it = store.find(name);
  if (it == store.end()) throw Error(ErrorCode::NameMismatch, "missing tensor " + name);
  return it->second;
}

}  // namespace nlim
