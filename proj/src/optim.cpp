#include "nlim/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nlim/error.hpp"
#include "nlim/rng.hpp"

namespace nlim {

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& st) {
  if (params.size() != grads.size()) throw Error(ErrorCode::NameMismatch, "params/grads differ in size");
  auto ig = grads.begin();
  for (auto ip = params.begin(); ip != params.end(); ++ip, ++ig) {
    if (ip->first != ig->first || ip->second.shape != ig->second.shape) {
      throw Error(ErrorCode::NameMismatch, ip->first + " vs " + ig->first);
    }
  }
  if (st.m.empty()) {
    st.m = zeros_like(params);
    st.v = zeros_like(params);
  }
  ++st.t;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  auto im = st.m.begin();
  auto iv = st.v.begin();
  ig = grads.begin();
  for (auto ip = params.begin(); ip != params.end(); ++ip, ++im, ++iv, ++ig) {
    auto p = ip->second.vec();
    auto m = im->second.vec();
    auto v = iv->second.vec();
    const auto g = ig->second.vec();
    m = st.beta1 * m + (1.0 - st.beta1) * g;
    v = st.beta2 * v + (1.0 - st.beta2) * g.cwiseAbs2();
    p.array() -= st.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + st.eps);
  }
}

ParamStore init_params(const std::vector<ParamSpec>& specs, std::uint64_t seed) {
  std::vector<const ParamSpec*> ordered;
  for (const auto& s : specs) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->name < b->name; });

  Rng rng(seed);
  ParamStore store;
  for (const ParamSpec* s : ordered) {
    Tensor t(s->shape);
    switch (s->init) {
      case ParamSpec::Init::Glorot: {
        const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
        for (double& x : t.data) x = rng.uniform(-bound, bound);
        break;
      }
      case ParamSpec::Init::Zero:
        break;
      case ParamSpec::Init::LstmBias: {
        const std::size_t h = t.size() / 4;
        std::fill(t.data.begin() + static_cast<std::ptrdiff_t>(h), t.data.begin() + static_cast<std::ptrdiff_t>(2 * h),
                  1.0);
        break;
      }
    }
    if (!store.emplace(s->name, std::move(t)).second) throw Error(ErrorCode::NameMismatch, "duplicate " + s->name);
  }
  return store;
}

GradCheckResult grad_check(const LossFn& loss, const ParamStore& params, double eps, std::size_t min_samples,
                           std::uint64_t seed, double abs_floor) {
  ParamStore analytic = zeros_like(params);
  loss(params, &analytic);

  // (name, flat index) pairs: every coordinate when the store is small,
  // otherwise a few per tensor plus a uniform sample of the rest.
  std::vector<std::pair<std::string, std::size_t>> coords;
  const std::size_t total = parameter_count(params);
  Rng rng(seed);
  if (total <= min_samples) {
    for (const auto& [name, t] : params) {
      for (std::size_t i = 0; i < t.size(); ++i) coords.emplace_back(name, i);
    }
  } else {
    constexpr std::size_t kPerTensor = 8;
    for (const auto& [name, t] : params) {
      for (std::size_t k = 0; k < std::min(kPerTensor, t.size()); ++k) coords.emplace_back(name, rng.below(t.size()));
    }
    while (coords.size() < min_samples) {
      std::uint64_t r = rng.below(total);
      for (const auto& [name, t] : params) {
        if (r < t.size()) {
          coords.emplace_back(name, static_cast<std::size_t>(r));
          break;
        }
        r -= t.size();
      }
    }
  }

  GradCheckResult result;
  ParamStore probe = params;
  for (const auto& [name, idx] : coords) {
    double& x = param(probe, name).data[idx];
    const double saved = x;
    x = saved + eps;
    const double up = loss(probe, nullptr);
    x = saved - eps;
    const double down = loss(probe, nullptr);
    x = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = param(analytic, name).data[idx];
    const double scale = std::max(std::abs(a), std::abs(numeric));
    const double diff = std::abs(a - numeric);
    // Central differences carry ~ulp(loss)/eps of rounding, so agreement to
    // within the floor is indistinguishable from exact.
    const double err = (scale < abs_floor || diff < abs_floor) ? diff : diff / scale;
    if (err > result.max_rel_error || result.checked == 0) {
      result.max_rel_error = err;
      result.worst_name = name;
      result.worst_index = idx;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace nlim
