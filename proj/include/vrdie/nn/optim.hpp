#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrdie/nn/tape.hpp"

namespace vrdie::nn {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Parameters sharing one set of hyperparameters (e.g. encoder vs GCN+head).
struct ParamGroup {
  std::string name;
  AdamHyper hyper;
  std::vector<Parameter*> params;
};

struct AdamState {
  std::vector<Tensor> first;   // one per parameter, flattened over groups
  std::vector<Tensor> second;
  std::size_t step = 0;
};

// One bias-corrected Adam update over every group, then zeroes the gradients.
// No warm-up: the learning rate is constant from the first step.
inline void adam_step(const std::vector<ParamGroup>& groups, AdamState& state) {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.params.size();
  if (state.first.empty()) {
    state.first.reserve(total);
    state.second.reserve(total);
    for (const auto& g : groups)
      for (const Parameter* p : g.params) {
        state.first.emplace_back(p->value.rows(), p->value.cols());
        state.second.emplace_back(p->value.rows(), p->value.cols());
      }
  }
  if (state.first.size() != total) throw std::logic_error("adam_step: parameter set changed between steps");
  ++state.step;
  const double t = static_cast<double>(state.step);
  std::size_t idx = 0;
  for (const auto& g : groups) {
    const AdamHyper& h = g.hyper;
    const double bc1 = 1.0 - std::pow(h.beta1, t);
    const double bc2 = 1.0 - std::pow(h.beta2, t);
    for (Parameter* p : g.params) {
      Tensor& m = state.first[idx];
      Tensor& v = state.second[idx];
      ++idx;
      if (!m.same_shape(p->value)) throw std::logic_error("adam_step: moment shape mismatch for " + p->name);
      if (!p->grad.same_shape(p->value)) {
        p->zero_grad();
        continue;
      }
      double* w = p->value.data();
      double* gr = p->grad.data();
      double* mm = m.data();
      double* vv = v.data();
      const std::size_t n = p->value.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double gi = gr[i];
        mm[i] = h.beta1 * mm[i] + (1.0 - h.beta1) * gi;
        vv[i] = h.beta2 * vv[i] + (1.0 - h.beta2) * gi * gi;
        const double mhat = mm[i] / bc1;
        const double vhat = vv[i] / bc2;
        w[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
        gr[i] = 0.0;
      }
    }
  }
}

class Adam {
 public:
  explicit Adam(std::vector<ParamGroup> groups) : groups_(std::move(groups)) {}
  void step() { adam_step(groups_, state_); }
  void zero_grad() {
    for (auto& g : groups_)
      for (const Parameter* p : g.params) p->zero_grad();
  }
  const AdamState& state() const { return state_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }

 private:
  std::vector<ParamGroup> groups_;
  AdamState state_;
};

}  // namespace vrdie::nn
