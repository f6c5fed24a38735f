#pragma once

#include <string>
#include <vector>

#include "vrdie/nn/rng.hpp"
#include "vrdie/nn/tape.hpp"

namespace vrdie::nn {

inline Parameter normal_param(std::string name, std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Tensor t(rows, cols);
  for (double& v : t.values()) v = stddev * rng.normal();
  return Parameter(std::move(name), std::move(t));
}

inline Parameter const_param(std::string name, std::size_t rows, std::size_t cols, double value) {
  return Parameter(std::move(name), Tensor(rows, cols, value));
}

// Collects pointers to every parameter a module exposes through visit().
template <class Module>
std::vector<Parameter*> parameters_of(Module& m) {
  std::vector<Parameter*> out;
  m.visit([&](Parameter& p) { out.push_back(&p); });
  return out;
}

template <class Module>
std::size_t parameter_count(Module& m) {
  std::size_t n = 0;
  m.visit([&](Parameter& p) { n += p.value.size(); });
  return n;
}

}  // namespace vrdie::nn
