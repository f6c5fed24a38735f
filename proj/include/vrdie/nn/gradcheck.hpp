#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vrdie/nn/rng.hpp"
#include "vrdie/nn/tape.hpp"

namespace vrdie::nn {

struct GradCheckOptions {
  double fd_eps = 1e-5;
  double tol = 1e-4;
  // Coordinates sampled per parameter; tensors at or below this size are checked exhaustively.
  std::size_t max_coords_per_param = 24;
  // Denominator floor so coordinates with vanishing gradient compare on absolute error.
  double magnitude_floor = 1e-6;
  std::uint64_t seed = 0;
  std::size_t report_worst = 5;
};

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed = true;
  std::vector<GradCheckEntry> worst;  // sorted, largest error first

  std::string summary() const {
    std::ostringstream os;
    os << (passed ? "PASS" : "FAIL") << " max_rel_error=" << max_rel_error << " over " << checked << " coords";
    for (const auto& w : worst)
      os << "\n  " << w.param << "[" << w.index << "] analytic=" << w.analytic << " numeric=" << w.numeric
         << " rel=" << w.rel_error;
    return os.str();
  }
};

// Compares analytic gradients of `loss_fn` against central finite differences
// (f(w+ε) − f(w−ε)) / 2ε. `loss_fn` builds the loss on the tape it is given and
// must be deterministic (dropout off).
inline GradCheckReport grad_check(const std::function<Var(Tape&)>& loss_fn, const std::vector<Parameter*>& params,
                                  const GradCheckOptions& opt = {}) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape(true);
    Var loss = loss_fn(tape);
    tape.backward(loss);
  }
  auto eval = [&]() {
    Tape tape(false);
    return loss_fn(tape).value()[0];
  };

  Rng rng(opt.seed);
  GradCheckReport report;
  std::vector<GradCheckEntry> all;
  for (Parameter* p : params) {
    const std::size_t n = p->value.size();
    std::vector<std::size_t> coords;
    if (n <= opt.max_coords_per_param) {
      for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (std::size_t i = 0; i < opt.max_coords_per_param; ++i) coords.push_back(rng.below(n));
    }
    for (std::size_t i : coords) {
      const double orig = p->value[i];
      p->value[i] = orig + opt.fd_eps;
      const double fp = eval();
      p->value[i] = orig - opt.fd_eps;
      const double fm = eval();
      p->value[i] = orig;
      const double numeric = (fp - fm) / (2.0 * opt.fd_eps);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), opt.magnitude_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      all.push_back({p->name, i, analytic, numeric, rel});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
    }
  }
  report.passed = report.max_rel_error <= opt.tol;
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.rel_error > b.rel_error; });
  all.resize(std::min(all.size(), opt.report_worst));
  report.worst = std::move(all);
  for (Parameter* p : params) p->zero_grad();
  return report;
}

}  // namespace vrdie::nn
