#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrdie/docmodel/types.hpp"
#include "vrdie/nn/module.hpp"
#include "vrdie/nn/rng.hpp"
#include "vrdie/nn/tape.hpp"

namespace testutil {

using vrdie::nn::Parameter;
using vrdie::nn::Rng;
using vrdie::nn::Tensor;

inline Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t(r, c);
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

// Values bounded away from zero, for ops with a kink at 0.
inline Tensor nudged_tensor(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (double& v : t.values()) {
    v = rng.normal();
    if (std::abs(v) < 0.05) v = v < 0 ? -0.05 - rng.uniform() * 0.1 : 0.05 + rng.uniform() * 0.1;
  }
  return t;
}

inline vrdie::doc::TextBox box(int id, std::string text, double x0, double y0, double x1, double y1,
                               std::string font = "Arial", double size = 10.0) {
  vrdie::doc::TextBox b;
  b.box_id = id;
  b.text = std::move(text);
  b.x0 = x0;
  b.y0 = y0;
  b.x1 = x1;
  b.y1 = y1;
  b.font_name = std::move(font);
  b.font_size = size;
  return b;
}

inline vrdie::doc::Page page_of(std::vector<vrdie::doc::TextBox> boxes, double w = 600, double h = 800) {
  vrdie::doc::Page p;
  p.page_no = 0;
  p.width = w;
  p.height = h;
  p.boxes = std::move(boxes);
  return p;
}

}  // namespace testutil
