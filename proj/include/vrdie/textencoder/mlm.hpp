#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vrdie/textencoder/encoder.hpp"

namespace vrdie::enc {

struct MaskResult {
  std::vector<int> ids;                // input with replacements applied
  std::vector<std::size_t> positions;  // selected positions, ascending
  std::vector<int> originals;          // original id at each selected position
};

inline bool is_special(int id) { return id == doc::kPad || id == doc::kCls || id == doc::kSep || id == doc::kMask; }

// Each non-special position is selected with probability mask_ratio; a
// selected token becomes [MASK] 80% of the time, a random corpus token 10%,
// and stays unchanged 10%. The pattern is a pure function of `seed`.
inline MaskResult dynamic_mask(const std::vector<int>& ids, std::uint64_t seed, std::size_t vocab_size,
                               double mask_ratio = 0.15) {
  if (mask_ratio < 0.0 || mask_ratio > 1.0) throw std::invalid_argument("dynamic_mask: mask_ratio must be in [0,1]");
  Rng rng(seed);
  MaskResult r;
  r.ids = ids;
  const auto first = static_cast<std::uint64_t>(doc::kNumReserved);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (is_special(ids[i])) continue;
    if (!(rng.uniform() < mask_ratio)) continue;
    r.positions.push_back(i);
    r.originals.push_back(ids[i]);
    const double u = rng.uniform();
    if (u < 0.8) {
      r.ids[i] = doc::kMask;
    } else if (u < 0.9) {
      r.ids[i] = vocab_size > first ? static_cast<int>(first + rng.below(vocab_size - first)) : doc::kUnk;
    }
  }
  return r;
}

// dense -> gelu -> layer norm -> vocabulary projection
class MlmHead {
 public:
  MlmHead() = default;
  MlmHead(std::size_t dim, std::size_t vocab_size, std::uint64_t seed) {
    Rng rng(seed);
    dense_w_ = nn::normal_param("mlm.dense_w", dim, dim, 0.02, rng);
    dense_b_ = nn::const_param("mlm.dense_b", 1, dim, 0.0);
    ln_g_ = nn::const_param("mlm.ln_g", 1, dim, 1.0);
    ln_b_ = nn::const_param("mlm.ln_b", 1, dim, 0.0);
    dec_w_ = nn::normal_param("mlm.dec_w", dim, vocab_size, 0.02, rng);
    dec_b_ = nn::const_param("mlm.dec_b", 1, vocab_size, 0.0);
  }

  template <class F>
  void visit(F&& f) {
    for (Parameter* p : {&dense_w_, &dense_b_, &ln_g_, &ln_b_, &dec_w_, &dec_b_}) f(*p);
  }

  Var logits(Tape& t, const Var& states) const {
    Var h = nn::gelu(nn::linear(states, t.param(dense_w_), t.param(dense_b_)));
    h = nn::layer_norm(h, t.param(ln_g_), t.param(ln_b_));
    return nn::linear(h, t.param(dec_w_), t.param(dec_b_));
  }

 private:
  Parameter dense_w_, dense_b_, ln_g_, ln_b_, dec_w_, dec_b_;
};

// Mean cross-entropy over the masked rows only. `rows` index into `states`.
inline Var mlm_loss(Tape& t, const Var& states, const std::vector<std::size_t>& rows, const std::vector<int>& originals,
                    const MlmHead& head) {
  if (rows.size() != originals.size()) throw std::invalid_argument("mlm_loss: rows/originals size mismatch");
  if (rows.empty()) return t.constant(Tensor(1, 1, 0.0));
  return nn::cross_entropy(head.logits(t, nn::gather_rows(states, rows)), originals);
}

inline double perplexity(double mean_loss) {
  if (mean_loss < 0.0) throw std::invalid_argument("perplexity: mean loss must be >= 0");
  return std::exp(mean_loss);
}

}  // namespace vrdie::enc
