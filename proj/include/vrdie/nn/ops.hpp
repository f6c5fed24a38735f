#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vrdie/nn/rng.hpp"
#include "vrdie/nn/tape.hpp"
#include "vrdie/nn/tensor.hpp"

// Differentiable operations on Tape variables. Every op checks shapes up front
// and throws ShapeError naming both operands.
namespace vrdie::nn {

namespace detail {

inline void require(bool ok, const std::string& op, const Tensor& a, const Tensor& b) {
  if (!ok) throw ShapeError(op + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

inline void add_into(Tensor& dst, const Tensor& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
  Tape& t = *a.tape();
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  detail::require(A.cols() == B.rows(), "matmul", A, B);
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  return t.record(matmul(A, B), {a, b}, [&t, a, b, n, k, m](const Tensor& g) {
    if (t.requires_grad(a)) kernel::matmul_nt_acc(g.data(), b.value().data(), t.grad(a).data(), n, m, k);
    if (t.requires_grad(b)) kernel::matmul_tn_acc(a.value().data(), g.data(), t.grad(b).data(), n, k, m);
  });
}

inline Var add(const Var& a, const Var& b) {
  Tape& t = *a.tape();
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  detail::require(A.same_shape(B), "add", A, B);
  Tensor out = A;
  detail::add_into(out, B);
  return t.record(std::move(out), {a, b}, [&t, a, b](const Tensor& g) {
    if (t.requires_grad(a)) detail::add_into(t.grad(a), g);
    if (t.requires_grad(b)) detail::add_into(t.grad(b), g);
  });
}

// x (n×m) + bias (1×m) broadcast over rows.
inline Var add_bias(const Var& x, const Var& bias) {
  Tape& t = *x.tape();
  const Tensor& X = x.value();
  const Tensor& B = bias.value();
  detail::require(B.rows() == 1 && B.cols() == X.cols(), "add_bias", X, B);
  Tensor out = X;
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c) out(r, c) += B[c];
  return t.record(std::move(out), {x, bias}, [&t, x, bias](const Tensor& g) {
    if (t.requires_grad(x)) detail::add_into(t.grad(x), g);
    if (t.requires_grad(bias)) {
      Tensor& gb = t.grad(bias);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
    }
  });
}

inline Var linear(const Var& x, const Var& w, const Var& b) { return add_bias(matmul(x, w), b); }

inline Var mul(const Var& a, const Var& b) {
  Tape& t = *a.tape();
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  detail::require(A.same_shape(B), "mul", A, B);
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return t.record(std::move(out), {a, b}, [&t, a, b](const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      const Tensor& B = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      const Tensor& A = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

inline Var scale(const Var& a, double s) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (double& v : out.values()) v *= s;
  return t.record(std::move(out), {a}, [&t, a, s](const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

inline Var sum(const Var& a) {
  Tape& t = *a.tape();
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return t.record(Tensor(1, 1, s), {a}, [&t, a](const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (double& v : ga.values()) v += g[0];
  });
}

// Mean over every element, returned as a [1,1] scalar.
inline Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), 1.0 / n);
}

// Column-wise mean over rows: n×m -> 1×m.
inline Var mean_rows(const Var& a) {
  Tape& t = *a.tape();
  const Tensor& A = a.value();
  if (A.rows() == 0) throw ShapeError("mean_rows: empty tensor " + A.shape_str());
  Tensor out(1, A.cols());
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = 0; c < A.cols(); ++c) out[c] += A(r, c);
  const double inv = 1.0 / static_cast<double>(A.rows());
  for (double& v : out.values()) v *= inv;
  return t.record(std::move(out), {a}, [&t, a, inv](const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g[c] * inv;
  });
}

inline double elu_value(double x) { return x > 0.0 ? x : std::expm1(x); }

inline Var elu(const Var& a) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (double& v : out.values()) v = elu_value(v);
  return t.record(std::move(out), {a}, [&t, a](const Tensor& g) {
    Tensor& ga = t.grad(a);
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (x[i] > 0.0 ? 1.0 : std::exp(x[i]));
  });
}

inline Var relu(const Var& a) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return t.record(std::move(out), {a}, [&t, a](const Tensor& g) {
    Tensor& ga = t.grad(a);
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] > 0.0 ? g[i] : 0.0;
  });
}

namespace detail {
inline constexpr double kInvSqrt2 = 0.70710678118654752440;
}

// Exact (erf) GELU.
inline Var gelu(const Var& a) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (double& v : out.values()) v = 0.5 * v * (1.0 + std::erf(v * detail::kInvSqrt2));
  return t.record(std::move(out), {a}, [&t, a](const Tensor& g) {
    Tensor& ga = t.grad(a);
    const Tensor& x = a.value();
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double xi = x[i];
      const double cdf = 0.5 * (1.0 + std::erf(xi * detail::kInvSqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * xi * xi);
      ga[i] += g[i] * (cdf + xi * pdf);
    }
  });
}

inline Tensor softmax_rows_value(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    auto o = out.row_span(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : in) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) z += (o[c] = std::exp(in[c] - mx));
    for (double& v : o) v /= z;
  }
  return out;
}

inline Var softmax_rows(const Var& a) {
  Tape& t = *a.tape();
  Tensor y = softmax_rows_value(a.value());
  Tensor saved = t.grad_enabled() ? y : Tensor();
  return t.record(std::move(y), {a}, [&t, a, y = std::move(saved)](const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

// Row-wise layer normalisation with learned gain (1×m) and shift (1×m).
inline Var layer_norm(const Var& x, const Var& gain, const Var& shift, double eps = 1e-5) {
  Tape& t = *x.tape();
  const Tensor& X = x.value();
  const Tensor& G = gain.value();
  const Tensor& B = shift.value();
  detail::require(G.rows() == 1 && G.cols() == X.cols(), "layer_norm gain", X, G);
  detail::require(B.rows() == 1 && B.cols() == X.cols(), "layer_norm shift", X, B);
  const std::size_t n = X.rows(), m = X.cols();
  Tensor xhat(n, m);
  std::vector<double> inv_std(n);
  Tensor out(n, m);
  for (std::size_t r = 0; r < n; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < m; ++c) mu += X(r, c);
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t c = 0; c < m; ++c) var += (X(r, c) - mu) * (X(r, c) - mu);
    var /= static_cast<double>(m);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < m; ++c) {
      xhat(r, c) = (X(r, c) - mu) * inv_std[r];
      out(r, c) = G[c] * xhat(r, c) + B[c];
    }
  }
  return t.record(std::move(out), {x, gain, shift},
                  [&t, x, gain, shift, xhat = std::move(xhat), inv_std = std::move(inv_std), n, m](const Tensor& g) {
                    const Tensor& G = gain.value();
                    if (t.requires_grad(gain) || t.requires_grad(shift)) {
                      for (std::size_t r = 0; r < n; ++r)
                        for (std::size_t c = 0; c < m; ++c) {
                          if (t.requires_grad(gain)) t.grad(gain)[c] += g(r, c) * xhat(r, c);
                          if (t.requires_grad(shift)) t.grad(shift)[c] += g(r, c);
                        }
                    }
                    if (!t.requires_grad(x)) return;
                    Tensor& gx = t.grad(x);
                    std::vector<double> dxh(m);
                    for (std::size_t r = 0; r < n; ++r) {
                      double s1 = 0.0, s2 = 0.0;
                      for (std::size_t c = 0; c < m; ++c) {
                        dxh[c] = g(r, c) * G[c];
                        s1 += dxh[c];
                        s2 += dxh[c] * xhat(r, c);
                      }
                      s1 /= static_cast<double>(m);
                      s2 /= static_cast<double>(m);
                      for (std::size_t c = 0; c < m; ++c) gx(r, c) += inv_std[r] * (dxh[c] - s1 - xhat(r, c) * s2);
                    }
                  });
}

// Inverted dropout. Identity when !train or p == 0.
inline Var dropout(const Var& a, double p, Rng& rng, bool train) {
  if (!train || p <= 0.0) return a;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  Tape& t = *a.tape();
  const Tensor& A = a.value();
  Tensor mask(A.rows(), A.cols());
  const double keep = 1.0 / (1.0 - p);
  for (double& v : mask.values()) v = rng.uniform() < p ? 0.0 : keep;
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return t.record(std::move(out), {a}, [&t, a, mask = std::move(mask)](const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

// out[r] = a[idx[r]]; backward scatters into a.
inline Var gather_rows(const Var& a, std::vector<std::size_t> idx) {
  Tape& t = *a.tape();
  const Tensor& A = a.value();
  Tensor out(idx.size(), A.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= A.rows())
      throw ShapeError("gather_rows: index " + std::to_string(idx[r]) + " out of range for " + A.shape_str());
    auto src = A.row_span(idx[r]);
    std::copy(src.begin(), src.end(), out.row_span(r).begin());
  }
  return t.record(std::move(out), {a}, [&t, a, idx = std::move(idx)](const Tensor& g) {
    Tensor& ga = t.grad(a);
    const std::size_t m = g.cols();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = ga.data() + idx[r] * m;
      const double* src = g.data() + r * m;
      for (std::size_t c = 0; c < m; ++c) dst[c] += src[c];
    }
  });
}

inline Var concat_cols(const Var& a, const Var& b) {
  Tape& t = *a.tape();
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  detail::require(A.rows() == B.rows(), "concat_cols", A, B);
  const std::size_t n = A.rows(), ma = A.cols(), mb = B.cols();
  Tensor out(n, ma + mb);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < ma; ++c) out(r, c) = A(r, c);
    for (std::size_t c = 0; c < mb; ++c) out(r, ma + c) = B(r, c);
  }
  return t.record(std::move(out), {a, b}, [&t, a, b, n, ma, mb](const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < ma; ++c) ga(r, c) += g(r, c);
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < mb; ++c) gb(r, c) += g(r, ma + c);
    }
  });
}

// out[i] = mean over j in lists[i] of x[j]. Each list must be non-empty.
// Neighbours are summed in list order, then divided by the list size.
inline Var neighbor_mean(const Var& x, std::vector<std::vector<std::size_t>> lists) {
  Tape& t = *x.tape();
  const Tensor& X = x.value();
  if (lists.size() != X.rows())
    throw ShapeError("neighbor_mean: " + std::to_string(lists.size()) + " lists for " + X.shape_str());
  const std::size_t m = X.cols();
  Tensor out(X.rows(), m);
  for (std::size_t i = 0; i < lists.size(); ++i) {
    if (lists[i].empty()) throw ShapeError("neighbor_mean: empty neighbourhood at row " + std::to_string(i));
    auto o = out.row_span(i);
    for (std::size_t j : lists[i]) {
      if (j >= X.rows()) throw ShapeError("neighbor_mean: neighbour index out of range");
      auto src = X.row_span(j);
      for (std::size_t c = 0; c < m; ++c) o[c] += src[c];
    }
    const double n = static_cast<double>(lists[i].size());
    for (double& v : o) v /= n;
  }
  return t.record(std::move(out), {x}, [&t, x, lists = std::move(lists), m](const Tensor& g) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < lists.size(); ++i) {
      const double inv = 1.0 / static_cast<double>(lists[i].size());
      for (std::size_t j : lists[i])
        for (std::size_t c = 0; c < m; ++c) gx(j, c) += g(i, c) * inv;
    }
  });
}

struct Segment {
  std::size_t offset;
  std::size_t length;
};

// Multi-head scaled dot-product attention restricted to contiguous row
// segments (one segment per sequence; no cross-sequence attention).
// q, k, v: T×d. If `probs_out` is given it receives, per segment and head, the
// length×length attention matrix.
inline Var segment_attention(const Var& q, const Var& k, const Var& v, std::vector<Segment> segments,
                             std::size_t heads, std::vector<Tensor>* probs_out = nullptr) {
  Tape& t = *q.tape();
  const Tensor& Q = q.value();
  const Tensor& K = k.value();
  const Tensor& V = v.value();
  detail::require(Q.same_shape(K) && Q.same_shape(V), "segment_attention", Q, K);
  const std::size_t d = Q.cols();
  if (heads == 0 || d % heads != 0) throw ShapeError("segment_attention: dim " + std::to_string(d) + " not divisible by heads");
  const std::size_t dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> probs;
  probs.reserve(segments.size() * heads);
  Tensor out(Q.rows(), d);
  for (const Segment& s : segments) {
    if (s.offset + s.length > Q.rows()) throw ShapeError("segment_attention: segment out of range");
    for (std::size_t h = 0; h < heads; ++h) {
      Tensor P(s.length, s.length);
      const std::size_t c0 = h * dh;
      for (std::size_t i = 0; i < s.length; ++i) {
        const double* qi = Q.data() + (s.offset + i) * d + c0;
        for (std::size_t j = 0; j < s.length; ++j) {
          const double* kj = K.data() + (s.offset + j) * d + c0;
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          P(i, j) = dot * sc;
        }
      }
      P = softmax_rows_value(P);
      for (std::size_t i = 0; i < s.length; ++i) {
        double* oi = out.data() + (s.offset + i) * d + c0;
        for (std::size_t j = 0; j < s.length; ++j) {
          const double p = P(i, j);
          const double* vj = V.data() + (s.offset + j) * d + c0;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += p * vj[c];
        }
      }
      probs.push_back(std::move(P));
    }
  }
  if (probs_out) *probs_out = probs;
  return t.record(std::move(out), {q, k, v},
                  [&t, q, k, v, segments = std::move(segments), probs = std::move(probs), heads, dh, d, sc](const Tensor& g) {
                    const Tensor& Q = q.value();
                    const Tensor& K = k.value();
                    const Tensor& V = v.value();
                    const bool need_q = t.requires_grad(q), need_k = t.requires_grad(k), need_v = t.requires_grad(v);
                    Tensor* gq = need_q ? &t.grad(q) : nullptr;
                    Tensor* gk = need_k ? &t.grad(k) : nullptr;
                    Tensor* gv = need_v ? &t.grad(v) : nullptr;
                    std::size_t pi = 0;
                    for (const Segment& s : segments) {
                      for (std::size_t h = 0; h < heads; ++h, ++pi) {
                        const Tensor& P = probs[pi];
                        const std::size_t c0 = h * dh, L = s.length;
                        Tensor dP(L, L);
                        for (std::size_t i = 0; i < L; ++i) {
                          const double* gi = g.data() + (s.offset + i) * d + c0;
                          for (std::size_t j = 0; j < L; ++j) {
                            const double* vj = V.data() + (s.offset + j) * d + c0;
                            double dot = 0.0;
                            for (std::size_t c = 0; c < dh; ++c) dot += gi[c] * vj[c];
                            dP(i, j) = dot;
                            if (gv) {
                              double* gvj = gv->data() + (s.offset + j) * d + c0;
                              const double p = P(i, j);
                              for (std::size_t c = 0; c < dh; ++c) gvj[c] += p * gi[c];
                            }
                          }
                        }
                        if (!gq && !gk) continue;
                        for (std::size_t i = 0; i < L; ++i) {
                          double rowdot = 0.0;
                          for (std::size_t j = 0; j < L; ++j) rowdot += P(i, j) * dP(i, j);
                          for (std::size_t j = 0; j < L; ++j) {
                            const double ds = P(i, j) * (dP(i, j) - rowdot) * sc;
                            if (ds == 0.0) continue;
                            if (gq) {
                              double* gqi = gq->data() + (s.offset + i) * d + c0;
                              const double* kj = K.data() + (s.offset + j) * d + c0;
                              for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                            }
                            if (gk) {
                              double* gkj = gk->data() + (s.offset + j) * d + c0;
                              const double* qi = Q.data() + (s.offset + i) * d + c0;
                              for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                            }
                          }
                        }
                      }
                    }
                  });
}

// Mean softmax cross-entropy over rows whose target is >= 0 (negative targets
// are ignored). Returns a [1,1] scalar; zero when no row has a target.
inline Var cross_entropy(const Var& logits, std::vector<int> targets) {
  Tape& t = *logits.tape();
  const Tensor& L = logits.value();
  if (targets.size() != L.rows())
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " + L.shape_str());
  Tensor p = softmax_rows_value(L);
  double loss = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < L.rows(); ++r) {
    if (targets[r] < 0) continue;
    if (static_cast<std::size_t>(targets[r]) >= L.cols())
      throw ShapeError("cross_entropy: target " + std::to_string(targets[r]) + " >= classes " + std::to_string(L.cols()));
    // log-sum-exp with max subtraction
    auto row = L.row_span(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    loss += std::log(z) + mx - row[static_cast<std::size_t>(targets[r])];
    ++count;
  }
  const double inv = count ? 1.0 / static_cast<double>(count) : 0.0;
  return t.record(Tensor(1, 1, loss * inv), {logits},
                  [&t, logits, targets = std::move(targets), p = std::move(p), inv](const Tensor& g) {
                    Tensor& gl = t.grad(logits);
                    for (std::size_t r = 0; r < p.rows(); ++r) {
                      if (targets[r] < 0) continue;
                      for (std::size_t c = 0; c < p.cols(); ++c) gl(r, c) += g[0] * inv * p(r, c);
                      gl(r, static_cast<std::size_t>(targets[r])) -= g[0] * inv;
                    }
                  });
}

// Single-example form: −log softmax(logits)[target] for a 1×C row.
inline Var softmax_cross_entropy(const Var& logits, int target) {
  if (logits.value().rows() != 1) throw ShapeError("softmax_cross_entropy: expected one row, got " + logits.value().shape_str());
  return cross_entropy(logits, {target});
}

}  // namespace vrdie::nn
