// Test-side oracles, independent of the library's computation paths:
// plain-loop attention references and random-instance helpers.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "tcct/attention.hpp"
#include "tcct/tensor.hpp"

namespace tcct::testing {

inline std::vector<Scalar> randn(Rng& rng, long n, double sigma = 1.0) {
  std::vector<Scalar> out(n);
  for (auto& v : out) v = Scalar(rng.gaussian(0.0, sigma));
  return out;
}

// Two-loop softmax(QK^T/sqrt(dh))V with an optional allow predicate.
inline std::vector<double> naive_attention(
    const std::vector<Scalar>& q, const std::vector<Scalar>& k,
    const std::vector<Scalar>& v, long Lq, long Lk, long dh,
    const std::function<bool(long, long)>& allowed = nullptr) {
  std::vector<double> out(Lq * dh, 0.0);
  for (long i = 0; i < Lq; ++i) {
    std::vector<double> row(Lk, 0.0);
    double mx = -1e300;
    for (long j = 0; j < Lk; ++j) {
      if (allowed && !allowed(i, j)) continue;
      double dot = 0;
      for (long d = 0; d < dh; ++d) dot += double(q[i * dh + d]) * double(k[j * dh + d]);
      row[j] = dot / std::sqrt(double(dh));
      mx = std::max(mx, row[j]);
    }
    double sum = 0;
    for (long j = 0; j < Lk; ++j) {
      if (allowed && !allowed(i, j)) continue;
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (long j = 0; j < Lk; ++j) {
      if (allowed && !allowed(i, j)) continue;
      for (long d = 0; d < dh; ++d) out[i * dh + d] += row[j] / sum * double(v[j * dh + d]);
    }
  }
  return out;
}

// Per-head projections, attention, concat, output projection — all as
// plain loops.
inline std::vector<double> naive_mha(const std::vector<Scalar>& x, long L, long da,
                                     AttentionWeights& w, int H, bool masked) {
  const long dh = da / H;
  std::vector<double> cat(L * da, 0.0);
  for (int h = 0; h < H; ++h) {
    std::vector<Scalar> q(L * dh, 0), k(L * dh, 0), v(L * dh, 0);
    for (long i = 0; i < L; ++i)
      for (long o = 0; o < dh; ++o)
        for (long c = 0; c < da; ++c) {
          q[i * dh + o] += x[i * da + c] * w.w_q[h].value[c * dh + o];
          k[i * dh + o] += x[i * da + c] * w.w_k[h].value[c * dh + o];
          v[i * dh + o] += x[i * da + c] * w.w_v[h].value[c * dh + o];
        }
    auto head = naive_attention(q, k, v, L, L, dh,
                                masked ? [](long i, long j) { return j <= i; }
                                       : std::function<bool(long, long)>());
    for (long i = 0; i < L; ++i)
      for (long o = 0; o < dh; ++o) cat[i * da + h * dh + o] = head[i * dh + o];
  }
  std::vector<double> out(L * da, 0.0);
  for (long i = 0; i < L; ++i)
    for (long o = 0; o < da; ++o)
      for (long c = 0; c < da; ++c)
        out[i * da + o] += cat[i * da + c] * double(w.w_o.value[c * da + o]);
  return out;
}

template <typename A, typename B>
double max_abs_diff(const std::vector<A>& a, const std::vector<B>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

}  // namespace tcct::testing
