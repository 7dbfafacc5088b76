#include "tcct/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tcct {

const char* attn_kind_name(AttnKind k) {
  switch (k) {
    case AttnKind::Canonical: return "canonical";
    case AttnKind::ProbSparse: return "probsparse";
    case AttnKind::LogSparse: return "logsparse";
  }
  return "?";
}

AttnKind attn_kind_from_name(const std::string& name) {
  if (name == "canonical") return AttnKind::Canonical;
  if (name == "probsparse") return AttnKind::ProbSparse;
  if (name == "logsparse") return AttnKind::LogSparse;
  throw ConfigError("unknown attention kind '" + name + "'");
}

void AttentionSpec::validate() const {
  TCCT_CHECK_CFG(heads >= 1, "attention heads must be >= 1");
  TCCT_CHECK_CFG(model_dim >= 1, "model_dim must be >= 1");
  TCCT_CHECK_CFG(sampling_factor > 0, "sampling_factor must be > 0");
  TCCT_CHECK_CFG(csp_split == 0.5, "only the half split is supported");
  if (csp)
    TCCT_CHECK_CFG(model_dim % (2 * heads) == 0, "CSP needs model_dim divisible by 2*heads, got d=",
                   model_dim, " H=", heads);
  else
    TCCT_CHECK_CFG(model_dim % heads == 0, "model_dim must be divisible by heads, got d=",
                   model_dim, " H=", heads);
}

AttentionWeights AttentionWeights::init(const AttentionSpec& spec, Rng& rng, bool biases) {
  spec.validate();
  AttentionWeights w;
  const long da = spec.attn_dim();
  const long dh = spec.head_dim();
  for (int h = 0; h < spec.heads; ++h) {
    w.w_q.emplace_back("w_q" + std::to_string(h), da, dh);
    w.w_k.emplace_back("w_k" + std::to_string(h), da, dh);
    w.w_v.emplace_back("w_v" + std::to_string(h), da, dh);
  }
  w.w_o = Param("w_o", da, da);
  if (spec.csp) w.w_c = Param("w_c", spec.model_dim / 2, spec.model_dim / 2);
  if (biases) {
    w.b_o = Param("b_o", 1, da);
  }
  for (Param* p : w.params()) xavier_init(*p, rng);
  if (w.b_o) std::fill(w.b_o->value.begin(), w.b_o->value.end(), Scalar(0));
  return w;
}

long AttentionWeights::param_count() const {
  long n = 0;
  for (const auto& p : w_q) n += p.size();
  for (const auto& p : w_k) n += p.size();
  for (const auto& p : w_v) n += p.size();
  n += w_o.size();
  if (w_c) n += w_c->size();
  if (b_o) n += b_o->size();
  return n;
}

std::vector<Param*> AttentionWeights::params() {
  std::vector<Param*> out;
  for (auto& p : w_q) out.push_back(&p);
  for (auto& p : w_k) out.push_back(&p);
  for (auto& p : w_v) out.push_back(&p);
  out.push_back(&w_o);
  if (w_c) out.push_back(&*w_c);
  if (b_o) out.push_back(&*b_o);
  return out;
}

MaskPtr logsparse_mask(long len) {
  auto m = std::make_shared<Mask>();
  m->rows = len;
  m->cols = len;
  m->allow.assign(len * len, 0);
  for (long i = 0; i < len; ++i) {
    m->allow[i * len + i] = 1;
    for (long off = 1; off <= i; off *= 2) m->allow[i * len + (i - off)] = 1;
  }
  return m;
}

Tensor scaled_dot_attention(Graph& g, Tensor q, Tensor k, Tensor v, MaskPtr mask) {
  TCCT_CHECK_DIM(q.shape().dim == k.shape().dim, "query/key head dims differ: ",
                 q.shape().str(), " vs ", k.shape().str());
  TCCT_CHECK_DIM(k.shape().len == v.shape().len, "key/value lengths differ");
  const Scalar inv_sqrt = Scalar(1.0 / std::sqrt(double(q.shape().dim)));
  Tensor scores = g.scale(g.matmul_nt(q, k), inv_sqrt);
  Tensor probs = g.softmax_lastdim(scores, std::move(mask));
  return g.matmul(probs, v);
}

std::vector<std::vector<double>> probsparse_measure(const Tensor& q, const Tensor& k,
                                                    const std::vector<int>& sampled_keys) {
  TCCT_CHECK_DIM(!sampled_keys.empty(), "probsparse_measure: empty key sample");
  const Shape sq = q.shape(), sk = k.shape();
  TCCT_CHECK_DIM(sq.dim == sk.dim, "probsparse_measure: head dims differ");
  const double inv_sqrt = 1.0 / std::sqrt(double(sq.dim));
  const auto& qv = q.value();
  const auto& kv = k.value();
  std::vector<std::vector<double>> scores(sq.batch, std::vector<double>(sq.len, 0.0));
  for (long b = 0; b < sq.batch; ++b)
    for (long i = 0; i < sq.len; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      double sum = 0;
      for (int j : sampled_keys) {
        TCCT_CHECK_DIM(j >= 0 && j < sk.len, "probsparse_measure: sampled key out of range");
        double dot = 0;
        for (long d = 0; d < sq.dim; ++d)
          dot += double(qv[(b * sq.len + i) * sq.dim + d]) *
                 double(kv[(b * sk.len + j) * sk.dim + d]);
        dot *= inv_sqrt;
        mx = std::max(mx, dot);
        sum += dot;
      }
      scores[b][i] = mx - sum / double(sampled_keys.size());
    }
  return scores;
}

namespace {
long log_sample_count(double c, long n) {
  if (n <= 1) return 1;
  return std::min<long>(n, std::max<long>(1, long(std::ceil(c * std::log(double(n))))));
}
}  // namespace

namespace {
// Measure restricted to sampled keys at or before each query position.
// Queries with an empty causal sample score -inf.
std::vector<std::vector<double>> causal_measure(const Tensor& q, const Tensor& k,
                                                const std::vector<int>& sampled,
                                                unsigned long long* mults) {
  const Shape sq = q.shape(), sk = k.shape();
  const double inv_sqrt = 1.0 / std::sqrt(double(sq.dim));
  const auto& qv = q.value();
  const auto& kv = k.value();
  std::vector<std::vector<double>> scores(
      sq.batch, std::vector<double>(sq.len, -std::numeric_limits<double>::infinity()));
  unsigned long long count = 0;
  for (long b = 0; b < sq.batch; ++b)
    for (long i = 0; i < sq.len; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      double sum = 0;
      long used = 0;
      for (int j : sampled) {
        // Every sampled dot is computed (the count stays a function of the
        // shapes alone); only keys at or before i feed the measure.
        double dot = 0;
        for (long d = 0; d < sq.dim; ++d)
          dot += double(qv[(b * sq.len + i) * sq.dim + d]) *
                 double(kv[(b * sk.len + j) * sk.dim + d]);
        count += sq.dim;
        if (j > i) continue;
        dot *= inv_sqrt;
        mx = std::max(mx, dot);
        sum += dot;
        ++used;
      }
      if (used > 0) scores[b][i] = mx - sum / double(used);
    }
  if (mults) *mults = count;
  return scores;
}

// Dominance under causality: query i is dominant when its score ranks in
// the top-u_i of the prefix 0..i, u_i = ceil(c ln(i+1)). Depends on
// positions <= i only.
std::vector<std::uint8_t> running_topu(const std::vector<double>& s, double c) {
  const long L = long(s.size());
  std::vector<std::uint8_t> sel(L, 0);
  for (long i = 0; i < L; ++i) {
    const long ui = log_sample_count(c, i + 1);
    long rank = 0;
    for (long j = 0; j < i; ++j)
      if (s[j] > s[i] || (s[j] == s[i] && j < i)) ++rank;
    sel[i] = rank < ui ? 1 : 0;
  }
  return sel;
}
}  // namespace

ProbSparseResult probsparse_attention(Graph& g, Tensor q, Tensor k, Tensor v,
                                      double sampling_factor, bool masked,
                                      std::uint64_t seed) {
  const Shape sq = q.shape(), sk = k.shape();
  const long Lq = sq.len, Lk = sk.len, B = sq.batch;
  if (masked)
    TCCT_CHECK_DIM(Lq == Lk, "masked ProbSparse requires self-attention lengths");
  const long sample_k = log_sample_count(sampling_factor, Lk);

  Rng rng(mix_seed(seed, 0x70726f62ULL));
  ProbSparseResult result;
  result.sampled_keys = rng.sample_without_replacement(int(Lk), int(sample_k));
  result.selected.resize(B);

  if (masked) {
    unsigned long long measure_mults = 0;
    auto scores = causal_measure(q, k, result.sampled_keys, &measure_mults);
    if (auto* c = g.counter()) c->add(measure_mults);
    // Exact causal attention for every row, then a constant 0/1 row blend
    // keeps dominant rows and routes the rest to the running mean of V.
    Tensor exact = scaled_dot_attention(g, q, k, v, causal_mask(Lq));
    Tensor fill = g.cummean_len(v);
    std::vector<Scalar> keep(B * Lq * sq.dim, Scalar(0));
    std::vector<Scalar> drop(B * Lq * sq.dim, Scalar(1));
    for (long b = 0; b < B; ++b) {
      auto sel = running_topu(scores[b], sampling_factor);
      for (long i = 0; i < Lq; ++i) {
        if (!sel[i]) continue;
        result.selected[b].push_back(i);
        for (long d = 0; d < sq.dim; ++d) {
          keep[(b * Lq + i) * sq.dim + d] = Scalar(1);
          drop[(b * Lq + i) * sq.dim + d] = Scalar(0);
        }
      }
    }
    Tensor kt = g.constant({B, Lq, sq.dim}, std::move(keep));
    Tensor dt = g.constant({B, Lq, sq.dim}, std::move(drop));
    result.output = g.add(g.mul(kt, exact), g.mul(dt, fill));
    return result;
  }

  // Unmasked: global top-u queries get the exact scaled-dot rows.
  const long u = log_sample_count(sampling_factor, Lq);
  if (auto* c = g.counter())
    c->add((unsigned long long)(B)*Lq * result.sampled_keys.size() * sq.dim);
  auto scores = probsparse_measure(q, k, result.sampled_keys);
  for (long b = 0; b < B; ++b) {
    std::vector<long> order(Lq);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](long a, long c2) {
      if (scores[b][a] != scores[b][c2]) return scores[b][a] > scores[b][c2];
      return a < c2;
    });
    order.resize(u);
    std::sort(order.begin(), order.end());
    result.selected[b] = std::move(order);
  }

  Tensor fill = g.repeat_len(g.mean_len(v), Lq);
  Tensor q_sel = g.gather_len_per_batch(q, result.selected);
  const Scalar inv_sqrt = Scalar(1.0 / std::sqrt(double(sq.dim)));
  Tensor probs = g.softmax_lastdim(g.scale(g.matmul_nt(q_sel, k), inv_sqrt));
  Tensor out_sel = g.matmul(probs, v);
  result.output = g.scatter_len_per_batch(fill, result.selected, out_sel);
  return result;
}

Tensor multi_head_attention(Graph& g, Tensor x_q, Tensor x_kv, AttentionWeights& w,
                            const AttentionSpec& spec, std::uint64_t seed) {
  const long da = spec.attn_dim();
  TCCT_CHECK_DIM(x_q.shape().dim == da, "attention input dim ", x_q.shape().dim,
                 " != expected ", da);
  TCCT_CHECK_DIM(x_kv.shape().dim == da, "attention kv dim mismatch");
  const long Lq = x_q.shape().len, Lk = x_kv.shape().len;

  MaskPtr mask;
  if (spec.inner == AttnKind::LogSparse) {
    TCCT_CHECK_DIM(Lq == Lk, "LogSparse attention requires self-attention lengths");
    mask = logsparse_mask(Lq);
  } else if (spec.masked) {
    TCCT_CHECK_DIM(Lq == Lk, "causal masking requires self-attention lengths");
    mask = causal_mask(Lq);
  }

  std::vector<Tensor> heads;
  heads.reserve(spec.heads);
  for (int h = 0; h < spec.heads; ++h) {
    Tensor qh = g.matmul(x_q, g.leaf(w.w_q[h]));
    Tensor kh = g.matmul(x_kv, g.leaf(w.w_k[h]));
    Tensor vh = g.matmul(x_kv, g.leaf(w.w_v[h]));
    if (spec.inner == AttnKind::ProbSparse)
      heads.push_back(probsparse_attention(g, qh, kh, vh, spec.sampling_factor,
                                           spec.masked, mix_seed(seed, h))
                          .output);
    else
      heads.push_back(scaled_dot_attention(g, qh, kh, vh, mask));
  }
  Tensor cat = spec.heads == 1 ? heads[0] : g.concat_dim(heads);
  Tensor out = g.matmul(cat, g.leaf(w.w_o));
  if (w.b_o) out = g.add(out, g.leaf(*w.b_o));
  return out;
}

Tensor csp_attention(Graph& g, Tensor x, AttentionWeights& w, const AttentionSpec& spec,
                     std::uint64_t seed) {
  TCCT_CHECK_CFG(spec.csp && w.w_c, "csp_attention requires a CSP spec and W_c");
  TCCT_CHECK_DIM(x.shape().dim == spec.model_dim, "csp input dim ", x.shape().dim,
                 " != model_dim ", spec.model_dim);
  const long half = spec.model_dim / 2;
  auto parts = g.split_dim(x, {half, half});
  Tensor y1, y2;
  {
    Graph::Scope sc(g, "csp_conv");
    y1 = g.matmul(parts[0], g.leaf(*w.w_c));  // 1x1 conv over the first half
  }
  {
    Graph::Scope sc(g, "csp_attn");
    y2 = multi_head_attention(g, parts[1], parts[1], w, spec, seed);
  }
  return g.concat_dim({y1, y2});
}

Tensor attention_forward(Graph& g, Tensor x, AttentionWeights& w, const AttentionSpec& spec,
                         std::uint64_t seed) {
  return spec.csp ? csp_attention(g, x, w, spec, seed)
                  : multi_head_attention(g, x, x, w, spec, seed);
}

}  // namespace tcct
