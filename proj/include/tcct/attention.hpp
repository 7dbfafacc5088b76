#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tcct/tensor.hpp"

namespace tcct {

enum class AttnKind { Canonical, ProbSparse, LogSparse };

const char* attn_kind_name(AttnKind k);
AttnKind attn_kind_from_name(const std::string& name);

// Declarative description of one attention block.
struct AttentionSpec {
  AttnKind inner = AttnKind::Canonical;
  bool csp = false;
  bool masked = false;
  int heads = 1;
  int model_dim = 0;
  double sampling_factor = 5.0;  // ProbSparse c
  double csp_split = 0.5;        // fixed: first half conv, second half attention

  void validate() const;
  // Dimension seen by the attention part: d/2 under CSP, d otherwise.
  long attn_dim() const { return csp ? model_dim / 2 : model_dim; }
  long head_dim() const { return attn_dim() / heads; }
};

// Weights of one attention block. Per-head Q/K/V projections, a dense
// output projection over the attention part, and the 1x1 conv weight for
// the CSP passthrough half when enabled. Biases default off.
struct AttentionWeights {
  std::vector<Param> w_q, w_k, w_v;  // each (attn_dim x head_dim)
  Param w_o;                         // (attn_dim x attn_dim)
  std::optional<Param> w_c;          // (d/2 x d/2), CSP only
  std::optional<Param> b_o;          // optional output bias

  static AttentionWeights init(const AttentionSpec& spec, Rng& rng, bool biases = false);
  long param_count() const;
  std::vector<Param*> params();
};

MaskPtr logsparse_mask(long len);

// softmax(Q K^T / sqrt(d_h)) V. Optional mask restricts which keys each
// query sees.
Tensor scaled_dot_attention(Graph& g, Tensor q, Tensor k, Tensor v,
                            MaskPtr mask = nullptr);

// Max-minus-mean sparsity proxy per query, computed over a key subset.
// Raw values (no gradient path); selection is treated as a constant.
// Scores are laid out [batch][query].
std::vector<std::vector<double>> probsparse_measure(const Tensor& q, const Tensor& k,
                                                    const std::vector<int>& sampled_keys);

struct ProbSparseResult {
  Tensor output;
  std::vector<int> sampled_keys;            // the seeded key subset
  std::vector<std::vector<long>> selected;  // per batch item, ascending
};

// ProbSparse attention. Unmasked: the global top-u queries
// (u = ceil(c ln L_Q)) get exact attention, the rest receive mean(V).
// Masked: the measure only sees sampled keys at or before each query and a
// query is dominant when it ranks in the running top-ceil(c ln(i+1)) of its
// prefix, so outputs at position i depend on positions <= i only (exact
// causality); non-dominant queries receive the causal running mean of V.
// Key sampling is seeded for reproducibility.
ProbSparseResult probsparse_attention(Graph& g, Tensor q, Tensor k, Tensor v,
                                      double sampling_factor, bool masked,
                                      std::uint64_t seed);

// Project per spec.inner/spec.masked, attend, concat heads, project out.
Tensor multi_head_attention(Graph& g, Tensor x_q, Tensor x_kv, AttentionWeights& w,
                            const AttentionSpec& spec, std::uint64_t seed = 0);

// CSP split: first d/2 channels through the 1x1 conv W_c, second d/2
// through multi-head attention; outputs concatenated back to d.
Tensor csp_attention(Graph& g, Tensor x, AttentionWeights& w, const AttentionSpec& spec,
                     std::uint64_t seed = 0);

// Dispatch on spec.csp. Self-attention entry point used by the model.
Tensor attention_forward(Graph& g, Tensor x, AttentionWeights& w,
                         const AttentionSpec& spec, std::uint64_t seed = 0);

}  // namespace tcct
