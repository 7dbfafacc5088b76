#pragma once

#include "tcct/tensor.hpp"

namespace tcct {

enum class ConnectorMode { CanonicalConv, DilatedCausal };

// Configuration of the conv + max-pool connectors between attention blocks.
// Stage i (1-based) uses dilation 2^(i-1) in dilated mode and 1 otherwise;
// stage 1 is plain causal convolution in both modes.
struct ConnectorConfig {
  int kernel = 3;
  ConnectorMode mode = ConnectorMode::CanonicalConv;

  long dilation_for_stage(int stage_index) const {
    TCCT_CHECK_CFG(stage_index >= 1, "stage index is 1-based");
    return mode == ConnectorMode::DilatedCausal ? (1L << (stage_index - 1)) : 1L;
  }
};

// One distilling stage: causal (dilated) conv -> ELU -> max-pool k3/s2.
// Halves the sequence length; input length must be even.
struct DistillStage {
  Param conv_w;  // (kernel, d, d)
  std::optional<Param> conv_b;
  int stage_index = 1;
  ConnectorConfig config;

  static DistillStage init(int stage_index, long dim, const ConnectorConfig& cfg, Rng& rng,
                           bool biases = false);
  Tensor forward(Graph& g, Tensor x);
  std::vector<Param*> params();
};

// Number of distinct input positions the final output element depends on
// after `stages` connector stages, obtained by symbolic dependency tracing
// (convolution taps and pooling windows, no numerics).
long receptive_span(int stages, int kernel, ConnectorMode mode);

// Conv-only span growth (pools excluded): linear for canonical dilations,
// exponential for the doubling schedule.
long conv_only_span(int stages, int kernel, ConnectorMode mode);

// Passthrough fusion: each pyramid map is chopped along length into chunks
// of the final map's length and everything is concatenated along dim.
// Maps must halve in length exactly; output is (L/2^(n-1)) x (2^n - 1)d.
Tensor passthrough_fuse(Graph& g, const std::vector<Tensor>& pyramid);

// 1x1 projection restoring dimension d after fusion.
struct TransitionLayer {
  Param w;  // (in_dim x out_dim)
  static TransitionLayer init(long in_dim, long out_dim, Rng& rng);
  Tensor forward(Graph& g, Tensor x);
};

}  // namespace tcct
