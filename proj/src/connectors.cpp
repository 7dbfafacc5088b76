#include "tcct/connectors.hpp"

#include <algorithm>
#include <set>

namespace tcct {

DistillStage DistillStage::init(int stage_index, long dim, const ConnectorConfig& cfg,
                                Rng& rng, bool biases) {
  TCCT_CHECK_CFG(cfg.kernel >= 1, "connector kernel must be >= 1");
  DistillStage s;
  s.stage_index = stage_index;
  s.config = cfg;
  s.conv_w = Param("distill" + std::to_string(stage_index) + ".conv_w",
                   Shape{cfg.kernel, dim, dim});
  xavier_init(s.conv_w, rng);
  if (biases) s.conv_b = Param("distill" + std::to_string(stage_index) + ".conv_b", 1, dim);
  return s;
}

Tensor DistillStage::forward(Graph& g, Tensor x) {
  TCCT_CHECK_CFG(x.shape().len % 2 == 0, "distill stage needs an even length, got ",
                 x.shape().len);
  std::optional<Tensor> bias;
  if (conv_b) bias = g.leaf(*conv_b);
  Tensor y = g.causal_dilated_conv1d(x, g.leaf(conv_w),
                                     config.dilation_for_stage(stage_index), bias);
  return g.causal_maxpool1d(g.elu(y));
}

std::vector<Param*> DistillStage::params() {
  std::vector<Param*> out{&conv_w};
  if (conv_b) out.push_back(&*conv_b);
  return out;
}

namespace {
// Backward dependency tracing over index sets. Levels are concrete, with a
// length wide enough that the front boundary never clips the trace.
std::set<long> conv_back(const std::set<long>& outputs, long kernel, long dilation) {
  std::set<long> in;
  for (long n : outputs)
    for (long j = 0; j < kernel; ++j)
      if (n - j * dilation >= 0) in.insert(n - j * dilation);
  return in;
}

std::set<long> pool_back(const std::set<long>& outputs) {
  std::set<long> in;
  for (long m : outputs)
    for (long n = std::max<long>(0, 2 * m - 1); n <= 2 * m + 1; ++n) in.insert(n);
  return in;
}
}  // namespace

long receptive_span(int stages, int kernel, ConnectorMode mode) {
  TCCT_CHECK_CFG(stages >= 0 && kernel >= 1, "invalid receptive_span arguments");
  if (stages == 0) return 1;
  ConnectorConfig cfg{kernel, mode};
  // Generous length so no window is clipped at the front.
  long len = (1L << stages) * 8L * kernel * (1L << stages);
  std::vector<long> lengths(stages + 1);
  lengths[0] = len;
  for (int i = 1; i <= stages; ++i) lengths[i] = lengths[i - 1] / 2;

  std::set<long> deps{lengths[stages] - 1};
  for (int i = stages; i >= 1; --i) {
    deps = pool_back(deps);
    deps = conv_back(deps, kernel, cfg.dilation_for_stage(i));
  }
  TCCT_CHECK_CFG(*deps.begin() > 0, "receptive_span: trace length too small");
  return long(deps.size());
}

long conv_only_span(int stages, int kernel, ConnectorMode mode) {
  ConnectorConfig cfg{kernel, mode};
  std::set<long> deps{0};
  std::set<long> shifted;
  for (int i = stages; i >= 1; --i) {
    shifted.clear();
    for (long n : deps)
      for (long j = 0; j < kernel; ++j) shifted.insert(n - j * cfg.dilation_for_stage(i));
    deps = shifted;
  }
  return long(deps.size());
}

Tensor passthrough_fuse(Graph& g, const std::vector<Tensor>& pyramid) {
  TCCT_CHECK_DIM(!pyramid.empty(), "passthrough_fuse: empty pyramid");
  const long n = long(pyramid.size());
  const long d = pyramid[0].shape().dim;
  for (long k = 0; k + 1 < n; ++k) {
    TCCT_CHECK_DIM(pyramid[k].shape().dim == d, "pyramid dims must all equal d");
    TCCT_CHECK_DIM(pyramid[k].shape().len == 2 * pyramid[k + 1].shape().len,
                   "pyramid lengths must halve exactly: map ", k + 1, " has length ",
                   pyramid[k].shape().len, ", map ", k + 2, " has length ",
                   pyramid[k + 1].shape().len);
  }
  TCCT_CHECK_DIM(pyramid[n - 1].shape().dim == d, "pyramid dims must all equal d");
  const long chunk = pyramid[n - 1].shape().len;
  if (n == 1) return pyramid[0];
  std::vector<Tensor> chunks;
  for (long k = 0; k < n; ++k) {
    auto parts = g.split_len(pyramid[k], chunk);
    chunks.insert(chunks.end(), parts.begin(), parts.end());
  }
  return g.concat_dim(chunks);
}

TransitionLayer TransitionLayer::init(long in_dim, long out_dim, Rng& rng) {
  TransitionLayer t;
  t.w = Param("transition.w", in_dim, out_dim);
  xavier_init(t.w, rng);
  return t;
}

Tensor TransitionLayer::forward(Graph& g, Tensor x) {
  TCCT_CHECK_DIM(x.shape().dim == w.shape.len, "transition input dim ", x.shape().dim,
                 " != weight rows ", w.shape.len);
  return g.matmul(x, g.leaf(w));
}

}  // namespace tcct
