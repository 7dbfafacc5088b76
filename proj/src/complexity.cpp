#include "tcct/complexity.hpp"

#include "json.hpp"
#include "tcct/model.hpp"

namespace tcct {

using u64 = unsigned long long;
using nlohmann::json;

namespace {
ComplexityReport make_report(std::string variant, long L, long d, long H, u64 l1, u64 l2,
                             u64 params) {
  ComplexityReport r;
  r.variant = std::move(variant);
  r.L = L;
  r.d = d;
  r.H = H;
  r.l1_coefficient = l1;
  r.l2_coefficient = l2;
  r.analytic_mults = l1 * u64(L) + l2 * u64(L) * u64(L);
  r.param_count = params;
  return r;
}
}  // namespace

std::string ComplexityReport::to_json() const {
  json j{{"variant", variant},
         {"L", L},
         {"d", d},
         {"H", H},
         {"l1_coefficient", l1_coefficient},
         {"l2_coefficient", l2_coefficient},
         {"analytic_mults", analytic_mults},
         {"empirical_mults", empirical_mults},
         {"param_count", param_count}};
  return j.dump();
}

ComplexityReport analytic_canonical(long L, long d, long H) {
  TCCT_CHECK_CFG(d % H == 0, "d must be divisible by H");
  return make_report("canonical", L, d, H, 4ull * d * d, 2ull * H * d, 4ull * d * d);
}

ComplexityReport analytic_csp(long L, long d, long H) {
  TCCT_CHECK_CFG(d % (2 * H) == 0, "d must be divisible by 2H");
  const u64 half = u64(d) / 2;
  return make_report("csp", L, d, H, 5ull * half * half, u64(H) * u64(d),
                     5ull * half * half);
}

ComplexityReport impl_true_canonical(long L, long d, long H) {
  TCCT_CHECK_CFG(d % H == 0, "d must be divisible by H");
  return make_report("canonical-impl", L, d, H, 4ull * d * d, 2ull * d, 4ull * d * d);
}

ComplexityReport impl_true_csp(long L, long d, long H) {
  TCCT_CHECK_CFG(d % (2 * H) == 0, "d must be divisible by 2H");
  const u64 half = u64(d) / 2;
  return make_report("csp-impl", L, d, H, 5ull * half * half, u64(d), 5ull * half * half);
}

unsigned long long memory_accounting(const AttentionSpec& spec) {
  spec.validate();
  const u64 d = u64(spec.model_dim);
  if (!spec.csp) return 4ull * d * d;
  const u64 half = d / 2;
  return 5ull * half * half;
}

unsigned long long empirical_count(AttentionWeights& weights, const AttentionSpec& spec,
                                   const std::vector<Scalar>& x, long L,
                                   std::uint64_t seed) {
  TCCT_CHECK_DIM(long(x.size()) == L * spec.model_dim, "empirical_count: input size ",
                 x.size(), " != L*d");
  MultiplyCounter counter;
  counter.enable(true);
  Graph g(&counter);
  Tensor in = g.constant({1, L, spec.model_dim}, x);
  attention_forward(g, in, weights, spec, seed);
  return counter.take();
}

std::pair<unsigned long long, unsigned long long> per_head_identity(long L, long d, long H) {
  TCCT_CHECK_CFG(d % H == 0, "d must be divisible by H");
  const u64 dh = u64(d) / u64(H);
  // per head: 3 L d d_h + 2 L^2 d, summed over H heads, plus the output
  // projection L d^2.
  const u64 lhs = u64(H) * (3ull * L * d * dh + 2ull * L * L * d) + u64(L) * d * d;
  const u64 rhs = 4ull * d * d * u64(L) + 2ull * H * d * u64(L) * u64(L);
  return {lhs, rhs};
}

namespace {
std::string fit_growth(int kernel, ConnectorMode mode) {
  std::vector<long> spans;
  for (int j = 0; j <= 4; ++j) spans.push_back(conv_only_span(j, kernel, mode));
  std::vector<long> diffs;
  for (size_t i = 1; i < spans.size(); ++i) diffs.push_back(spans[i] - spans[i - 1]);
  bool linear = true;
  for (size_t i = 1; i < diffs.size(); ++i) linear = linear && diffs[i] == diffs[0];
  if (linear) return "linear";
  bool exponential = true;
  for (size_t i = 1; i < diffs.size(); ++i)
    exponential = exponential && 2 * diffs[i - 1] <= diffs[i];
  return exponential ? "exponential" : "superlinear";
}
}  // namespace

std::string ReceptiveReport::to_json() const {
  json j{{"dilated_spans", dilated_spans},
         {"canonical_spans", canonical_spans},
         {"dilated_growth", dilated_growth},
         {"canonical_growth", canonical_growth}};
  return j.dump();
}

ReceptiveReport receptive_report_stages(int stages, int kernel) {
  ReceptiveReport r;
  for (int j = 0; j <= stages; ++j) {
    r.dilated_spans.push_back(receptive_span(j, kernel, ConnectorMode::DilatedCausal));
    r.canonical_spans.push_back(receptive_span(j, kernel, ConnectorMode::CanonicalConv));
  }
  r.dilated_growth = fit_growth(kernel, ConnectorMode::DilatedCausal);
  r.canonical_growth = fit_growth(kernel, ConnectorMode::CanonicalConv);
  return r;
}

ReceptiveReport receptive_report(const ModelConfig& config) {
  return receptive_report_stages(config.enc_blocks - 1, config.connector_config().kernel);
}

}  // namespace tcct
