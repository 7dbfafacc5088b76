#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tcct/attention.hpp"
#include "tcct/connectors.hpp"

namespace tcct {

struct ModelConfig;  // model.hpp

// Closed-form and measured multiply counts for one attention block shape.
// analytic_mults == l2_coefficient * L^2 + l1_coefficient * L always holds.
struct ComplexityReport {
  std::string variant;
  long L = 0, d = 0, H = 0;
  unsigned long long l1_coefficient = 0;  // coefficient of L
  unsigned long long l2_coefficient = 0;  // coefficient of L^2
  unsigned long long analytic_mults = 0;
  unsigned long long empirical_mults = 0;  // 0 when not measured
  unsigned long long param_count = 0;

  std::string to_json() const;
};

// Published closed forms: canonical 4d^2 L + 2HdL^2, CSP 1.25d^2 L + HdL^2.
ComplexityReport analytic_canonical(long L, long d, long H);
ComplexityReport analytic_csp(long L, long d, long H);

// Closed forms matching the running code, which uses the per-head dimension
// d/H inside the score products: canonical 4d^2 L + 2dL^2, CSP
// 1.25d^2 L + dL^2. The L ratios match the published forms (0.3125) and the
// L^2 ratios are 0.5 in both accountings.
ComplexityReport impl_true_canonical(long L, long d, long H);
ComplexityReport impl_true_csp(long L, long d, long H);

// Weight scalars of one attention block: 4d^2 canonical, 5(d/2)^2 CSP.
unsigned long long memory_accounting(const AttentionSpec& spec);

// Run one attention block forward over x (length L, dim model_dim) with the
// multiply counter armed; returns the count and resets it.
unsigned long long empirical_count(AttentionWeights& weights, const AttentionSpec& spec,
                                   const std::vector<Scalar>& x, long L,
                                   std::uint64_t seed = 0);

// Both sides of the per-head accounting identity
// H*(3Ld^2/H + 2L^2 d) + Ld^2 == 4d^2 L + 2HdL^2 (exact integers).
std::pair<unsigned long long, unsigned long long> per_head_identity(long L, long d, long H);

struct ReceptiveReport {
  std::vector<long> dilated_spans;    // index = connector stage count
  std::vector<long> canonical_spans;
  std::string dilated_growth;    // fitted on conv-only spans
  std::string canonical_growth;
  std::string to_json() const;
};

ReceptiveReport receptive_report(const ModelConfig& config);
ReceptiveReport receptive_report_stages(int stages, int kernel = 3);

}  // namespace tcct
