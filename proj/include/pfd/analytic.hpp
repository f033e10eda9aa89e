#pragma once

#include <cstdint>

#include "pfd/model.hpp"

namespace pfd {

/// Per-term contributions of the closed-form PFDavg equation. All terms are
/// nonnegative and sum to the returned value.
struct AnalyticTermBreakdown {
  double dd_independent = 0.0;
  double dut_independent = 0.0;
  double duu_independent = 0.0;
  double dd_dut_mixed = 0.0;
  double dd_duu_mixed = 0.0;
  double dut_duu_mixed = 0.0;
  double triple_mixed = 0.0;
  double ccf_dd = 0.0;
  double ccf_dut = 0.0;
  double ccf_duu = 0.0;

  double total() const {
    return dd_independent + dut_independent + duu_independent + dd_dut_mixed +
           dd_duu_mixed + dut_duu_mixed + triple_mixed + ccf_dd + ccf_dut + ccf_duu;
  }
};

/// n! / (k! (n-k)!); throws std::invalid_argument unless 0 <= k <= n.
std::uint64_t binom(int n, int k);

/// 1 when x == 1, (1 - b) otherwise; throws for x < 1.
double f_factor(int x, double b);

AnalyticTermBreakdown analytic_breakdown(const SafetyParams& params);

/// Closed-form approximate PFDavg for a MooN system with imperfect proof
/// tests and beta-factor common-cause failures. Validity warnings are
/// attached as diagnostics but never block the computation.
PfdResult pfd_avg_analytic(const SafetyParams& params);

}  // namespace pfd
