#include "pfd/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pfd {

namespace {

// base^exp * scale with the convention 0^k * anything = 0 (k >= 1), so a
// zero rate never turns an infinite repair-time factor into a NaN.
double pow_scaled(double base, int exp, double scale) {
  if (exp <= 0) return scale;
  if (base == 0.0) return 0.0;
  return std::pow(base, exp) * scale;
}

}  // namespace

std::uint64_t binom(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("binom requires 0 <= k <= n");
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

double f_factor(int x, double b) {
  if (x < 1) throw std::invalid_argument("f_factor requires x >= 1");
  return x == 1 ? 1.0 : 1.0 - b;
}

AnalyticTermBreakdown analytic_breakdown(const SafetyParams& p) {
  p.validate();
  const DerivedRates r = derive_rates(p);
  const int gap = p.n - p.m;  // N - M
  const int k1 = gap + 1;     // failures that defeat the voting
  const double t1 = p.t1_hours;
  const double t0 = p.t0_hours;
  const double inv_mu_dut = 1.0 / p.mu_dut;  // +inf when mu_dut == 0
  const double ratio_dd = r.lambda_dd == 0.0 ? 0.0 : r.lambda_dd / p.mu_dd;

  AnalyticTermBreakdown b;
  b.dd_independent =
      static_cast<double>(binom(p.n, k1)) * pow_scaled((1.0 - p.beta_dd) * ratio_dd, k1, 1.0);
  b.dut_independent =
      static_cast<double>(binom(p.n, k1)) *
      pow_scaled((1.0 - p.beta_dut) * r.lambda_dut, k1,
                 std::pow(t1, gap) * (t1 / (gap + 2) + inv_mu_dut));
  b.duu_independent = static_cast<double>(binom(p.n, k1)) *
                      pow_scaled((1.0 - p.beta_duu) * r.lambda_duu, k1,
                                 std::pow(t0, gap) * (t0 / (gap + 2)));

  for (int i = 1; i <= gap; ++i) {
    const double dd_part = static_cast<double>(binom(p.n - i, k1 - i)) *
                           pow_scaled(f_factor(k1 - i, p.beta_dd) * ratio_dd, k1 - i, 1.0);
    b.dd_dut_mixed += dd_part * static_cast<double>(binom(p.n, i)) *
                      pow_scaled(f_factor(i, p.beta_dut) * r.lambda_dut, i,
                                 std::pow(t1, i - 1) * (t1 / (i + 1) + inv_mu_dut));
    b.dd_duu_mixed += dd_part * static_cast<double>(binom(p.n, i)) *
                      pow_scaled(f_factor(i, p.beta_duu) * r.lambda_duu, i,
                                 std::pow(t0, i - 1) * (t0 / (i + 1)));
    b.dut_duu_mixed += static_cast<double>(binom(p.n - i, k1 - i)) *
                       pow_scaled((1.0 - p.beta_dut) * r.lambda_dut, k1 - i,
                                  std::pow(t1, gap - i) * (t1 / (gap + 2 - i) + inv_mu_dut)) *
                       static_cast<double>(binom(p.n, i)) *
                       pow_scaled((1.0 - p.beta_duu) * r.lambda_duu, i,
                                  std::pow(t0, i - 1) * (t0 / (i + 1)));
  }

  for (int i = 1; i <= gap - 1; ++i) {
    for (int j = 1; j <= gap - i; ++j) {
      b.triple_mixed += static_cast<double>(binom(p.n - i - j, k1 - i - j)) *
                        pow_scaled(f_factor(k1 - i - j, p.beta_dd) * ratio_dd, k1 - i - j, 1.0) *
                        static_cast<double>(binom(p.n - i, j)) *
                        pow_scaled((1.0 - p.beta_dut) * r.lambda_dut, j,
                                   std::pow(t1, j - 1) * (t1 / (j + 1) + inv_mu_dut)) *
                        static_cast<double>(binom(p.n, i)) *
                        pow_scaled((1.0 - p.beta_duu) * r.lambda_duu, i,
                                   std::pow(t0, i - 1) * (t0 / (i + 1)));
    }
  }

  b.ccf_dd = p.beta_dd * ratio_dd;
  b.ccf_dut = pow_scaled(p.beta_dut * r.lambda_dut, 1, t1 / 2.0 + inv_mu_dut);
  b.ccf_duu = p.beta_duu * r.lambda_duu * (t0 / 2.0);
  return b;
}

PfdResult pfd_avg_analytic(const SafetyParams& params) {
  const AnalyticTermBreakdown b = analytic_breakdown(params);
  PfdResult result;
  result.method = Method::analytic;
  for (const ValidityWarning& w : check_validity(params)) {
    result.diagnostics.push_back(w.message());
  }
  char line[512];
  std::snprintf(line, sizeof(line),
                "terms: dd=%.6e dut=%.6e duu=%.6e dd*dut=%.6e dd*duu=%.6e dut*duu=%.6e "
                "triple=%.6e ccf_dd=%.6e ccf_dut=%.6e ccf_duu=%.6e",
                b.dd_independent, b.dut_independent, b.duu_independent, b.dd_dut_mixed,
                b.dd_duu_mixed, b.dut_duu_mixed, b.triple_mixed, b.ccf_dd, b.ccf_dut, b.ccf_duu);
  result.diagnostics.emplace_back(line);
  double v = b.total();
  if (v > 1.0) {
    std::snprintf(line, sizeof(line), "formula value %.6e exceeds 1, clamped", v);
    result.diagnostics.emplace_back(line);
    v = 1.0;
  }
  result.value = v;
  return result;
}

}  // namespace pfd
