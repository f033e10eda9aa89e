#include "pfd/model.hpp"

#include <cmath>
#include <cstdio>

namespace pfd {

namespace {

constexpr double kHoursPerYear = 8766.0;  // 365.25 days

SafetyParams make_case(int m, int n, bool even_columns) {
  SafetyParams p;
  p.m = m;
  p.n = n;
  if (even_columns) {
    p.lambda_d = 1.35e-5;
    p.dc = 0.25;
    p.ptc = 0.70;
    p.beta_dd = 0.05;
    p.beta_dut = 0.10;
    p.beta_duu = 0.10;
    p.mu_dd = 0.0833;
    p.mu_dut = 0.0833;
    p.t1_hours = kHoursPerYear;
  } else {
    p.lambda_d = 2.70e-6;
    p.dc = 0.50;
    p.ptc = 0.90;
    p.beta_dd = 0.02;
    p.beta_dut = 0.05;
    p.beta_duu = 0.05;
    p.mu_dd = 0.0417;
    p.mu_dut = 0.0417;
    p.t1_hours = kHoursPerYear / 2.0;
  }
  p.t0_hours = 8.0 * kHoursPerYear;
  return p;
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool is_fraction(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace

std::string_view to_string(CaseId id) {
  switch (id) {
    case CaseId::i: return "i";
    case CaseId::ii: return "ii";
    case CaseId::iii: return "iii";
    case CaseId::iv: return "iv";
    case CaseId::v: return "v";
    case CaseId::vi: return "vi";
  }
  return "?";
}

std::optional<CaseId> parse_case_id(std::string_view text) {
  for (CaseId id : kAllCaseIds) {
    if (text == to_string(id)) return id;
  }
  return std::nullopt;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::analytic: return "analytic";
    case Method::faulttree: return "faulttree";
    case Method::markov: return "markov";
    case Method::petri: return "petri";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view text) {
  for (Method m : {Method::analytic, Method::faulttree, Method::markov, Method::petri}) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

void SafetyParams::validate() const {
  require(m >= 1 && m <= n, "require 1 <= m <= n");
  require(std::isfinite(lambda_d) && lambda_d >= 0.0, "lambda_d must be >= 0");
  require(is_fraction(dc), "dc must be in [0,1]");
  require(is_fraction(ptc), "ptc must be in [0,1]");
  require(is_fraction(beta_dd), "beta_dd must be in [0,1]");
  require(is_fraction(beta_dut), "beta_dut must be in [0,1]");
  require(is_fraction(beta_duu), "beta_duu must be in [0,1]");
  require(std::isfinite(mu_dd) && mu_dd >= 0.0, "mu_dd must be >= 0");
  require(std::isfinite(mu_dut) && mu_dut >= 0.0, "mu_dut must be >= 0");
  require(std::isfinite(t1_hours) && t1_hours > 0.0, "t1_hours must be > 0");
  require(std::isfinite(t0_hours) && t0_hours > 0.0, "t0_hours must be > 0");
  const double ratio = t0_hours / t1_hours;
  const double k = std::round(ratio);
  require(k >= 1.0 && std::abs(ratio - k) <= 1e-9 * k,
          "t0_hours must be a positive integer multiple of t1_hours");
}

int SafetyParams::phase_count() const {
  return static_cast<int>(std::llround(t0_hours / t1_hours));
}

DerivedRates derive_rates(const SafetyParams& params) {
  params.validate();
  DerivedRates r;
  r.lambda_dd = params.dc * params.lambda_d;
  r.lambda_du = (1.0 - params.dc) * params.lambda_d;
  r.lambda_dut = params.ptc * r.lambda_du;
  r.lambda_duu = (1.0 - params.ptc) * r.lambda_du;
  r.dd_independent = (1.0 - params.beta_dd) * r.lambda_dd;
  r.dd_ccf = params.beta_dd * r.lambda_dd;
  r.dut_independent = (1.0 - params.beta_dut) * r.lambda_dut;
  r.dut_ccf = params.beta_dut * r.lambda_dut;
  r.duu_independent = (1.0 - params.beta_duu) * r.lambda_duu;
  r.duu_ccf = params.beta_duu * r.lambda_duu;
  return r;
}

SafetyParams load_case(CaseId id) {
  switch (id) {
    case CaseId::i: return make_case(1, 1, false);
    case CaseId::ii: return make_case(1, 1, true);
    case CaseId::iii: return make_case(1, 2, false);
    case CaseId::iv: return make_case(1, 2, true);
    case CaseId::v: return make_case(2, 3, false);
    case CaseId::vi: return make_case(2, 3, true);
  }
  throw std::invalid_argument("unknown case id");
}

std::string ValidityWarning::message() const {
  char buf[128];
  const char* name = condition == ValidityCondition::dut_t1 ? "lambda_dut*T1" : "lambda_duu*T0";
  std::snprintf(buf, sizeof(buf), "%s = %.6e >= 0.1 (first-order approximation not valid)",
                name, product);
  return buf;
}

std::vector<ValidityWarning> check_validity(const SafetyParams& params) {
  const DerivedRates r = derive_rates(params);
  std::vector<ValidityWarning> warnings;
  if (const double p = r.lambda_dut * params.t1_hours; p >= 0.1) {
    warnings.push_back({ValidityCondition::dut_t1, p});
  }
  if (const double p = r.lambda_duu * params.t0_hours; p >= 0.1) {
    warnings.push_back({ValidityCondition::duu_t0, p});
  }
  return warnings;
}

}  // namespace pfd
