#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pfd {

/// Thrown when a solver or simulator cannot produce a trustworthy result
/// (non-convergent quadrature, too many aborted histories, ...). Input
/// validation failures throw std::invalid_argument instead.
struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CaseId { i, ii, iii, iv, v, vi };

inline constexpr std::array<CaseId, 6> kAllCaseIds = {
    CaseId::i, CaseId::ii, CaseId::iii, CaseId::iv, CaseId::v, CaseId::vi};

std::string_view to_string(CaseId id);
std::optional<CaseId> parse_case_id(std::string_view text);

/// Full input set for one M-out-of-N safety subsystem: architecture,
/// dangerous failure rate, coverages, common-cause beta factors, repair
/// rates and the proof-test/assessment periods. All rates are per hour,
/// all periods in hours, exactly as the data sets are published.
struct SafetyParams {
  int m = 1;  ///< channels required operative
  int n = 1;  ///< channels total
  double lambda_d = 0.0;  ///< dangerous failure rate of one channel
  double dc = 0.0;        ///< diagnostic coverage
  double ptc = 0.0;       ///< proof test coverage
  double beta_dd = 0.0;
  double beta_dut = 0.0;
  double beta_duu = 0.0;
  double mu_dd = 0.0;   ///< repair rate, online-detected failures
  double mu_dut = 0.0;  ///< repair rate, test-revealed failures
  double t1_hours = 0.0;  ///< proof test period
  double t0_hours = 0.0;  ///< assessment period; integer multiple of t1

  /// Throws std::invalid_argument on any violated invariant
  /// (1 <= m <= n, rates >= 0, fractions in [0,1], t1 > 0,
  /// t0 a positive integer multiple of t1).
  void validate() const;

  /// t0 / t1 (exact by construction).
  int phase_count() const;

  bool operator==(const SafetyParams&) const = default;
};

/// The lambda_DD/DUT/DUU decomposition plus the independent/common-cause
/// split of each mode.
struct DerivedRates {
  double lambda_dd = 0.0;
  double lambda_du = 0.0;
  double lambda_dut = 0.0;
  double lambda_duu = 0.0;
  double dd_independent = 0.0, dd_ccf = 0.0;
  double dut_independent = 0.0, dut_ccf = 0.0;
  double duu_independent = 0.0, duu_ccf = 0.0;
};

DerivedRates derive_rates(const SafetyParams& params);

/// The six published data sets (t0 = 70128 h for all of them).
SafetyParams load_case(CaseId id);

enum class Method { analytic, faulttree, markov, petri };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view text);

struct PfdResult {
  double value = 0.0;
  Method method = Method::analytic;
  std::optional<double> ci90_halfwidth;  ///< present iff method == petri
  std::vector<std::string> diagnostics;
};

enum class ValidityCondition { dut_t1, duu_t0 };

/// One violated first-order validity condition, carrying the computed
/// rate-times-period product.
struct ValidityWarning {
  ValidityCondition condition;
  double product;
  std::string message() const;
};

/// The approximate equations are first-order expansions and hold only if
/// lambda_DUT*T1 < 0.1 and lambda_DUU*T0 < 0.1; returns one warning per
/// violated condition. Never blocks computation.
std::vector<ValidityWarning> check_validity(const SafetyParams& params);

}  // namespace pfd
