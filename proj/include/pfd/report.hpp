#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pfd/model.hpp"

namespace pfd {

/// Low-demand decade banding of PFDavg.
enum class SilBand { kSil1, kSil2, kSil3, kSil4, kBelowSil1 };

std::string_view to_string(SilBand band);

/// [1e-2,1e-1) -> SIL1, [1e-3,1e-2) -> SIL2, [1e-4,1e-3) -> SIL3,
/// below 1e-4 -> SIL4, >= 1e-1 -> below SIL1.
SilBand sil_band(double pfd_avg);

struct RunOptions {
  std::uint64_t histories = 1'000'000;
  std::uint64_t seed = 42;
  int threads = 0;
};

struct ComparisonRow {
  struct Entry {
    PfdResult result;
    SilBand sil = SilBand::kSil4;
    std::vector<std::string> warnings;
  };
  struct Deviation {
    Method a = Method::analytic;
    Method b = Method::analytic;
    double relative = 0.0;  ///< (value_a - value_b) / value_b
  };

  std::string case_name;
  std::vector<Entry> entries;         ///< one per requested method, method order
  std::vector<Deviation> deviations;  ///< pairwise, only between present results
  std::vector<std::string> validity_warnings;
};

/// Runs the requested engines on one data set. Engine failures propagate as
/// EngineError tagged with the method name.
ComparisonRow run_case(const std::string& name, const SafetyParams& params,
                       const std::vector<Method>& methods, const RunOptions& options = {});

/// case,method,pfd_avg,ci90,sil,warnings with probabilities in scientific
/// notation, 6 significant digits.
std::string emit_csv(const std::vector<ComparisonRow>& rows);

/// Same fields as the CSV, one object per row; numeric values round-trip
/// bit-identically through parse.
std::string emit_json(const std::vector<ComparisonRow>& rows);

/// Strict flat-object schema: keys m, n, lambda_d, dc, ptc, beta_dd,
/// beta_dut, beta_duu, mu_dd, mu_dut, t1_hours, t0_hours; unknown keys are
/// rejected.
SafetyParams params_from_json(const std::string& text);
std::string params_to_json(const SafetyParams& params);

/// Reruns the published six-case table on every engine and prints one
/// PASS/FAIL line per check; returns true when everything is within
/// tolerance.
bool reproduce_study(std::ostream& out, const RunOptions& options);

}  // namespace pfd
