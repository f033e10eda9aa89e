#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pfd/model.hpp"

namespace pfd {

enum class VarKind { kInt, kBool };

struct VarDef {
  std::string name;
  VarKind kind = VarKind::kInt;
  std::int64_t initial = 0;
};

struct Place {
  std::string id;
  std::string label;
  int initial_tokens = 0;
};

enum class CmpOp { kEq, kNe, kLt, kLe, kGt, kGe };

/// Either a constant or a single comparison of one variable against a
/// literal; used both as transition guard and as the failure predicate.
struct Predicate {
  bool is_constant = true;
  bool constant_value = true;
  int var = -1;
  CmpOp op = CmpOp::kEq;
  std::int64_t value = 0;

  static Predicate always(bool v) {
    Predicate p;
    p.is_constant = true;
    p.constant_value = v;
    return p;
  }
  static Predicate compare(int var, CmpOp op, std::int64_t value) {
    Predicate p;
    p.is_constant = false;
    p.var = var;
    p.op = op;
    p.value = value;
    return p;
  }
  bool eval(std::span<const std::int64_t> vars) const;
};

struct Assignment {
  enum class Op { kSet, kAdd, kToggle };
  Op op = Op::kSet;
  int var = -1;
  std::int64_t value = 0;

  void apply(std::span<std::int64_t> vars) const;
};

struct ExpDelay {
  double rate = 0.0;  ///< per hour; rate 0 never fires
};
struct DiracDelay {
  double delay = 0.0;  ///< 0 means immediate once enabled
};
/// Calendar-scheduled: may fire exactly at k*period (k >= 1) when enabled at
/// that instant, independent of how long it has been enabled.
struct IpaDelay {
  double period = 0.0;
};

using DelayLaw = std::variant<ExpDelay, DiracDelay, IpaDelay>;

struct PetriArc {
  int place = -1;
  int weight = 1;
};

struct PetriTransition {
  std::string id;
  DelayLaw law;
  Predicate guard = Predicate::always(true);
  std::vector<Assignment> assignments;
  std::vector<PetriArc> inputs;
  std::vector<PetriArc> outputs;
};

struct PetriNet {
  std::vector<Place> places;
  std::vector<VarDef> variables;
  std::vector<PetriTransition> transitions;
  Predicate stat_predicate = Predicate::always(false);

  // structural facts used by the debug invariant checks
  std::vector<std::vector<int>> one_token_groups;
  struct VarCoherence {
    int var = -1;
    std::vector<int> places;
  };
  std::vector<VarCoherence> coherences;

  int var_index(std::string_view name) const;
  int place_index(std::string_view id) const;
  void validate() const;
};

/// Figure-3-style net: five places per channel plus an idle/active pair per
/// common-cause mode (5N+6 places). Common causes propagate through
/// zero-delay guarded transitions and reset once no channel is operating.
/// Failure predicate: nbOK < M.
PetriNet build_case_net(const SafetyParams& params);

struct SimOptions {
  bool check_invariants = false;
  std::ostream* trace = nullptr;
  std::uint64_t max_zero_firings = 1'000'000;  ///< per instant, livelock guard
};

struct HistoryOutcome {
  double failed_fraction = 0.0;
  bool aborted = false;
  std::string abort_reason;
  std::uint64_t firings = 0;
};

HistoryOutcome run_history(const PetriNet& net, double horizon, std::uint64_t seed,
                           const SimOptions& options = {});

/// Fraction of [0, horizon] with the failure predicate true; throws
/// EngineError when the livelock guard aborts the history.
double simulate_history(const PetriNet& net, double horizon, std::uint64_t seed);

struct McEstimate {
  double mean = 0.0;
  double ci90_halfwidth = 0.0;
  std::uint64_t histories = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo over independent histories. Per-history seeds derive from
/// (master_seed, index) through a splittable counter-based mix, and partial
/// sums combine in fixed block order, so the estimate is bit-identical for
/// any worker count. Throws EngineError if more than 0.01% of histories
/// abort.
McEstimate monte_carlo(const PetriNet& net, double horizon, std::uint64_t histories,
                       std::uint64_t master_seed, int threads = 0);

/// Serial reference path, kept for testing; bit-identical to monte_carlo.
McEstimate monte_carlo_serial(const PetriNet& net, double horizon, std::uint64_t histories,
                              std::uint64_t master_seed);

/// Case-study net + estimator, packaged as a PfdResult.
PfdResult pfd_avg_petri(const SafetyParams& params, std::uint64_t histories,
                        std::uint64_t master_seed, int threads = 0);

/// Deterministic per-history seed stream.
std::uint64_t history_seed(std::uint64_t master_seed, std::uint64_t index);

}  // namespace pfd
