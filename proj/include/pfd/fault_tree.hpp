#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pfd/model.hpp"

namespace pfd {

/// Online-revealed failure with exponential repair; gamma is a failure
/// probability at t = 0 (usually 0). Steady state is lambda/(lambda+mu).
struct Glm {
  double gamma = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
};

/// Failure revealed only at test instants first_test + k*tau; repair then
/// proceeds at rate mu, carrying over across later tests.
struct PeriodicTestLaw {
  double lambda = 0.0;
  double mu = 0.0;
  double tau = 0.0;
  double first_test = 0.0;
};

/// Never-revealed failure, q(t) = 1 - exp(-lambda t).
struct Exponential {
  double lambda = 0.0;
};

using BasicEventLaw = std::variant<Glm, PeriodicTestLaw, Exponential>;

/// Time-dependent unavailability of a basic event; throws for t < 0.
double event_unavailability(const BasicEventLaw& law, double t);

enum class GateKind { kOr, kVote };

struct BasicEvent {
  std::string id;
  BasicEventLaw law;
  std::string label;
};

struct Gate {
  std::string id;
  GateKind kind = GateKind::kOr;
  int vote_k = 0;  ///< used when kind == kVote: fires when >= k children fire
  std::vector<std::string> children;  ///< gate or event ids; repeats share the id
};

struct FaultTree {
  std::vector<BasicEvent> events;
  std::vector<Gate> gates;
  std::string top_gate;

  const BasicEvent* find_event(std::string_view id) const;
  const Gate* find_gate(std::string_view id) const;

  /// Checks acyclicity, unique ids, gate arities and that every declared
  /// event is referenced; throws std::invalid_argument.
  void validate() const;

  /// Deterministic text rendering for golden-file tests: one gate per line,
  /// children indented and sorted by id.
  std::string dump() const;
};

/// Figure-1-style tree for a MooN data set: top VOTE (N-M+1)-of-N over N
/// channel OR gates; each channel combines its three independent events with
/// the three shared common-cause events (3N+3 events for N >= 2, 3 for
/// N == 1 where the beta split recombines).
FaultTree build_case_tree(const SafetyParams& params);

/// Exact top-event probability under basic-event independence, computed by
/// Shannon decomposition over a binary decision diagram built once from the
/// tree structure. Shared events are handled exactly.
class CompiledTree {
 public:
  explicit CompiledTree(const FaultTree& tree);

  /// Probabilities indexed like the tree's event vector.
  double probability(std::span<const double> event_probs) const;

  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<std::string>& event_ids() const { return event_ids_; }

 private:
  struct Node {
    int var;
    std::uint32_t low;
    std::uint32_t high;
  };
  std::vector<Node> nodes_;  // [0] = false, [1] = true
  std::uint32_t root_ = 0;
  std::vector<std::string> event_ids_;

  friend class BddBuilder;
};

/// One-shot convenience over CompiledTree; throws if an event probability is
/// missing or outside [0,1].
double top_probability(const FaultTree& tree, const std::map<std::string, double>& event_probs);

/// Time-averaged top-event probability over [0, t0]: composite Simpson per
/// test interval with step halving (T1/256 down to T1/4096, relative change
/// < 1e-4). Grid evaluation runs in parallel; results are independent of the
/// worker count. Throws EngineError if the grid does not converge.
PfdResult pfd_avg_fault_tree(const SafetyParams& params, int threads = 0);

/// Serial reference path, kept for testing; bit-identical to the parallel
/// kernel.
PfdResult pfd_avg_fault_tree_serial(const SafetyParams& params);

}  // namespace pfd
