#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pfd/model.hpp"

namespace pfd {

/// Mode of one channel. DUT/DUU failures have no in-phase exit: DUT enters
/// repair only through the phase-boundary linking map and DUU only a real
/// demand would reveal, which is out of scope.
enum class ChannelMode { kOk = 0, kDd = 1, kDut = 2, kDuu = 3, kRepDut = 4 };

inline constexpr int kChannelModeCount = 5;

std::string_view to_string(ChannelMode mode);

/// Order-free multiset of N channel modes (channel identity is erased since
/// all channels are identical).
struct MarkovState {
  std::array<int, kChannelModeCount> count{};

  int ok() const { return count[0]; }
  int total() const;
  std::string label() const;  ///< e.g. "OK,DD"
  auto operator<=>(const MarkovState&) const = default;
};

/// All multisets of size n over the five modes in a canonical deterministic
/// order with the all-OK state first; C(n+4,4) states.
std::vector<MarkovState> enumerate_states(int n);

struct MarkovModel {
  std::vector<MarkovState> states;
  std::vector<double> generator;  ///< row-major rate matrix [1/h]
  std::vector<double> eff;        ///< 1 when fewer than M channels are OK
  std::vector<int> linking;       ///< phase-boundary target (DUT -> RepDUT)
  double phase_duration = 0.0;
  int initial_state = 0;

  std::size_t size() const { return states.size(); }
  double rate(std::size_t from, std::size_t to) const {
    return generator[from * size() + to];
  }

  /// Deterministic sparse-triplet text rendering for golden-file tests.
  std::string dump() const;
};

MarkovModel build_generator(const SafetyParams& params);

struct TransientResult {
  std::vector<double> p_end;
  double pfd_integral = 0.0;  ///< integral of eff . p(t) over the window [h]
};

/// Advances p0 over the given duration by uniformization with truncation
/// error <= 1e-10 and accumulates the failure-probability integral with the
/// same error control. Throws std::invalid_argument for a non-stochastic p0.
TransientResult transient_solve(const MarkovModel& model, std::span<const double> p0,
                                double duration);

/// Moves each state's probability to its DUT -> RepDUT image.
std::vector<double> apply_linking(const MarkovModel& model, std::span<const double> p);

/// Multi-phase transient analysis: T0/T1 phases of duration T1, linking map
/// applied at every boundary, failure indicator averaged over [0, T0].
PfdResult pfd_avg_markov(const SafetyParams& params);

}  // namespace pfd
