#include "pfd/petri.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pfd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// splitmix64: tiny, portable, and splittable by construction
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // strictly inside (0,1) so -log never overflows
  double next_unit() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

bool compare(std::int64_t lhs, CmpOp op, std::int64_t rhs) {
  switch (op) {
    case CmpOp::kEq: return lhs == rhs;
    case CmpOp::kNe: return lhs != rhs;
    case CmpOp::kLt: return lhs < rhs;
    case CmpOp::kLe: return lhs <= rhs;
    case CmpOp::kGt: return lhs > rhs;
    case CmpOp::kGe: return lhs >= rhs;
  }
  return false;
}

}  // namespace

bool Predicate::eval(std::span<const std::int64_t> vars) const {
  if (is_constant) return constant_value;
  return compare(vars[static_cast<std::size_t>(var)], op, value);
}

void Assignment::apply(std::span<std::int64_t> vars) const {
  auto& slot = vars[static_cast<std::size_t>(var)];
  switch (op) {
    case Op::kSet: slot = value; break;
    case Op::kAdd: slot += value; break;
    case Op::kToggle: slot = slot == 0 ? 1 : 0; break;
  }
}

int PetriNet::var_index(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int PetriNet::place_index(std::string_view id) const {
  for (std::size_t i = 0; i < places.size(); ++i) {
    if (places[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

void PetriNet::validate() const {
  auto bad = [](const std::string& msg) { throw std::invalid_argument(msg); };
  std::set<std::string> ids;
  for (const auto& p : places) {
    if (!ids.insert(p.id).second) bad("duplicate place id: " + p.id);
    if (p.initial_tokens < 0) bad("negative initial marking: " + p.id);
  }
  auto check_var = [&](int v, const std::string& where) {
    if (v < 0 || v >= static_cast<int>(variables.size()))
      bad("undeclared variable referenced by " + where);
  };
  auto check_pred = [&](const Predicate& pr, const std::string& where) {
    if (!pr.is_constant) check_var(pr.var, where);
  };
  for (const auto& t : transitions) {
    check_pred(t.guard, "guard of " + t.id);
    for (const auto& a : t.assignments) check_var(a.var, "assignment of " + t.id);
    for (const auto& arcs : {t.inputs, t.outputs}) {
      for (const auto& arc : arcs) {
        if (arc.place < 0 || arc.place >= static_cast<int>(places.size()))
          bad("arc to unknown place in " + t.id);
        if (arc.weight < 1) bad("arc weight < 1 in " + t.id);
      }
    }
    std::visit(
        [&](const auto& law) {
          using T = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<T, ExpDelay>) {
            if (law.rate < 0) bad("negative rate in " + t.id);
          } else if constexpr (std::is_same_v<T, DiracDelay>) {
            if (law.delay < 0) bad("negative delay in " + t.id);
          } else {
            if (!(law.period > 0)) bad("non-positive period in " + t.id);
          }
        },
        t.law);
  }
  check_pred(stat_predicate, "stat predicate");
}

std::uint64_t history_seed(std::uint64_t master_seed, std::uint64_t index) {
  return mix64(master_seed ^ mix64(index + 1));
}

// ---------------------------------------------------------------------------
// Simulator

namespace {

class Simulator {
 public:
  Simulator(const PetriNet& net, const SimOptions& options)
      : net_(net), opt_(options), nt_(net.transitions.size()) {
    net.validate();
    is_dirac0_.resize(nt_);
    is_ipa_.resize(nt_);
    ipa_period_.resize(nt_, 0.0);
    for (std::size_t i = 0; i < nt_; ++i) {
      const auto& law = net.transitions[i].law;
      if (const auto* d = std::get_if<DiracDelay>(&law)) is_dirac0_[i] = d->delay == 0.0;
      if (const auto* ipa = std::get_if<IpaDelay>(&law)) {
        is_ipa_[i] = true;
        ipa_period_[i] = ipa->period;
      }
    }
    marking_.resize(net.places.size());
    vars_.resize(net.variables.size());
    sched_.resize(nt_);
    was_enabled_.resize(nt_);
    ipa_next_k_.resize(nt_);
  }

  HistoryOutcome run(double horizon, std::uint64_t seed) {
    Rng rng(mix64(seed));
    outcome_ = {};
    for (std::size_t i = 0; i < net_.places.size(); ++i)
      marking_[i] = net_.places[i].initial_tokens;
    for (std::size_t i = 0; i < net_.variables.size(); ++i)
      vars_[i] = net_.variables[i].initial;
    std::fill(sched_.begin(), sched_.end(), kInf);
    std::fill(was_enabled_.begin(), was_enabled_.end(), 0);
    std::fill(ipa_next_k_.begin(), ipa_next_k_.end(), 1);
    instant_ = -1.0;
    instant_zero_firings_ = 0;

    double t = 0.0;
    double failed = 0.0;
    refresh(t, rng);
    if (!settle(t, rng)) return abort_outcome(failed, horizon);

    while (true) {
      double t_next = horizon;
      for (std::size_t i = 0; i < nt_; ++i) {
        if (sched_[i] < t_next) t_next = sched_[i];
        if (is_ipa_[i]) {
          const double due = static_cast<double>(ipa_next_k_[i]) * ipa_period_[i];
          if (due < t_next) t_next = due;
        }
      }
      if (net_.stat_predicate.eval(vars_)) failed += t_next - t;
      t = t_next;
      if (t >= horizon) break;

      // scheduled exponential / positive-Dirac firings first
      for (std::size_t i = 0; i < nt_; ++i) {
        if (sched_[i] == t) {
          fire(i, t, rng);
          if (!settle(t, rng)) return abort_outcome(failed, horizon);
        }
      }
      // calendar-scheduled firings: fire when enabled at the instant,
      // otherwise the instant simply passes
      for (std::size_t i = 0; i < nt_; ++i) {
        if (!is_ipa_[i]) continue;
        if (static_cast<double>(ipa_next_k_[i]) * ipa_period_[i] == t) {
          if (enabled(i)) {
            fire(i, t, rng);
            if (!settle(t, rng)) return abort_outcome(failed, horizon);
          }
          ipa_next_k_[i] += 1;
        }
      }
    }
    outcome_.failed_fraction = failed / horizon;
    return outcome_;
  }

 private:
  bool marking_enabled(std::size_t i) const {
    for (const auto& arc : net_.transitions[i].inputs) {
      if (marking_[static_cast<std::size_t>(arc.place)] < arc.weight) return false;
    }
    return true;
  }

  bool enabled(std::size_t i) const {
    return marking_enabled(i) && net_.transitions[i].guard.eval(vars_);
  }

  double sample_delay(std::size_t i, Rng& rng) {
    const auto& law = net_.transitions[i].law;
    if (const auto* e = std::get_if<ExpDelay>(&law)) {
      if (e->rate <= 0.0) return kInf;
      return -std::log(rng.next_unit()) / e->rate;
    }
    return std::get<DiracDelay>(law).delay;
  }

  // clocks: sample on enabling, keep while continuously enabled, drop on
  // disabling (memoryless resampling on re-enable)
  void refresh(double t, Rng& rng) {
    for (std::size_t i = 0; i < nt_; ++i) {
      if (is_ipa_[i] || is_dirac0_[i]) continue;
      const bool en = enabled(i);
      if (en && !was_enabled_[i]) {
        sched_[i] = t + sample_delay(i, rng);
        was_enabled_[i] = 1;
      } else if (!en) {
        sched_[i] = kInf;
        was_enabled_[i] = 0;
      }
    }
  }

  void fire(std::size_t i, double t, Rng& rng) {
    const auto& tr = net_.transitions[i];
    for (const auto& arc : tr.inputs) marking_[static_cast<std::size_t>(arc.place)] -= arc.weight;
    for (const auto& arc : tr.outputs) marking_[static_cast<std::size_t>(arc.place)] += arc.weight;
    for (const auto& a : tr.assignments) a.apply(vars_);
    ++outcome_.firings;
    if (opt_.trace) {
      char head[64];
      std::snprintf(head, sizeof(head), "%.9g ", t);
      *opt_.trace << head << tr.id;
      for (const auto& arc : tr.inputs)
        *opt_.trace << ' ' << net_.places[static_cast<std::size_t>(arc.place)].id << ":-"
                    << arc.weight;
      for (const auto& arc : tr.outputs)
        *opt_.trace << ' ' << net_.places[static_cast<std::size_t>(arc.place)].id << ":+"
                    << arc.weight;
      *opt_.trace << '\n';
    }
    // the fired transition's own clock restarts even if it stays enabled
    was_enabled_[i] = 0;
    sched_[i] = kInf;
    refresh(t, rng);
  }

  // fires every enabled zero-delay transition, lowest id first, until the
  // marking stabilizes
  bool settle(double t, Rng& rng) {
    if (t != instant_) {
      instant_ = t;
      instant_zero_firings_ = 0;
    }
    while (true) {
      bool fired = false;
      for (std::size_t i = 0; i < nt_; ++i) {
        if (is_dirac0_[i] && enabled(i)) {
          if (++instant_zero_firings_ > opt_.max_zero_firings) {
            outcome_.aborted = true;
            char msg[128];
            std::snprintf(msg, sizeof(msg),
                          "livelock guard: more than %llu zero-delay firings at t=%.6g",
                          static_cast<unsigned long long>(opt_.max_zero_firings), t);
            outcome_.abort_reason = msg;
            return false;
          }
          fire(i, t, rng);
          fired = true;
          break;
        }
      }
      if (!fired) break;
    }
    if (opt_.check_invariants) check_invariants();
    return true;
  }

  void check_invariants() const {
    for (const auto& group : net_.one_token_groups) {
      int tokens = 0;
      for (int p : group) tokens += marking_[static_cast<std::size_t>(p)];
      if (tokens != 1) throw std::logic_error("token group does not hold exactly one token");
    }
    for (const auto& c : net_.coherences) {
      int marked = 0;
      for (int p : c.places) marked += marking_[static_cast<std::size_t>(p)] > 0 ? 1 : 0;
      if (vars_[static_cast<std::size_t>(c.var)] != marked)
        throw std::logic_error("variable out of step with marking: " +
                               net_.variables[static_cast<std::size_t>(c.var)].name);
    }
  }

  HistoryOutcome abort_outcome(double failed, double horizon) {
    outcome_.failed_fraction = failed / horizon;
    return outcome_;
  }

  const PetriNet& net_;
  SimOptions opt_;
  std::size_t nt_;
  std::vector<char> is_dirac0_, is_ipa_;
  std::vector<double> ipa_period_;
  std::vector<int> marking_;
  std::vector<std::int64_t> vars_;
  std::vector<double> sched_;
  std::vector<char> was_enabled_;
  std::vector<std::int64_t> ipa_next_k_;
  double instant_ = -1.0;
  std::uint64_t instant_zero_firings_ = 0;
  HistoryOutcome outcome_;
};

}  // namespace

HistoryOutcome run_history(const PetriNet& net, double horizon, std::uint64_t seed,
                           const SimOptions& options) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  Simulator sim(net, options);
  return sim.run(horizon, seed);
}

double simulate_history(const PetriNet& net, double horizon, std::uint64_t seed) {
  const HistoryOutcome out = run_history(net, horizon, seed);
  if (out.aborted) throw EngineError(out.abort_reason);
  return out.failed_fraction;
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

constexpr std::uint64_t kBlockSize = 1024;

struct BlockTotals {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t aborted = 0;
};

McEstimate combine_blocks(const std::vector<BlockTotals>& blocks, std::uint64_t histories,
                          std::uint64_t master_seed) {
  double sum = 0.0, sum_sq = 0.0;
  std::uint64_t aborted = 0;
  for (const auto& b : blocks) {  // fixed order: bit-identical for any worker count
    sum += b.sum;
    sum_sq += b.sum_sq;
    aborted += b.aborted;
  }
  if (aborted * 10000 > histories) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "%llu of %llu histories aborted (> 0.01%%)",
                  static_cast<unsigned long long>(aborted),
                  static_cast<unsigned long long>(histories));
    throw EngineError(msg);
  }
  const std::uint64_t n = histories - aborted;
  McEstimate est;
  est.histories = n;
  est.seed = master_seed;
  est.mean = sum / static_cast<double>(n);
  const double var =
      std::max(0.0, (sum_sq - static_cast<double>(n) * est.mean * est.mean) /
                        static_cast<double>(n - 1));
  est.ci90_halfwidth = 1.645 * std::sqrt(var / static_cast<double>(n));
  return est;
}

void run_block(Simulator& sim, const PetriNet&, double horizon, std::uint64_t master_seed,
               std::uint64_t begin, std::uint64_t end, BlockTotals& totals) {
  for (std::uint64_t h = begin; h < end; ++h) {
    const HistoryOutcome out = sim.run(horizon, history_seed(master_seed, h));
    if (out.aborted) {
      ++totals.aborted;
      continue;
    }
    totals.sum += out.failed_fraction;
    totals.sum_sq += out.failed_fraction * out.failed_fraction;
  }
}

}  // namespace

McEstimate monte_carlo(const PetriNet& net, double horizon, std::uint64_t histories,
                       std::uint64_t master_seed, int threads) {
  if (histories < 2) throw std::invalid_argument("monte_carlo requires histories >= 2");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  net.validate();
  const std::uint64_t nblocks = (histories + kBlockSize - 1) / kBlockSize;
  std::vector<BlockTotals> blocks(nblocks);
#ifdef _OPENMP
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nt)
  {
    Simulator sim(net, {});
#pragma omp for schedule(dynamic)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nblocks); ++b) {
      const std::uint64_t begin = static_cast<std::uint64_t>(b) * kBlockSize;
      const std::uint64_t end = std::min(histories, begin + kBlockSize);
      run_block(sim, net, horizon, master_seed, begin, end, blocks[static_cast<std::size_t>(b)]);
    }
  }
#else
  (void)threads;
  Simulator sim(net, {});
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    const std::uint64_t begin = b * kBlockSize;
    const std::uint64_t end = std::min(histories, begin + kBlockSize);
    run_block(sim, net, horizon, master_seed, begin, end, blocks[b]);
  }
#endif
  return combine_blocks(blocks, histories, master_seed);
}

McEstimate monte_carlo_serial(const PetriNet& net, double horizon, std::uint64_t histories,
                              std::uint64_t master_seed) {
  if (histories < 2) throw std::invalid_argument("monte_carlo requires histories >= 2");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  net.validate();
  const std::uint64_t nblocks = (histories + kBlockSize - 1) / kBlockSize;
  std::vector<BlockTotals> blocks(nblocks);
  Simulator sim(net, {});
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    const std::uint64_t begin = b * kBlockSize;
    const std::uint64_t end = std::min(histories, begin + kBlockSize);
    run_block(sim, net, horizon, master_seed, begin, end, blocks[b]);
  }
  return combine_blocks(blocks, histories, master_seed);
}

// ---------------------------------------------------------------------------
// Case-study net

PetriNet build_case_net(const SafetyParams& p) {
  p.validate();
  const DerivedRates r = derive_rates(p);
  PetriNet net;
  net.variables.push_back({"nbOK", VarKind::kInt, p.n});
  net.variables.push_back({"CCF_DD", VarKind::kBool, 0});
  net.variables.push_back({"CCF_DUT", VarKind::kBool, 0});
  net.variables.push_back({"CCF_DUU", VarKind::kBool, 0});
  const int v_nbok = 0, v_ccf_dd = 1, v_ccf_dut = 2, v_ccf_duu = 3;

  struct Mode {
    const char* name;
    int ccf_var;
    double independent_rate;
    double ccf_rate;
  };
  const Mode modes[] = {
      {"DD", v_ccf_dd, r.dd_independent, r.dd_ccf},
      {"DUT", v_ccf_dut, r.dut_independent, r.dut_ccf},
      {"DUU", v_ccf_duu, r.duu_independent, r.duu_ccf},
  };

  const Assignment ok_minus{Assignment::Op::kAdd, v_nbok, -1};
  const Assignment ok_plus{Assignment::Op::kAdd, v_nbok, +1};

  for (int c = 1; c <= p.n; ++c) {
    const std::string ch = "C" + std::to_string(c);
    const int p_ok = static_cast<int>(net.places.size());
    net.places.push_back({ch + "_OK", "channel " + std::to_string(c) + " operating", 1});
    const int p_dd = static_cast<int>(net.places.size());
    net.places.push_back({ch + "_DD", "", 0});
    const int p_dut = static_cast<int>(net.places.size());
    net.places.push_back({ch + "_DUT", "", 0});
    const int p_duu = static_cast<int>(net.places.size());
    net.places.push_back({ch + "_DUU", "", 0});
    const int p_rep = static_cast<int>(net.places.size());
    net.places.push_back({ch + "_RepDUT", "", 0});
    net.one_token_groups.push_back({p_ok, p_dd, p_dut, p_duu, p_rep});

    const std::string tc = "c" + std::to_string(c);
    net.transitions.push_back({tc + "_fail_dd", ExpDelay{r.dd_independent},
                               Predicate::always(true), {ok_minus}, {{p_ok, 1}}, {{p_dd, 1}}});
    net.transitions.push_back({tc + "_fail_dut", ExpDelay{r.dut_independent},
                               Predicate::always(true), {ok_minus}, {{p_ok, 1}}, {{p_dut, 1}}});
    net.transitions.push_back({tc + "_fail_duu", ExpDelay{r.duu_independent},
                               Predicate::always(true), {ok_minus}, {{p_ok, 1}}, {{p_duu, 1}}});
    net.transitions.push_back({tc + "_repair_dd", ExpDelay{p.mu_dd}, Predicate::always(true),
                               {ok_plus}, {{p_dd, 1}}, {{p_ok, 1}}});
    net.transitions.push_back({tc + "_test_dut", IpaDelay{p.t1_hours}, Predicate::always(true),
                               {}, {{p_dut, 1}}, {{p_rep, 1}}});
    net.transitions.push_back({tc + "_repair_dut", ExpDelay{p.mu_dut}, Predicate::always(true),
                               {ok_plus}, {{p_rep, 1}}, {{p_ok, 1}}});
    // common-cause propagation: zero delay as soon as the mode flag is up
    const int mode_places[] = {p_dd, p_dut, p_duu};
    for (int x = 0; x < 3; ++x) {
      net.transitions.push_back({tc + "_ccf_" + modes[x].name, DiracDelay{0.0},
                                 Predicate::compare(modes[x].ccf_var, CmpOp::kEq, 1),
                                 {ok_minus},
                                 {{p_ok, 1}},
                                 {{mode_places[x], 1}}});
    }
  }

  for (const auto& mode : modes) {
    const std::string nm = std::string("CCF_") + mode.name;
    const int p_idle = static_cast<int>(net.places.size());
    net.places.push_back({nm + "_idle", "", 1});
    const int p_active = static_cast<int>(net.places.size());
    net.places.push_back({nm + "_active", "", 0});
    net.one_token_groups.push_back({p_idle, p_active});
    net.transitions.push_back({"ccf_" + std::string(mode.name) + "_occur",
                               ExpDelay{mode.ccf_rate},
                               Predicate::compare(v_nbok, CmpOp::kGt, 0),
                               {{Assignment::Op::kSet, mode.ccf_var, 1}},
                               {{p_idle, 1}},
                               {{p_active, 1}}});
    net.transitions.push_back({"ccf_" + std::string(mode.name) + "_reset",
                               DiracDelay{0.0},
                               Predicate::compare(v_nbok, CmpOp::kEq, 0),
                               {{Assignment::Op::kSet, mode.ccf_var, 0}},
                               {{p_active, 1}},
                               {{p_idle, 1}}});
  }

  PetriNet::VarCoherence ok_coherence;
  ok_coherence.var = v_nbok;
  for (int c = 1; c <= p.n; ++c) {
    ok_coherence.places.push_back(net.place_index("C" + std::to_string(c) + "_OK"));
  }
  net.coherences.push_back(ok_coherence);

  net.stat_predicate = Predicate::compare(v_nbok, CmpOp::kLt, p.m);
  net.validate();
  return net;
}

PfdResult pfd_avg_petri(const SafetyParams& params, std::uint64_t histories,
                        std::uint64_t master_seed, int threads) {
  params.validate();
  const PetriNet net = build_case_net(params);
  const McEstimate est = monte_carlo(net, params.t0_hours, histories, master_seed, threads);
  PfdResult result;
  result.method = Method::petri;
  result.value = est.mean;
  result.ci90_halfwidth = est.ci90_halfwidth;
  char line[160];
  std::snprintf(line, sizeof(line),
                "monte carlo: %llu histories, seed %llu, %zu places, %zu transitions",
                static_cast<unsigned long long>(est.histories),
                static_cast<unsigned long long>(est.seed), net.places.size(),
                net.transitions.size());
  result.diagnostics.emplace_back(line);
  return result;
}

}  // namespace pfd
