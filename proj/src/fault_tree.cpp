#include "pfd/fault_tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pfd {

namespace {

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6e", v);
  return buf;
}

struct RepairableState {
  double working;
  double in_repair;
};

// Closed-form advance of w' = -lambda w + mu r, r' = -mu r over dt.
RepairableState advance(const PeriodicTestLaw& law, RepairableState s, double dt) {
  const double el = std::exp(-law.lambda * dt);
  const double em = std::exp(-law.mu * dt);
  double w;
  if (std::abs(law.mu - law.lambda) <= 1e-12 * (law.mu + law.lambda)) {
    w = s.working * el + law.mu * s.in_repair * dt * el;
  } else {
    w = s.working * el + law.mu * s.in_repair * (el - em) / (law.mu - law.lambda);
  }
  return {w, s.in_repair * em};
}

double periodic_test_unavailability(const PeriodicTestLaw& law, double t) {
  RepairableState s{1.0, 0.0};
  double seg_start = 0.0;
  double next_test = law.first_test;
  while (next_test <= t) {
    s = advance(law, s, next_test - seg_start);
    // test reveals everything failed-unrevealed; all of it joins the
    // repair pool (repairs already under way carry over)
    s.in_repair = 1.0 - s.working;
    seg_start = next_test;
    next_test += law.tau;
  }
  s = advance(law, s, t - seg_start);
  return 1.0 - s.working;
}

}  // namespace

double event_unavailability(const BasicEventLaw& law, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("event_unavailability requires t >= 0");
  return std::visit(
      [t](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Glm>) {
          const double s = l.lambda + l.mu;
          if (s == 0.0) return l.gamma;
          const double qi = l.lambda / s;
          return l.gamma * std::exp(-s * t) + qi * -std::expm1(-s * t);
        } else if constexpr (std::is_same_v<T, PeriodicTestLaw>) {
          return periodic_test_unavailability(l, t);
        } else {
          return -std::expm1(-l.lambda * t);
        }
      },
      law);
}

const BasicEvent* FaultTree::find_event(std::string_view id) const {
  for (const auto& e : events) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const Gate* FaultTree::find_gate(std::string_view id) const {
  for (const auto& g : gates) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

void FaultTree::validate() const {
  std::set<std::string> ids;
  for (const auto& e : events) {
    if (!ids.insert(e.id).second) throw std::invalid_argument("duplicate id: " + e.id);
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, Glm>) {
            if (l.lambda < 0 || l.mu < 0 || l.gamma < 0 || l.gamma > 1)
              throw std::invalid_argument("bad GLM law on " + e.id);
          } else if constexpr (std::is_same_v<T, PeriodicTestLaw>) {
            if (l.lambda < 0 || l.mu < 0 || l.tau <= 0 || l.first_test < 0)
              throw std::invalid_argument("bad periodic-test law on " + e.id);
          } else {
            if (l.lambda < 0) throw std::invalid_argument("bad exponential law on " + e.id);
          }
        },
        e.law);
  }
  for (const auto& g : gates) {
    if (!ids.insert(g.id).second) throw std::invalid_argument("duplicate id: " + g.id);
  }
  std::set<std::string> referenced;
  for (const auto& g : gates) {
    if (g.children.empty()) throw std::invalid_argument("gate without children: " + g.id);
    if (g.kind == GateKind::kVote &&
        (g.vote_k < 1 || g.vote_k > static_cast<int>(g.children.size())))
      throw std::invalid_argument("vote gate with k outside 1..n: " + g.id);
    for (const auto& c : g.children) {
      if (!ids.count(c)) throw std::invalid_argument("unknown child: " + c);
      referenced.insert(c);
    }
  }
  if (!find_gate(top_gate)) throw std::invalid_argument("top gate missing: " + top_gate);
  for (const auto& e : events) {
    if (!referenced.count(e.id)) throw std::invalid_argument("unreferenced event: " + e.id);
  }
  // acyclicity: DFS with colors over gate-to-gate edges
  std::unordered_map<std::string, int> color;  // 0 white, 1 grey, 2 black
  auto dfs = [&](auto&& self, const Gate& g) -> void {
    color[g.id] = 1;
    for (const auto& c : g.children) {
      if (const Gate* cg = find_gate(c)) {
        const int col = color[cg->id];
        if (col == 1) throw std::invalid_argument("cycle through gate: " + cg->id);
        if (col == 0) self(self, *cg);
      }
    }
    color[g.id] = 2;
  };
  dfs(dfs, *find_gate(top_gate));
}

std::string FaultTree::dump() const {
  std::string out;
  auto render = [&](auto&& self, const std::string& id, int depth) -> void {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    if (const Gate* g = find_gate(id)) {
      out += g->id;
      if (g->kind == GateKind::kOr) {
        out += " OR\n";
      } else {
        out += " VOTE " + std::to_string(g->vote_k) + "/" + std::to_string(g->children.size()) +
               "\n";
      }
      std::vector<std::string> kids = g->children;
      std::sort(kids.begin(), kids.end());
      for (const auto& c : kids) self(self, c, depth + 1);
      return;
    }
    const BasicEvent* e = find_event(id);
    out += e->id;
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, Glm>) {
            out += " GLM gamma=" + format_double(l.gamma) + " lambda=" + format_double(l.lambda) +
                   " mu=" + format_double(l.mu);
          } else if constexpr (std::is_same_v<T, PeriodicTestLaw>) {
            out += " PERIODIC-TEST lambda=" + format_double(l.lambda) +
                   " mu=" + format_double(l.mu) + " tau=" + format_double(l.tau) +
                   " first=" + format_double(l.first_test);
          } else {
            out += " EXPONENTIAL lambda=" + format_double(l.lambda);
          }
        },
        e->law);
    out += "\n";
  };
  render(render, top_gate, 0);
  return out;
}

FaultTree build_case_tree(const SafetyParams& p) {
  p.validate();
  const DerivedRates r = derive_rates(p);
  const double t1 = p.t1_hours;
  FaultTree tree;
  if (p.n == 1) {
    // single channel: independent and common-cause parts recombine
    tree.events.push_back({"ch1_dd", Glm{0.0, r.lambda_dd, p.mu_dd}, "channel 1 detected"});
    tree.events.push_back(
        {"ch1_dut", PeriodicTestLaw{r.lambda_dut, p.mu_dut, t1, t1}, "channel 1 test-revealed"});
    tree.events.push_back({"ch1_duu", Exponential{r.lambda_duu}, "channel 1 never revealed"});
    tree.gates.push_back({"ch1", GateKind::kOr, 0, {"ch1_dd", "ch1_dut", "ch1_duu"}});
    tree.gates.push_back({"system", GateKind::kVote, 1, {"ch1"}});
  } else {
    std::vector<std::string> channel_gates;
    for (int c = 1; c <= p.n; ++c) {
      const std::string ch = "ch" + std::to_string(c);
      tree.events.push_back(
          {ch + "_dd", Glm{0.0, r.dd_independent, p.mu_dd}, "channel " + std::to_string(c) + " detected"});
      tree.events.push_back({ch + "_dut", PeriodicTestLaw{r.dut_independent, p.mu_dut, t1, t1},
                             "channel " + std::to_string(c) + " test-revealed"});
      tree.events.push_back({ch + "_duu", Exponential{r.duu_independent},
                             "channel " + std::to_string(c) + " never revealed"});
      tree.gates.push_back({ch, GateKind::kOr, 0,
                            {ch + "_dd", ch + "_dut", ch + "_duu", "ccf_dd", "ccf_dut", "ccf_duu"}});
      channel_gates.push_back(ch);
    }
    // one repair completing invalidates an all-channels common-cause event,
    // hence the N*mu repair rates
    tree.events.push_back({"ccf_dd", Glm{0.0, r.dd_ccf, p.n * p.mu_dd}, "common cause detected"});
    tree.events.push_back({"ccf_dut", PeriodicTestLaw{r.dut_ccf, p.n * p.mu_dut, t1, t1},
                           "common cause test-revealed"});
    tree.events.push_back({"ccf_duu", Exponential{r.duu_ccf}, "common cause never revealed"});
    tree.gates.push_back({"system", GateKind::kVote, p.n - p.m + 1, channel_gates});
  }
  tree.top_gate = "system";
  tree.validate();
  return tree;
}

// ---------------------------------------------------------------------------
// BDD construction

namespace {
constexpr int kTerminalVar = 1 << 20;
}

class BddBuilder {
 public:
  explicit BddBuilder(const FaultTree& tree) : tree_(tree) {
    nodes_.push_back({kTerminalVar, 0, 0});  // false
    nodes_.push_back({kTerminalVar, 1, 1});  // true
    for (std::size_t i = 0; i < tree.events.size(); ++i) {
      var_of_[tree.events[i].id] = static_cast<int>(i);
    }
  }

  std::uint32_t build(const std::string& id) {
    if (auto it = var_of_.find(id); it != var_of_.end()) {
      return mk(it->second, 0, 1);
    }
    if (auto it = gate_cache_.find(id); it != gate_cache_.end()) return it->second;
    const Gate* g = tree_.find_gate(id);
    std::vector<std::uint32_t> kids;
    kids.reserve(g->children.size());
    for (const auto& c : g->children) kids.push_back(build(c));
    std::uint32_t result;
    if (g->kind == GateKind::kOr) {
      result = 0;
      for (std::uint32_t k : kids) result = apply(true, result, k);
    } else {
      result = at_least(g->vote_k, kids);
    }
    gate_cache_[id] = result;
    return result;
  }

  std::vector<CompiledTree::Node> take_nodes() { return std::move(nodes_); }

 private:
  std::uint32_t mk(int var, std::uint32_t lo, std::uint32_t hi) {
    if (lo == hi) return lo;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(var) << 42) | (static_cast<std::uint64_t>(lo) << 21) | hi;
    auto [it, inserted] = unique_.try_emplace(key, 0);
    if (inserted) {
      nodes_.push_back({var, lo, hi});
      it->second = static_cast<std::uint32_t>(nodes_.size() - 1);
    }
    return it->second;
  }

  std::uint32_t apply(bool is_or, std::uint32_t u, std::uint32_t v) {
    if (is_or) {
      if (u == 1 || v == 1) return 1;
      if (u == 0) return v;
      if (v == 0) return u;
    } else {
      if (u == 0 || v == 0) return 0;
      if (u == 1) return v;
      if (v == 1) return u;
    }
    if (u == v) return u;
    if (u > v) std::swap(u, v);
    const std::uint64_t key = (static_cast<std::uint64_t>(is_or ? 1 : 2) << 56) |
                              (static_cast<std::uint64_t>(u) << 28) | v;
    if (auto it = op_cache_.find(key); it != op_cache_.end()) return it->second;
    const int vu = nodes_[u].var, vv = nodes_[v].var;
    const int var = std::min(vu, vv);
    const std::uint32_t u0 = vu == var ? nodes_[u].low : u;
    const std::uint32_t u1 = vu == var ? nodes_[u].high : u;
    const std::uint32_t v0 = vv == var ? nodes_[v].low : v;
    const std::uint32_t v1 = vv == var ? nodes_[v].high : v;
    const std::uint32_t r = mk(var, apply(is_or, u0, v0), apply(is_or, u1, v1));
    op_cache_[key] = r;
    return r;
  }

  std::uint32_t negate(std::uint32_t u) {
    if (u <= 1) return u ^ 1u;
    const std::uint64_t key = (3ull << 56) | u;
    if (auto it = op_cache_.find(key); it != op_cache_.end()) return it->second;
    const std::uint32_t r = mk(nodes_[u].var, negate(nodes_[u].low), negate(nodes_[u].high));
    op_cache_[key] = r;
    return r;
  }

  std::uint32_t ite(std::uint32_t f, std::uint32_t g, std::uint32_t h) {
    return apply(true, apply(false, f, g), apply(false, negate(f), h));
  }

  // "at least k of the children fire", composed child by child
  std::uint32_t at_least(int k, const std::vector<std::uint32_t>& kids) {
    const int n = static_cast<int>(kids.size());
    std::vector<std::uint32_t> suffix(static_cast<std::size_t>(k) + 1);
    suffix[0] = 1;
    for (int j = 1; j <= k; ++j) suffix[static_cast<std::size_t>(j)] = 0;
    for (int i = n - 1; i >= 0; --i) {
      std::vector<std::uint32_t> next(static_cast<std::size_t>(k) + 1);
      next[0] = 1;
      for (int j = 1; j <= k; ++j) {
        next[static_cast<std::size_t>(j)] =
            ite(kids[static_cast<std::size_t>(i)], suffix[static_cast<std::size_t>(j - 1)],
                suffix[static_cast<std::size_t>(j)]);
      }
      suffix = std::move(next);
    }
    return suffix[static_cast<std::size_t>(k)];
  }

  const FaultTree& tree_;
  std::vector<CompiledTree::Node> nodes_;
  std::unordered_map<std::string, int> var_of_;
  std::unordered_map<std::uint64_t, std::uint32_t> unique_;
  std::unordered_map<std::uint64_t, std::uint32_t> op_cache_;
  std::unordered_map<std::string, std::uint32_t> gate_cache_;
};

CompiledTree::CompiledTree(const FaultTree& tree) {
  tree.validate();
  BddBuilder builder(tree);
  root_ = builder.build(tree.top_gate);
  nodes_ = builder.take_nodes();
  event_ids_.reserve(tree.events.size());
  for (const auto& e : tree.events) event_ids_.push_back(e.id);
}

double CompiledTree::probability(std::span<const double> event_probs) const {
  if (event_probs.size() != event_ids_.size())
    throw std::invalid_argument("event probability count mismatch");
  // children always precede parents, so one ascending pass suffices
  std::vector<double> val(nodes_.size());
  val[0] = 0.0;
  val[1] = 1.0;
  for (std::size_t i = 2; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    const double q = event_probs[static_cast<std::size_t>(nd.var)];
    val[i] = q * val[nd.high] + (1.0 - q) * val[nd.low];
  }
  return val[root_];
}

double top_probability(const FaultTree& tree, const std::map<std::string, double>& event_probs) {
  CompiledTree compiled(tree);
  std::vector<double> q;
  q.reserve(tree.events.size());
  for (const auto& e : tree.events) {
    auto it = event_probs.find(e.id);
    if (it == event_probs.end())
      throw std::invalid_argument("missing probability for event " + e.id);
    if (!(it->second >= 0.0 && it->second <= 1.0))
      throw std::invalid_argument("probability outside [0,1] for event " + e.id);
    q.push_back(it->second);
  }
  return compiled.probability(q);
}

// ---------------------------------------------------------------------------
// Time averaging

namespace {

struct Quadrature {
  double value = 0.0;
  int panels = 0;
  double last_change = 0.0;
};

// Top probability at every Simpson node, one test interval after another.
// Points are independent; the writer index fully determines the result.
void eval_grid(const CompiledTree& compiled, const std::vector<BasicEventLaw>& laws, double t1,
               int phases, int panels, std::vector<double>& out, int threads) {
  const std::int64_t total = static_cast<std::int64_t>(phases) * (panels + 1);
  out.resize(static_cast<std::size_t>(total));
  const double h = t1 / panels;
#ifdef _OPENMP
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nt)
  {
    std::vector<double> q(laws.size());
#pragma omp for schedule(static)
    for (std::int64_t idx = 0; idx < total; ++idx) {
      const int k = static_cast<int>(idx / (panels + 1));
      const int i = static_cast<int>(idx % (panels + 1));
      const double t = k * t1 + i * h;
      for (std::size_t e = 0; e < laws.size(); ++e) q[e] = event_unavailability(laws[e], t);
      out[static_cast<std::size_t>(idx)] = compiled.probability(q);
    }
  }
#else
  (void)threads;
  std::vector<double> q(laws.size());
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const int k = static_cast<int>(idx / (panels + 1));
    const int i = static_cast<int>(idx % (panels + 1));
    const double t = k * t1 + i * h;
    for (std::size_t e = 0; e < laws.size(); ++e) q[e] = event_unavailability(laws[e], t);
    out[static_cast<std::size_t>(idx)] = compiled.probability(q);
  }
#endif
}

void eval_grid_serial(const CompiledTree& compiled, const std::vector<BasicEventLaw>& laws,
                      double t1, int phases, int panels, std::vector<double>& out) {
  const std::int64_t total = static_cast<std::int64_t>(phases) * (panels + 1);
  out.resize(static_cast<std::size_t>(total));
  const double h = t1 / panels;
  std::vector<double> q(laws.size());
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const int k = static_cast<int>(idx / (panels + 1));
    const int i = static_cast<int>(idx % (panels + 1));
    const double t = k * t1 + i * h;
    for (std::size_t e = 0; e < laws.size(); ++e) q[e] = event_unavailability(laws[e], t);
    out[static_cast<std::size_t>(idx)] = compiled.probability(q);
  }
}

double combine_simpson(const std::vector<double>& grid, double t1, int phases, int panels,
                       double t0) {
  const double h = t1 / panels;
  double total = 0.0;
  for (int k = 0; k < phases; ++k) {
    const double* v = grid.data() + static_cast<std::ptrdiff_t>(k) * (panels + 1);
    double s = v[0] + v[panels];
    for (int i = 1; i < panels; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * v[i];
    total += s * h / 3.0;
  }
  return total / t0;
}

PfdResult average_tree(const SafetyParams& p, bool parallel, int threads) {
  p.validate();
  const FaultTree tree = build_case_tree(p);
  const CompiledTree compiled(tree);
  std::vector<BasicEventLaw> laws;
  laws.reserve(tree.events.size());
  for (const auto& e : tree.events) laws.push_back(e.law);

  const int phases = p.phase_count();
  std::vector<double> grid;
  Quadrature quad;
  quad.panels = 256;
  if (parallel) {
    eval_grid(compiled, laws, p.t1_hours, phases, quad.panels, grid, threads);
  } else {
    eval_grid_serial(compiled, laws, p.t1_hours, phases, quad.panels, grid);
  }
  quad.value = combine_simpson(grid, p.t1_hours, phases, quad.panels, p.t0_hours);
  bool converged = false;
  while (quad.panels < 4096) {
    const int panels = quad.panels * 2;
    if (parallel) {
      eval_grid(compiled, laws, p.t1_hours, phases, panels, grid, threads);
    } else {
      eval_grid_serial(compiled, laws, p.t1_hours, phases, panels, grid);
    }
    const double refined = combine_simpson(grid, p.t1_hours, phases, panels, p.t0_hours);
    quad.last_change = std::abs(refined - quad.value) / std::max(std::abs(refined), 1e-300);
    quad.value = refined;
    quad.panels = panels;
    if (quad.last_change < 1e-4) {
      converged = true;
      break;
    }
  }
  if (!converged && quad.last_change > 1e-3) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "quadrature did not converge: relative change %.3e after %d panels per interval",
                  quad.last_change, quad.panels);
    throw EngineError(msg);
  }

  PfdResult result;
  result.method = Method::faulttree;
  result.value = std::clamp(quad.value, 0.0, 1.0);
  char line[192];
  std::snprintf(line, sizeof(line),
                "grid: %d Simpson panels per test interval, %d intervals, last refinement "
                "change %.2e",
                quad.panels, phases, quad.last_change);
  result.diagnostics.emplace_back(line);
  if (!converged) {
    std::snprintf(line, sizeof(line), "grid capped before reaching 1e-4 relative change");
    result.diagnostics.emplace_back(line);
  }
  std::snprintf(line, sizeof(line), "tree: %zu basic events, %zu bdd nodes", tree.events.size(),
                compiled.node_count());
  result.diagnostics.emplace_back(line);
  return result;
}

}  // namespace

PfdResult pfd_avg_fault_tree(const SafetyParams& params, int threads) {
  return average_tree(params, true, threads);
}

PfdResult pfd_avg_fault_tree_serial(const SafetyParams& params) {
  return average_tree(params, false, 0);
}

}  // namespace pfd
