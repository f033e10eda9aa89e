#include "pfd/fault_tree.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

namespace pfd {
namespace {

double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ---------------------------------------------------------------------------
// independent oracles, deliberately not sharing code with the library

// straight boolean evaluation of the tree for one outcome of the events
bool eval_node(const FaultTree& tree, const std::string& id,
               const std::map<std::string, bool>& outcome) {
  if (const Gate* g = tree.find_gate(id)) {
    int fired = 0;
    for (const auto& c : g->children) fired += eval_node(tree, c, outcome) ? 1 : 0;
    if (g->kind == GateKind::kOr) return fired > 0;
    return fired >= g->vote_k;
  }
  return outcome.at(id);
}

// exhaustive 2^events enumeration; exact for any sharing structure
double brute_force_top(const FaultTree& tree, const std::map<std::string, double>& probs) {
  const std::size_t ne = tree.events.size();
  double total = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << ne); ++mask) {
    double weight = 1.0;
    std::map<std::string, bool> outcome;
    for (std::size_t b = 0; b < ne; ++b) {
      const bool up = (mask >> b) & 1;
      const double q = probs.at(tree.events[b].id);
      weight *= up ? q : 1.0 - q;
      outcome[tree.events[b].id] = up;
    }
    if (weight == 0.0) continue;
    if (eval_node(tree, tree.top_gate, outcome)) total += weight;
  }
  return total;
}

// fixed-step RK4 on w' = -lw + mr, f' = lw, r' = -mr with the test jumps
double periodic_ode_oracle(double lambda, double mu, double tau, double t) {
  double w = 1.0, f = 0.0, r = 0.0;
  double now = 0.0;
  double next_test = tau;
  const double dt_target = tau / 20000.0;
  auto deriv = [&](double wv, double rv, double& dw, double& df, double& dr) {
    dw = -lambda * wv + mu * rv;
    df = lambda * wv;
    dr = -mu * rv;
  };
  while (now < t - 1e-12) {
    double bound = std::min(t, next_test);
    while (now < bound - 1e-12) {
      const double h = std::min(dt_target, bound - now);
      double k1w, k1f, k1r, k2w, k2f, k2r, k3w, k3f, k3r, k4w, k4f, k4r;
      deriv(w, r, k1w, k1f, k1r);
      deriv(w + 0.5 * h * k1w, r + 0.5 * h * k1r, k2w, k2f, k2r);
      deriv(w + 0.5 * h * k2w, r + 0.5 * h * k2r, k3w, k3f, k3r);
      deriv(w + h * k3w, r + h * k3r, k4w, k4f, k4r);
      w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
      f += h / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f);
      r += h / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r);
      now += h;
    }
    if (std::abs(now - next_test) < 1e-9 && next_test <= t) {
      r += f;
      f = 0.0;
      next_test += tau;
    }
  }
  return f + r;
}

// ---------------------------------------------------------------------------

TEST(EventLaws, GlmStartsAtZeroAndReachesSteadyState) {
  const Glm law{0.0, 1.35e-6 * 0.98, 0.0417};
  EXPECT_EQ(event_unavailability(BasicEventLaw{law}, 0.0), 0.0);
  // lambda/(lambda+mu)
  EXPECT_NEAR(event_unavailability(BasicEventLaw{law}, 1e7), 3.1725612158635826e-5, 1e-12);
  EXPECT_THROW(event_unavailability(BasicEventLaw{law}, -1.0), std::invalid_argument);
}

TEST(EventLaws, GlmWithStartupFailureProbability) {
  const Glm law{0.3, 1e-3, 1e-1};
  EXPECT_DOUBLE_EQ(event_unavailability(BasicEventLaw{law}, 0.0), 0.3);
  // converges to the same steady state regardless of gamma
  EXPECT_NEAR(event_unavailability(BasicEventLaw{law}, 1e4), 1e-3 / 0.101, 1e-12);
}

TEST(EventLaws, ExponentialDirectEvaluation) {
  const Exponential law{1e-7};
  EXPECT_EQ(event_unavailability(BasicEventLaw{law}, 0.0), 0.0);
  EXPECT_NEAR(event_unavailability(BasicEventLaw{law}, 70128.0), 6.988267698286225e-3, 1e-15);
}

TEST(EventLaws, PeriodicTestFirstIntervalIgnoresRepairRate) {
  // before the first test nothing is revealed, so any repair rate reduces
  // to the plain exponential
  const double lambda = 3e-5, tau = 4000.0;
  for (double mu : {1e-2, 1.0, 1e6}) {
    const PeriodicTestLaw law{lambda, mu, tau, tau};
    const double just_before = tau * (1.0 - 1e-12);
    EXPECT_NEAR(event_unavailability(BasicEventLaw{law}, just_before),
                -std::expm1(-lambda * just_before), 1e-12);
  }
}

TEST(EventLaws, PeriodicTestMatchesOdeOracle) {
  const double lambda = 2e-4, mu = 5e-3, tau = 1500.0;
  const PeriodicTestLaw law{lambda, mu, tau, tau};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const double t = unit(rng) * 6.0 * tau;
    const double got = event_unavailability(BasicEventLaw{law}, t);
    const double want = periodic_ode_oracle(lambda, mu, tau, t);
    EXPECT_NEAR(got, want, 1e-9) << "t = " << t;
  }
}

TEST(EventLaws, PeriodicTestContinuousAcrossTests) {
  const PeriodicTestLaw law{1e-5, 0.04, 4383.0, 4383.0};
  const double before = event_unavailability(BasicEventLaw{law}, 4383.0 * (1 - 1e-13));
  const double at = event_unavailability(BasicEventLaw{law}, 4383.0);
  EXPECT_NEAR(before, at, 1e-12);
}

TEST(BuildCaseTree, EventCountsAndTopGate) {
  const FaultTree two = build_case_tree(load_case(CaseId::iii));
  EXPECT_EQ(two.events.size(), 9u);  // 3 per channel + 3 shared
  const Gate* top2 = two.find_gate(two.top_gate);
  ASSERT_NE(top2, nullptr);
  EXPECT_EQ(top2->kind, GateKind::kVote);
  EXPECT_EQ(top2->vote_k, 2);
  EXPECT_EQ(top2->children.size(), 2u);

  const FaultTree one = build_case_tree(load_case(CaseId::i));
  EXPECT_EQ(one.events.size(), 3u);
  const Gate* top1 = one.find_gate(one.top_gate);
  EXPECT_EQ(top1->vote_k, 1);
  EXPECT_EQ(top1->children.size(), 1u);

  const FaultTree three = build_case_tree(load_case(CaseId::v));
  EXPECT_EQ(three.events.size(), 12u);
  const Gate* top3 = three.find_gate(three.top_gate);
  EXPECT_EQ(top3->vote_k, 2);
  EXPECT_EQ(top3->children.size(), 3u);
}

TEST(BuildCaseTree, CommonCauseRepairRatesScaleWithChannelCount) {
  const SafetyParams p = load_case(CaseId::v);
  const FaultTree tree = build_case_tree(p);
  const BasicEvent* ccf_dd = tree.find_event("ccf_dd");
  ASSERT_NE(ccf_dd, nullptr);
  const auto& glm = std::get<Glm>(ccf_dd->law);
  EXPECT_DOUBLE_EQ(glm.mu, 3.0 * p.mu_dd);
  EXPECT_DOUBLE_EQ(glm.lambda, p.beta_dd * derive_rates(p).lambda_dd);
  const auto& pt = std::get<PeriodicTestLaw>(tree.find_event("ccf_dut")->law);
  EXPECT_DOUBLE_EQ(pt.mu, 3.0 * p.mu_dut);
  EXPECT_DOUBLE_EQ(pt.first_test, pt.tau);
}

TEST(TreeValidation, CatchesStructuralMistakes) {
  FaultTree t;
  t.events.push_back({"e1", Exponential{1e-5}, ""});
  t.gates.push_back({"g1", GateKind::kVote, 3, {"e1"}});  // k > children
  t.top_gate = "g1";
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t.gates[0].vote_k = 1;
  EXPECT_NO_THROW(t.validate());
  t.gates.push_back({"g2", GateKind::kOr, 0, {"g3"}});
  t.gates.push_back({"g3", GateKind::kOr, 0, {"g2"}});  // cycle
  t.top_gate = "g2";
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(TopProbability, TwoOfTwoIsProduct) {
  FaultTree t;
  t.events.push_back({"a", Exponential{0}, ""});
  t.events.push_back({"b", Exponential{0}, ""});
  t.gates.push_back({"top", GateKind::kVote, 2, {"a", "b"}});
  t.top_gate = "top";
  EXPECT_NEAR(top_probability(t, {{"a", 0.1}, {"b", 0.1}}), 0.01, 1e-15);
  EXPECT_THROW(top_probability(t, {{"a", 0.1}}), std::invalid_argument);
}

TEST(TopProbability, SharedEventIsExact) {
  // only the shared common-cause event can fail both channels at once: the
  // top probability equals its probability, with no squaring artifact
  const FaultTree tree = build_case_tree(load_case(CaseId::iii));
  std::map<std::string, double> probs;
  for (const auto& e : tree.events) probs[e.id] = 0.0;
  probs["ccf_dd"] = 0.37;
  EXPECT_NEAR(top_probability(tree, probs), 0.37, 1e-15);
}

TEST(TopProbability, MatchesBruteForceOnAllCaseTrees) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (CaseId id : kAllCaseIds) {
    const SafetyParams p = load_case(id);
    const FaultTree tree = build_case_tree(p);
    for (int trial = 0; trial < 10; ++trial) {
      const double t = unit(rng) * p.t0_hours;
      std::map<std::string, double> probs;
      for (const auto& e : tree.events) {
        probs[e.id] = event_unavailability(e.law, t);
      }
      const double exact = top_probability(tree, probs);
      const double brute = brute_force_top(tree, probs);
      EXPECT_NEAR(exact, brute, 1e-12) << "case " << to_string(id) << " t=" << t;
    }
  }
}

TEST(TopProbability, CaseIiiTreeJustBeforeFirstTest) {
  const SafetyParams p = load_case(CaseId::iii);
  const FaultTree tree = build_case_tree(p);
  const double t = p.t1_hours * (1.0 - 1e-12);
  std::map<std::string, double> probs;
  for (const auto& e : tree.events) probs[e.id] = event_unavailability(e.law, t);
  EXPECT_NEAR(top_probability(tree, probs), brute_force_top(tree, probs), 1e-12);
}

TEST(PfdFaultTree, PublishedSixCases) {
  const struct {
    CaseId id;
    double expected;
  } table[] = {
      {CaseId::i, 7.43e-3},  {CaseId::ii, 1.27e-1}, {CaseId::iii, 4.31e-4},
      {CaseId::iv, 2.93e-2}, {CaseId::v, 5.48e-4},  {CaseId::vi, 5.59e-2},
  };
  for (const auto& t : table) {
    const PfdResult r = pfd_avg_fault_tree(load_case(t.id));
    EXPECT_LT(rel_diff(r.value, t.expected), 0.02) << "case " << to_string(t.id);
    EXPECT_EQ(r.method, Method::faulttree);
    ASSERT_FALSE(r.diagnostics.empty());
    EXPECT_NE(r.diagnostics[0].find("panels"), std::string::npos);
  }
}

TEST(PfdFaultTree, ZeroRatesGiveZero) {
  SafetyParams p = load_case(CaseId::iii);
  p.lambda_d = 0.0;
  EXPECT_EQ(pfd_avg_fault_tree(p).value, 0.0);
}

TEST(PfdFaultTree, TopStartsAtZeroAndGrowsWithinFirstInterval) {
  for (CaseId id : kAllCaseIds) {
    const SafetyParams p = load_case(id);
    const FaultTree tree = build_case_tree(p);
    std::map<std::string, double> probs;
    for (const auto& e : tree.events) probs[e.id] = event_unavailability(e.law, 0.0);
    EXPECT_EQ(top_probability(tree, probs), 0.0) << "case " << to_string(id);

    double prev = 0.0;
    for (int i = 1; i <= 40; ++i) {
      const double t = p.t1_hours * i / 41.0;
      for (const auto& e : tree.events) probs[e.id] = event_unavailability(e.law, t);
      const double q = top_probability(tree, probs);
      EXPECT_GE(q, prev - 1e-15);
      prev = q;
    }
  }
}

TEST(PfdFaultTree, ParallelMatchesSerialReferenceBitwise) {
  for (CaseId id : {CaseId::i, CaseId::iv}) {
    const SafetyParams p = load_case(id);
    const double serial = pfd_avg_fault_tree_serial(p).value;
    const double one = pfd_avg_fault_tree(p, 1).value;
    const double two = pfd_avg_fault_tree(p, 2).value;
    EXPECT_EQ(serial, one);
    EXPECT_EQ(serial, two);
  }
}

TEST(Dump, SingleChannelTreeGolden) {
  const FaultTree tree = build_case_tree(load_case(CaseId::i));
  EXPECT_EQ(tree.dump(),
            "system VOTE 1/1\n"
            "  ch1 OR\n"
            "    ch1_dd GLM gamma=0.000000e+00 lambda=1.350000e-06 mu=4.170000e-02\n"
            "    ch1_dut PERIODIC-TEST lambda=1.215000e-06 mu=4.170000e-02 tau=4.383000e+03 "
            "first=4.383000e+03\n"
            "    ch1_duu EXPONENTIAL lambda=1.350000e-07\n");
}

}  // namespace
}  // namespace pfd
