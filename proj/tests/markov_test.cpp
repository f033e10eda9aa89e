#include "pfd/markov.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

namespace pfd {
namespace {

double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

TEST(EnumerateStates, MultisetCounts) {
  EXPECT_EQ(enumerate_states(1).size(), 5u);
  EXPECT_EQ(enumerate_states(2).size(), 15u);  // C(6,4)
  EXPECT_EQ(enumerate_states(3).size(), 35u);
  EXPECT_THROW(enumerate_states(0), std::invalid_argument);
}

TEST(EnumerateStates, CanonicalOrderAllOkFirstNoDuplicates) {
  for (int n : {1, 2, 3, 4}) {
    const auto states = enumerate_states(n);
    EXPECT_EQ(states[0].ok(), n);
    for (const auto& s : states) EXPECT_EQ(s.total(), n);
    auto sorted = states;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
    // deterministic: a second enumeration is identical
    EXPECT_EQ(states, enumerate_states(n));
  }
  EXPECT_EQ(enumerate_states(2)[0].label(), "OK,OK");
  EXPECT_EQ(enumerate_states(2)[1].label(), "OK,DD");
}

TEST(BuildGenerator, RowsSumToZeroOffDiagonalsNonnegative) {
  for (CaseId id : kAllCaseIds) {
    const MarkovModel model = build_generator(load_case(id));
    const std::size_t ns = model.size();
    for (std::size_t i = 0; i < ns; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < ns; ++j) {
        if (j != i) EXPECT_GE(model.rate(i, j), 0.0);
        row += model.rate(i, j);
      }
      EXPECT_NEAR(row, 0.0, 1e-18);
    }
  }
}

TEST(BuildGenerator, SingleChannelExitRateRecombinesBetaSplits) {
  const SafetyParams p = load_case(CaseId::i);
  const MarkovModel model = build_generator(p);
  const DerivedRates r = derive_rates(p);
  // state 0 = {OK}: total exit = lambda_dd + lambda_dut + lambda_duu
  EXPECT_NEAR(-model.rate(0, 0), r.lambda_dd + r.lambda_dut + r.lambda_duu, 1e-20);
}

TEST(BuildGenerator, CommonCauseStrikesAllOperatingChannels) {
  const SafetyParams p = load_case(CaseId::iii);
  const MarkovModel model = build_generator(p);
  const auto states = model.states;
  auto find = [&](std::array<int, kChannelModeCount> counts) {
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (states[i].count == counts) return i;
    }
    throw std::logic_error("state not found");
  };
  const std::size_t all_ok = find({2, 0, 0, 0, 0});
  const std::size_t both_dd = find({0, 2, 0, 0, 0});
  // beta_dd * lambda_dd = 0.02 * 1.35e-6
  EXPECT_NEAR(model.rate(all_ok, both_dd), 2.7e-8, 1e-20);

  // {DUU,DUU} is absorbing: proof tests never reveal these failures
  const std::size_t both_duu = find({0, 0, 0, 2, 0});
  for (std::size_t j = 0; j < model.size(); ++j) {
    EXPECT_EQ(model.rate(both_duu, j), 0.0);
  }
  // and the linking map leaves it alone
  EXPECT_EQ(model.linking[both_duu], static_cast<int>(both_duu));
}

TEST(BuildGenerator, EffFlagsStatesBelowTheVotingThreshold) {
  const MarkovModel model = build_generator(load_case(CaseId::v));  // 2oo3
  for (std::size_t i = 0; i < model.size(); ++i) {
    EXPECT_EQ(model.eff[i], model.states[i].ok() < 2 ? 1.0 : 0.0);
  }
}

TEST(Linking, IdempotentWithoutDutAndPreservesEffMass) {
  const MarkovModel model = build_generator(load_case(CaseId::iv));
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& s = model.states[i];
    if (s.count[static_cast<int>(ChannelMode::kDut)] == 0) {
      EXPECT_EQ(model.linking[i], static_cast<int>(i));
    } else {
      // substitution keeps the OK count, so the failure indicator cannot
      // change across a phase boundary
      EXPECT_EQ(model.states[static_cast<std::size_t>(model.linking[i])].ok(), s.ok());
    }
  }

  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> p(model.size());
  double sum = 0.0;
  for (auto& v : p) sum += (v = unit(rng));
  for (auto& v : p) v /= sum;
  const std::vector<double> linked = apply_linking(model, p);
  double eff_before = 0.0, eff_after = 0.0, total_after = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    eff_before += model.eff[i] * p[i];
    eff_after += model.eff[i] * linked[i];
    total_after += linked[i];
  }
  EXPECT_NEAR(eff_before, eff_after, 1e-12);
  EXPECT_NEAR(total_after, 1.0, 1e-12);
}

TEST(TransientSolve, ZeroGeneratorIsIdentity) {
  MarkovModel model;
  model.states = enumerate_states(1);
  model.generator.assign(25, 0.0);
  model.eff = {0.0, 1.0, 1.0, 1.0, 1.0};
  model.linking = {0, 1, 2, 3, 4};
  model.phase_duration = 100.0;
  const std::vector<double> p0 = {0.25, 0.75, 0.0, 0.0, 0.0};
  const TransientResult r = transient_solve(model, p0, 1000.0);
  EXPECT_EQ(r.p_end, p0);
  EXPECT_DOUBLE_EQ(r.pfd_integral, 1000.0 * 0.75);
}

TEST(TransientSolve, TwoStateBirthDeathClosedForm) {
  // up <-> down with lambda = 1e-3, mu = 1e-1
  const double lambda = 1e-3, mu = 1e-1, horizon = 1e4;
  MarkovModel model;
  model.states = enumerate_states(1);
  model.states.resize(2);
  model.generator = {-lambda, lambda, mu, -mu};
  model.eff = {0.0, 1.0};
  model.linking = {0, 1};
  model.phase_duration = horizon;
  const std::vector<double> p0 = {1.0, 0.0};
  const TransientResult r = transient_solve(model, p0, horizon);
  const double s = lambda + mu;
  const double p_down = lambda / s * (1.0 - std::exp(-s * horizon));
  const double integral = lambda / s * (horizon - (1.0 - std::exp(-s * horizon)) / s);
  EXPECT_NEAR(r.p_end[1], p_down, 1e-9);
  EXPECT_NEAR(r.p_end[0], 1.0 - p_down, 1e-9);
  EXPECT_NEAR(r.pfd_integral, integral, 1e-9 * integral);
}

TEST(TransientSolve, RejectsNonStochasticInput) {
  const MarkovModel model = build_generator(load_case(CaseId::i));
  std::vector<double> p0(model.size(), 0.0);
  p0[0] = 0.5;  // sums to 0.5
  EXPECT_THROW(transient_solve(model, p0, 10.0), std::invalid_argument);
  p0[0] = 1.0;
  EXPECT_THROW(transient_solve(model, p0, -1.0), std::invalid_argument);
}

TEST(TransientSolve, ConservesProbabilityAcrossPhases) {
  const SafetyParams p = load_case(CaseId::iii);
  const MarkovModel model = build_generator(p);
  std::vector<double> prob(model.size(), 0.0);
  prob[0] = 1.0;
  for (int phase = 0; phase < p.phase_count(); ++phase) {
    const TransientResult r = transient_solve(model, prob, model.phase_duration);
    double mass = std::accumulate(r.p_end.begin(), r.p_end.end(), 0.0);
    EXPECT_NEAR(mass, 1.0, 1e-9);
    prob = apply_linking(model, r.p_end);
    mass = std::accumulate(prob.begin(), prob.end(), 0.0);
    EXPECT_NEAR(mass, 1.0, 1e-9);
  }
}

TEST(PfdMarkov, PublishedCasesAndPetriColumnStandIns) {
  // the study ran the state-space engine on i..iv only; for v and vi the
  // published Petri column is the reference since both engines share the
  // same hypotheses
  const struct {
    CaseId id;
    double expected;
    double tolerance;
  } table[] = {
      {CaseId::i, 7.41e-3, 0.01},  {CaseId::ii, 1.24e-1, 0.01}, {CaseId::iii, 4.29e-4, 0.01},
      {CaseId::iv, 2.83e-2, 0.01}, {CaseId::v, 5.47e-4, 0.02},  {CaseId::vi, 5.43e-2, 0.02},
  };
  for (const auto& t : table) {
    const PfdResult r = pfd_avg_markov(load_case(t.id));
    EXPECT_LT(rel_diff(r.value, t.expected), t.tolerance) << "case " << to_string(t.id);
    EXPECT_EQ(r.method, Method::markov);
    EXPECT_FALSE(r.ci90_halfwidth.has_value());
  }
}

TEST(PfdMarkov, DiagnosticsCarryStateCountAndPhases) {
  const PfdResult r = pfd_avg_markov(load_case(CaseId::v));
  ASSERT_FALSE(r.diagnostics.empty());
  EXPECT_NE(r.diagnostics[0].find("35 states"), std::string::npos);
  EXPECT_NE(r.diagnostics[0].find("16 phases"), std::string::npos);
}

TEST(PfdMarkov, SingleChannelResultIsBetaIndependent) {
  SafetyParams p = load_case(CaseId::i);
  const double reference = pfd_avg_markov(p).value;
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    p.beta_dd = unit(rng);
    p.beta_dut = unit(rng);
    p.beta_duu = unit(rng);
    EXPECT_NEAR(pfd_avg_markov(p).value, reference, 1e-9 * reference);
  }
}

TEST(Dump, SingleChannelModelGolden) {
  const MarkovModel model = build_generator(load_case(CaseId::i));
  const std::string dump = model.dump();
  EXPECT_NE(dump.find("states 5\n"), std::string::npos);
  EXPECT_NE(dump.find("state 0 OK eff=0 link=0\n"), std::string::npos);
  EXPECT_NE(dump.find("state 2 DUT eff=1 link=4\n"), std::string::npos);
  // OK -> DD at lambda_dd = 1.35e-6 (independent and common cause recombine)
  EXPECT_NE(dump.find("rate 0 1 1.350000e-06\n"), std::string::npos);
  // repair DD -> OK at mu
  EXPECT_NE(dump.find("rate 1 0 4.170000e-02\n"), std::string::npos);
}

}  // namespace
}  // namespace pfd
