#include "pfd/markov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace pfd {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::string_view to_string(ChannelMode mode) {
  switch (mode) {
    case ChannelMode::kOk: return "OK";
    case ChannelMode::kDd: return "DD";
    case ChannelMode::kDut: return "DUT";
    case ChannelMode::kDuu: return "DUU";
    case ChannelMode::kRepDut: return "RepDUT";
  }
  return "?";
}

int MarkovState::total() const { return std::accumulate(count.begin(), count.end(), 0); }

std::string MarkovState::label() const {
  std::string out;
  for (int mode = 0; mode < kChannelModeCount; ++mode) {
    for (int i = 0; i < count[static_cast<std::size_t>(mode)]; ++i) {
      if (!out.empty()) out += ',';
      out += to_string(static_cast<ChannelMode>(mode));
    }
  }
  return out;
}

std::vector<MarkovState> enumerate_states(int n) {
  if (n < 1) throw std::invalid_argument("enumerate_states requires n >= 1");
  std::vector<MarkovState> out;
  MarkovState cur{};
  // nondecreasing mode sequences in lexicographic order; taking the largest
  // OK count first puts the all-OK state at index 0
  auto gen = [&](auto&& self, int mode, int remaining) -> void {
    if (mode == kChannelModeCount - 1) {
      cur.count[static_cast<std::size_t>(mode)] = remaining;
      out.push_back(cur);
      cur.count[static_cast<std::size_t>(mode)] = 0;
      return;
    }
    for (int take = remaining; take >= 0; --take) {
      cur.count[static_cast<std::size_t>(mode)] = take;
      self(self, mode + 1, remaining - take);
    }
    cur.count[static_cast<std::size_t>(mode)] = 0;
  };
  gen(gen, 0, n);
  return out;
}

MarkovModel build_generator(const SafetyParams& p) {
  p.validate();
  const DerivedRates r = derive_rates(p);
  MarkovModel model;
  model.states = enumerate_states(p.n);
  model.phase_duration = p.t1_hours;
  model.initial_state = 0;
  const std::size_t ns = model.states.size();
  model.generator.assign(ns * ns, 0.0);
  std::map<std::array<int, kChannelModeCount>, int> index;
  for (std::size_t i = 0; i < ns; ++i) index[model.states[i].count] = static_cast<int>(i);

  struct FailureMode {
    int mode;
    double independent;
    double ccf;
  };
  const FailureMode failures[] = {
      {static_cast<int>(ChannelMode::kDd), r.dd_independent, r.dd_ccf},
      {static_cast<int>(ChannelMode::kDut), r.dut_independent, r.dut_ccf},
      {static_cast<int>(ChannelMode::kDuu), r.duu_independent, r.duu_ccf},
  };
  const std::pair<int, double> repairs[] = {
      {static_cast<int>(ChannelMode::kDd), p.mu_dd},
      {static_cast<int>(ChannelMode::kRepDut), p.mu_dut},
  };

  auto add_rate = [&](std::size_t from, const std::array<int, kChannelModeCount>& to,
                      double rate) {
    if (rate <= 0.0) return;
    const std::size_t j = static_cast<std::size_t>(index.at(to));
    model.generator[from * ns + j] += rate;
  };

  for (std::size_t i = 0; i < ns; ++i) {
    const auto& c = model.states[i].count;
    const int ok = c[0];
    for (const auto& fm : failures) {
      if (ok >= 1) {
        auto t = c;
        t[0] -= 1;
        t[static_cast<std::size_t>(fm.mode)] += 1;
        add_rate(i, t, ok * fm.independent);
        // a common cause strikes every channel still operating
        auto all = c;
        all[0] = 0;
        all[static_cast<std::size_t>(fm.mode)] += ok;
        add_rate(i, all, fm.ccf);
      }
    }
    for (const auto& [mode, mu] : repairs) {
      if (c[static_cast<std::size_t>(mode)] >= 1) {
        auto t = c;
        t[static_cast<std::size_t>(mode)] -= 1;
        t[0] += 1;
        add_rate(i, t, c[static_cast<std::size_t>(mode)] * mu);
      }
    }
  }
  for (std::size_t i = 0; i < ns; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ns; ++j) {
      if (j != i) row += model.generator[i * ns + j];
    }
    model.generator[i * ns + i] = -row;
  }

  model.eff.resize(ns);
  model.linking.resize(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    model.eff[i] = model.states[i].ok() < p.m ? 1.0 : 0.0;
    auto t = model.states[i].count;
    t[static_cast<std::size_t>(ChannelMode::kRepDut)] +=
        t[static_cast<std::size_t>(ChannelMode::kDut)];
    t[static_cast<std::size_t>(ChannelMode::kDut)] = 0;
    model.linking[i] = index.at(t);
  }
  return model;
}

std::string MarkovModel::dump() const {
  std::string out = "states " + std::to_string(states.size()) + "\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    out += "state " + std::to_string(i) + " " + states[i].label() + " eff=" +
           (eff[i] > 0.5 ? "1" : "0") + " link=" + std::to_string(linking[i]) + "\n";
  }
  char line[96];
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = 0; j < states.size(); ++j) {
      const double v = generator[i * states.size() + j];
      if (v != 0.0) {
        std::snprintf(line, sizeof(line), "rate %zu %zu %.6e\n", i, j, v);
        out += line;
      }
    }
  }
  return out;
}

TransientResult transient_solve(const MarkovModel& model, std::span<const double> p0,
                                double duration) {
  const std::size_t ns = model.size();
  if (p0.size() != ns) throw std::invalid_argument("p0 size mismatch");
  double sum = 0.0;
  for (double v : p0) {
    if (!(v >= -1e-12)) throw std::invalid_argument("p0 has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("p0 does not sum to 1");
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");

  double rate_bound = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    rate_bound = std::max(rate_bound, -model.generator[i * ns + i]);
  }
  TransientResult result;
  result.p_end.assign(p0.begin(), p0.end());
  if (rate_bound == 0.0) {
    result.pfd_integral = duration * dot(model.eff, result.p_end);
    return result;
  }

  // uniformized chain P = I + G/rate_bound, advanced in substeps small
  // enough that the Poisson weights stay representable
  const int substeps = static_cast<int>(std::ceil(rate_bound * duration / 32.0));
  const double h = duration / substeps;
  const double a = rate_bound * h;
  const int k_cap = static_cast<int>(a + 60.0 * std::sqrt(a + 1.0)) + 400;

  std::vector<double> v(result.p_end.begin(), result.p_end.end());
  std::vector<double> vnext(ns), accum(ns);
  for (int step = 0; step < substeps; ++step) {
    v = result.p_end;
    double w = std::exp(-a);
    double cdf = w;
    for (std::size_t i = 0; i < ns; ++i) accum[i] = w * v[i];
    double covered = (1.0 - cdf) / rate_bound;
    result.pfd_integral += dot(model.eff, v) * (1.0 - cdf) / rate_bound;
    for (int k = 1; k <= k_cap; ++k) {
      // vnext = v . P
      std::fill(vnext.begin(), vnext.end(), 0.0);
      for (std::size_t i = 0; i < ns; ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        const double* row = model.generator.data() + i * ns;
        for (std::size_t j = 0; j < ns; ++j) vnext[j] += vi * row[j];
      }
      for (std::size_t j = 0; j < ns; ++j) vnext[j] = v[j] + vnext[j] / rate_bound;
      v.swap(vnext);
      w *= a / k;
      cdf = std::min(1.0, cdf + w);
      for (std::size_t i = 0; i < ns; ++i) accum[i] += w * v[i];
      const double slice = (1.0 - cdf) / rate_bound;
      covered += slice;
      result.pfd_integral += dot(model.eff, v) * slice;
      if (1.0 - cdf < 1e-15 && h - covered < 1e-13 * h) break;
    }
    result.p_end = accum;
  }
  return result;
}

std::vector<double> apply_linking(const MarkovModel& model, std::span<const double> p) {
  if (p.size() != model.size()) throw std::invalid_argument("probability vector size mismatch");
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[static_cast<std::size_t>(model.linking[i])] += p[i];
  }
  return out;
}

PfdResult pfd_avg_markov(const SafetyParams& params) {
  params.validate();
  const MarkovModel model = build_generator(params);
  const int phases = params.phase_count();
  std::vector<double> prob(model.size(), 0.0);
  prob[static_cast<std::size_t>(model.initial_state)] = 1.0;
  double integral = 0.0;
  for (int phase = 0; phase < phases; ++phase) {
    TransientResult step = transient_solve(model, prob, model.phase_duration);
    integral += step.pfd_integral;
    prob = apply_linking(model, step.p_end);
  }
  PfdResult result;
  result.method = Method::markov;
  result.value = std::clamp(integral / params.t0_hours, 0.0, 1.0);
  char line[96];
  std::snprintf(line, sizeof(line), "state space: %zu states, %d phases of %.1f h", model.size(),
                phases, model.phase_duration);
  result.diagnostics.emplace_back(line);
  return result;
}

}  // namespace pfd
