#include "pfd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "pfd/analytic.hpp"
#include "pfd/fault_tree.hpp"
#include "pfd/markov.hpp"
#include "pfd/petri.hpp"

namespace pfd {

namespace {

std::string format_prob(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.5e", v);
  return buf;
}

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string quoted = "\"";
  for (char c : raw) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string joined_warnings(const ComparisonRow& row, const ComparisonRow::Entry& entry) {
  std::string out;
  auto append = [&](const std::string& w) {
    if (!out.empty()) out += "; ";
    out += w;
  };
  for (const auto& w : row.validity_warnings) append(w);
  for (const auto& w : entry.warnings) append(w);
  return out;
}

constexpr Method kMethodOrder[] = {Method::analytic, Method::faulttree, Method::markov,
                                   Method::petri};

}  // namespace

std::string_view to_string(SilBand band) {
  switch (band) {
    case SilBand::kSil1: return "SIL1";
    case SilBand::kSil2: return "SIL2";
    case SilBand::kSil3: return "SIL3";
    case SilBand::kSil4: return "SIL4";
    case SilBand::kBelowSil1: return "below_SIL1";
  }
  return "?";
}

SilBand sil_band(double pfd_avg) {
  if (pfd_avg >= 1e-1) return SilBand::kBelowSil1;
  if (pfd_avg >= 1e-2) return SilBand::kSil1;
  if (pfd_avg >= 1e-3) return SilBand::kSil2;
  if (pfd_avg >= 1e-4) return SilBand::kSil3;
  return SilBand::kSil4;
}

ComparisonRow run_case(const std::string& name, const SafetyParams& params,
                       const std::vector<Method>& methods, const RunOptions& options) {
  params.validate();
  if (methods.empty()) throw std::invalid_argument("at least one method is required");
  ComparisonRow row;
  row.case_name = name;
  for (const ValidityWarning& w : check_validity(params)) {
    row.validity_warnings.push_back(w.message());
  }
  for (Method m : kMethodOrder) {
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) continue;
    ComparisonRow::Entry entry;
    try {
      switch (m) {
        case Method::analytic: entry.result = pfd_avg_analytic(params); break;
        case Method::faulttree: entry.result = pfd_avg_fault_tree(params, options.threads); break;
        case Method::markov: entry.result = pfd_avg_markov(params); break;
        case Method::petri:
          entry.result =
              pfd_avg_petri(params, options.histories, options.seed, options.threads);
          break;
      }
    } catch (const std::exception& e) {
      throw EngineError(std::string(to_string(m)) + ": " + e.what());
    }
    entry.sil = sil_band(entry.result.value);
    if (entry.result.value == 0.0) {
      entry.warnings.emplace_back("degenerate: PFDavg = 0");
    }
    row.entries.push_back(std::move(entry));
  }
  for (std::size_t i = 0; i < row.entries.size(); ++i) {
    for (std::size_t j = i + 1; j < row.entries.size(); ++j) {
      const double vb = row.entries[j].result.value;
      if (vb == 0.0) continue;
      row.deviations.push_back({row.entries[i].result.method, row.entries[j].result.method,
                                (row.entries[i].result.value - vb) / vb});
    }
  }
  return row;
}

std::string emit_csv(const std::vector<ComparisonRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("no rows to emit");
  std::string out = "case,method,pfd_avg,ci90,sil,warnings\n";
  for (const auto& row : rows) {
    for (const auto& entry : row.entries) {
      out += csv_field(row.case_name);
      out += ',';
      out += to_string(entry.result.method);
      out += ',';
      out += format_prob(entry.result.value);
      out += ',';
      if (entry.result.ci90_halfwidth) out += format_prob(*entry.result.ci90_halfwidth);
      out += ',';
      out += to_string(entry.sil);
      out += ',';
      out += csv_field(joined_warnings(row, entry));
      out += '\n';
    }
  }
  return out;
}

std::string emit_json(const std::vector<ComparisonRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("no rows to emit");
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json jrow;
    jrow["case"] = row.case_name;
    jrow["results"] = nlohmann::ordered_json::array();
    for (const auto& entry : row.entries) {
      nlohmann::ordered_json jr;
      jr["method"] = to_string(entry.result.method);
      jr["pfd_avg"] = entry.result.value;
      if (entry.result.ci90_halfwidth) {
        jr["ci90"] = *entry.result.ci90_halfwidth;
      } else {
        jr["ci90"] = nullptr;
      }
      jr["sil"] = to_string(entry.sil);
      nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
      for (const auto& w : row.validity_warnings) warnings.push_back(w);
      for (const auto& w : entry.warnings) warnings.push_back(w);
      jr["warnings"] = warnings;
      jrow["results"].push_back(jr);
    }
    nlohmann::ordered_json devs = nlohmann::ordered_json::object();
    for (const auto& d : row.deviations) {
      devs[std::string(to_string(d.a)) + "_vs_" + std::string(to_string(d.b))] = d.relative;
    }
    jrow["deviations"] = devs;
    doc.push_back(jrow);
  }
  return doc.dump(2) + "\n";
}

SafetyParams params_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("input must be a JSON object");
  static const char* kKeys[] = {"m",       "n",       "lambda_d", "dc",       "ptc",
                                "beta_dd", "beta_dut", "beta_duu", "mu_dd",    "mu_dut",
                                "t1_hours", "t0_hours"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return key == k; }) == std::end(kKeys)) {
      throw std::invalid_argument("unknown key: " + key);
    }
  }
  SafetyParams p;
  try {
    p.m = j.at("m").get<int>();
    p.n = j.at("n").get<int>();
    p.lambda_d = j.at("lambda_d").get<double>();
    p.dc = j.at("dc").get<double>();
    p.ptc = j.at("ptc").get<double>();
    p.beta_dd = j.at("beta_dd").get<double>();
    p.beta_dut = j.at("beta_dut").get<double>();
    p.beta_duu = j.at("beta_duu").get<double>();
    p.mu_dd = j.at("mu_dd").get<double>();
    p.mu_dut = j.at("mu_dut").get<double>();
    p.t1_hours = j.at("t1_hours").get<double>();
    p.t0_hours = j.at("t0_hours").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad or missing key: ") + e.what());
  }
  p.validate();
  return p;
}

std::string params_to_json(const SafetyParams& params) {
  nlohmann::ordered_json j;
  j["m"] = params.m;
  j["n"] = params.n;
  j["lambda_d"] = params.lambda_d;
  j["dc"] = params.dc;
  j["ptc"] = params.ptc;
  j["beta_dd"] = params.beta_dd;
  j["beta_dut"] = params.beta_dut;
  j["beta_duu"] = params.beta_duu;
  j["mu_dd"] = params.mu_dd;
  j["mu_dut"] = params.mu_dut;
  j["t1_hours"] = params.t1_hours;
  j["t0_hours"] = params.t0_hours;
  return j.dump(2) + "\n";
}

bool reproduce_study(std::ostream& out, const RunOptions& options) {
  struct Expected {
    CaseId id;
    double analytic, faulttree, petri_column;
    double markov;  // NaN when the study skipped the run; compare vs petri_column
  };
  constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
  const Expected table[] = {
      {CaseId::i, 7.46e-3, 7.43e-3, 7.41e-3, 7.41e-3},
      {CaseId::ii, 1.38e-1, 1.27e-1, 1.24e-1, 1.24e-1},
      {CaseId::iii, 4.31e-4, 4.31e-4, 4.30e-4, 4.29e-4},
      {CaseId::iv, 3.25e-2, 2.93e-2, 2.83e-2, 2.83e-2},
      {CaseId::v, 5.49e-4, 5.48e-4, 5.47e-4, kNan},
      {CaseId::vi, 6.98e-2, 5.59e-2, 5.43e-2, kNan},
  };
  bool all_ok = true;
  auto check = [&](const char* method, CaseId id, double got, double want, double tol) {
    const double dev = (got - want) / want;
    const bool ok = std::abs(dev) <= tol;
    all_ok = all_ok && ok;
    char line[160];
    std::snprintf(line, sizeof(line), "%s %-9s case %-3s: %.5e vs %.2e (dev %+.2f%%, tol %.1f%%)",
                  ok ? "PASS" : "FAIL", method, std::string(to_string(id)).c_str(), got, want,
                  100.0 * dev, 100.0 * tol);
    out << line << '\n';
  };

  for (const Expected& e : table) {
    const SafetyParams params = load_case(e.id);
    check("analytic", e.id, pfd_avg_analytic(params).value, e.analytic, 0.006);
    const double markov_value = pfd_avg_markov(params).value;
    if (std::isnan(e.markov)) {
      check("markov", e.id, markov_value, e.petri_column, 0.02);
    } else {
      check("markov", e.id, markov_value, e.markov, 0.01);
    }
    check("faulttree", e.id, pfd_avg_fault_tree(params, options.threads).value, e.faulttree,
          0.02);
    const PfdResult petri =
        pfd_avg_petri(params, options.histories, options.seed, options.threads);
    {
      const double hw = *petri.ci90_halfwidth;
      const double sigma = hw / 1.645;
      const bool covers = std::abs(petri.value - markov_value) <= hw;
      const double z = std::abs(petri.value - e.petri_column) / sigma;
      const bool ok = covers && z <= 3.0;
      all_ok = all_ok && ok;
      char line[200];
      std::snprintf(line, sizeof(line),
                    "%s petri     case %-3s: %.5e +-%.1e (markov %.5e %s, %.1f sigma from "
                    "%.2e)",
                    ok ? "PASS" : "FAIL", std::string(to_string(e.id)).c_str(), petri.value, hw,
                    markov_value, covers ? "inside CI" : "OUTSIDE CI", z, e.petri_column);
      out << line << '\n';
    }
  }
  return all_ok;
}

}  // namespace pfd
