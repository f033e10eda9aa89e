// pfdcalc: PFDavg of MooN safety subsystems by four independent methods.
//
// Exit codes: 0 success, 1 input error, 2 engine error, 3 reproduction
// outside tolerance.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfd/model.hpp"
#include "pfd/report.hpp"

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("PFD_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::invalid_argument("PFD_SEED must be an unsigned integer");
    }
  }
  return 42;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

std::vector<pfd::Method> resolve_methods(const std::string& name) {
  if (name == "all") {
    return {pfd::Method::analytic, pfd::Method::faulttree, pfd::Method::markov,
            pfd::Method::petri};
  }
  const auto m = pfd::parse_method(name);
  if (!m) throw std::invalid_argument("unknown method: " + name);
  return {*m};
}

struct CaseInput {
  std::string name;
  pfd::SafetyParams params;
};

std::vector<CaseInput> resolve_inputs(const std::string& case_name,
                                      const std::string& input_path) {
  if (!case_name.empty() && !input_path.empty()) {
    throw std::invalid_argument("--case and --input are mutually exclusive");
  }
  if (!input_path.empty()) {
    return {{input_path, pfd::params_from_json(read_file(input_path))}};
  }
  if (!case_name.empty()) {
    const auto id = pfd::parse_case_id(case_name);
    if (!id) throw std::invalid_argument("unknown case: " + case_name);
    return {{case_name, pfd::load_case(*id)}};
  }
  std::vector<CaseInput> all;
  for (pfd::CaseId id : pfd::kAllCaseIds) {
    all.push_back({std::string(pfd::to_string(id)), pfd::load_case(id)});
  }
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PFDavg analyzer for MooN safety subsystems"};
  app.require_subcommand(1);

  std::string case_name, input_path, method = "all", format = "csv", out_path;
  pfd::RunOptions options;
  bool seed_given = false;

  CLI::App* run = app.add_subcommand("run", "compute PFDavg with the selected methods");
  run->add_option("--case", case_name, "one of the published cases: i ii iii iv v vi");
  run->add_option("--input", input_path, "JSON file with a custom data set");
  run->add_option("--method", method, "analytic|faulttree|markov|petri|all")
      ->default_str("all");
  run->add_option("--histories", options.histories, "Monte Carlo histories for petri")
      ->default_str("1000000");
  run->add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t s) { options.seed = s; seed_given = true; },
         "Monte Carlo master seed (default: PFD_SEED env var or 42)");
  run->add_option("--format", format, "csv|json")->default_str("csv");
  run->add_option("--out", out_path, "write the document here instead of stdout");
  run->add_option("--threads", options.threads, "worker count, 0 = all cores")
      ->default_str("0");

  CLI::App* validate = app.add_subcommand("validate", "check the closed-form validity conditions");
  validate->add_option("--case", case_name, "one of: i ii iii iv v vi");
  validate->add_option("--input", input_path, "JSON file with a custom data set");

  CLI::App* reproduce =
      app.add_subcommand("reproduce", "rerun the full six-case study and check every tolerance");
  reproduce->add_option("--histories", options.histories, "Monte Carlo histories per case")
      ->default_str("1000000");
  reproduce->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { options.seed = s; seed_given = true; },
      "Monte Carlo master seed");
  reproduce->add_option("--threads", options.threads, "worker count, 0 = all cores")
      ->default_str("0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!seed_given) options.seed = default_seed();

    if (run->parsed()) {
      const auto inputs = resolve_inputs(case_name, input_path);
      const auto methods = resolve_methods(method);
      std::vector<pfd::ComparisonRow> rows;
      for (const auto& input : inputs) {
        rows.push_back(pfd::run_case(input.name, input.params, methods, options));
      }
      if (format == "csv") {
        write_output(out_path, pfd::emit_csv(rows));
      } else if (format == "json") {
        write_output(out_path, pfd::emit_json(rows));
      } else {
        throw std::invalid_argument("unknown format: " + format);
      }
      return 0;
    }

    if (validate->parsed()) {
      for (const auto& input : resolve_inputs(case_name, input_path)) {
        const auto warnings = pfd::check_validity(input.params);
        if (warnings.empty()) {
          std::cout << "case " << input.name << ": ok\n";
        } else {
          for (const auto& w : warnings) {
            std::cout << "case " << input.name << ": " << w.message() << "\n";
          }
        }
      }
      return 0;
    }

    const bool ok = pfd::reproduce_study(std::cout, options);
    return ok ? 0 : 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "engine error: " << e.what() << "\n";
    return 2;
  }
}
