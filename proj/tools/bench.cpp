// Compares the serial reference kernels with their OpenMP counterparts on
// the two hot paths: Monte Carlo histories and fault-tree grid evaluation.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pfd/fault_tree.hpp"
#include "pfd/model.hpp"
#include "pfd/petri.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(const char* kernel, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.3f s   parallel %8.3f s   speedup %.2fx\n", kernel, serial_s,
              parallel_s, serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t histories = 100'000;
  if (argc > 1) histories = std::stoull(argv[1]);
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif

  const pfd::SafetyParams params = pfd::load_case(pfd::CaseId::iv);
  const pfd::PetriNet net = pfd::build_case_net(params);

  {
    auto t0 = Clock::now();
    const auto serial = pfd::monte_carlo_serial(net, params.t0_hours, histories, 42);
    const double serial_s = seconds_since(t0);
    t0 = Clock::now();
    const auto parallel = pfd::monte_carlo(net, params.t0_hours, histories, 42);
    const double parallel_s = seconds_since(t0);
    report("petri monte carlo", serial_s, parallel_s);
    if (serial.mean != parallel.mean || serial.ci90_halfwidth != parallel.ci90_halfwidth) {
      std::printf("MISMATCH: serial %.17e vs parallel %.17e\n", serial.mean, parallel.mean);
      return 1;
    }
    std::printf("  estimate %.5e +- %.1e (%llu histories)\n", parallel.mean,
                parallel.ci90_halfwidth, static_cast<unsigned long long>(parallel.histories));
  }

  {
    auto t0 = Clock::now();
    const auto serial = pfd::pfd_avg_fault_tree_serial(params);
    const double serial_s = seconds_since(t0);
    t0 = Clock::now();
    const auto parallel = pfd::pfd_avg_fault_tree(params);
    const double parallel_s = seconds_since(t0);
    report("fault tree quadrature", serial_s, parallel_s);
    if (serial.value != parallel.value) {
      std::printf("MISMATCH: serial %.17e vs parallel %.17e\n", serial.value, parallel.value);
      return 1;
    }
    std::printf("  pfd_avg %.5e\n", parallel.value);
  }
  return 0;
}
