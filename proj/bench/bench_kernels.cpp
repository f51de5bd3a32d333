// Serial reference vs OpenMP kernel timings. Each pair is also checked for
// identical output, since the parallel kernels must not change results.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tasep/coupling.hpp"
#include "tasep/experiments.hpp"
#include "tasep/master.hpp"

using namespace tasep;

namespace {

template <typename F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool all_equal = true;

template <typename R>
void compare(const char* name, const std::function<R()>& serial, const std::function<R()>& parallel) {
  R a{}, b{};
  const double ts = seconds([&] { a = serial(); });
  const double tp = seconds([&] { b = parallel(); });
  const bool same = a == b;
  all_equal = all_equal && same;
  std::printf("%-22s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n", name, ts, tp, ts / tp,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const double scale = argc > 1 ? std::atof(argv[1]) : 1.0;
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("threads: %d, scale %.2f\n", threads, scale);

  SweepPlan plan;
  plan.points = {{1.0, 1.0}};
  plan.runs_per_cell = static_cast<std::uint64_t>(200 * scale) / 10 * 10 + 10;
  compare<std::vector<RunRecord>>(
      "sync cell n=64", [&] { return run_cell_serial(plan, plan.points[0], 64); },
      [&] { return run_cell(plan, plan.points[0], 64); });

  const ClockLaw law8 = ClockLaw::from_rates(RateConfig::tasep(8, 1, 1));
  const auto runs = static_cast<std::uint64_t>(2000 * scale) + 1;
  compare<double>(
      "gamma probability n=8", [&] { return gamma_probability_serial(20.0, 8, law8, runs, 1).value; },
      [&] { return gamma_probability(20.0, 8, law8, runs, 1).value; });

  const StateSpace space = StateSpace::lattice(4);
  const ClockLaw law4 = ClockLaw::from_rates(RateConfig::tasep(4, 1, 1));
  compare<std::vector<std::vector<std::uint64_t>>>(
      "one-point counts n=4",
      [&] { return one_point_counts_serial(space, law4, 5.0, runs * 10, 2); },
      [&] { return one_point_counts(space, law4, 5.0, runs * 10, 2); });

  const Generator q = build_generator(RateConfig::tasep(10, 1, 1));
  const Distribution pi = stationary(q);
  compare<double>(
      "worst-case tv n=10", [&] { return worst_case_tv_serial(q, pi, 5.0 * scale); },
      [&] { return worst_case_tv(q, pi, 5.0 * scale); });

  return all_equal ? 0 : 1;
}
