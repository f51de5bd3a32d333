#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tasep/experiments.hpp"
#include "tasep/master.hpp"

using namespace tasep;

namespace {

CellResult synthetic_cell(double alpha, double beta, int n, double mean, int batches = 2) {
  CellResult c;
  c.alpha = alpha;
  c.beta = beta;
  c.n = n;
  c.mean_tau = mean;
  c.batch_means.assign(static_cast<std::size_t>(batches), mean);
  c.runs.resize(100);
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

SweepPlan small_plan() {
  SweepPlan plan;
  plan.points = {{1.0, 0.5}, {0.5, 1.0}};
  plan.lengths = {3, 4, 5};
  plan.runs_per_cell = 12;
  plan.batches = 3;
  plan.base_seed = 21;
  plan.segments = {{3, 5}};
  return plan;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tasep_exp_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("length grids and segments") {
  const auto lengths = full_lengths();
  CHECK(lengths.size() == 40);
  CHECK(lengths.front() == 11);
  CHECK(lengths.back() == 160);
  CHECK(std::count(lengths.begin(), lengths.end(), 20) == 1);
  CHECK(std::count(lengths.begin(), lengths.end(), 84) == 0);
  CHECK(std::count(lengths.begin(), lengths.end(), 88) == 1);
  CHECK(desk_lengths().back() == 96);
  CHECK(standard_segments() == std::vector<Segment>{{80, 160}, {40, 160}, {11, 160}});
}

TEST_CASE("plan grammar") {
  const SweepPlan plan = parse_plan(R"(
# comment
[sweep]
model = tasep
runs = 30      # per cell
batches = 3
seed = 9
max_time = 1e5
h = 1.0
epsilon = 0.2
lengths = 4..8/2, 10, 40..48/4
segments = 4:10, 6:48
point = 0.3, 1.0
[points]
1.0, 0.1
0.2 0.2
)");
  CHECK(plan.runs_per_cell == 30);
  CHECK(plan.batches == 3);
  CHECK(plan.base_seed == 9);
  CHECK(plan.max_time == 1e5);
  CHECK(plan.epsilon == 0.2);
  CHECK(plan.lengths == std::vector<int>{4, 6, 8, 10, 40, 44, 48});
  CHECK(plan.segments == std::vector<Segment>{{4, 10}, {6, 48}});
  REQUIRE(plan.points.size() == 3);
  CHECK(plan.points[0] == RatePoint{0.3, 1.0});
  CHECK(plan.points[2] == RatePoint{0.2, 0.2});
  CHECK(parse_plan("[points]\n1,1\n[sweep]\nlengths = full\n").lengths == full_lengths());
  CHECK(parse_plan("[points]\n1,1\n").lengths == desk_lengths());

  CHECK_THROWS_AS(parse_plan("[points]\n1,1\n[sweep]\nbogus = 1\n"), Error);
  CHECK_THROWS_AS(parse_plan("[points]\n1,1\n[sweep]\nruns = 9\n"), Error);  // 9 % 10
  CHECK_THROWS_AS(parse_plan("[sweep]\nruns = 10\n"), Error);                  // no points
  CHECK_THROWS_AS(parse_plan("[points]\n1\n"), Error);
  CHECK_THROWS_AS(parse_plan("[points]\n1,1\n[sweep]\nlengths = 8, 4\n"), Error);
  CHECK_THROWS_AS(parse_plan("[points]\n1,1\n[sweep]\nsegments = 4-8\n"), Error);
  CHECK_THROWS_AS(parse_plan("[weird]\n"), Error);
  try {
    parse_plan("[points]\n1,1\n[sweep]\nbogus = 1\n");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse_error);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("run seeds separate every component") {
  const auto s = run_seed(1, 1.0, 0.5, 10, 3);
  CHECK(s == run_seed(1, 1.0, 0.5, 10, 3));
  CHECK(s != run_seed(2, 1.0, 0.5, 10, 3));
  CHECK(s != run_seed(1, 0.5, 1.0, 10, 3));
  CHECK(s != run_seed(1, 1.0, 0.5, 11, 3));
  CHECK(s != run_seed(1, 1.0, 0.5, 10, 4));
}

TEST_CASE("cells: serial and parallel runs agree") {
  const SweepPlan plan = small_plan();
  const auto par = run_cell(plan, plan.points[0], 5);
  const auto ser = run_cell_serial(plan, plan.points[0], 5);
  CHECK(par == ser);
  for (std::size_t r = 0; r < par.size(); ++r) {
    CHECK(par[r].run == r);
    CHECK(par[r].synced);
    CHECK(par[r].seed == run_seed(21, 1.0, 0.5, 5, r));
  }
}

TEST_CASE("batch aggregation") {
  std::vector<RunRecord> runs;
  const double taus[6] = {1.0, 3.0, 5.0, 7.0, 2.0, 0.0};
  for (std::uint64_t r = 0; r < 6; ++r) {
    runs.push_back({r, r, r != 5, taus[r], 10});
  }
  std::reverse(runs.begin(), runs.end());  // order must not matter
  const CellResult c = aggregate_cell(1.0, 1.0, 4, runs, 3);
  REQUIRE(c.batch_means.size() == 3);
  CHECK(c.batch_means[0] == 2.0);
  CHECK(c.batch_means[1] == 6.0);
  CHECK(c.batch_means[2] == 2.0);  // batch 2 has one timeout, mean over the completed run
  CHECK(c.mean_tau == doctest::Approx(10.0 / 3.0));
  // sample std of {2, 6, 2}: mean 10/3, ss = 2*(16/9) + 64/9 = 96/9, /2 -> 48/9
  CHECK(c.sigma == doctest::Approx(std::sqrt(48.0 / 9.0)));
  CHECK(c.timeouts == 1);
  CHECK(c.biased_low());
  CHECK_FALSE(c.fit_valid());  // 1 of 6 timed out
  CHECK(c.runs.front().run == 0);
  CHECK_THROWS_AS(aggregate_cell(1, 1, 4, runs, 4), Error);
}

TEST_CASE("exact power law is recovered") {
  std::vector<CellResult> cells;
  for (int n : {11, 16, 24, 40, 64, 96, 160}) {
    cells.push_back(synthetic_cell(1, 1, n, 0.73 * std::pow(n, 1.556)));
  }
  const FitResult f = fit_power_law(cells, {11, 160});
  CHECK(std::abs(f.gamma - 1.556) < 1e-12);
  CHECK(std::abs(f.prefactor / 0.73 - 1.0) < 1e-12);
  CHECK(f.delta < 1e-12);
  CHECK(f.cells == 7);
  CHECK(sigma_of_fit(cells, {11, 160}, 2) < 1e-12);
  const FitResult tail = fit_power_law(cells, {40, 160});
  CHECK(tail.cells == 4);
}

TEST_CASE("perturbed power law stays within 0.01") {
  std::uint64_t state = 12345;
  auto noise = [&] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return (static_cast<double>(state >> 11) * 0x1.0p-53 * 2.0 - 1.0) * 0.005;
  };
  for (double gamma : {1.0, 1.5, 2.0}) {
    std::vector<CellResult> cells;
    for (int n : full_lengths()) {
      cells.push_back(synthetic_cell(1, 1, n, 3.0 * std::pow(n, gamma) * (1.0 + noise())));
    }
    for (const Segment& s : standard_segments()) {
      const FitResult f = fit_power_law(cells, s);
      CHECK(std::abs(f.gamma - gamma) < 0.01);
      CHECK(f.delta <= 0.0101);
    }
  }
}

TEST_CASE("fit preconditions") {
  std::vector<CellResult> cells{synthetic_cell(1, 1, 10, 5.0), synthetic_cell(1, 1, 20, 9.0)};
  try {
    fit_power_law(cells, {1, 100});
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_data);
  }
  cells.push_back(synthetic_cell(0.5, 1, 30, 9.0));
  CHECK_THROWS_AS(fit_power_law(cells, {1, 100}), Error);
  // A cell with too many timeouts is left out.
  std::vector<CellResult> ok;
  for (int n : {10, 20, 40, 80}) ok.push_back(synthetic_cell(1, 1, n, n * 2.0));
  ok.back().timeouts = 5;
  ok.back().mean_tau = 1.0;
  const FitResult f = fit_power_law(ok, {1, 100});
  CHECK(f.cells == 3);
  CHECK(f.gamma == doctest::Approx(1.0));
}

TEST_CASE("phase classification") {
  CHECK(phase_classify(1.0, 0.1) == Phase::high_density);
  CHECK(phase_classify(0.1, 1.0) == Phase::low_density);
  CHECK(phase_classify(1.0, 1.0) == Phase::maximal_current);
  CHECK(phase_classify(0.2, 0.2) == Phase::coexistence);
  CHECK(phase_classify(0.5, 0.5) == Phase::triple_point);
  CHECK(phase_classify(0.5, 0.8) == Phase::boundary);
  CHECK(phase_classify(0.9, 0.5) == Phase::boundary);
  CHECK(phase_classify(0.1, 0.0) == Phase::high_density);
  CHECK(phase_classify(0.0, 0.0) == Phase::boundary);
  CHECK_THROWS_AS(phase_classify(-0.1, 1.0), Error);
  CHECK(std::string(to_string(Phase::maximal_current)) == "MC");
}

TEST_CASE("table formatting") {
  CHECK(format_delta_percent(0.002) == "0.2%");
  CHECK(format_delta_percent(0.031) == "3.1%");
  CHECK(format_delta_percent(0.18) == "18%");
  CHECK(format_prefactor(3.2451) == "3.25");
  CHECK(format_prefactor(11.1) == "11.1");
  CHECK(format_prefactor(0.73) == "0.73");

  std::vector<CellResult> cells;
  for (int n : {11, 16, 24, 40, 64, 80, 96, 128, 160}) {
    CellResult c = synthetic_cell(1, 0.1, n, 3.25 * std::pow(n, 1.068), 3);
    c.batch_means = {c.mean_tau * 0.99, c.mean_tau, c.mean_tau * 1.01};
    cells.push_back(c);
  }
  const auto segments = standard_segments();
  const auto table = build_table(cells, segments, 3);
  REQUIRE(table.size() == 1);
  REQUIRE(table[0].fits.size() == 3);
  CHECK(table[0].fits[0].has_value());
  const std::string csv = emit_table_csv(table, 3);
  CHECK(csv.rfind("alpha,beta,gamma0,sigma0,delta0,C0,gamma1,sigma1,delta1,gamma2,sigma2,delta2\n", 0) == 0);
  CHECK(csv.find("1,0.1,1.068,0.000,0.0%,3.25,") != std::string::npos);
  const auto back = parse_table_csv(csv);
  REQUIRE(back.size() == 1);
  CHECK(back[0].fits[0]->fit.gamma == doctest::Approx(1.068));
  CHECK(back[0].fits[0]->fit.prefactor == doctest::Approx(3.25));
  CHECK(emit_table_text(table, segments).find("80 <= n <= 160") != std::string::npos);

  // A segment without three cells renders as blanks.
  std::vector<CellResult> short_cells(cells.begin(), cells.begin() + 3);
  const auto sparse = build_table(short_cells, segments, 3);
  CHECK_FALSE(sparse[0].fits[0].has_value());
  CHECK(sparse[0].fits[2].has_value());
  CHECK(parse_table_csv(emit_table_csv(sparse, 3))[0].fits[0] == std::nullopt);
}

TEST_CASE("results and summary csv round trip") {
  const SweepPlan plan = small_plan();
  std::vector<CellResult> cells;
  for (int n : plan.lengths) {
    cells.push_back(aggregate_cell(1.0, 0.5, n, run_cell(plan, plan.points[0], n), 3));
  }
  const auto clean_summary = summarize(cells, plan.segments, 3);
  REQUIRE(clean_summary.size() == 1);
  cells.back().runs[2].synced = false;
  cells.back().runs[2].tau = 0.0;
  std::string text = results_csv_header();
  for (const auto& c : cells) text += format_results_rows(c);
  const auto rows = parse_results_csv(text);
  CHECK(rows.size() == 36);
  const auto back = cells_from_results(rows, 3);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i].runs == cells[i].runs);
  CHECK_THROWS_AS(parse_results_csv("a,b\n"), Error);

  CHECK(back.back().timeouts == 1);
  // 1 timeout in 12 runs invalidates that cell, leaving 2: no fit.
  CHECK(summarize(back, plan.segments, 3).empty());
  const auto& summary = clean_summary;
  const auto again = parse_summary_csv(summary_csv(summary));
  REQUIRE(again.size() == 1);
  CHECK(again[0].gamma == summary[0].gamma);
  CHECK(again[0].segment == Segment{3, 5});
  const std::string cc = cells_csv(back, 0.25);
  CHECK(cc.rfind("alpha,beta,n,mean_tau,sigma,timeouts,fit_valid,mixing_bound\n", 0) == 0);
}

TEST_CASE("sweep resume and worker independence") {
  const SweepPlan plan = small_plan();
  const auto dir = scratch("resume");
  SweepOptions first;
  first.results_path = dir / "a.csv";
  first.workers = 1;
  const SweepReport r1 = run_sweep(plan, first);
  CHECK(r1.cells.size() == 6);
  CHECK(r1.new_runs == 72);
  const std::string full = slurp(dir / "a.csv");

  SweepOptions again = first;
  again.resume = true;
  const SweepReport r2 = run_sweep(plan, again);
  CHECK(r2.new_runs == 0);
  CHECK(r2.resumed_cells == 6);
  CHECK(slurp(dir / "a.csv") == full);

  // Interrupted mid-cell: drop the last six rows.
  {
    std::string cut = full;
    for (int i = 0; i < 6; ++i) cut.erase(cut.find_last_of('\n', cut.size() - 2) + 1);
    std::ofstream(dir / "a.csv", std::ios::trunc) << cut;
  }
  const SweepReport r3 = run_sweep(plan, again);
  CHECK(r3.new_runs == 12);
  CHECK(r3.resumed_cells == 5);
  CHECK(slurp(dir / "a.csv") == full);

  SweepOptions wide;
  wide.results_path = dir / "b.csv";
  wide.workers = 4;
  run_sweep(plan, wide);
  CHECK(slurp(dir / "b.csv") == full);
  for (std::size_t i = 0; i < r1.cells.size(); ++i) {
    CHECK(r1.cells[i].mean_tau == r3.cells[i].mean_tau);
  }
}

TEST_CASE("markov bound dominates the exact mixing time at small n") {
  SweepPlan plan;
  plan.points = {{1.0, 1.0}};
  plan.runs_per_cell = 2000;
  plan.batches = 10;
  for (int n = 1; n <= 4; ++n) {
    const CellResult c = aggregate_cell(1.0, 1.0, n, run_cell(plan, plan.points[0], n), 10);
    const double exact = mixing_time(build_generator(RateConfig::tasep(n, 1, 1)), 0.25);
    CHECK(c.mean_tau / 0.25 >= exact);
  }
}
