#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tasep/clocks.hpp"
#include "tasep/lattice.hpp"

namespace tasep {

struct RatePoint {
  double alpha = 1.0;
  double beta = 1.0;
  friend bool operator==(const RatePoint&, const RatePoint&) = default;
};

/// Closed range of chain lengths [lo, hi].
struct Segment {
  int lo = 0;
  int hi = 0;
  bool contains(int n) const noexcept { return lo <= n && n <= hi; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// 11..20 step 1, 20..40 step 2, 40..80 step 4, 80..160 step 8 (40 values).
std::vector<int> full_lengths();
/// full_lengths() capped at 96; the default.
std::vector<int> desk_lengths();
/// [80,160], [40,160], [11,160].
std::vector<Segment> standard_segments();

struct SweepPlan {
  std::vector<RatePoint> points;
  std::vector<int> lengths = desk_lengths();
  std::uint64_t runs_per_cell = 1000;
  int batches = 10;
  Model model = Model::tasep;
  double h = 1.0;
  double h_left = 0.0;        // ASEP leftward interior rate
  double right_entry = 0.0;   // ASEP entry from the right
  std::uint64_t base_seed = 1;
  double max_time = 1e7;
  double epsilon = 0.25;
  std::vector<Segment> segments = standard_segments();

  void validate() const;
  RateConfig rates_for(RatePoint p, int n) const;
};

/// key = value grammar with [sweep] and [points] sections; '#' comments.
SweepPlan parse_plan(std::string_view text);

struct RunRecord {
  std::uint64_t run = 0;
  std::uint64_t seed = 0;
  bool synced = false;
  double tau = 0.0;
  std::uint64_t events = 0;
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct CellResult {
  double alpha = 0.0;
  double beta = 0.0;
  int n = 0;
  double mean_tau = 0.0;
  std::vector<double> batch_means;
  double sigma = 0.0;
  std::uint64_t timeouts = 0;
  std::vector<RunRecord> runs;

  /// More than 1% timeouts excludes the cell from fits.
  bool fit_valid() const noexcept;
  /// Mean over completed runs only: biased low whenever a run timed out.
  bool biased_low() const noexcept { return timeouts > 0; }
};

/// hash(base_seed, alpha bits, beta bits, n, run).
std::uint64_t run_seed(std::uint64_t base_seed, double alpha, double beta, int n,
                       std::uint64_t run);

/// runs_per_cell empty-vs-full synchronizations (OpenMP over runs).
std::vector<RunRecord> run_cell(const SweepPlan& plan, RatePoint point, int n);
std::vector<RunRecord> run_cell_serial(const SweepPlan& plan, RatePoint point, int n);

CellResult aggregate_cell(double alpha, double beta, int n, std::vector<RunRecord> runs,
                          int batches);

struct SweepOptions {
  int workers = 0;  // 0: OpenMP default
  std::optional<std::filesystem::path> results_path;
  bool resume = false;
  std::function<void(const CellResult&)> on_cell;
};

struct SweepReport {
  std::vector<CellResult> cells;  // plan order
  std::uint64_t new_runs = 0;
  std::size_t resumed_cells = 0;
};

SweepReport run_sweep(const SweepPlan& plan, const SweepOptions& options = {});

struct FitResult {
  Segment segment;
  double gamma = 0.0;
  double prefactor = 0.0;  // C
  double delta = 0.0;      // max relative deviation from C n^gamma
  std::size_t cells = 0;
};

/// Least squares of log mean_tau against log n over the segment's valid cells.
FitResult fit_power_law(std::span<const CellResult> cells, Segment segment);

/// Standard deviation of the per-batch exponents.
double sigma_of_fit(std::span<const CellResult> cells, Segment segment, int batches);

enum class Phase { low_density, high_density, maximal_current, coexistence, triple_point, boundary };

Phase phase_classify(double alpha, double beta);
const char* to_string(Phase phase) noexcept;

struct SegmentFit {
  FitResult fit;
  double sigma = 0.0;
};

struct TableRow {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<std::optional<SegmentFit>> fits;  // one slot per segment
};

std::vector<TableRow> build_table(std::span<const CellResult> cells,
                                  std::span<const Segment> segments, int batches);
std::string emit_table_csv(std::span<const TableRow> rows, std::size_t segments = 3);
std::string emit_table_text(std::span<const TableRow> rows, std::span<const Segment> segments);
std::vector<TableRow> parse_table_csv(std::string_view text);

std::string format_delta_percent(double delta);
std::string format_prefactor(double c);

// CSV schemas.
std::string results_csv_header();
std::string format_results_rows(const CellResult& cell);
struct ResultsRow {
  double alpha = 0.0;
  double beta = 0.0;
  int n = 0;
  RunRecord record;
};
std::vector<ResultsRow> parse_results_csv(std::string_view text);
/// Groups per-run rows back into cells (plan order is not recoverable; cells
/// are returned sorted by (alpha, beta, n)).
std::vector<CellResult> cells_from_results(std::span<const ResultsRow> rows, int batches);

std::string cells_csv(std::span<const CellResult> cells, double epsilon);

struct SummaryRow {
  double alpha = 0.0;
  double beta = 0.0;
  Segment segment;
  double gamma = 0.0;
  double sigma = 0.0;
  double delta = 0.0;
  double prefactor = 0.0;
  std::size_t cells = 0;
};

std::vector<SummaryRow> summarize(std::span<const CellResult> cells,
                                  std::span<const Segment> segments, int batches);
std::string summary_csv(std::span<const SummaryRow> rows);
std::vector<SummaryRow> parse_summary_csv(std::string_view text);

}  // namespace tasep
