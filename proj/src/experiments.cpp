#include "tasep/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tasep/coupling.hpp"
#include "text_util.hpp"

namespace tasep {

namespace {

void append_range(std::vector<int>& out, int lo, int hi, int step) {
  for (int n = lo; n <= hi; n += step) {
    if (out.empty() || out.back() < n) out.push_back(n);
  }
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(Errc::insufficient_data, "fit needs distinct chain lengths");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

std::vector<const CellResult*> segment_cells(std::span<const CellResult> cells, Segment segment) {
  std::vector<const CellResult*> out;
  for (const CellResult& c : cells) {
    if (segment.contains(c.n) && c.fit_valid()) out.push_back(&c);
  }
  if (!cells.empty()) {
    for (const CellResult& c : cells) {
      if (c.alpha != cells.front().alpha || c.beta != cells.front().beta) {
        throw Error(Errc::invalid_argument, "fit input mixes several (alpha, beta) points");
      }
    }
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->n < b->n; });
  if (out.size() < 3) {
    throw Error(Errc::insufficient_data, "segment [" + std::to_string(segment.lo) + "," +
                                             std::to_string(segment.hi) +
                                             "] has fewer than 3 valid cells");
  }
  return out;
}

using CellKey = std::tuple<std::uint64_t, std::uint64_t, int>;

CellKey key_of(double alpha, double beta, int n) {
  return {std::bit_cast<std::uint64_t>(alpha), std::bit_cast<std::uint64_t>(beta), n};
}

Segment parse_segment(std::string_view item) {
  const auto parts = text::split(text::trim(item), ':');
  if (parts.size() != 2) throw Error(Errc::parse_error, "segment must be lo:hi");
  return {text::parse_number<int>(parts[0], "segment lower bound"),
          text::parse_number<int>(parts[1], "segment upper bound")};
}

std::vector<int> parse_lengths(std::string_view value) {
  std::vector<int> out;
  for (std::string_view item : text::split(value, ',')) {
    item = text::trim(item);
    if (item == "full") {
      for (int n : full_lengths()) out.push_back(n);
    } else if (item == "desk") {
      for (int n : desk_lengths()) out.push_back(n);
    } else if (const auto dots = item.find(".."); dots != std::string_view::npos) {
      const int lo = text::parse_number<int>(item.substr(0, dots), "range start");
      std::string_view rest = item.substr(dots + 2);
      int step = 1;
      if (const auto slash = rest.find('/'); slash != std::string_view::npos) {
        step = text::parse_number<int>(rest.substr(slash + 1), "range step");
        rest = rest.substr(0, slash);
      }
      const int hi = text::parse_number<int>(rest, "range end");
      if (step < 1) throw Error(Errc::parse_error, "range step must be >= 1");
      for (int n = lo; n <= hi; n += step) out.push_back(n);
    } else {
      out.push_back(text::parse_number<int>(item, "chain length"));
    }
  }
  // Adjacent ranges share endpoints (20..40/2, 40..80/4).
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RatePoint parse_point(std::string_view value) {
  std::string tmp(value);
  std::replace(tmp.begin(), tmp.end(), ',', ' ');
  std::istringstream in(tmp);
  std::string a, b, extra;
  if (!(in >> a >> b) || (in >> extra)) {
    throw Error(Errc::parse_error, "point needs exactly two rates: '" + std::string(value) + "'");
  }
  return {text::parse_number<double>(a, "alpha"), text::parse_number<double>(b, "beta")};
}

}  // namespace

std::vector<int> full_lengths() {
  std::vector<int> out;
  append_range(out, 11, 20, 1);
  append_range(out, 20, 40, 2);
  append_range(out, 40, 80, 4);
  append_range(out, 80, 160, 8);
  return out;
}

std::vector<int> desk_lengths() {
  std::vector<int> out;
  for (int n : full_lengths()) {
    if (n <= 96) out.push_back(n);
  }
  return out;
}

std::vector<Segment> standard_segments() { return {{80, 160}, {40, 160}, {11, 160}}; }

void SweepPlan::validate() const {
  if (points.empty()) throw Error(Errc::invalid_argument, "plan has no (alpha, beta) points");
  for (const RatePoint& p : points) {
    if (!(p.alpha >= 0.0) || !(p.beta >= 0.0) || !std::isfinite(p.alpha) ||
        !std::isfinite(p.beta)) {
      throw Error(Errc::invalid_rate, "plan rates must be finite and >= 0");
    }
    if (p.alpha == 0.0 && p.beta == 0.0) {
      throw Error(Errc::invalid_rate, "alpha and beta cannot both be 0");
    }
  }
  if (lengths.empty()) throw Error(Errc::invalid_argument, "plan has no chain lengths");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1 || lengths[i] > kMaxSites) {
      throw Error(Errc::invalid_argument, "chain lengths must lie in [1, 1024]");
    }
    if (i > 0 && lengths[i] <= lengths[i - 1]) {
      throw Error(Errc::invalid_argument, "chain lengths must be strictly increasing");
    }
  }
  if (runs_per_cell < 1) throw Error(Errc::invalid_argument, "runs per cell must be >= 1");
  if (batches < 1) throw Error(Errc::invalid_argument, "batches must be >= 1");
  if (runs_per_cell % static_cast<std::uint64_t>(batches) != 0) {
    throw Error(Errc::invalid_argument, "runs per cell must be divisible by batches");
  }
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::invalid_rate, "h must be > 0");
  if (!(h_left >= 0.0) || !(right_entry >= 0.0)) {
    throw Error(Errc::invalid_rate, "ASEP rates must be >= 0");
  }
  if (!(max_time > 0.0)) throw Error(Errc::invalid_argument, "max_time must be > 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(Errc::invalid_argument, "epsilon must lie in (0, 1)");
  }
  for (const Segment& s : segments) {
    if (s.lo > s.hi) throw Error(Errc::invalid_argument, "segment with lo > hi");
  }
}

RateConfig SweepPlan::rates_for(RatePoint p, int n) const {
  if (model == Model::asep) {
    return RateConfig::asep_uniform(n, p.alpha, p.beta, h, h_left, right_entry);
  }
  return RateConfig::tasep(n, p.alpha, p.beta, h);
}

SweepPlan parse_plan(std::string_view text) {
  SweepPlan plan;
  plan.points.clear();
  std::string section = "sweep";
  std::size_t line_no = 0;
  for (std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = text::trim(line);
    if (line.empty()) continue;
    const std::string where = "plan line " + std::to_string(line_no) + ": ";
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw Error(Errc::parse_error, "unterminated section header");
        section = std::string(text::trim(line.substr(1, line.size() - 2)));
        if (section != "sweep" && section != "points") {
          throw Error(Errc::parse_error, "unknown section [" + section + "]");
        }
        continue;
      }
      if (section == "points") {
        plan.points.push_back(parse_point(line));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw Error(Errc::parse_error, "expected key = value");
      const std::string key(text::trim(line.substr(0, eq)));
      const std::string_view value = text::trim(line.substr(eq + 1));
      if (key == "model") {
        if (value == "tasep") {
          plan.model = Model::tasep;
        } else if (value == "asep") {
          plan.model = Model::asep;
        } else {
          throw Error(Errc::parse_error, "model must be tasep or asep");
        }
      } else if (key == "runs") {
        plan.runs_per_cell = text::parse_number<std::uint64_t>(value, "runs");
      } else if (key == "batches") {
        plan.batches = text::parse_number<int>(value, "batches");
      } else if (key == "seed" || key == "base_seed") {
        plan.base_seed = text::parse_number<std::uint64_t>(value, "seed");
      } else if (key == "max_time") {
        plan.max_time = text::parse_number<double>(value, "max_time");
      } else if (key == "h") {
        plan.h = text::parse_number<double>(value, "h");
      } else if (key == "h_left") {
        plan.h_left = text::parse_number<double>(value, "h_left");
      } else if (key == "right_entry") {
        plan.right_entry = text::parse_number<double>(value, "right_entry");
      } else if (key == "epsilon") {
        plan.epsilon = text::parse_number<double>(value, "epsilon");
      } else if (key == "lengths") {
        plan.lengths = parse_lengths(value);
      } else if (key == "segments") {
        plan.segments.clear();
        for (std::string_view item : text::split(value, ',')) {
          plan.segments.push_back(parse_segment(item));
        }
      } else if (key == "point") {
        plan.points.push_back(parse_point(value));
      } else {
        throw Error(Errc::parse_error, "unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      throw Error(Errc::parse_error, where + e.what());
    }
  }
  try {
    plan.validate();
  } catch (const Error& e) {
    throw Error(Errc::parse_error, std::string("invalid plan: ") + e.what());
  }
  return plan;
}

bool CellResult::fit_valid() const noexcept {
  if (!(mean_tau > 0.0) || !std::isfinite(mean_tau)) return false;
  return timeouts * 100 <= runs.size();
}

std::uint64_t run_seed(std::uint64_t base_seed, double alpha, double beta, int n,
                       std::uint64_t run) {
  return derive_seed(base_seed, {std::bit_cast<std::uint64_t>(alpha),
                                 std::bit_cast<std::uint64_t>(beta),
                                 static_cast<std::uint64_t>(n), run});
}

namespace {

struct CellContext {
  ClockLaw law;
  LatticeState empty;
  LatticeState full;
  SyncLimits limits;
};

CellContext make_context(const SweepPlan& plan, RatePoint point, int n) {
  CellContext ctx{ClockLaw::from_rates(plan.rates_for(point, n)), LatticeState::empty(n),
                  LatticeState::full(n), SyncLimits{}};
  ctx.limits.max_time = plan.max_time;
  return ctx;
}

RunRecord one_run(const SweepPlan& plan, const CellContext& ctx, RatePoint point, int n,
                  std::uint64_t run) {
  RunRecord rec;
  rec.run = run;
  rec.seed = run_seed(plan.base_seed, point.alpha, point.beta, n, run);
  const SyncOutcome o = sync_time_pair(ctx.empty, ctx.full, ctx.law, StreamSeed{rec.seed},
                                       ctx.limits);
  rec.synced = o.synced;
  rec.tau = o.synced ? o.tau : 0.0;
  rec.events = o.events_consumed;
  return rec;
}

}  // namespace

std::vector<RunRecord> run_cell(const SweepPlan& plan, RatePoint point, int n) {
  const CellContext ctx = make_context(plan, point, n);
  std::vector<RunRecord> out(plan.runs_per_cell);
  const auto runs = static_cast<long long>(plan.runs_per_cell);
#pragma omp parallel for schedule(dynamic, 4)
  for (long long r = 0; r < runs; ++r) {
    out[static_cast<std::size_t>(r)] = one_run(plan, ctx, point, n, static_cast<std::uint64_t>(r));
  }
  return out;
}

std::vector<RunRecord> run_cell_serial(const SweepPlan& plan, RatePoint point, int n) {
  const CellContext ctx = make_context(plan, point, n);
  std::vector<RunRecord> out;
  out.reserve(plan.runs_per_cell);
  for (std::uint64_t r = 0; r < plan.runs_per_cell; ++r) {
    out.push_back(one_run(plan, ctx, point, n, r));
  }
  return out;
}

CellResult aggregate_cell(double alpha, double beta, int n, std::vector<RunRecord> runs,
                          int batches) {
  if (batches < 1 || runs.empty() || runs.size() % static_cast<std::size_t>(batches) != 0) {
    throw Error(Errc::invalid_argument, "runs must split evenly into batches");
  }
  std::sort(runs.begin(), runs.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.run < b.run; });
  CellResult cell;
  cell.alpha = alpha;
  cell.beta = beta;
  cell.n = n;
  const std::size_t per_batch = runs.size() / static_cast<std::size_t>(batches);
  for (int b = 0; b < batches; ++b) {
    double sum = 0.0;
    std::size_t done = 0;
    for (std::size_t i = 0; i < per_batch; ++i) {
      const RunRecord& r = runs[static_cast<std::size_t>(b) * per_batch + i];
      if (r.synced) {
        sum += r.tau;
        ++done;
      }
    }
    cell.batch_means.push_back(done ? sum / static_cast<double>(done)
                                    : std::numeric_limits<double>::quiet_NaN());
  }
  for (const RunRecord& r : runs) cell.timeouts += r.synced ? 0 : 1;
  std::vector<double> finite;
  for (double m : cell.batch_means) {
    if (std::isfinite(m)) finite.push_back(m);
  }
  cell.mean_tau = finite.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : std::accumulate(finite.begin(), finite.end(), 0.0) /
                                       static_cast<double>(finite.size());
  cell.sigma = sample_std(finite);
  cell.runs = std::move(runs);
  return cell;
}

SweepReport run_sweep(const SweepPlan& plan, const SweepOptions& options) {
  plan.validate();
#ifdef _OPENMP
  const int previous_threads = omp_get_max_threads();
  if (options.workers > 0) omp_set_num_threads(options.workers);
#endif
  SweepReport report;
  std::map<CellKey, std::vector<RunRecord>> done;
  std::ofstream results;
  if (options.results_path) {
    std::vector<ResultsRow> kept;
    if (options.resume && std::filesystem::exists(*options.results_path)) {
      std::ifstream in(*options.results_path);
      std::stringstream buf;
      buf << in.rdbuf();
      std::map<CellKey, std::vector<ResultsRow>> grouped;
      for (ResultsRow& row : parse_results_csv(buf.str())) {
        grouped[key_of(row.alpha, row.beta, row.n)].push_back(row);
      }
      // Keep only complete cells whose seeds match this plan.
      for (auto& [key, rows] : grouped) {
        if (rows.size() != plan.runs_per_cell) continue;
        std::sort(rows.begin(), rows.end(),
                  [](const ResultsRow& a, const ResultsRow& b) { return a.record.run < b.record.run; });
        bool ok = true;
        for (std::size_t i = 0; i < rows.size() && ok; ++i) {
          ok = rows[i].record.run == i &&
               rows[i].record.seed ==
                   run_seed(plan.base_seed, rows[i].alpha, rows[i].beta, rows[i].n, i);
        }
        if (!ok) continue;
        auto& recs = done[key];
        for (const ResultsRow& r : rows) recs.push_back(r.record);
      }
    }
    results.open(*options.results_path, std::ios::trunc);
    if (!results) {
      throw Error(Errc::invalid_argument, "cannot write " + options.results_path->string());
    }
    results << results_csv_header();
    // Rewrite resumed cells in plan order so the file matches a fresh run.
    for (const RatePoint& p : plan.points) {
      for (int n : plan.lengths) {
        const auto it = done.find(key_of(p.alpha, p.beta, n));
        if (it == done.end()) continue;
        results << format_results_rows(aggregate_cell(p.alpha, p.beta, n, it->second, plan.batches));
      }
    }
    results.flush();
  }
  for (const RatePoint& p : plan.points) {
    for (int n : plan.lengths) {
      const auto it = done.find(key_of(p.alpha, p.beta, n));
      CellResult cell;
      if (it != done.end()) {
        cell = aggregate_cell(p.alpha, p.beta, n, it->second, plan.batches);
        ++report.resumed_cells;
      } else {
        cell = aggregate_cell(p.alpha, p.beta, n, run_cell(plan, p, n), plan.batches);
        report.new_runs += plan.runs_per_cell;
        if (results.is_open()) {
          results << format_results_rows(cell);
          results.flush();
        }
      }
      if (options.on_cell) options.on_cell(cell);
      report.cells.push_back(std::move(cell));
    }
  }
#ifdef _OPENMP
  omp_set_num_threads(previous_threads);
#endif
  return report;
}

FitResult fit_power_law(std::span<const CellResult> cells, Segment segment) {
  const auto chosen = segment_cells(cells, segment);
  std::vector<double> x, y;
  for (const CellResult* c : chosen) {
    x.push_back(std::log(static_cast<double>(c->n)));
    y.push_back(std::log(c->mean_tau));
  }
  const LineFit line = least_squares(x, y);
  FitResult fit;
  fit.segment = segment;
  fit.gamma = line.slope;
  fit.prefactor = std::exp(line.intercept);
  fit.cells = chosen.size();
  for (const CellResult* c : chosen) {
    const double model = fit.prefactor * std::pow(static_cast<double>(c->n), fit.gamma);
    fit.delta = std::max(fit.delta, std::abs(c->mean_tau - model) / model);
  }
  return fit;
}

double sigma_of_fit(std::span<const CellResult> cells, Segment segment, int batches) {
  if (batches < 2) throw Error(Errc::insufficient_data, "sigma needs at least 2 batches");
  const auto chosen = segment_cells(cells, segment);
  std::vector<double> gammas;
  for (int b = 0; b < batches; ++b) {
    std::vector<double> x, y;
    for (const CellResult* c : chosen) {
      if (c->batch_means.size() != static_cast<std::size_t>(batches)) {
        throw Error(Errc::insufficient_data, "cell lacks per-batch means");
      }
      const double m = c->batch_means[static_cast<std::size_t>(b)];
      if (!(m > 0.0) || !std::isfinite(m)) continue;
      x.push_back(std::log(static_cast<double>(c->n)));
      y.push_back(std::log(m));
    }
    if (x.size() < 3) throw Error(Errc::insufficient_data, "batch lacks 3 usable cells");
    gammas.push_back(least_squares(x, y).slope);
  }
  return sample_std(gammas);
}

Phase phase_classify(double alpha, double beta) {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    throw Error(Errc::invalid_rate, "phase needs alpha, beta >= 0");
  }
  const double lo = std::min(alpha, beta);
  if (alpha == 0.5 && beta == 0.5) return Phase::triple_point;
  if (lo == 0.5) return Phase::boundary;
  if (lo > 0.5) return Phase::maximal_current;
  if (alpha > beta) return Phase::high_density;
  if (alpha < beta) return Phase::low_density;
  // alpha == beta < 1/2; the origin is the degenerate end of the line.
  return alpha > 0.0 ? Phase::coexistence : Phase::boundary;
}

const char* to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::low_density: return "LD";
    case Phase::high_density: return "HD";
    case Phase::maximal_current: return "MC";
    case Phase::coexistence: return "coexistence";
    case Phase::triple_point: return "triple_point";
    case Phase::boundary: return "boundary";
  }
  return "?";
}

namespace {

std::vector<std::vector<const CellResult*>> group_points(std::span<const CellResult> cells) {
  std::vector<std::vector<const CellResult*>> groups;
  for (const CellResult& c : cells) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      return g.front()->alpha == c.alpha && g.front()->beta == c.beta;
    });
    if (it == groups.end()) {
      groups.push_back({&c});
    } else {
      it->push_back(&c);
    }
  }
  return groups;
}

std::vector<CellResult> copy_group(const std::vector<const CellResult*>& group) {
  std::vector<CellResult> out;
  out.reserve(group.size());
  for (const CellResult* c : group) out.push_back(*c);
  return out;
}

std::optional<SegmentFit> try_fit(std::span<const CellResult> cells, Segment segment,
                                  int batches) {
  try {
    SegmentFit sf;
    sf.fit = fit_power_law(cells, segment);
    try {
      sf.sigma = sigma_of_fit(cells, segment, batches);
    } catch (const Error& e) {
      if (e.code() != Errc::insufficient_data) throw;
      sf.sigma = std::numeric_limits<double>::quiet_NaN();
    }
    return sf;
  } catch (const Error& e) {
    if (e.code() != Errc::insufficient_data) throw;
    return std::nullopt;
  }
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::vector<TableRow> build_table(std::span<const CellResult> cells,
                                  std::span<const Segment> segments, int batches) {
  std::vector<TableRow> rows;
  for (const auto& group : group_points(cells)) {
    const std::vector<CellResult> local = copy_group(group);
    TableRow row;
    row.alpha = group.front()->alpha;
    row.beta = group.front()->beta;
    for (const Segment& s : segments) row.fits.push_back(try_fit(local, s, batches));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_delta_percent(double delta) {
  const double pct = delta * 100.0;
  char buf[32];
  if (pct < 9.95) {
    std::snprintf(buf, sizeof buf, "%.1f%%", pct);
  } else {
    std::snprintf(buf, sizeof buf, "%.0f%%", pct);
  }
  return buf;
}

std::string format_prefactor(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", c);
  return buf;
}

std::string emit_table_csv(std::span<const TableRow> rows, std::size_t segments) {
  std::string out = "alpha,beta";
  for (std::size_t j = 0; j < segments; ++j) {
    const std::string s = std::to_string(j);
    out += ",gamma" + s + ",sigma" + s + ",delta" + s;
    if (j == 0) out += ",C0";
  }
  out += '\n';
  for (const TableRow& row : rows) {
    out += short_number(row.alpha) + "," + short_number(row.beta);
    for (std::size_t j = 0; j < segments; ++j) {
      const std::optional<SegmentFit>& f = j < row.fits.size() ? row.fits[j] : std::nullopt;
      if (f) {
        out += "," + text::fixed(f->fit.gamma, 3) + "," +
               (std::isfinite(f->sigma) ? text::fixed(f->sigma, 3) : std::string()) + "," +
               format_delta_percent(f->fit.delta);
      } else {
        out += ",,,";
      }
      if (j == 0) out += "," + (f ? format_prefactor(f->fit.prefactor) : std::string());
    }
    out += '\n';
  }
  return out;
}

std::vector<TableRow> parse_table_csv(std::string_view text) {
  const auto all = text::lines(text);
  if (all.empty()) throw Error(Errc::parse_error, "table is empty");
  const auto header = text::split(all.front(), ',');
  if (header.size() < 6 || (header.size() - 3) % 3 != 0 || header[0] != "alpha") {
    throw Error(Errc::parse_error, "unexpected table header");
  }
  const std::size_t segments = (header.size() - 3) / 3;
  std::vector<TableRow> rows;
  for (std::size_t li = 1; li < all.size(); ++li) {
    const auto f = text::split(all[li], ',');
    if (f.size() != header.size()) throw Error(Errc::parse_error, "ragged table row");
    TableRow row;
    row.alpha = text::parse_number<double>(f[0], "alpha");
    row.beta = text::parse_number<double>(f[1], "beta");
    std::size_t col = 2;
    for (std::size_t j = 0; j < segments; ++j) {
      const std::string_view g = f[col], s = f[col + 1], d = f[col + 2];
      col += 3;
      std::string_view c;
      if (j == 0) c = f[col++];
      if (g.empty()) {
        row.fits.emplace_back(std::nullopt);
        continue;
      }
      SegmentFit sf;
      sf.fit.gamma = text::parse_number<double>(g, "gamma");
      sf.sigma = s.empty() ? std::numeric_limits<double>::quiet_NaN()
                           : text::parse_number<double>(s, "sigma");
      if (d.empty() || d.back() != '%') throw Error(Errc::parse_error, "delta must end in %");
      sf.fit.delta = text::parse_number<double>(d.substr(0, d.size() - 1), "delta") / 100.0;
      if (j == 0 && !c.empty()) sf.fit.prefactor = text::parse_number<double>(c, "C0");
      row.fits.emplace_back(sf);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string emit_table_text(std::span<const TableRow> rows, std::span<const Segment> segments) {
  char buf[96];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-6s %-6s", "alpha", "beta");
  out += buf;
  for (std::size_t j = 0; j < segments.size(); ++j) {
    std::snprintf(buf, sizeof buf, " | %-15s %-6s", ("gamma" + std::to_string(j) + " +- sigma").c_str(),
                  ("Delta" + std::to_string(j)).c_str());
    out += buf;
    if (j == 0) {
      std::snprintf(buf, sizeof buf, " %-6s", "C0");
      out += buf;
    }
  }
  out += '\n';
  std::snprintf(buf, sizeof buf, "%-13s", "");
  out += buf;
  for (std::size_t j = 0; j < segments.size(); ++j) {
    const std::string label =
        std::to_string(segments[j].lo) + " <= n <= " + std::to_string(segments[j].hi);
    std::snprintf(buf, sizeof buf, " | %-22s", label.c_str());
    out += buf;
    if (j == 0) out += "       ";
  }
  out += '\n';
  for (const TableRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%-6s %-6s", short_number(row.alpha).c_str(),
                  short_number(row.beta).c_str());
    out += buf;
    for (std::size_t j = 0; j < segments.size(); ++j) {
      const std::optional<SegmentFit>& f = j < row.fits.size() ? row.fits[j] : std::nullopt;
      std::string gs = "-", ds = "-", cs = "-";
      if (f) {
        gs = text::fixed(f->fit.gamma, 3) + " +- " +
             (std::isfinite(f->sigma) ? text::fixed(f->sigma, 3) : std::string("n/a"));
        ds = format_delta_percent(f->fit.delta);
        cs = format_prefactor(f->fit.prefactor);
      }
      std::snprintf(buf, sizeof buf, " | %-15s %-6s", gs.c_str(), ds.c_str());
      out += buf;
      if (j == 0) {
        std::snprintf(buf, sizeof buf, " %-6s", cs.c_str());
        out += buf;
      }
    }
    out += '\n';
  }
  return out;
}

std::string results_csv_header() { return "alpha,beta,n,run,seed,tau,synced,events\n"; }

std::string format_results_rows(const CellResult& cell) {
  std::string out;
  const std::string prefix =
      text::exact(cell.alpha) + "," + text::exact(cell.beta) + "," + std::to_string(cell.n) + ",";
  for (const RunRecord& r : cell.runs) {
    out += prefix + std::to_string(r.run) + "," + std::to_string(r.seed) + "," +
           (r.synced ? text::exact(r.tau) : std::string()) + "," + (r.synced ? "1" : "0") + "," +
           std::to_string(r.events) + "\n";
  }
  return out;
}

std::vector<ResultsRow> parse_results_csv(std::string_view text) {
  const auto all = text::lines(text);
  std::vector<ResultsRow> rows;
  if (all.empty()) return rows;
  const std::string expected = "alpha,beta,n,run,seed,tau,synced,events";
  if (all.front() != expected) throw Error(Errc::parse_error, "unexpected results header");
  for (std::size_t i = 1; i < all.size(); ++i) {
    const auto f = text::split(all[i], ',');
    if (f.size() != 8) {
      throw Error(Errc::parse_error, "results row " + std::to_string(i) + " needs 8 fields");
    }
    ResultsRow row;
    row.alpha = text::parse_number<double>(f[0], "alpha");
    row.beta = text::parse_number<double>(f[1], "beta");
    row.n = text::parse_number<int>(f[2], "n");
    row.record.run = text::parse_number<std::uint64_t>(f[3], "run");
    row.record.seed = text::parse_number<std::uint64_t>(f[4], "seed");
    row.record.synced = text::parse_number<int>(f[6], "synced") != 0;
    row.record.tau = row.record.synced ? text::parse_number<double>(f[5], "tau") : 0.0;
    row.record.events = text::parse_number<std::uint64_t>(f[7], "events");
    rows.push_back(row);
  }
  return rows;
}

std::vector<CellResult> cells_from_results(std::span<const ResultsRow> rows, int batches) {
  std::map<std::tuple<double, double, int>, std::vector<RunRecord>> grouped;
  for (const ResultsRow& r : rows) grouped[{r.alpha, r.beta, r.n}].push_back(r.record);
  std::vector<CellResult> cells;
  for (auto& [key, recs] : grouped) {
    cells.push_back(aggregate_cell(std::get<0>(key), std::get<1>(key), std::get<2>(key),
                                   std::move(recs), batches));
  }
  return cells;
}

std::string cells_csv(std::span<const CellResult> cells, double epsilon) {
  std::string out = "alpha,beta,n,mean_tau,sigma,timeouts,fit_valid,mixing_bound\n";
  for (const CellResult& c : cells) {
    out += text::exact(c.alpha) + "," + text::exact(c.beta) + "," + std::to_string(c.n) + "," +
           text::exact(c.mean_tau) + "," + text::exact(c.sigma) + "," +
           std::to_string(c.timeouts) + "," + (c.fit_valid() ? "1" : "0") + "," +
           text::exact(c.mean_tau / epsilon) + "\n";
  }
  return out;
}

std::vector<SummaryRow> summarize(std::span<const CellResult> cells,
                                  std::span<const Segment> segments, int batches) {
  std::vector<SummaryRow> out;
  for (const TableRow& row : build_table(cells, segments, batches)) {
    for (const auto& f : row.fits) {
      if (!f) continue;
      out.push_back({row.alpha, row.beta, f->fit.segment, f->fit.gamma, f->sigma, f->fit.delta,
                     f->fit.prefactor, f->fit.cells});
    }
  }
  return out;
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::string out = "alpha,beta,segment_lo,segment_hi,gamma,sigma,delta,C,cells\n";
  for (const SummaryRow& r : rows) {
    out += text::exact(r.alpha) + "," + text::exact(r.beta) + "," + std::to_string(r.segment.lo) +
           "," + std::to_string(r.segment.hi) + "," + text::exact(r.gamma) + "," +
           (std::isfinite(r.sigma) ? text::exact(r.sigma) : std::string()) + "," +
           text::exact(r.delta) + "," + text::exact(r.prefactor) + "," + std::to_string(r.cells) +
           "\n";
  }
  return out;
}

std::vector<SummaryRow> parse_summary_csv(std::string_view text) {
  const auto all = text::lines(text);
  if (all.empty()) throw Error(Errc::parse_error, "summary is empty");
  if (all.front() != "alpha,beta,segment_lo,segment_hi,gamma,sigma,delta,C,cells") {
    throw Error(Errc::parse_error, "unexpected summary header");
  }
  std::vector<SummaryRow> rows;
  for (std::size_t i = 1; i < all.size(); ++i) {
    const auto f = text::split(all[i], ',');
    if (f.size() != 9) throw Error(Errc::parse_error, "summary row needs 9 fields");
    SummaryRow r;
    r.alpha = text::parse_number<double>(f[0], "alpha");
    r.beta = text::parse_number<double>(f[1], "beta");
    r.segment = {text::parse_number<int>(f[2], "segment_lo"),
                 text::parse_number<int>(f[3], "segment_hi")};
    r.gamma = text::parse_number<double>(f[4], "gamma");
    r.sigma = f[5].empty() ? std::numeric_limits<double>::quiet_NaN()
                           : text::parse_number<double>(f[5], "sigma");
    r.delta = text::parse_number<double>(f[6], "delta");
    r.prefactor = text::parse_number<double>(f[7], "C");
    r.cells = text::parse_number<std::size_t>(f[8], "cells");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace tasep
