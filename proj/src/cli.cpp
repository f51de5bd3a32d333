#include "tasep/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tasep/coupling.hpp"
#include "tasep/experiments.hpp"
#include "tasep/master.hpp"
#include "tasep/render.hpp"
#include "text_util.hpp"

namespace tasep {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << content;
  if (!out) throw UsageError("write failed for " + path.string());
}

struct ChainFlags {
  int n = 3;
  double alpha = 1.0;
  double beta = 1.0;
  std::vector<double> h{1.0};
};

void add_chain_flags(CLI::App* cmd, ChainFlags& f) {
  cmd->add_option("--n", f.n, "chain length")->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "entry rate")->capture_default_str();
  cmd->add_option("--beta", f.beta, "exit rate")->capture_default_str();
  cmd->add_option("--h", f.h, "interior rates: one value broadcasts, else n-1 values")
      ->delimiter(',');
}

RateConfig chain_rates(const ChainFlags& f) {
  if (f.n < 1 || f.n > kMaxSites) throw UsageError("--n must lie in [1, 1024]");
  if (f.h.empty()) throw UsageError("--h needs at least one value");
  RateConfig rates = RateConfig::tasep(f.n, f.alpha, f.beta, f.h.front());
  if (f.h.size() != 1) {
    if (f.h.size() != static_cast<std::size_t>(f.n - 1)) {
      throw UsageError("--h takes one value or exactly n-1 values");
    }
    rates.interior = f.h;
  }
  rates.validate();
  return rates;
}

int env_workers() {
  const char* v = std::getenv("TASEP_WORKERS");
  if (!v || !*v) return 0;
  try {
    const int w = text::parse_number<int>(v, "TASEP_WORKERS");
    if (w < 0) throw UsageError("TASEP_WORKERS must be >= 0");
    return w;
  } catch (const Error&) {
    throw UsageError("TASEP_WORKERS must be an integer");
  }
}

// sync -----------------------------------------------------------------------

struct SyncFlags {
  ChainFlags chain;
  std::int64_t runs = 1;
  std::uint64_t seed = 1;
  double max_time = 1e7;
  bool all_states = false;
  std::string traj_out;
  std::vector<double> traj_times;
};

int cmd_sync(const SyncFlags& f, std::ostream& out, std::ostream& err) {
  const RateConfig rates = chain_rates(f.chain);
  if (f.runs < 1) throw UsageError("--runs must be >= 1");
  if (!(f.max_time > 0.0)) throw UsageError("--max-time must be > 0");
  if (f.all_states && f.chain.n > kMaxSetSites) throw UsageError("--all-states needs n <= 20");
  if (!f.traj_out.empty() && f.traj_times.empty()) {
    throw UsageError("--traj-out needs --traj-times");
  }
  const ClockLaw law = ClockLaw::from_rates(rates);
  const int n = rates.n;
  SyncLimits limits;
  limits.max_time = f.max_time;
  const LatticeState empty = LatticeState::empty(n);
  const LatticeState full = LatticeState::full(n);

  out << "n,alpha,beta,seed,tau,synced,events\n";
  std::uint64_t timeouts = 0;
  for (std::int64_t r = 0; r < f.runs; ++r) {
    const std::uint64_t seed =
        run_seed(f.seed, rates.alpha, rates.beta, n, static_cast<std::uint64_t>(r));
    const SyncOutcome o = f.all_states ? sync_time_all(n, law, StreamSeed{seed}, limits)
                                       : sync_time_pair(empty, full, law, StreamSeed{seed}, limits);
    timeouts += o.synced ? 0 : 1;
    out << n << ',' << text::shortest(rates.alpha) << ',' << text::shortest(rates.beta) << ','
        << seed << ',' << (o.synced ? text::exact(o.tau) : std::string()) << ','
        << (o.synced ? 1 : 0) << ',' << o.events_consumed << '\n';
  }
  if (!f.traj_out.empty()) {
    const std::vector<LatticeState> starts{empty, full};
    const StreamSeed seed{run_seed(f.seed, rates.alpha, rates.beta, n, 0)};
    write_file(f.traj_out,
               trajectories_to_csv(sample_trajectories(starts, law, seed, f.traj_times)));
  }
  if (timeouts > 0) {
    err << timeouts << " of " << f.runs << " runs hit the time limit\n";
    return kExitWarning;
  }
  return kExitOk;
}

// sweep ----------------------------------------------------------------------

struct SweepFlags {
  std::string plan;
  std::string out_dir;
  int workers = -1;
  bool resume = false;
};

int cmd_sweep(const SweepFlags& f, std::ostream& out, std::ostream& err) {
  SweepPlan plan;
  try {
    plan = parse_plan(read_file(f.plan));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const int workers = f.workers >= 0 ? f.workers : env_workers();
  const std::filesystem::path dir(f.out_dir);
  std::filesystem::create_directories(dir);

  SweepOptions options;
  options.workers = workers;
  options.results_path = dir / "results.csv";
  options.resume = f.resume;
  options.on_cell = [&err](const CellResult& c) {
    err << "cell alpha=" << c.alpha << " beta=" << c.beta << " n=" << c.n
        << " mean_tau=" << c.mean_tau << " timeouts=" << c.timeouts << '\n';
  };
  const SweepReport report = run_sweep(plan, options);

  const auto summary = summarize(report.cells, plan.segments, plan.batches);
  const auto table = build_table(report.cells, plan.segments, plan.batches);
  write_file(dir / "summary.csv", summary_csv(summary));
  write_file(dir / "cells.csv", cells_csv(report.cells, plan.epsilon));
  write_file(dir / "table.csv", emit_table_csv(table, plan.segments.size()));
  write_file(dir / "table.txt", emit_table_text(table, plan.segments));

  out << "quantity,value\n";
  out << "cells," << report.cells.size() << '\n';
  out << "new_runs," << report.new_runs << '\n';
  out << "resumed_cells," << report.resumed_cells << '\n';
  out << "summary_rows," << summary.size() << '\n';
  const auto biased = std::count_if(report.cells.begin(), report.cells.end(),
                                    [](const CellResult& c) { return c.biased_low(); });
  if (biased > 0) {
    err << biased << " cells had timeouts; their means are biased low\n";
    return kExitWarning;
  }
  return kExitOk;
}

// attractor ------------------------------------------------------------------

struct AttractorFlags {
  ChainFlags chain{4, 1.0, 1.0, {1.0}};
  std::string model = "tasep";
  double h_left = 0.0;
  double right_entry = 0.0;
  std::int64_t seeds = 100;
  std::uint64_t seed = 1;
  double t_max = 1e4;
};

int cmd_attractor(const AttractorFlags& f, std::ostream& out, std::ostream& err) {
  if (f.seeds < 1) throw UsageError("--seeds must be >= 1");
  if (!(f.t_max > 0.0)) throw UsageError("--t-max must be > 0");
  StateSpace space = StateSpace::z3();
  ClockLaw law;
  if (f.model == "z3") {
    law = z3_model().law;
  } else if (f.model == "tasep" || f.model == "asep") {
    if (f.chain.n > kMaxSetSites) throw UsageError("attractor needs n <= 20");
    if (f.model == "tasep") {
      law = ClockLaw::from_rates(chain_rates(f.chain));
      space = StateSpace::lattice(f.chain.n, Model::tasep);
    } else {
      if (f.chain.h.size() != 1) throw UsageError("asep takes a single --h");
      law = ClockLaw::from_rates(RateConfig::asep_uniform(f.chain.n, f.chain.alpha, f.chain.beta,
                                                          f.chain.h.front(), f.h_left,
                                                          f.right_entry));
      space = StateSpace::lattice(f.chain.n, Model::asep);
    }
  } else {
    throw UsageError("--model must be tasep, asep or z3");
  }

  out << "seed,settled,size,settle_scale,state\n";
  std::int64_t singletons = 0;
  std::int64_t unsettled = 0;
  for (std::int64_t s = 0; s < f.seeds; ++s) {
    const std::uint64_t seed = derive_seed(f.seed, {static_cast<std::uint64_t>(s)});
    const AttractorResult a = pullback_attractor(space, law, StreamSeed{seed}, f.t_max);
    const bool single = a.settled && a.set.size() == 1;
    singletons += single ? 1 : 0;
    unsettled += a.settled ? 0 : 1;
    out << seed << ',' << (a.settled ? 1 : 0) << ',' << a.set.size() << ','
        << (a.settled ? text::shortest(a.settle_scale) : std::string()) << ','
        << (single ? space.label(a.set.codes().front()) : std::string()) << '\n';
  }
  char pct[32];
  std::snprintf(pct, sizeof pct, "%.1f", 100.0 * static_cast<double>(singletons) /
                                             static_cast<double>(f.seeds));
  err << "singleton attractors: " << singletons << "/" << f.seeds << " (" << pct << "%)\n";
  if (unsettled > 0) {
    err << unsettled << " seeds did not settle within t_max\n";
    return kExitWarning;
  }
  return kExitOk;
}

// master ---------------------------------------------------------------------

struct MasterFlags {
  ChainFlags chain;
  double t = 1.0;
  double epsilon = 0.25;
  bool check_bound = false;
  std::string stationary_out;
  std::string curve_out;
  std::vector<double> curve_times{0.25, 0.5, 1, 2, 4, 8, 16};
};

int cmd_master(const MasterFlags& f, std::ostream& out, std::ostream&) {
  if (!(f.epsilon > 0.0 && f.epsilon < 1.0)) throw UsageError("--epsilon must lie in (0, 1)");
  if (!(f.t >= 0.0)) throw UsageError("--t must be >= 0");
  if (f.chain.n > kMaxGeneratorSites) throw UsageError("master needs n <= 12");
  if (f.check_bound && f.chain.n > kMaxCoalescenceSites) {
    throw UsageError("--check-bound needs n <= 5");
  }
  const RateConfig rates = chain_rates(f.chain);
  const ClockLaw law = ClockLaw::from_rates(rates);
  const StateSpace space = StateSpace::lattice(rates.n);
  const Generator q = build_generator(rates);
  const Distribution pi = stationary(q);

  out << "quantity,value\n";
  out << "n," << rates.n << '\n';
  out << "states," << q.dim() << '\n';
  out << "epsilon," << text::shortest(f.epsilon) << '\n';
  out << "t_mix," << text::exact(mixing_time(q, f.epsilon)) << '\n';
  if (f.stationary_out.empty()) {
    for (std::uint32_t i = 0; i < q.dim(); ++i) {
      out << "pi:" << space.label(i) << ',' << text::exact(pi[i]) << '\n';
    }
  } else {
    write_file(f.stationary_out, distribution_to_csv(space, pi));
  }
  if (!f.curve_out.empty()) {
    write_file(f.curve_out, mixing_curve_to_csv(mixing_curve(q, f.curve_times)));
  }
  if (f.check_bound) {
    const std::uint32_t full = static_cast<std::uint32_t>(state_index(LatticeState::full(rates.n)));
    const BoundCheck b = coupling_bound_check(law, rates.n, f.t, Distribution::point(q.dim(), full),
                                              Distribution::point(q.dim(), 0));
    out << "t," << text::shortest(f.t) << '\n';
    out << "bound_lhs," << text::exact(b.lhs) << '\n';
    out << "bound_rhs," << text::exact(b.rhs) << '\n';
    out << "bound_holds," << (b.holds ? "true" : "false") << '\n';
  }
  return kExitOk;
}

// replay ---------------------------------------------------------------------

int cmd_replay(const std::string& fixture, std::ostream& out) {
  if (fixture == "remark54") {
    out << "t traj1 traj2\n";
    for (const ReplayRow& row : counterexample_replay()) {
      out << row.label << ' ' << row.first.to_string() << ' ' << row.second.to_string() << '\n';
    }
    return kExitOk;
  }
  if (fixture.rfind("lemma:", 0) == 0) {
    int n = 0;
    try {
      n = text::parse_number<int>(std::string_view(fixture).substr(6), "lemma length");
    } catch (const Error&) {
      throw UsageError("lemma fixture needs an integer length");
    }
    if (n < 1 || n > 10) throw UsageError("lemma fixture needs 1 <= n <= 10");
    const std::vector<SiteIndex> seq = flushing_sequence(n);
    out << "sequence";
    for (SiteIndex k : seq) out << ' ' << k.value;
    out << '\n';
    bool all_zero = true;
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
      std::uint64_t x = code;
      for (SiteIndex k : seq) x = hop_code(x, n, k.value);
      all_zero = all_zero && x == 0;
    }
    out << "states " << (std::uint64_t{1} << n) << '\n';
    out << "all-zero: " << (all_zero ? "yes" : "no") << '\n';
    return all_zero ? kExitOk : kExitWarning;
  }
  throw UsageError("unknown fixture '" + fixture + "' (expected remark54 or lemma:n)");
}

// fit ------------------------------------------------------------------------

struct FitFlags {
  std::string results;
  int batches = 10;
  std::string segments = "80:160,40:160,11:160";
  std::string table_out;
  bool text = false;
};

int cmd_fit(const FitFlags& f, std::ostream& out, std::ostream& err) {
  std::vector<Segment> segments;
  std::vector<CellResult> cells;
  try {
    for (std::string_view item : text::split(f.segments, ',')) {
      const auto parts = text::split(text::trim(item), ':');
      if (parts.size() != 2) throw UsageError("segments are written lo:hi");
      segments.push_back({text::parse_number<int>(parts[0], "segment"),
                          text::parse_number<int>(parts[1], "segment")});
    }
    cells = cells_from_results(parse_results_csv(read_file(f.results)), f.batches);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto table = build_table(cells, segments, f.batches);
  out << summary_csv(summarize(cells, segments, f.batches));
  if (!f.table_out.empty()) write_file(f.table_out, emit_table_csv(table, segments.size()));
  if (f.text) err << emit_table_text(table, segments);
  return kExitOk;
}

// render ---------------------------------------------------------------------

struct RenderFlags {
  std::string traj;
  std::string summary;
  std::string out;
};

int cmd_render(const RenderFlags& f) {
  if (f.traj.empty() == f.summary.empty()) {
    throw UsageError("render takes exactly one of --traj and --sweep-summary");
  }
  std::string svg;
  try {
    if (!f.traj.empty()) {
      svg = render_trajectories_svg(trajectories_from_csv(read_file(f.traj)));
    } else {
      svg = render_scatter_svg(parse_summary_csv(read_file(f.summary)));
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  write_file(f.out, svg);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grand-coupling and synchronization tools for open exclusion chains", "tasep"};
  app.require_subcommand(1);
  // --h is the interior rate, so help is long-form only.
  app.set_help_flag("--help", "print help and exit");

  SyncFlags sync;
  CLI::App* sync_cmd = app.add_subcommand("sync", "empty-vs-full synchronization times");
  add_chain_flags(sync_cmd, sync.chain);
  sync_cmd->add_option("--runs", sync.runs, "number of runs")->capture_default_str();
  sync_cmd->add_option("--seed", sync.seed, "base seed")->capture_default_str();
  sync_cmd->add_option("--max-time", sync.max_time, "per-run time limit")->capture_default_str();
  sync_cmd->add_flag("--all-states", sync.all_states, "track all 2^n states (n <= 20)");
  sync_cmd->add_option("--traj-out", sync.traj_out, "write run-0 trajectories of empty and full");
  sync_cmd->add_option("--traj-times", sync.traj_times, "sample times for --traj-out")
      ->delimiter(',');

  SweepFlags sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a plan of (alpha, beta, n) cells");
  sweep_cmd->add_option("--plan", sweep.plan, "plan file")->required();
  sweep_cmd->add_option("--out", sweep.out_dir, "output directory")->required();
  sweep_cmd->add_option("--workers", sweep.workers, "OpenMP threads (default: TASEP_WORKERS)");
  sweep_cmd->add_flag("--resume", sweep.resume, "skip cells already in results.csv");

  AttractorFlags attractor;
  CLI::App* attractor_cmd = app.add_subcommand("attractor", "pullback attractors per seed");
  add_chain_flags(attractor_cmd, attractor.chain);
  attractor_cmd->add_option("--model", attractor.model, "tasep, asep or z3")->capture_default_str();
  attractor_cmd->add_option("--h-left", attractor.h_left, "asep leftward rate");
  attractor_cmd->add_option("--right-entry", attractor.right_entry, "asep entry from the right");
  attractor_cmd->add_option("--seeds", attractor.seeds, "number of seeds")->capture_default_str();
  attractor_cmd->add_option("--seed", attractor.seed, "base seed")->capture_default_str();
  attractor_cmd->add_option("--t-max", attractor.t_max, "largest pullback scale")
      ->capture_default_str();

  MasterFlags master;
  CLI::App* master_cmd = app.add_subcommand("master", "exact stationary law and mixing time");
  add_chain_flags(master_cmd, master.chain);
  master_cmd->add_option("--t", master.t, "time for --check-bound")->capture_default_str();
  master_cmd->add_option("--epsilon", master.epsilon, "mixing threshold")->capture_default_str();
  master_cmd->add_flag("--check-bound", master.check_bound, "exact coupling bound, full vs empty");
  master_cmd->add_option("--stationary-out", master.stationary_out, "stationary law CSV");
  master_cmd->add_option("--curve-out", master.curve_out, "worst-case TV curve CSV");
  master_cmd->add_option("--curve-times", master.curve_times, "times for --curve-out")
      ->delimiter(',');

  std::string fixture;
  CLI::App* replay_cmd = app.add_subcommand("replay", "deterministic fixtures");
  replay_cmd->add_option("--fixture", fixture, "remark54 or lemma:n")->required();

  FitFlags fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "power-law fits from a results CSV");
  fit_cmd->add_option("--results", fit.results, "results CSV")->required();
  fit_cmd->add_option("--batches", fit.batches, "batches per cell")->capture_default_str();
  fit_cmd->add_option("--segments", fit.segments, "lo:hi,...")->capture_default_str();
  fit_cmd->add_option("--table-out", fit.table_out, "table CSV");
  fit_cmd->add_flag("--text", fit.text, "print the table to stderr");

  RenderFlags render;
  CLI::App* render_cmd = app.add_subcommand("render", "SVG rasters and exponent scatter");
  render_cmd->add_option("--traj", render.traj, "trajectory CSV");
  render_cmd->add_option("--sweep-summary", render.summary, "summary CSV");
  render_cmd->add_option("--out", render.out, "SVG path")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sync_cmd) return cmd_sync(sync, out, err);
    if (*sweep_cmd) return cmd_sweep(sweep, out, err);
    if (*attractor_cmd) return cmd_attractor(attractor, out, err);
    if (*master_cmd) return cmd_master(master, out, err);
    if (*replay_cmd) return cmd_replay(fixture, out);
    if (*fit_cmd) return cmd_fit(fit, out, err);
    if (*render_cmd) return cmd_render(render);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace tasep
