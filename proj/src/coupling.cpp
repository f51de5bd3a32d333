#include "tasep/coupling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace tasep {

namespace {

/// Deduplicating image of a code set under one event at a time.
class SetEvolver {
 public:
  SetEvolver(const StateSpace& space, std::span<const std::uint32_t> codes)
      : space_(space), codes_(codes.begin(), codes.end()), stamp_(space.size(), 0) {}

  void apply(SiteIndex k) {
    ++epoch_;
    std::size_t out = 0;
    for (std::size_t i = 0; i < codes_.size(); ++i) {
      const std::uint32_t c = space_.step(codes_[i], k);
      if (stamp_[c] != epoch_) {
        stamp_[c] = epoch_;
        codes_[out++] = c;
      }
    }
    codes_.resize(out);
  }

  std::size_t size() const noexcept { return codes_.size(); }
  StateSet result() const { return StateSet(space_.size(), codes_); }

 private:
  const StateSpace& space_;
  std::vector<std::uint32_t> codes_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

void check_horizon(const EventStream& stream, Interval horizon) {
  if (!stream.window().contains(horizon)) {
    throw Error(Errc::window_violation, "horizon not inside the stream window");
  }
}

Model law_model(const ClockLaw& law) {
  for (const Clock& c : law.clocks()) {
    if (c.site.value < 0) return Model::asep;
  }
  return Model::tasep;
}

// Sites (0-based) whose occupation event k may change.
std::pair<int, int> touched_sites(int n, int k) {
  if (k == 0) return {0, 0};
  if (k == n || k == -(n + 1)) return {n - 1, n - 1};
  if (k > 0) return {k - 1, k};
  return {-k - 1, -k};
}

std::string format_time(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  return buf;
}

}  // namespace

StateSpace StateSpace::lattice(int n, Model model) {
  if (n < 1) throw Error(Errc::invalid_argument, "n must be positive");
  if (n > kMaxSetSites) throw Error(Errc::too_large, "state spaces support n <= 20");
  return StateSpace(Kind::lattice, n, model, std::uint32_t{1} << n);
}

StateSpace StateSpace::z3() { return StateSpace(Kind::z3, 0, Model::tasep, 3); }

bool StateSpace::valid_index(SiteIndex k) const noexcept {
  if (kind_ == Kind::z3) return k.value == 1 || k.value == 2;
  return is_valid_index(n_, k, model_);
}

std::string StateSpace::label(std::uint32_t code) const {
  if (kind_ == Kind::z3) return std::to_string(code);
  return index_state(code, n_).to_string();
}

void StateSpace::check_law(const ClockLaw& law) const {
  for (const Clock& c : law.clocks()) {
    if (!valid_index(c.site)) {
      throw Error(Errc::index_out_of_range,
                  "clock " + std::to_string(c.site.value) + " not in the state space alphabet");
    }
  }
}

LatticeState evolve(const LatticeState& x, const EventStream& stream, Interval horizon,
                    Model model) {
  check_horizon(stream, horizon);
  LatticeState y = x;
  for (const JumpEvent& e : events_in(stream, horizon)) {
    if (!is_valid_index(y.size(), e.site, model)) {
      throw Error(Errc::index_out_of_range,
                  "event site " + std::to_string(e.site.value) + " invalid for n=" +
                      std::to_string(y.size()));
    }
    hop_in_place(y.sites(), e.site.value);
  }
  return y;
}

StateSet evolve_set(const StateSpace& space, const StateSet& set, const EventStream& stream,
                    Interval horizon) {
  check_horizon(stream, horizon);
  if (set.universe() != space.size()) {
    throw Error(Errc::dimension_mismatch, "state set does not belong to this space");
  }
  const auto events = events_in(stream, horizon);
  if (events.empty()) return set;
  SetEvolver evolver(space, set.codes());
  for (const JumpEvent& e : events) {
    if (!space.valid_index(e.site)) {
      throw Error(Errc::index_out_of_range,
                  "event site " + std::to_string(e.site.value) + " not in the alphabet");
    }
    evolver.apply(e.site);
  }
  return evolver.result();
}

std::vector<SiteIndex> flushing_sequence(int n) {
  if (n < 1) throw Error(Errc::invalid_argument, "n must be positive");
  std::vector<SiteIndex> seq;
  seq.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2);
  for (int start = n; start >= 1; --start) {
    for (int k = start; k <= n; ++k) seq.emplace_back(k);
  }
  return seq;
}

SyncOutcome sync_time_pair(const LatticeState& x1, const LatticeState& x2, const ClockLaw& law,
                           StreamSeed seed, SyncLimits limits) {
  const int n = x1.size();
  if (x2.size() != n) throw Error(Errc::dimension_mismatch, "states differ in length");
  const Model model = law_model(law);
  for (const Clock& c : law.clocks()) {
    if (!is_valid_index(n, c.site, model)) {
      throw Error(Errc::index_out_of_range, "clock index outside the chain alphabet");
    }
  }
  SyncOutcome out;
  if (x1 == x2) {
    out.synced = true;
    out.final_state = x1;
    return out;
  }

  std::vector<std::uint8_t> a(x1.sites().begin(), x1.sites().end());
  std::vector<std::uint8_t> b(x2.sites().begin(), x2.sites().end());
  int mismatches = 0;
  for (int i = 0; i < n; ++i) mismatches += a[i] != b[i];

  ForwardClock clock(law, seed);
  while (!clock.exhausted() && out.events_consumed < limits.max_events) {
    if (clock.peek_time() >= limits.max_time) break;
    const JumpEvent e = clock.next();
    ++out.events_consumed;
    const auto [lo, hi] = touched_sites(n, e.site.value);
    const int before = (a[lo] != b[lo]) + (hi != lo && a[hi] != b[hi]);
    const bool ca = hop_in_place(a, e.site.value);
    const bool cb = hop_in_place(b, e.site.value);
    if (!ca && !cb) continue;
    const int after = (a[lo] != b[lo]) + (hi != lo && a[hi] != b[hi]);
    mismatches += after - before;
    if (mismatches == 0) {
      out.synced = true;
      out.tau = e.time;
      LatticeState fin(n);
      std::copy(a.begin(), a.end(), fin.sites().begin());
      out.final_state = std::move(fin);
      return out;
    }
  }
  return out;
}

SetSyncOutcome sync_time_space(const StateSpace& space, const ClockLaw& law, StreamSeed seed,
                               SyncLimits limits) {
  space.check_law(law);
  SetSyncOutcome out;
  const StateSet everything = StateSet::full(space.size());
  if (everything.size() <= 1) {
    out.synced = true;
    out.final_set = everything;
    return out;
  }
  SetEvolver evolver(space, everything.codes());
  ForwardClock clock(law, seed);
  while (!clock.exhausted() && out.events_consumed < limits.max_events) {
    if (clock.peek_time() >= limits.max_time) break;
    const JumpEvent e = clock.next();
    ++out.events_consumed;
    evolver.apply(e.site);
    if (evolver.size() == 1) {
      out.synced = true;
      out.tau = e.time;
      break;
    }
  }
  out.final_set = evolver.result();
  return out;
}

SyncOutcome sync_time_all(int n, const ClockLaw& law, StreamSeed seed, SyncLimits limits) {
  if (n > kMaxSetSites) throw Error(Errc::too_large, "sync_time_all supports n <= 20");
  const StateSpace space = StateSpace::lattice(n, law_model(law));
  const SetSyncOutcome s = sync_time_space(space, law, seed, limits);
  SyncOutcome out;
  out.synced = s.synced;
  out.tau = s.tau;
  out.events_consumed = s.events_consumed;
  if (s.synced) out.final_state = index_state(s.final_set.codes().front(), n);
  return out;
}

namespace {

bool coalesced_by(double t, int n, const ClockLaw& law, std::uint64_t seed, std::uint64_t run) {
  SyncLimits limits;
  limits.max_time = t;
  return sync_time_all(n, law, StreamSeed{derive_seed(seed, {run})}, limits).synced;
}

Estimate binomial(std::uint64_t hits, std::uint64_t runs) {
  const double p = static_cast<double>(hits) / static_cast<double>(runs);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(runs))};
}

void check_gamma_args(int n, std::uint64_t runs) {
  if (runs < 1) throw Error(Errc::invalid_argument, "runs must be >= 1");
  if (n > kMaxSetSites) throw Error(Errc::too_large, "gamma_probability supports n <= 20");
}

}  // namespace

Estimate gamma_probability(double t, int n, const ClockLaw& law, std::uint64_t runs,
                           std::uint64_t seed) {
  check_gamma_args(n, runs);
  long long hits = 0;
  const auto total = static_cast<long long>(runs);
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : hits)
  for (long long r = 0; r < total; ++r) {
    hits += coalesced_by(t, n, law, seed, static_cast<std::uint64_t>(r)) ? 1 : 0;
  }
  return binomial(static_cast<std::uint64_t>(hits), runs);
}

Estimate gamma_probability_serial(double t, int n, const ClockLaw& law, std::uint64_t runs,
                                  std::uint64_t seed) {
  check_gamma_args(n, runs);
  std::uint64_t hits = 0;
  for (std::uint64_t r = 0; r < runs; ++r) hits += coalesced_by(t, n, law, seed, r) ? 1 : 0;
  return binomial(hits, runs);
}

AttractorResult pullback_attractor(const StateSpace& space, const ClockLaw& law,
                                   StreamSeed seed, double t_max, double origin) {
  space.check_law(law);
  if (!(t_max > 0.0)) throw Error(Errc::invalid_argument, "t_max must be positive");
  AttractorResult res;
  const StateSet everything = StateSet::full(space.size());
  // B_s is contained in B_t for s >= t, so a singleton is final. Anything
  // larger only counts as settled once it has held over a factor-8 span of
  // scales ending at t_max; equal images at two adjacent scales alone can just
  // mean the window in between carried no contracting events.
  std::vector<double> schedule;
  for (double scale = std::min(1.0, t_max); scale < t_max; scale *= 2.0) schedule.push_back(scale);
  schedule.push_back(t_max);
  for (double scale : schedule) {
    const Interval window{origin - scale, origin};
    const EventStream stream = sample_stream(law, window, seed);
    res.scales.push_back(scale);
    res.images.push_back(evolve_set(space, everything, stream, window));
    if (res.images.back().size() == 1) {
      res.settled = true;
      res.settle_scale = scale;
      break;
    }
  }
  if (!res.settled) {
    std::size_t first = res.images.size() - 1;
    while (first > 0 && res.images[first - 1] == res.images.back()) --first;
    if (res.scales.back() >= 8.0 * res.scales[first]) {
      res.settled = true;
      res.settle_scale = res.scales[first];
    }
  }
  res.set = res.images.back();
  return res;
}

std::optional<bool> invariance_check(const StateSpace& space, const ClockLaw& law,
                                     StreamSeed seed, double s, double t_max) {
  if (s < 0.0) throw Error(Errc::negative_time, "invariance shift must be >= 0");
  if (s == 0.0) return true;
  const AttractorResult now = pullback_attractor(space, law, seed, t_max, 0.0);
  const AttractorResult later = pullback_attractor(space, law, seed, t_max, s);
  if (!now.settled || !later.settled) return std::nullopt;
  const Interval forward{0.0, s};
  const EventStream stream = sample_stream(law, forward, seed);
  return evolve_set(space, now.set, stream, forward) == later.set;
}

std::vector<ReplayRow> counterexample_replay() {
  const std::vector<int> script{2, 1, 0, 1, 2, 3};
  LatticeState a = LatticeState::parse("110");
  LatticeState b = LatticeState::parse("000");
  std::vector<ReplayRow> rows;
  rows.push_back({"t0", a, b});
  for (std::size_t i = 0; i < script.size(); ++i) {
    a = hop(a, SiteIndex(script[i]));
    b = hop(b, SiteIndex(script[i]));
    rows.push_back({"t" + std::to_string(i + 1), a, b});
  }
  return rows;
}

std::vector<TrajectorySample> sample_trajectories(std::span<const LatticeState> starts,
                                                  const ClockLaw& law, StreamSeed seed,
                                                  std::span<const double> times) {
  if (starts.empty()) throw Error(Errc::invalid_argument, "need at least one start state");
  const int n = starts.front().size();
  for (const LatticeState& s : starts) {
    if (s.size() != n) throw Error(Errc::dimension_mismatch, "start states differ in length");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0) throw Error(Errc::negative_time, "sample times must be >= 0");
    if (i > 0 && times[i] < times[i - 1]) {
      throw Error(Errc::unsorted_times, "sample times must be nondecreasing");
    }
  }
  const Model model = law_model(law);
  for (const Clock& c : law.clocks()) {
    if (!is_valid_index(n, c.site, model)) {
      throw Error(Errc::index_out_of_range, "clock index outside the chain alphabet");
    }
  }
  std::vector<LatticeState> cur(starts.begin(), starts.end());
  std::vector<TrajectorySample> out;
  ForwardClock clock(law, seed);
  for (double t : times) {
    while (!clock.exhausted() && clock.peek_time() < t) {
      const JumpEvent e = clock.next();
      for (LatticeState& x : cur) hop_in_place(x.sites(), e.site.value);
    }
    out.push_back({t, cur});
  }
  return out;
}

std::string trajectories_to_csv(std::span<const TrajectorySample> samples) {
  std::string out = "t";
  const std::size_t width = samples.empty() ? 1 : samples.front().states.size();
  for (std::size_t j = 0; j < width; ++j) out += ",state" + std::to_string(j + 1);
  out += '\n';
  for (const TrajectorySample& s : samples) {
    out += format_time(s.time);
    for (const LatticeState& x : s.states) out += "," + x.to_string();
    out += '\n';
  }
  return out;
}

std::vector<TrajectorySample> trajectories_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<TrajectorySample> out;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (first) {
      first = false;
      if (!fields.empty() && fields[0] == "t") continue;
    }
    if (fields.size() < 2) throw Error(Errc::parse_error, "trajectory row needs t,state");
    if (width == 0) width = fields.size();
    if (fields.size() != width) throw Error(Errc::parse_error, "ragged trajectory rows");
    TrajectorySample s;
    const char* b = fields[0].data();
    const char* e = b + fields[0].size();
    auto r = std::from_chars(b, e, s.time);
    if (r.ec != std::errc{} || r.ptr != e) throw Error(Errc::parse_error, "bad time field");
    for (std::size_t j = 1; j < fields.size(); ++j) {
      s.states.push_back(LatticeState::parse(fields[j]));
    }
    if (!out.empty() && s.states.front().size() != out.front().states.front().size()) {
      throw Error(Errc::parse_error, "trajectory rows differ in chain length");
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error(Errc::parse_error, "trajectory file has no rows");
  return out;
}

namespace {

void one_point_run(const StateSpace& space, const ClockLaw& law, double t, std::uint64_t seed,
                   std::uint64_t run, std::vector<std::uint32_t>& state,
                   std::vector<std::uint64_t>& counts) {
  const std::uint32_t size = space.size();
  for (std::uint32_t x = 0; x < size; ++x) state[x] = x;
  if (t > 0.0) {
    const Interval window{0.0, t};
    const EventStream stream = sample_stream(law, window, StreamSeed{derive_seed(seed, {run})});
    for (const JumpEvent& e : stream.events()) {
      for (std::uint32_t x = 0; x < size; ++x) state[x] = space.step(state[x], e.site);
    }
  }
  for (std::uint32_t x = 0; x < size; ++x) ++counts[std::size_t{x} * size + state[x]];
}

std::vector<std::vector<std::uint64_t>> unflatten(const std::vector<std::uint64_t>& flat,
                                                  std::uint32_t size) {
  std::vector<std::vector<std::uint64_t>> out(size);
  for (std::uint32_t x = 0; x < size; ++x) {
    out[x].assign(flat.begin() + std::ptrdiff_t{x} * size,
                  flat.begin() + std::ptrdiff_t{x + 1} * size);
  }
  return out;
}

void check_one_point(const StateSpace& space, const ClockLaw& law, double t) {
  space.check_law(law);
  if (t < 0.0) throw Error(Errc::negative_time, "t must be >= 0");
  if (space.size() > 4096) throw Error(Errc::too_large, "one-point laws need <= 4096 states");
}

}  // namespace

std::vector<std::vector<std::uint64_t>> one_point_counts(const StateSpace& space,
                                                         const ClockLaw& law, double t,
                                                         std::uint64_t runs,
                                                         std::uint64_t seed) {
  check_one_point(space, law, t);
  const std::uint32_t size = space.size();
  std::vector<std::uint64_t> total(std::size_t{size} * size, 0);
  const auto n_runs = static_cast<long long>(runs);
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(total.size(), 0);
    std::vector<std::uint32_t> state(size);
#pragma omp for schedule(static)
    for (long long r = 0; r < n_runs; ++r) {
      one_point_run(space, law, t, seed, static_cast<std::uint64_t>(r), state, local);
    }
#pragma omp critical
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += local[i];
  }
  return unflatten(total, size);
}

std::vector<std::vector<std::uint64_t>> one_point_counts_serial(const StateSpace& space,
                                                                const ClockLaw& law, double t,
                                                                std::uint64_t runs,
                                                                std::uint64_t seed) {
  check_one_point(space, law, t);
  const std::uint32_t size = space.size();
  std::vector<std::uint64_t> total(std::size_t{size} * size, 0);
  std::vector<std::uint32_t> state(size);
  for (std::uint64_t r = 0; r < runs; ++r) one_point_run(space, law, t, seed, r, state, total);
  return unflatten(total, size);
}

}  // namespace tasep
