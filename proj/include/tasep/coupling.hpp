#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tasep/clocks.hpp"
#include "tasep/lattice.hpp"
#include "tasep/state_set.hpp"

namespace tasep {

/// Finite state space with a deterministic per-clock transition map. Either
/// an open chain of n <= 20 sites (codes = state_index) or the three-state
/// rotation f(x, k) = x + k mod 3.
class StateSpace {
 public:
  static StateSpace lattice(int n, Model model = Model::tasep);
  static StateSpace z3();

  std::uint32_t size() const noexcept { return size_; }
  bool is_lattice() const noexcept { return kind_ == Kind::lattice; }
  int sites() const noexcept { return n_; }
  Model model() const noexcept { return model_; }

  bool valid_index(SiteIndex k) const noexcept;
  std::uint32_t step(std::uint32_t code, SiteIndex k) const noexcept {
    if (kind_ == Kind::lattice) {
      return static_cast<std::uint32_t>(hop_code(code, n_, k.value));
    }
    return (code + static_cast<std::uint32_t>(k.value)) % 3U;
  }
  std::string label(std::uint32_t code) const;
  /// Throws IndexOutOfRange unless every clock of `law` is in the alphabet.
  void check_law(const ClockLaw& law) const;

 private:
  enum class Kind { lattice, z3 };
  StateSpace(Kind kind, int n, Model model, std::uint32_t size)
      : kind_(kind), n_(n), model_(model), size_(size) {}

  Kind kind_;
  int n_;
  Model model_;
  std::uint32_t size_;
};

/// phi(t, x, omega) for the events of `stream` inside `horizon`.
LatticeState evolve(const LatticeState& x, const EventStream& stream, Interval horizon,
                    Model model = Model::tasep);

/// Image of a set under the shared stream. Never larger than the input.
StateSet evolve_set(const StateSpace& space, const StateSet& set, const EventStream& stream,
                    Interval horizon);

/// Flushing sequence n; n-1, n; ...; 1, 2, ..., n. Length n(n+1)/2.
std::vector<SiteIndex> flushing_sequence(int n);

struct SyncLimits {
  double max_time = 1e7;
  std::uint64_t max_events = 1'000'000'000ULL;
};

struct SyncOutcome {
  bool synced = false;
  double tau = 0.0;  // meaningful iff synced
  std::uint64_t events_consumed = 0;
  std::optional<LatticeState> final_state;
};

/// First time two trajectories driven by one forward stream coincide.
SyncOutcome sync_time_pair(const LatticeState& x1, const LatticeState& x2, const ClockLaw& law,
                           StreamSeed seed, SyncLimits limits = {});

/// First time all 2^n trajectories coincide (n <= 20).
SyncOutcome sync_time_all(int n, const ClockLaw& law, StreamSeed seed, SyncLimits limits = {});

struct SetSyncOutcome {
  bool synced = false;
  double tau = 0.0;
  std::uint64_t events_consumed = 0;
  StateSet final_set;
};

/// Whole-space coalescence on a generic state space.
SetSyncOutcome sync_time_space(const StateSpace& space, const ClockLaw& law, StreamSeed seed,
                               SyncLimits limits = {});

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Fraction of runs whose whole space coalesced within [0, t).
Estimate gamma_probability(double t, int n, const ClockLaw& law, std::uint64_t runs,
                           std::uint64_t seed);
Estimate gamma_probability_serial(double t, int n, const ClockLaw& law, std::uint64_t runs,
                                  std::uint64_t seed);

struct AttractorResult {
  StateSet set;           // stabilized (or last computed) B_t
  double settle_scale = 0.0;
  bool settled = false;
  std::vector<double> scales;   // scales visited
  std::vector<StateSet> images; // B_t per visited scale
};

/// B_t = phi(t, X, theta_{-t} omega) at doubling scales, observed at `origin`.
AttractorResult pullback_attractor(const StateSpace& space, const ClockLaw& law,
                                   StreamSeed seed, double t_max, double origin = 0.0);

/// phi(s, A(omega), omega) == A(theta_s omega); nullopt if either side did
/// not settle within t_max.
std::optional<bool> invariance_check(const StateSpace& space, const ClockLaw& law,
                                     StreamSeed seed, double s, double t_max);

struct ReplayRow {
  std::string label;
  LatticeState first;
  LatticeState second;
};

/// Periodic non-synchronizing pair 110 / 000 under (2, 1, 0, 1, 2, 3).
std::vector<ReplayRow> counterexample_replay();

struct TrajectorySample {
  double time = 0.0;
  std::vector<LatticeState> states;
};

/// States right before each sample time (events in [0, t)), shared stream.
std::vector<TrajectorySample> sample_trajectories(std::span<const LatticeState> starts,
                                                  const ClockLaw& law, StreamSeed seed,
                                                  std::span<const double> times);

std::string trajectories_to_csv(std::span<const TrajectorySample> samples);
std::vector<TrajectorySample> trajectories_from_csv(std::string_view text);

/// Empirical one-point laws: counts[x][z] = #runs with phi(t, x, omega_r) = z.
/// Run r uses seed derive_seed(seed, {r}).
std::vector<std::vector<std::uint64_t>> one_point_counts(const StateSpace& space,
                                                         const ClockLaw& law, double t,
                                                         std::uint64_t runs, std::uint64_t seed);
std::vector<std::vector<std::uint64_t>> one_point_counts_serial(const StateSpace& space,
                                                                const ClockLaw& law, double t,
                                                                std::uint64_t runs,
                                                                std::uint64_t seed);

}  // namespace tasep
