#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tasep/lattice.hpp"

namespace tasep {

/// Half-open time interval [lo, hi). Empty when lo >= hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static constexpr Interval whole_line() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  bool empty() const noexcept { return !(lo < hi); }
  bool contains(double t) const noexcept { return lo <= t && t < hi; }
  /// Empty intervals are contained in everything.
  bool contains(const Interval& sub) const noexcept {
    return sub.empty() || (lo <= sub.lo && sub.hi <= hi);
  }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct JumpEvent {
  double time = 0.0;
  SiteIndex site;

  friend bool operator==(const JumpEvent&, const JumpEvent&) = default;
};

struct StreamSeed {
  std::uint64_t base = 0;

  friend bool operator==(const StreamSeed&, const StreamSeed&) = default;
};

/// Folds extra words into a seed. Order-sensitive, platform independent.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> words);

struct Clock {
  SiteIndex site;
  double rate = 0.0;
};

/// Per-site Poisson intensities. Clocks with rate 0 are kept but inactive.
class ClockLaw {
 public:
  ClockLaw() = default;
  explicit ClockLaw(std::vector<Clock> clocks);

  /// lambda_0 = alpha, lambda_k = h_k, lambda_n = beta; ASEP adds -m with
  /// left_rates[m] and -(n+1) with the right entry rate.
  static ClockLaw from_rates(const RateConfig& rates);

  std::span<const Clock> clocks() const noexcept { return clocks_; }
  double total_rate() const noexcept { return total_; }
  double rate_of(SiteIndex site) const noexcept;

 private:
  std::vector<Clock> clocks_;
  double total_ = 0.0;
};

/// Increment xi_index of the clock at `site`: index 0 is the [0, inf) draw,
/// positive indices continue forward, negative indices run backward from 0.
double clock_increment(StreamSeed seed, SiteIndex site, std::int64_t index, double rate);

/// Time-ordered realization of the merged site clocks on a window.
class EventStream {
 public:
  EventStream() = default;
  EventStream(Interval window, std::vector<JumpEvent> events,
              std::optional<StreamSeed> seed = std::nullopt);

  const Interval& window() const noexcept { return window_; }
  std::span<const JumpEvent> events() const noexcept { return events_; }
  const std::optional<StreamSeed>& seed() const noexcept { return seed_; }
  std::size_t size() const noexcept { return events_.size(); }
  /// Events sharing a time with their predecessor.
  std::size_t ties() const noexcept;

  friend bool operator==(const EventStream&, const EventStream&) = default;

 private:
  Interval window_{};
  std::vector<JumpEvent> events_;
  std::optional<StreamSeed> seed_;
};

/// Window-consistent sample: the per-site point sets are anchored at 0, so
/// any sub-window reproduces exactly the restriction of a larger window.
EventStream sample_stream(const ClockLaw& law, Interval window, StreamSeed seed);

/// theta_s on the accessible part of the realization.
EventStream shift(const EventStream& stream, double s);

std::vector<JumpEvent> events_in(const EventStream& stream, Interval sub);

/// Deterministic replay stream over the whole real line.
EventStream scripted_stream(std::span<const double> times, std::span<const SiteIndex> sites);
EventStream scripted_stream(std::span<const double> times, std::span<const int> sites);

std::string stream_to_csv(const EventStream& stream);
/// Reads "time,site" rows into a scripted stream.
EventStream stream_from_csv(std::string_view text);

/// Lazily enumerates the same events sample_stream produces on [0, inf),
/// one at a time, with a binary heap over the active clocks.
class ForwardClock {
 public:
  ForwardClock(const ClockLaw& law, StreamSeed seed);

  bool exhausted() const noexcept { return heap_.empty(); }
  double peek_time() const noexcept { return heap_.front().time; }
  JumpEvent next();

 private:
  struct Pending {
    double time;
    int site;
    std::int64_t index;
    double rate;
  };
  static bool before(const Pending& a, const Pending& b) noexcept {
    return a.time < b.time || (a.time == b.time && a.site < b.site);
  }
  void sift_down(std::size_t i) noexcept;

  StreamSeed seed_;
  std::vector<Pending> heap_;
};

}  // namespace tasep
