#include "tasep/clocks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tasep/philox.hpp"

namespace tasep {

namespace {

constexpr double kMaxAbsTime = 1e9;

bool event_before(const JumpEvent& a, const JumpEvent& b) {
  return a.time < b.time || (a.time == b.time && a.site < b.site);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = mix64(base);
  for (std::uint64_t w : words) h = mix64(h ^ mix64(w + 0x632BE59BD9B4E019ULL));
  return h;
}

ClockLaw::ClockLaw(std::vector<Clock> clocks) : clocks_(std::move(clocks)) {
  std::sort(clocks_.begin(), clocks_.end(),
            [](const Clock& a, const Clock& b) { return a.site < b.site; });
  for (std::size_t i = 0; i < clocks_.size(); ++i) {
    const double r = clocks_[i].rate;
    if (!std::isfinite(r) || r < 0.0) {
      throw Error(Errc::invalid_rate, "clock intensities must be finite and >= 0");
    }
    if (i > 0 && clocks_[i].site == clocks_[i - 1].site) {
      throw Error(Errc::invalid_argument, "duplicate clock for one site index");
    }
    total_ += r;
  }
}

ClockLaw ClockLaw::from_rates(const RateConfig& rates) {
  rates.validate();
  const int n = rates.n;
  std::vector<Clock> clocks;
  clocks.push_back({SiteIndex(0), rates.alpha});
  for (int k = 1; k < n; ++k) {
    clocks.push_back({SiteIndex(k), rates.interior[static_cast<std::size_t>(k - 1)]});
  }
  clocks.push_back({SiteIndex(n), rates.beta});
  if (rates.asep) {
    for (int m = 1; m < n; ++m) {
      clocks.push_back({SiteIndex(-m), rates.asep->left_rates[static_cast<std::size_t>(m)]});
    }
    clocks.push_back({SiteIndex(-(n + 1)), rates.asep->gamma_right_entry});
  }
  return ClockLaw(std::move(clocks));
}

double ClockLaw::rate_of(SiteIndex site) const noexcept {
  for (const Clock& c : clocks_) {
    if (c.site == site) return c.rate;
  }
  return 0.0;
}

double clock_increment(StreamSeed seed, SiteIndex site, std::int64_t index, double rate) {
  const auto idx = static_cast<std::uint64_t>(index);
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(idx),
                                static_cast<std::uint32_t>(idx >> 32),
                                static_cast<std::uint32_t>(site.value), 0x7A5E9C11U};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed.base),
                            static_cast<std::uint32_t>(seed.base >> 32)};
  const auto out = Philox4x32::apply(ctr, key);
  const std::uint64_t bits = (std::uint64_t{out[0]} << 32) | out[1];
  return -std::log(open_unit(bits)) / rate;
}

EventStream::EventStream(Interval window, std::vector<JumpEvent> events,
                         std::optional<StreamSeed> seed)
    : window_(window), events_(std::move(events)), seed_(seed) {}

std::size_t EventStream::ties() const noexcept {
  std::size_t count = 0;
  for (std::size_t i = 1; i < events_.size(); ++i) {
    if (events_[i].time == events_[i - 1].time) ++count;
  }
  return count;
}

EventStream sample_stream(const ClockLaw& law, Interval window, StreamSeed seed) {
  if (!std::isfinite(window.lo) || !std::isfinite(window.hi)) {
    throw Error(Errc::degenerate_window, "sampling window must be finite");
  }
  if (window.lo >= window.hi) {
    throw Error(Errc::degenerate_window, "sampling window needs lo < hi");
  }
  if (std::abs(window.lo) > kMaxAbsTime || std::abs(window.hi) > kMaxAbsTime) {
    throw Error(Errc::degenerate_window, "|t| must stay below 1e9");
  }
  std::vector<JumpEvent> events;
  for (const Clock& clock : law.clocks()) {
    if (clock.rate <= 0.0) continue;
    if (window.hi > 0.0) {
      double t = 0.0;
      for (std::int64_t l = 0;; ++l) {
        t += clock_increment(seed, clock.site, l, clock.rate);
        if (t >= window.hi) break;
        if (t >= window.lo) events.push_back({t, clock.site});
      }
    }
    if (window.lo < 0.0) {
      double t = 0.0;
      for (std::int64_t l = 1;; ++l) {
        t -= clock_increment(seed, clock.site, -l, clock.rate);
        if (t < window.lo) break;
        if (t < window.hi) events.push_back({t, clock.site});
      }
    }
  }
  std::sort(events.begin(), events.end(), event_before);
  return EventStream(window, std::move(events), seed);
}

EventStream shift(const EventStream& stream, double s) {
  if (s == 0.0) return stream;
  const Interval w{stream.window().lo - s, stream.window().hi - s};
  if (std::isnan(w.lo) || std::isnan(w.hi)) {
    throw Error(Errc::invalid_argument, "shift produced a non-finite window");
  }
  std::vector<JumpEvent> events;
  events.reserve(stream.size());
  for (const JumpEvent& e : stream.events()) {
    const double t = e.time - s;
    if (!std::isfinite(t)) throw Error(Errc::invalid_argument, "shift overflowed");
    events.push_back({t, e.site});
  }
  // The shifted realization is no longer the plain sample of the seed.
  return EventStream(w, std::move(events));
}

std::vector<JumpEvent> events_in(const EventStream& stream, Interval sub) {
  if (sub.empty()) return {};
  if (!stream.window().contains(sub)) {
    throw Error(Errc::window_violation, "sub-interval not inside the stream window");
  }
  const auto ev = stream.events();
  const auto first = std::lower_bound(ev.begin(), ev.end(), sub.lo,
                                      [](const JumpEvent& e, double t) { return e.time < t; });
  const auto last = std::lower_bound(first, ev.end(), sub.hi,
                                     [](const JumpEvent& e, double t) { return e.time < t; });
  return {first, last};
}

EventStream scripted_stream(std::span<const double> times, std::span<const SiteIndex> sites) {
  if (times.size() != sites.size()) {
    throw Error(Errc::length_mismatch, "times and sites differ in length");
  }
  std::vector<JumpEvent> events;
  events.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i])) throw Error(Errc::invalid_argument, "non-finite time");
    if (i > 0 && !(times[i - 1] < times[i])) {
      throw Error(Errc::unsorted_times, "scripted times must be strictly increasing");
    }
    events.push_back({times[i], sites[i]});
  }
  return EventStream(Interval::whole_line(), std::move(events));
}

EventStream scripted_stream(std::span<const double> times, std::span<const int> sites) {
  std::vector<SiteIndex> idx;
  idx.reserve(sites.size());
  for (int s : sites) idx.emplace_back(s);
  return scripted_stream(times, std::span<const SiteIndex>(idx));
}

std::string stream_to_csv(const EventStream& stream) {
  std::string out = "time,site\n";
  char buf[64];
  for (const JumpEvent& e : stream.events()) {
    std::snprintf(buf, sizeof buf, "%.17g,%d\n", e.time, e.site.value);
    out += buf;
  }
  return out;
}

EventStream stream_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<double> times;
  std::vector<SiteIndex> sites;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line == "time,site") continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": expected time,site");
    }
    double t = 0.0;
    int k = 0;
    const char* b = line.data();
    const char* e = line.data() + line.size();
    auto r1 = std::from_chars(b, b + comma, t);
    auto r2 = std::from_chars(b + comma + 1, e, k);
    if (r1.ec != std::errc{} || r1.ptr != b + comma || r2.ec != std::errc{} || r2.ptr != e) {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": malformed row");
    }
    times.push_back(t);
    sites.emplace_back(k);
  }
  return scripted_stream(times, std::span<const SiteIndex>(sites));
}

ForwardClock::ForwardClock(const ClockLaw& law, StreamSeed seed) : seed_(seed) {
  for (const Clock& c : law.clocks()) {
    if (c.rate <= 0.0) continue;
    // Same accumulation as sample_stream: Y_0 = 0 + xi_0.
    double t = 0.0;
    t += clock_increment(seed_, c.site, 0, c.rate);
    heap_.push_back({t, c.site.value, 0, c.rate});
  }
  std::make_heap(heap_.begin(), heap_.end(),
                 [](const Pending& a, const Pending& b) { return before(b, a); });
}

void ForwardClock::sift_down(std::size_t i) noexcept {
  const std::size_t size = heap_.size();
  Pending item = heap_[i];
  for (;;) {
    std::size_t child = 2 * i + 1;
    if (child >= size) break;
    if (child + 1 < size && before(heap_[child + 1], heap_[child])) ++child;
    if (!before(heap_[child], item)) break;
    heap_[i] = heap_[child];
    i = child;
  }
  heap_[i] = item;
}

JumpEvent ForwardClock::next() {
  Pending& top = heap_.front();
  const JumpEvent event{top.time, SiteIndex(top.site)};
  ++top.index;
  top.time += clock_increment(seed_, SiteIndex(top.site), top.index, top.rate);
  sift_down(0);
  return event;
}

}  // namespace tasep
