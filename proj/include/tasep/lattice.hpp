#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tasep/error.hpp"

namespace tasep {

inline constexpr int kMaxSites = 1024;

enum class Model { tasep, asep };

/// Jump-order alphabet entry.
///
/// TASEP uses {0, ..., n}: 0 is the entry clock, n the exit clock and
/// 0 < k < n the rightward hop k -> k+1. ASEP adds -m (1 <= m <= n-1) for the
/// leftward hop m+1 -> m and -(n+1) for entry from the right. -n would be a
/// left exit, which the model does not have; it is rejected.
struct SiteIndex {
  int value = 0;

  constexpr SiteIndex() = default;
  constexpr explicit SiteIndex(int v) : value(v) {}

  friend constexpr auto operator<=>(SiteIndex, SiteIndex) = default;
};

bool is_valid_index(int n, SiteIndex k, Model model);

/// Occupation configuration s_1 ... s_n of an open chain.
class LatticeState {
 public:
  LatticeState() = default;
  /// Empty chain of `n` sites.
  explicit LatticeState(int n);

  static LatticeState empty(int n) { return LatticeState(n); }
  static LatticeState full(int n);
  /// Parses a literal such as "110" (site 1 first).
  static LatticeState parse(std::string_view literal);

  int size() const noexcept { return static_cast<int>(sites_.size()); }
  /// Occupation of site `k`, 1-based.
  bool occupied(int k) const { return sites_[static_cast<std::size_t>(k - 1)] != 0; }
  void set(int k, bool value) { sites_[static_cast<std::size_t>(k - 1)] = value ? 1 : 0; }
  int particles() const noexcept;
  std::span<const std::uint8_t> sites() const noexcept { return sites_; }
  std::span<std::uint8_t> sites() noexcept { return sites_; }

  std::string to_string() const;
  /// Componentwise order.
  bool leq(const LatticeState& other) const;

  friend bool operator==(const LatticeState&, const LatticeState&) = default;
  friend auto operator<=>(const LatticeState&, const LatticeState&) = default;

 private:
  std::vector<std::uint8_t> sites_;
};

struct AsepRates {
  double gamma_right_entry = 0.0;
  /// left_rates[j-1] is the leftward hop rate of site j. left_rates[0] would
  /// be a left exit and must stay 0.
  std::vector<double> left_rates;
};

struct RateConfig {
  int n = 1;
  double alpha = 1.0;
  double beta = 1.0;
  std::vector<double> interior;  // h_1 ... h_{n-1}
  Model model = Model::tasep;
  std::optional<AsepRates> asep;

  /// Constant interior rate `h`.
  static RateConfig tasep(int n, double alpha, double beta, double h = 1.0);
  static RateConfig asep_uniform(int n, double alpha, double beta, double h_right,
                                 double h_left, double gamma_right_entry);

  /// Throws Error(invalid_rate / invalid_argument) when an invariant fails.
  void validate() const;
};

/// Single-event transition f(x, k). Pure.
LatticeState hop(const LatticeState& x, SiteIndex k, Model model = Model::tasep);

/// In-place variant of hop; returns true iff the configuration changed.
/// The index is not validated.
bool hop_in_place(std::span<std::uint8_t> sites, int k);

/// hop on the canonical index (site 1 = most significant bit), n <= 62.
std::uint64_t hop_code(std::uint64_t code, int n, int k);

inline constexpr int kMaxIndexSites = 62;

std::uint64_t state_index(const LatticeState& x);
LatticeState index_state(std::uint64_t index, int n);

}  // namespace tasep
