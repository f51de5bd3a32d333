#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tasep/lattice.hpp"

namespace tasep {

inline constexpr int kMaxSetSites = 20;

/// A deduplicated set of states of a finite state space, stored as sorted
/// canonical codes. For lattice spaces the code is state_index().
class StateSet {
 public:
  StateSet() = default;
  StateSet(std::uint32_t universe, std::vector<std::uint32_t> codes);

  static StateSet full(std::uint32_t universe);

  std::uint32_t universe() const noexcept { return universe_; }
  std::size_t size() const noexcept { return codes_.size(); }
  bool empty() const noexcept { return codes_.empty(); }
  bool contains(std::uint32_t code) const;
  std::span<const std::uint32_t> codes() const noexcept { return codes_; }
  bool subset_of(const StateSet& other) const;

  friend bool operator==(const StateSet&, const StateSet&) = default;

 private:
  std::uint32_t universe_ = 0;
  std::vector<std::uint32_t> codes_;
};

/// All 2^n lattice states; n <= 20.
StateSet all_states(int n);

std::vector<LatticeState> lattice_members(const StateSet& set, int n);

}  // namespace tasep
