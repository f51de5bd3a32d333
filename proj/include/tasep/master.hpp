#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tasep/clocks.hpp"
#include "tasep/coupling.hpp"
#include "tasep/lattice.hpp"

namespace tasep {

inline constexpr int kMaxGeneratorSites = 12;
inline constexpr int kMaxCoalescenceSites = 5;

struct Transition {
  std::uint32_t row;
  double rate;
};

/// Sparse generator in column convention: Q[i][j] is the rate j -> i, and
/// the diagonal holds minus the column's exit rate, so d/dt mu = Q mu.
class Generator {
 public:
  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    double rate;
  };

  Generator() = default;
  /// Off-diagonal entries; duplicates are summed, zero rates dropped.
  Generator(std::uint32_t dim, std::vector<Entry> off_diagonal);

  std::uint32_t dim() const noexcept { return dim_; }
  double entry(std::uint32_t row, std::uint32_t col) const;
  std::span<const Transition> column(std::uint32_t col) const noexcept;
  double exit_rate(std::uint32_t col) const noexcept { return exit_[col]; }
  double max_exit_rate() const noexcept;
  /// out = Q * in
  void apply(std::span<const double> in, std::span<double> out) const;

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::uint32_t> col_start_;
  std::vector<Transition> entries_;
  std::vector<double> exit_;
};

Generator build_generator(const StateSpace& space, const ClockLaw& law);
/// Chain generator for n <= 12.
Generator build_generator(const RateConfig& rates);

class Distribution {
 public:
  Distribution() = default;
  /// Checks entries >= -1e-14 and sum 1 within 1e-12; clamps tiny negatives.
  explicit Distribution(std::vector<double> probs);

  static Distribution point(std::uint32_t dim, std::uint32_t index);
  static Distribution uniform(std::uint32_t dim);

  std::uint32_t dim() const noexcept { return static_cast<std::uint32_t>(probs_.size()); }
  double operator[](std::uint32_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

/// exp(Q t) mu by uniformization, split into steps with Lambda*dt <= 8.
Distribution propagate(const Generator& q, const Distribution& mu, double t);

/// Q pi = 0, sum pi = 1 via a dense solve with the normalization row.
Distribution stationary(const Generator& q);

double tv_distance(const Distribution& mu, const Distribution& nu);

/// max_x tv(exp(Q t) delta_x, pi).
double worst_case_tv(const Generator& q, const Distribution& pi, double t);
double worst_case_tv_serial(const Generator& q, const Distribution& pi, double t);

/// Smallest t (to 1e-3) with worst_case_tv < epsilon.
double mixing_time(const Generator& q, double epsilon);

std::vector<std::pair<double, double>> mixing_curve(const Generator& q,
                                                    std::span<const double> times);

/// Exact P(Gamma(t, 0)): the set-valued chain started at X, mass on
/// singletons. Spaces of at most 64 states (n <= 5 for chains).
double coalescence_exact(const StateSpace& space, const ClockLaw& law, double t);
double coalescence_exact(const ClockLaw& law, int n, double t);

/// Number of subsets reachable from X (dimension of the set-valued chain).
std::size_t reachable_subsets(const StateSpace& space, const ClockLaw& law);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// tv(mu_t, nu_t) <= 1 - P(Gamma(t, 0)), both sides exact.
BoundCheck coupling_bound_check(const ClockLaw& law, int n, double t, const Distribution& mu,
                                const Distribution& nu);

struct Z3Model {
  StateSpace space;
  ClockLaw law;
  Generator generator;
};

/// Three-state rotation with clocks k in {1, 2}, both at rate 1.
Z3Model z3_model();

std::string distribution_to_csv(const StateSpace& space, const Distribution& dist);
std::string mixing_curve_to_csv(std::span<const std::pair<double, double>> curve);

}  // namespace tasep
