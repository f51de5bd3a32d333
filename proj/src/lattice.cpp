#include "tasep/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tasep/state_set.hpp"

namespace tasep {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::too_large: return "TooLarge";
    case Errc::invalid_rate: return "InvalidRate";
    case Errc::degenerate_window: return "DegenerateWindow";
    case Errc::window_violation: return "WindowViolation";
    case Errc::unsorted_times: return "UnsortedTimes";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::negative_time: return "NegativeTime";
    case Errc::singular: return "Singular";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::parse_error: return "ParseError";
    case Errc::not_settled: return "NotSettled";
  }
  return "Unknown";
}

namespace {

void check_size(int n) {
  if (n < 1 || n > kMaxSites) {
    throw Error(Errc::invalid_argument,
                "chain length " + std::to_string(n) + " outside [1, 1024]");
  }
}

bool finite_nonneg(double r) { return std::isfinite(r) && r >= 0.0; }

}  // namespace

bool is_valid_index(int n, SiteIndex k, Model model) {
  if (k.value >= 0) return k.value <= n;
  if (model != Model::asep) return false;
  if (k.value == -(n + 1)) return true;
  return -k.value <= n - 1;
}

LatticeState::LatticeState(int n) {
  check_size(n);
  sites_.assign(static_cast<std::size_t>(n), 0);
}

LatticeState LatticeState::full(int n) {
  LatticeState x(n);
  std::fill(x.sites_.begin(), x.sites_.end(), std::uint8_t{1});
  return x;
}

LatticeState LatticeState::parse(std::string_view literal) {
  if (literal.empty() || literal.size() > static_cast<std::size_t>(kMaxSites)) {
    throw Error(Errc::parse_error, "state literal must have 1..1024 characters");
  }
  LatticeState x(static_cast<int>(literal.size()));
  for (std::size_t i = 0; i < literal.size(); ++i) {
    const char c = literal[i];
    if (c != '0' && c != '1') {
      throw Error(Errc::parse_error, "state literal '" + std::string(literal) +
                                         "' contains a character other than 0/1");
    }
    x.sites_[i] = c == '1' ? 1 : 0;
  }
  return x;
}

int LatticeState::particles() const noexcept {
  return std::accumulate(sites_.begin(), sites_.end(), 0);
}

std::string LatticeState::to_string() const {
  std::string s(sites_.size(), '0');
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i]) s[i] = '1';
  }
  return s;
}

bool LatticeState::leq(const LatticeState& other) const {
  if (other.size() != size()) {
    throw Error(Errc::dimension_mismatch, "comparing states of different length");
  }
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i] > other.sites_[i]) return false;
  }
  return true;
}

RateConfig RateConfig::tasep(int n, double alpha, double beta, double h) {
  RateConfig r;
  r.n = n;
  r.alpha = alpha;
  r.beta = beta;
  r.interior.assign(static_cast<std::size_t>(std::max(n - 1, 0)), h);
  r.model = Model::tasep;
  return r;
}

RateConfig RateConfig::asep_uniform(int n, double alpha, double beta, double h_right,
                                    double h_left, double gamma_right_entry) {
  RateConfig r = tasep(n, alpha, beta, h_right);
  r.model = Model::asep;
  AsepRates a;
  a.gamma_right_entry = gamma_right_entry;
  a.left_rates.assign(static_cast<std::size_t>(n), h_left);
  a.left_rates[0] = 0.0;
  r.asep = std::move(a);
  return r;
}

void RateConfig::validate() const {
  check_size(n);
  if (!finite_nonneg(alpha) || !finite_nonneg(beta)) {
    throw Error(Errc::invalid_rate, "alpha and beta must be finite and >= 0");
  }
  if (alpha == 0.0 && beta == 0.0) {
    throw Error(Errc::invalid_rate, "at least one of alpha, beta must be positive");
  }
  if (interior.size() != static_cast<std::size_t>(n - 1)) {
    throw Error(Errc::invalid_argument, "interior must hold exactly n-1 rates");
  }
  for (double h : interior) {
    if (!std::isfinite(h) || h <= 0.0) {
      throw Error(Errc::invalid_rate, "interior rates must be finite and > 0");
    }
  }
  if ((model == Model::asep) != asep.has_value()) {
    throw Error(Errc::invalid_argument, "ASEP rates present iff model is ASEP");
  }
  if (asep) {
    if (!finite_nonneg(asep->gamma_right_entry)) {
      throw Error(Errc::invalid_rate, "right entry rate must be finite and >= 0");
    }
    if (asep->left_rates.size() != static_cast<std::size_t>(n)) {
      throw Error(Errc::invalid_argument, "left_rates must hold exactly n rates");
    }
    for (double r : asep->left_rates) {
      if (!finite_nonneg(r)) throw Error(Errc::invalid_rate, "left rates must be >= 0");
    }
    if (asep->left_rates[0] != 0.0) {
      throw Error(Errc::invalid_rate, "left exit from site 1 is not part of the model");
    }
  }
}

bool hop_in_place(std::span<std::uint8_t> s, int k) {
  const int n = static_cast<int>(s.size());
  // s[i] holds site i+1
  if (k == 0) {
    if (s[0]) return false;
    s[0] = 1;
    return true;
  }
  if (k == n) {
    if (!s[n - 1]) return false;
    s[n - 1] = 0;
    return true;
  }
  if (k > 0) {
    if (s[k - 1] && !s[k]) {
      s[k - 1] = 0;
      s[k] = 1;
      return true;
    }
    return false;
  }
  if (k == -(n + 1)) {
    if (s[n - 1]) return false;
    s[n - 1] = 1;
    return true;
  }
  const int m = -k;  // site m+1 -> m
  if (s[m] && !s[m - 1]) {
    s[m] = 0;
    s[m - 1] = 1;
    return true;
  }
  return false;
}

std::uint64_t hop_code(std::uint64_t code, int n, int k) {
  auto bit = [n](int site) { return std::uint64_t{1} << (n - site); };
  if (k == 0) return code | bit(1);
  if (k == n) return code & ~bit(n);
  if (k > 0) {
    if ((code & bit(k)) && !(code & bit(k + 1))) return (code & ~bit(k)) | bit(k + 1);
    return code;
  }
  if (k == -(n + 1)) return code | bit(n);
  const int m = -k;
  if ((code & bit(m + 1)) && !(code & bit(m))) return (code & ~bit(m + 1)) | bit(m);
  return code;
}

LatticeState hop(const LatticeState& x, SiteIndex k, Model model) {
  if (!is_valid_index(x.size(), k, model)) {
    throw Error(Errc::index_out_of_range,
                "site index " + std::to_string(k.value) + " invalid for n=" +
                    std::to_string(x.size()));
  }
  LatticeState y = x;
  hop_in_place(y.sites(), k.value);
  return y;
}

std::uint64_t state_index(const LatticeState& x) {
  if (x.size() > kMaxIndexSites) {
    throw Error(Errc::too_large, "state_index supports n <= 62");
  }
  std::uint64_t code = 0;
  for (std::uint8_t v : x.sites()) code = (code << 1) | v;
  return code;
}

LatticeState index_state(std::uint64_t index, int n) {
  if (n < 1 || n > kMaxIndexSites) {
    throw Error(Errc::too_large, "index_state supports 1 <= n <= 62");
  }
  if (index >> n) {
    throw Error(Errc::index_out_of_range, "index " + std::to_string(index) +
                                              " >= 2^" + std::to_string(n));
  }
  LatticeState x(n);
  for (int site = 1; site <= n; ++site) {
    x.set(site, (index >> (n - site)) & 1U);
  }
  return x;
}

// StateSet lives with the lattice enumeration helpers.

StateSet::StateSet(std::uint32_t universe, std::vector<std::uint32_t> codes)
    : universe_(universe), codes_(std::move(codes)) {
  std::sort(codes_.begin(), codes_.end());
  codes_.erase(std::unique(codes_.begin(), codes_.end()), codes_.end());
  if (!codes_.empty() && codes_.back() >= universe_) {
    throw Error(Errc::index_out_of_range, "state code outside the state space");
  }
}

StateSet StateSet::full(std::uint32_t universe) {
  std::vector<std::uint32_t> codes(universe);
  std::iota(codes.begin(), codes.end(), 0U);
  return StateSet(universe, std::move(codes));
}

bool StateSet::contains(std::uint32_t code) const {
  return std::binary_search(codes_.begin(), codes_.end(), code);
}

bool StateSet::subset_of(const StateSet& other) const {
  return universe_ == other.universe_ &&
         std::includes(other.codes_.begin(), other.codes_.end(), codes_.begin(),
                       codes_.end());
}

StateSet all_states(int n) {
  if (n < 1) throw Error(Errc::invalid_argument, "n must be positive");
  if (n > kMaxSetSites) throw Error(Errc::too_large, "all_states supports n <= 20");
  return StateSet::full(std::uint32_t{1} << n);
}

std::vector<LatticeState> lattice_members(const StateSet& set, int n) {
  std::vector<LatticeState> out;
  out.reserve(set.size());
  for (std::uint32_t c : set.codes()) out.push_back(index_state(c, n));
  return out;
}

}  // namespace tasep
