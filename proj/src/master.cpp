#include "tasep/master.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace tasep {

namespace {

constexpr double kClamp = 1e-14;
constexpr double kMassTol = 1e-12;

}  // namespace

Generator::Generator(std::uint32_t dim, std::vector<Entry> off_diagonal)
    : dim_(dim), col_start_(std::size_t{dim} + 1, 0), exit_(dim, 0.0) {
  for (const Entry& e : off_diagonal) {
    if (e.row >= dim || e.col >= dim) throw Error(Errc::index_out_of_range, "entry outside Q");
    if (e.row == e.col) throw Error(Errc::invalid_argument, "diagonal entries are implied");
    if (!std::isfinite(e.rate) || e.rate < 0.0) {
      throw Error(Errc::invalid_rate, "generator rates must be finite and >= 0");
    }
  }
  std::sort(off_diagonal.begin(), off_diagonal.end(), [](const Entry& a, const Entry& b) {
    return a.col < b.col || (a.col == b.col && a.row < b.row);
  });
  for (std::size_t i = 0; i < off_diagonal.size();) {
    const Entry& e = off_diagonal[i];
    double rate = 0.0;
    std::size_t j = i;
    while (j < off_diagonal.size() && off_diagonal[j].col == e.col &&
           off_diagonal[j].row == e.row) {
      rate += off_diagonal[j].rate;
      ++j;
    }
    if (rate > 0.0) {
      entries_.push_back({e.row, rate});
      ++col_start_[std::size_t{e.col} + 1];
      exit_[e.col] += rate;
    }
    i = j;
  }
  for (std::uint32_t c = 0; c < dim; ++c) col_start_[c + 1] += col_start_[c];
}

double Generator::entry(std::uint32_t row, std::uint32_t col) const {
  if (row >= dim_ || col >= dim_) throw Error(Errc::index_out_of_range, "entry outside Q");
  if (row == col) return -exit_[col];
  for (const Transition& t : column(col)) {
    if (t.row == row) return t.rate;
  }
  return 0.0;
}

std::span<const Transition> Generator::column(std::uint32_t col) const noexcept {
  return std::span<const Transition>(entries_).subspan(col_start_[col],
                                                       col_start_[col + 1] - col_start_[col]);
}

double Generator::max_exit_rate() const noexcept {
  double m = 0.0;
  for (double r : exit_) m = std::max(m, r);
  return m;
}

void Generator::apply(std::span<const double> in, std::span<double> out) const {
  for (std::uint32_t i = 0; i < dim_; ++i) out[i] = -exit_[i] * in[i];
  for (std::uint32_t c = 0; c < dim_; ++c) {
    const double v = in[c];
    if (v == 0.0) continue;
    for (const Transition& t : column(c)) out[t.row] += t.rate * v;
  }
}

Generator build_generator(const StateSpace& space, const ClockLaw& law) {
  space.check_law(law);
  if (space.size() > (1U << kMaxGeneratorSites)) {
    throw Error(Errc::too_large, "generators support at most 4096 states");
  }
  std::vector<Generator::Entry> entries;
  for (std::uint32_t j = 0; j < space.size(); ++j) {
    for (const Clock& c : law.clocks()) {
      if (c.rate <= 0.0) continue;
      const std::uint32_t i = space.step(j, c.site);
      if (i != j) entries.push_back({i, j, c.rate});
    }
  }
  return Generator(space.size(), std::move(entries));
}

Generator build_generator(const RateConfig& rates) {
  rates.validate();
  if (rates.n > kMaxGeneratorSites) throw Error(Errc::too_large, "master analysis needs n <= 12");
  return build_generator(StateSpace::lattice(rates.n, rates.model), ClockLaw::from_rates(rates));
}

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error(Errc::invalid_argument, "empty distribution");
  double sum = 0.0;
  for (double& p : probs_) {
    if (!std::isfinite(p) || p < -kClamp) {
      throw Error(Errc::invalid_argument, "distribution entries must be >= 0");
    }
    if (p < 0.0) p = 0.0;
    sum += p;
  }
  if (std::abs(sum - 1.0) > kMassTol) {
    throw Error(Errc::invalid_argument, "distribution does not sum to 1");
  }
}

Distribution Distribution::point(std::uint32_t dim, std::uint32_t index) {
  if (index >= dim) throw Error(Errc::index_out_of_range, "point mass outside the space");
  std::vector<double> p(dim, 0.0);
  p[index] = 1.0;
  return Distribution(std::move(p));
}

Distribution Distribution::uniform(std::uint32_t dim) {
  return Distribution(std::vector<double>(dim, 1.0 / dim));
}

namespace {

// One uniformization step of length lambda*dt = load (<= 8).
void uniformized_step(const Generator& q, double lambda, double load, std::vector<double>& v,
                      std::vector<double>& term, std::vector<double>& scratch) {
  const std::size_t dim = v.size();
  term = v;
  double weight = std::exp(-load);
  for (std::size_t i = 0; i < dim; ++i) v[i] = weight * term[i];
  for (int k = 1;; ++k) {
    q.apply(term, scratch);
    for (std::size_t i = 0; i < dim; ++i) term[i] += scratch[i] / lambda;
    weight *= load / k;
    for (std::size_t i = 0; i < dim; ++i) v[i] += weight * term[i];
    if (k > load && weight < 1e-18) break;
  }
}

double tv_span(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<double> propagate_raw(const Generator& q, std::vector<double> v, double t) {
  const double lambda = q.max_exit_rate();
  if (t == 0.0 || lambda == 0.0) return v;
  const double total = lambda * t;
  const auto steps = static_cast<std::uint64_t>(std::max(1.0, std::ceil(total / 8.0)));
  const double load = total / static_cast<double>(steps);
  std::vector<double> term(v.size()), scratch(v.size());
  for (std::uint64_t s = 0; s < steps; ++s) uniformized_step(q, lambda, load, v, term, scratch);
  for (double& p : v) {
    if (p < 0.0 && p >= -kClamp) p = 0.0;
  }
  return v;
}

}  // namespace

Distribution propagate(const Generator& q, const Distribution& mu, double t) {
  if (t < 0.0 || std::isnan(t)) throw Error(Errc::negative_time, "t must be >= 0");
  if (mu.dim() != q.dim()) throw Error(Errc::dimension_mismatch, "distribution vs generator");
  return Distribution(propagate_raw(q, {mu.probs().begin(), mu.probs().end()}, t));
}

Distribution stationary(const Generator& q) {
  const Eigen::Index dim = q.dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  for (std::uint32_t c = 0; c < q.dim(); ++c) {
    a(c, c) = -q.exit_rate(c);
    for (const Transition& t : q.column(c)) a(t.row, c) = t.rate;
  }
  a.row(dim - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  b(dim - 1) = 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-13)) {
    throw Error(Errc::singular, "stationary measure is not unique");
  }
  const Eigen::VectorXd pi = lu.solve(b);
  std::vector<double> probs(pi.data(), pi.data() + dim);
  std::vector<double> residual(probs.size());
  q.apply(probs, residual);
  double worst = 0.0;
  for (double r : residual) worst = std::max(worst, std::abs(r));
  for (double& p : probs) {
    if (!std::isfinite(p) || p < -1e-10) {
      throw Error(Errc::singular, "stationary solve produced an invalid measure");
    }
    if (p < 0.0) p = 0.0;
  }
  if (worst > 1e-10) throw Error(Errc::singular, "stationary residual above 1e-10");
  return Distribution(std::move(probs));
}

double tv_distance(const Distribution& mu, const Distribution& nu) {
  if (mu.dim() != nu.dim()) throw Error(Errc::dimension_mismatch, "tv of different dims");
  return tv_span(mu.probs(), nu.probs());
}

double worst_case_tv(const Generator& q, const Distribution& pi, double t) {
  const auto dim = static_cast<long long>(q.dim());
  double worst = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : worst)
  for (long long x = 0; x < dim; ++x) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(x)] = 1.0;
    worst = std::max(worst, tv_span(propagate_raw(q, std::move(v), t), pi.probs()));
  }
  return worst;
}

double worst_case_tv_serial(const Generator& q, const Distribution& pi, double t) {
  double worst = 0.0;
  for (std::uint32_t x = 0; x < q.dim(); ++x) {
    std::vector<double> v(q.dim(), 0.0);
    v[x] = 1.0;
    worst = std::max(worst, tv_span(propagate_raw(q, std::move(v), t), pi.probs()));
  }
  return worst;
}

double mixing_time(const Generator& q, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(Errc::invalid_argument, "epsilon must lie in (0, 1)");
  }
  const Distribution pi = stationary(q);
  if (worst_case_tv(q, pi, 0.0) < epsilon) return 0.0;
  double hi = 1.0;
  while (worst_case_tv(q, pi, hi) >= epsilon) {
    hi *= 2.0;
    if (hi > 1e9) throw Error(Errc::invalid_argument, "chain does not mix below 1e9");
  }
  double lo = hi > 1.0 ? hi / 2.0 : 0.0;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (worst_case_tv(q, pi, mid) < epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::vector<std::pair<double, double>> mixing_curve(const Generator& q,
                                                    std::span<const double> times) {
  const Distribution pi = stationary(q);
  std::vector<std::pair<double, double>> out;
  out.reserve(times.size());
  for (double t : times) {
    if (t < 0.0) throw Error(Errc::negative_time, "curve times must be >= 0");
    out.emplace_back(t, worst_case_tv(q, pi, t));
  }
  return out;
}

namespace {

struct SubsetChain {
  std::vector<std::uint64_t> masks;  // index -> subset of X
  Generator generator;
};

SubsetChain build_subset_chain(const StateSpace& space, const ClockLaw& law) {
  space.check_law(law);
  const std::uint32_t size = space.size();
  if (size > 64) throw Error(Errc::too_large, "set-valued chain supports at most 64 states");
  std::vector<const Clock*> active;
  for (const Clock& c : law.clocks()) {
    if (c.rate > 0.0) active.push_back(&c);
  }
  std::vector<std::vector<std::uint32_t>> table(active.size(), std::vector<std::uint32_t>(size));
  for (std::size_t k = 0; k < active.size(); ++k) {
    for (std::uint32_t x = 0; x < size; ++x) table[k][x] = space.step(x, active[k]->site);
  }
  auto image = [&](std::uint64_t mask, std::size_t k) {
    std::uint64_t out = 0;
    while (mask) {
      const int x = std::countr_zero(mask);
      mask &= mask - 1;
      out |= std::uint64_t{1} << table[k][static_cast<std::uint32_t>(x)];
    }
    return out;
  };
  const std::uint64_t everything = size == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << size) - 1;
  SubsetChain chain;
  std::unordered_map<std::uint64_t, std::uint32_t> index;
  chain.masks.push_back(everything);
  index.emplace(everything, 0);
  std::vector<Generator::Entry> entries;
  for (std::size_t i = 0; i < chain.masks.size(); ++i) {
    const std::uint64_t mask = chain.masks[i];
    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::uint64_t img = image(mask, k);
      if (img == mask) continue;
      auto [it, inserted] = index.emplace(img, static_cast<std::uint32_t>(chain.masks.size()));
      if (inserted) chain.masks.push_back(img);
      entries.push_back({it->second, static_cast<std::uint32_t>(i), active[k]->rate});
    }
  }
  chain.generator = Generator(static_cast<std::uint32_t>(chain.masks.size()), std::move(entries));
  return chain;
}

}  // namespace

std::size_t reachable_subsets(const StateSpace& space, const ClockLaw& law) {
  return build_subset_chain(space, law).masks.size();
}

double coalescence_exact(const StateSpace& space, const ClockLaw& law, double t) {
  if (t < 0.0) throw Error(Errc::negative_time, "t must be >= 0");
  const SubsetChain chain = build_subset_chain(space, law);
  std::vector<double> v(chain.masks.size(), 0.0);
  v[0] = 1.0;
  v = propagate_raw(chain.generator, std::move(v), t);
  double mass = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::popcount(chain.masks[i]) == 1) mass += v[i];
  }
  return std::clamp(mass, 0.0, 1.0);
}

double coalescence_exact(const ClockLaw& law, int n, double t) {
  if (n > kMaxCoalescenceSites) throw Error(Errc::too_large, "coalescence_exact needs n <= 5");
  Model model = Model::tasep;
  for (const Clock& c : law.clocks()) {
    if (c.site.value < 0) model = Model::asep;
  }
  return coalescence_exact(StateSpace::lattice(n, model), law, t);
}

BoundCheck coupling_bound_check(const ClockLaw& law, int n, double t, const Distribution& mu,
                                const Distribution& nu) {
  if (n > kMaxCoalescenceSites) throw Error(Errc::too_large, "bound check needs n <= 5");
  Model model = Model::tasep;
  for (const Clock& c : law.clocks()) {
    if (c.site.value < 0) model = Model::asep;
  }
  const StateSpace space = StateSpace::lattice(n, model);
  const Generator q = build_generator(space, law);
  BoundCheck out;
  out.lhs = tv_distance(propagate(q, mu, t), propagate(q, nu, t));
  out.rhs = 1.0 - coalescence_exact(space, law, t);
  out.holds = out.lhs <= out.rhs + 1e-10;
  return out;
}

Z3Model z3_model() {
  const StateSpace space = StateSpace::z3();
  ClockLaw law({{SiteIndex(1), 1.0}, {SiteIndex(2), 1.0}});
  Generator q = build_generator(space, law);
  return {space, std::move(law), std::move(q)};
}

std::string distribution_to_csv(const StateSpace& space, const Distribution& dist) {
  if (dist.dim() != space.size()) throw Error(Errc::dimension_mismatch, "distribution vs space");
  std::string out = "index,state,probability\n";
  char buf[48];
  for (std::uint32_t i = 0; i < dist.dim(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", dist[i]);
    out += std::to_string(i) + "," + space.label(i) + "," + buf + "\n";
  }
  return out;
}

std::string mixing_curve_to_csv(std::span<const std::pair<double, double>> curve) {
  std::string out = "t,max_tv\n";
  char buf[80];
  for (const auto& [t, tv] : curve) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, tv);
    out += buf;
  }
  return out;
}

}  // namespace tasep
