#pragma once

// Master equation on a truncated lattice 0 <= phi_i <= N_i. Used as the
// exactness oracle for the derived Fokker-Planck coefficients and for the
// simulation engines. Everything here works from the interaction scheme
// directly and does not go through the symbolic derivation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"
#include "scheme.hpp"

namespace stochastize {

using State = std::vector<long>;

/// Enumerates integer states of a box in row-major order (last coordinate
/// varies fastest).
class StateBox {
public:
  explicit StateBox(std::vector<unsigned> upper_bounds) : upper_(std::move(upper_bounds)) {
    if (upper_.empty()) throw Error("state box needs at least one dimension");
    for (unsigned u : upper_)
      if (u == 0) throw Error("state box bounds must be positive");
    stride_.assign(upper_.size(), 1);
    for (std::size_t i = upper_.size() - 1; i > 0; --i)
      stride_[i - 1] = stride_[i] * (upper_[i] + 1);
    size_ = stride_[0] * (upper_[0] + 1);
  }

  std::size_t dimension() const noexcept { return upper_.size(); }
  std::size_t size() const noexcept { return size_; }
  const std::vector<unsigned>& upper_bounds() const noexcept { return upper_; }

  State state(std::size_t index) const {
    State s(upper_.size());
    for (std::size_t i = 0; i < upper_.size(); ++i) {
      s[i] = static_cast<long>(index / stride_[i]);
      index %= stride_[i];
    }
    return s;
  }

  std::optional<std::size_t> index(std::span<const long> s) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < upper_.size(); ++i) {
      if (s[i] < 0 || s[i] > static_cast<long>(upper_[i])) return std::nullopt;
      idx += static_cast<std::size_t>(s[i]) * stride_[i];
    }
    return idx;
  }

  friend bool operator==(const StateBox& a, const StateBox& b) { return a.upper_ == b.upper_; }

private:
  std::vector<unsigned> upper_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

/// k * prod_i x_i (x_i - 1) ... (x_i - c_i + 1).
template <class Scalar, class Population>
Scalar propensity(const Scalar& k, const std::vector<unsigned>& stoichiometry,
                  std::span<const Population> x) {
  Scalar v = k;
  for (std::size_t i = 0; i < stoichiometry.size(); ++i)
    for (unsigned m = 0; m < stoichiometry[i]; ++m) v *= Scalar(x[i]) - Scalar(m);
  return v;
}

namespace detail {

template <class Scalar>
struct BoundRates {
  std::vector<Scalar> forward;
  std::vector<Scalar> backward;  // 0 for irreversible interactions
};

template <class Scalar>
BoundRates<Scalar> bind_rates(const InteractionScheme& scheme,
                              const std::map<SymbolId, Scalar>& values) {
  std::vector<std::string> missing;
  auto lookup = [&](const SymbolId& s) -> Scalar {
    auto it = values.find(s);
    if (it == values.end()) {
      if (std::find(missing.begin(), missing.end(), s.name) == missing.end())
        missing.push_back(s.name);
      return Scalar(0);
    }
    if (it->second < 0) throw Error("rate '" + s.name + "' is negative");
    return it->second;
  };
  BoundRates<Scalar> out;
  for (const auto& it : scheme.interactions()) {
    out.forward.push_back(lookup(it.forward_rate));
    out.backward.push_back(it.backward_rate ? lookup(*it.backward_rate) : Scalar(0));
  }
  if (!missing.empty()) throw UnboundRate(missing);
  return out;
}

}  // namespace detail

template <class Scalar>
struct JumpMoments {
  std::vector<Scalar> first;
  std::vector<std::vector<Scalar>> second;
};

/// First and second conditional jump moments at `state`, by enumerating the
/// 2s possible jumps with exact (falling factorial) propensities:
///   first^i      = sum_a r_i (s+_a - s-_a)
///   second^{ij}  = sum_a r_i r_j (s+_a + s-_a)
template <class Scalar, class Population>
JumpMoments<Scalar> jump_moments(const InteractionScheme& scheme,
                                 const std::map<SymbolId, Scalar>& rates,
                                 std::span<const Population> state) {
  const auto bound = detail::bind_rates(scheme, rates);
  const auto r = change_vectors(scheme);
  const std::size_t n = scheme.dimension();
  JumpMoments<Scalar> m{std::vector<Scalar>(n, Scalar(0)),
                        std::vector<std::vector<Scalar>>(n, std::vector<Scalar>(n, Scalar(0)))};
  for (std::size_t a = 0; a < scheme.size(); ++a) {
    const auto& it = scheme.interactions()[a];
    Scalar up = propensity<Scalar, Population>(bound.forward[a], it.initial, state);
    Scalar down = propensity<Scalar, Population>(bound.backward[a], it.final, state);
    for (std::size_t i = 0; i < n; ++i) {
      m.first[i] += Scalar(r[a][i]) * (up - down);
      for (std::size_t j = 0; j < n; ++j)
        m.second[i][j] += Scalar(r[a][i] * r[a][j]) * (up + down);
    }
  }
  return m;
}

template <class Scalar>
struct Transition {
  std::size_t from;
  std::size_t to;
  Scalar rate;
};

/// Generator Q of dp/dt = Q p restricted to a box. Off-diagonal entries are
/// stored as transitions; jumps leaving the box are absorbed and accumulated
/// into lost_rate, so column sums equal -lost_rate.
template <class Scalar>
struct BasicTruncatedCme {
  StateBox box;
  std::vector<Transition<Scalar>> transitions;
  std::vector<Scalar> diagonal;
  std::vector<Scalar> lost_rate;

  Scalar column_sum(std::size_t state) const {
    Scalar sum = diagonal[state];
    for (const auto& t : transitions)
      if (t.from == state) sum += t.rate;
    return sum;
  }
};

using TruncatedCme = BasicTruncatedCme<double>;

/// Builds the generator with exact rational rates.
inline BasicTruncatedCme<Rational> build_generator_exact(
    const InteractionScheme& scheme, const std::map<SymbolId, Rational>& rates,
    const StateBox& box) {
  if (box.dimension() != scheme.dimension())
    throw Error("state box dimension differs from the number of species");
  const auto bound = detail::bind_rates(scheme, rates);
  const auto r = change_vectors(scheme);
  BasicTruncatedCme<Rational> q{box, {}, std::vector<Rational>(box.size()),
                                std::vector<Rational>(box.size())};
  State target(scheme.dimension());
  for (std::size_t from = 0; from < box.size(); ++from) {
    const State s = box.state(from);
    std::span<const long> view(s);
    auto add = [&](const Rational& rate, int direction, std::size_t a) {
      if (rate == 0) return;
      for (std::size_t i = 0; i < s.size(); ++i) target[i] = s[i] + direction * r[a][i];
      q.diagonal[from] -= rate;
      if (auto to = box.index(target))
        q.transitions.push_back({from, *to, rate});
      else
        q.lost_rate[from] += rate;
    };
    for (std::size_t a = 0; a < scheme.size(); ++a) {
      const auto& it = scheme.interactions()[a];
      add(propensity<Rational, long>(bound.forward[a], it.initial, view), +1, a);
      add(propensity<Rational, long>(bound.backward[a], it.final, view), -1, a);
    }
  }
  return q;
}

/// Exact construction followed by a single conversion to double.
inline TruncatedCme build_generator(const InteractionScheme& scheme,
                                    const std::map<SymbolId, Rational>& rates,
                                    const StateBox& box) {
  auto exact = build_generator_exact(scheme, rates, box);
  TruncatedCme q{box, {}, {}, {}};
  q.transitions.reserve(exact.transitions.size());
  for (const auto& t : exact.transitions) q.transitions.push_back({t.from, t.to, to_double(t.rate)});
  for (const auto& d : exact.diagonal) q.diagonal.push_back(to_double(d));
  for (const auto& l : exact.lost_rate) q.lost_rate.push_back(to_double(l));
  return q;
}

struct Distribution {
  std::vector<double> probabilities;
  double time = 0.0;
  double leaked = 0.0;
};

inline Distribution point_mass(const StateBox& box, std::span<const long> state, double time = 0.0) {
  auto idx = box.index(state);
  if (!idx) throw Error("initial state lies outside the state box");
  Distribution d{std::vector<double>(box.size(), 0.0), time, 0.0};
  d.probabilities[*idx] = 1.0;
  return d;
}

namespace detail {

// out = Q p; returns the leak rate sum_s lost(s) p(s).
inline double apply_generator(const TruncatedCme& q, const std::vector<double>& p,
                              std::vector<double>& out) {
  double leak = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    out[s] = q.diagonal[s] * p[s];
    leak += q.lost_rate[s] * p[s];
  }
  for (const auto& t : q.transitions) out[t.to] += t.rate * p[t.from];
  return leak;
}

}  // namespace detail

/// Classical fourth-order Runge-Kutta on dp/dt = Q p from p0.time to t_final,
/// with the absorbed mass integrated alongside. Requires
/// dt * max|Q_ss| <= 0.5.
inline Distribution evolve_distribution(const TruncatedCme& q, const Distribution& p0,
                                        double t_final, double dt) {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  if (p0.probabilities.size() != q.box.size())
    throw Error("distribution size differs from the state box");
  double max_rate = 0.0;
  for (double d : q.diagonal) max_rate = std::max(max_rate, std::abs(d));
  if (dt * max_rate > 0.5)
    throw UnstableStep("dt * max|diag(Q)| = " + std::to_string(dt * max_rate) +
                       " exceeds 0.5; reduce dt");

  Distribution p = p0;
  const double duration = t_final - p0.time;
  if (duration <= 0.0) return p;
  auto steps = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
  const std::size_t size = p.probabilities.size();
  std::vector<double> k1(size), k2(size), k3(size), k4(size), tmp(size);

  for (std::size_t step = 0; step < steps; ++step) {
    const double h = step + 1 == steps ? duration - dt * static_cast<double>(steps - 1) : dt;
    auto& x = p.probabilities;
    double l1 = detail::apply_generator(q, x, k1);
    for (std::size_t i = 0; i < size; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    double l2 = detail::apply_generator(q, tmp, k2);
    for (std::size_t i = 0; i < size; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    double l3 = detail::apply_generator(q, tmp, k3);
    for (std::size_t i = 0; i < size; ++i) tmp[i] = x[i] + h * k3[i];
    double l4 = detail::apply_generator(q, tmp, k4);
    for (std::size_t i = 0; i < size; ++i)
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    p.leaked += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
  p.time = t_final;
  return p;
}

struct DistributionMoments {
  std::vector<double> mean;
  std::vector<std::vector<double>> covariance;
};

/// Weighted moments over the box, renormalized by the retained mass 1 - leaked.
inline DistributionMoments distribution_moments(const TruncatedCme& q, const Distribution& p) {
  const double mass = 1.0 - p.leaked;
  if (mass < 1e-12) throw DegenerateDistribution("retained probability mass is below 1e-12");
  const std::size_t n = q.box.dimension();
  DistributionMoments m{std::vector<double>(n, 0.0),
                        std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0))};
  for (std::size_t s = 0; s < q.box.size(); ++s) {
    const double w = p.probabilities[s] / mass;
    if (w == 0.0) continue;
    const State x = q.box.state(s);
    for (std::size_t i = 0; i < n; ++i) m.mean[i] += w * static_cast<double>(x[i]);
  }
  for (std::size_t s = 0; s < q.box.size(); ++s) {
    const double w = p.probabilities[s] / mass;
    if (w == 0.0) continue;
    const State x = q.box.state(s);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        m.covariance[i][j] += w * (static_cast<double>(x[i]) - m.mean[i]) *
                              (static_cast<double>(x[j]) - m.mean[j]);
  }
  return m;
}

/// sum_s f(state_s) p(s) / (1 - leaked).
inline double expectation(const TruncatedCme& q, const Distribution& p,
                          const std::function<double(const State&)>& f) {
  const double mass = 1.0 - p.leaked;
  if (mass < 1e-12) throw DegenerateDistribution("retained probability mass is below 1e-12");
  double sum = 0.0;
  for (std::size_t s = 0; s < q.box.size(); ++s)
    if (p.probabilities[s] != 0.0) sum += f(q.box.state(s)) * p.probabilities[s];
  return sum / mass;
}

/// One row per state: coordinates, then probability.
inline void write_distribution_csv(std::ostream& out, const InteractionScheme& scheme,
                                   const TruncatedCme& q, const Distribution& p) {
  for (const auto& s : scheme.species()) out << s.name << ",";
  out << "probability\n";
  for (std::size_t idx = 0; idx < q.box.size(); ++idx) {
    for (long v : q.box.state(idx)) out << v << ",";
    out << p.probabilities[idx] << "\n";
  }
}

/// Box sized at four times the deterministic fixed point reached from
/// `initial` (32 per species when the rate equations do not settle), and
/// never smaller than the initial state.
inline StateBox default_box(const InteractionScheme& scheme,
                            const std::map<SymbolId, double>& rates,
                            std::span<const double> initial) {
  const std::size_t n = scheme.dimension();
  std::vector<double> x(initial.begin(), initial.end());
  auto flow = [&](const std::vector<double>& at) {
    return jump_moments<double, double>(scheme, rates, std::span<const double>(at)).first;
  };
  const double h = 0.01;
  bool settled = false;
  for (int step = 0; step < 100000 && !settled; ++step) {
    auto k1 = flow(x);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + 0.5 * h * k1[i];
    auto k2 = flow(y);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + 0.5 * h * k2[i];
    auto k3 = flow(y);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + h * k3[i];
    auto k4 = flow(y);
    double largest = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      if (!std::isfinite(x[i]) || x[i] > 1e9) return StateBox(std::vector<unsigned>(n, 32));
      largest = std::max(largest, std::abs(k1[i]) / (1.0 + std::abs(x[i])));
    }
    settled = largest < 1e-9;
  }
  std::vector<unsigned> upper(n, 32);
  if (settled)
    for (std::size_t i = 0; i < n; ++i)
      if (x[i] >= 1.0) upper[i] = static_cast<unsigned>(std::ceil(4.0 * x[i]));
  for (std::size_t i = 0; i < n; ++i)
    upper[i] = std::max(upper[i], static_cast<unsigned>(std::ceil(std::max(initial[i], 1.0))));
  return StateBox(std::move(upper));
}

}  // namespace stochastize
