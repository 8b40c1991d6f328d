#pragma once

// Derivation pipeline: interaction scheme -> transition rates -> drift vector
// and diffusion matrix -> Langevin model.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "errors.hpp"
#include "scheme.hpp"
#include "symcore.hpp"

namespace stochastize {

/// Exact: falling factorials of the populations. FokkerPlanck: plain powers.
enum class RateMode { Exact, FokkerPlanck };

/// PaperMinus: B = sum r r (s+ - s-). KramersMoyalPlus: B = sum r r (s+ + s-),
/// the second conditional jump moment.
enum class DiffusionSign { PaperMinus, KramersMoyalPlus };

/// MatrixSqrt: m = n Wiener processes and b = sqrt(B) numerically.
/// PerReaction: m = s Wiener processes and b[i][a] = r[a][i] sqrt(s+_a + s-_a).
enum class NoiseStrategy { MatrixSqrt, PerReaction };

struct TransitionRates {
  std::vector<Polynomial> forward;
  std::vector<Polynomial> backward;  // zero polynomial when irreversible
};

using PolynomialMatrix = std::vector<std::vector<Polynomial>>;

struct ModelOptions {
  RateMode rate_mode = RateMode::FokkerPlanck;
  DiffusionSign diffusion_sign = DiffusionSign::PaperMinus;
  NoiseStrategy noise_strategy = NoiseStrategy::MatrixSqrt;
};

struct SdeModel {
  InteractionScheme scheme;
  std::vector<Polynomial> drift;
  PolynomialMatrix diffusion;
  RateMode rate_mode = RateMode::FokkerPlanck;
  DiffusionSign diffusion_sign = DiffusionSign::PaperMinus;
  NoiseStrategy noise_strategy = NoiseStrategy::MatrixSqrt;

  std::size_t dimension() const noexcept { return scheme.dimension(); }
  /// Wiener-process dimension m.
  std::size_t noise_dimension() const noexcept {
    return noise_strategy == NoiseStrategy::PerReaction ? scheme.size() : scheme.dimension();
  }
  friend bool operator==(const SdeModel&, const SdeModel&) = default;
};

inline const char* to_string(RateMode m) {
  return m == RateMode::Exact ? "exact" : "fokker_planck";
}
inline const char* to_string(DiffusionSign s) {
  return s == DiffusionSign::PaperMinus ? "paper_minus" : "kramers_moyal_plus";
}
inline const char* to_string(NoiseStrategy n) {
  return n == NoiseStrategy::MatrixSqrt ? "matrix_sqrt" : "per_reaction";
}

namespace detail {

inline Polynomial population_factor(const InteractionScheme& scheme,
                                    const std::vector<unsigned>& stoichiometry,
                                    RateMode mode) {
  Polynomial p(1);
  for (std::size_t i = 0; i < scheme.dimension(); ++i) {
    if (stoichiometry[i] == 0) continue;
    p *= mode == RateMode::Exact ? falling_factorial(scheme.species()[i], stoichiometry[i])
                                 : power_rate(scheme.species()[i], stoichiometry[i]);
  }
  return p;
}

}  // namespace detail

/// s+_a = k+_a prod_i f(phi_i, I[a][i]),  s-_a = k-_a prod_i f(phi_i, F[a][i]).
inline TransitionRates transition_rates(const InteractionScheme& scheme, RateMode mode) {
  TransitionRates rates;
  for (const auto& it : scheme.interactions()) {
    rates.forward.push_back(Polynomial::symbol(it.forward_rate) *
                            detail::population_factor(scheme, it.initial, mode));
    rates.backward.push_back(it.backward_rate
                                 ? Polynomial::symbol(*it.backward_rate) *
                                       detail::population_factor(scheme, it.final, mode)
                                 : Polynomial());
  }
  return rates;
}

/// A^i = sum_a r[a][i] (s+_a - s-_a).
inline std::vector<Polynomial> drift_vector(const InteractionScheme& scheme, RateMode mode) {
  const auto rates = transition_rates(scheme, mode);
  const auto r = change_vectors(scheme);
  std::vector<Polynomial> drift(scheme.dimension());
  for (std::size_t a = 0; a < scheme.size(); ++a) {
    Polynomial net = rates.forward[a] - rates.backward[a];
    for (std::size_t i = 0; i < scheme.dimension(); ++i)
      if (r[a][i] != 0) drift[i] += Polynomial(r[a][i]) * net;
  }
  return drift;
}

/// B^{ij} = sum_a r[a][i] r[a][j] (s+_a -/+ s-_a).
inline PolynomialMatrix diffusion_matrix(const InteractionScheme& scheme, RateMode mode,
                                         DiffusionSign sign) {
  const auto rates = transition_rates(scheme, mode);
  const auto r = change_vectors(scheme);
  const std::size_t n = scheme.dimension();
  PolynomialMatrix b(n, std::vector<Polynomial>(n));
  for (std::size_t a = 0; a < scheme.size(); ++a) {
    Polynomial weight = sign == DiffusionSign::PaperMinus
                            ? rates.forward[a] - rates.backward[a]
                            : rates.forward[a] + rates.backward[a];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (r[a][i] != 0 && r[a][j] != 0)
          b[i][j] += Polynomial(r[a][i] * r[a][j]) * weight;
  }
  return b;
}

/// Assembles the Langevin model a^i = A^i, b b^T = B.
///
/// PerReaction noise reproduces B only for the sum form, so it is refused
/// with PaperMinus whenever any interaction has a backward rate.
inline SdeModel build_sde_model(const InteractionScheme& scheme, ModelOptions options = {}) {
  if (options.noise_strategy == NoiseStrategy::PerReaction &&
      options.diffusion_sign == DiffusionSign::PaperMinus) {
    for (const auto& it : scheme.interactions())
      if (it.reversible())
        throw IncompatibleNoise(
            "per-reaction noise needs the kramers-moyal diffusion sign when interaction "
            "rates include backward rate '" + it.backward_rate->name + "'");
  }
  return SdeModel{scheme,
                  drift_vector(scheme, options.rate_mode),
                  diffusion_matrix(scheme, options.rate_mode, options.diffusion_sign),
                  options.rate_mode,
                  options.diffusion_sign,
                  options.noise_strategy};
}

inline bool is_symmetric(const PolynomialMatrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (m[i][j] != m[j][i]) return false;
  return true;
}

/// Symbols of drift/diffusion that the scheme does not declare (should be none).
inline std::set<SymbolId> undeclared_symbols(const SdeModel& model) {
  std::set<SymbolId> declared(model.scheme.species().begin(), model.scheme.species().end());
  for (const auto& r : model.scheme.rate_symbols()) declared.insert(r);
  std::set<SymbolId> out;
  auto scan = [&](const Polynomial& p) {
    for (const auto& s : p.symbols())
      if (!declared.count(s)) out.insert(s);
  };
  for (const auto& p : model.drift) scan(p);
  for (const auto& row : model.diffusion)
    for (const auto& p : row) scan(p);
  return out;
}

/// Human-readable SDE, e.g. "dphi = (A) dt + sqrt(B) dW".
inline std::string format_sde(const SdeModel& model) {
  const auto order = model.scheme.symbol_order();
  const auto& sp = model.scheme.species();
  std::string out;
  if (model.dimension() == 1 && model.noise_strategy == NoiseStrategy::MatrixSqrt) {
    out = "d" + sp[0].name + " = (" + canonical_string(model.drift[0], order) + ") dt + sqrt(" +
          canonical_string(model.diffusion[0][0], order) + ") dW\n";
    return out;
  }
  for (std::size_t i = 0; i < sp.size(); ++i) {
    out += "d" + sp[i].name + " = (" + canonical_string(model.drift[i], order) + ") dt";
    for (std::size_t a = 0; a < model.noise_dimension(); ++a)
      out += " + b[" + std::to_string(i + 1) + "][" + std::to_string(a + 1) + "] dW" +
             std::to_string(a + 1);
    out += "\n";
  }
  if (model.noise_strategy == NoiseStrategy::MatrixSqrt) {
    out += "b b^T = B\n";
  } else {
    out += "b[i][a] = r[a][i] * sqrt(s+_a + s-_a)\n";
  }
  return out;
}

}  // namespace stochastize
