#pragma once

// Exact multivariate polynomial algebra over named symbols. Every rate,
// drift entry and diffusion entry in the toolkit is a Polynomial.

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace stochastize {

// Rate sorts before Species; this is the intrinsic symbol order.
enum class SymbolKind { Rate, Species };

inline bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto head = static_cast<unsigned char>(name[0]);
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(name.begin() + 1, name.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_';
  });
}

struct SymbolId {
  std::string name;
  SymbolKind kind = SymbolKind::Species;

  friend bool operator==(const SymbolId&, const SymbolId&) = default;
  friend std::strong_ordering operator<=>(const SymbolId& a, const SymbolId& b) {
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    return a.name.compare(b.name) <=> 0;
  }
};

inline SymbolId make_symbol(std::string name, SymbolKind kind) {
  if (!is_identifier(name)) throw Error("invalid symbol name '" + name + "'");
  return SymbolId{std::move(name), kind};
}
inline SymbolId species(std::string name) {
  return make_symbol(std::move(name), SymbolKind::Species);
}
inline SymbolId rate(std::string name) {
  return make_symbol(std::move(name), SymbolKind::Rate);
}

using Exponents = std::vector<std::pair<SymbolId, unsigned>>;

/// coefficient * prod(symbol^exponent). Exponent lists are sorted by symbol
/// and never hold a zero exponent.
struct Monomial {
  Rational coefficient;
  Exponents exponents;

  unsigned degree() const {
    unsigned d = 0;
    for (const auto& [s, e] : exponents) d += e;
    return d;
  }
  unsigned exponent_of(const SymbolId& s) const {
    for (const auto& [sym, e] : exponents)
      if (sym == s) return e;
    return 0;
  }
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

namespace detail {

// Lexicographic, larger exponents of earlier symbols first. `less` orders
// symbols; both exponent lists must be sorted by it.
template <class SymbolLess>
int compare_exponents(const Exponents& a, const Exponents& b, SymbolLess less) {
  std::size_t i = 0;
  for (; i < a.size() && i < b.size(); ++i) {
    const auto& [sa, ea] = a[i];
    const auto& [sb, eb] = b[i];
    if (sa != sb) return less(sa, sb) ? -1 : 1;
    if (ea != eb) return ea > eb ? -1 : 1;
  }
  if (a.size() == b.size()) return 0;
  return i < a.size() ? -1 : 1;
}

inline Exponents multiply_exponents(const Exponents& a, const Exponents& b) {
  Exponents out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

}  // namespace detail

class Polynomial {
public:
  Polynomial() = default;
  Polynomial(const Rational& c) {  // NOLINT: constants convert implicitly
    if (c != 0) terms_.push_back(Monomial{c, {}});
  }
  Polynomial(long long c) : Polynomial(Rational(c)) {}  // NOLINT
  Polynomial(int c) : Polynomial(Rational(c)) {}        // NOLINT

  static Polynomial symbol(const SymbolId& s, unsigned power = 1) {
    Polynomial p;
    if (power == 0) return Polynomial(1);
    p.terms_.push_back(Monomial{1, {{s, power}}});
    return p;
  }

  /// Normalizes an arbitrary list of monomials (merges like terms, drops
  /// zero coefficients, sorts).
  static Polynomial from_terms(std::vector<Monomial> terms) {
    for (auto& t : terms) {
      std::sort(t.exponents.begin(), t.exponents.end());
      Exponents merged;
      for (auto& [s, e] : t.exponents) {
        if (e == 0) continue;
        if (!merged.empty() && merged.back().first == s)
          merged.back().second += e;
        else
          merged.emplace_back(s, e);
      }
      t.exponents = std::move(merged);
    }
    auto less = [](const SymbolId& a, const SymbolId& b) { return a < b; };
    std::sort(terms.begin(), terms.end(), [&](const Monomial& a, const Monomial& b) {
      return detail::compare_exponents(a.exponents, b.exponents, less) < 0;
    });
    Polynomial p;
    for (auto& t : terms) {
      if (!p.terms_.empty() && p.terms_.back().exponents == t.exponents)
        p.terms_.back().coefficient += t.coefficient;
      else
        p.terms_.push_back(std::move(t));
      if (p.terms_.back().coefficient == 0) p.terms_.pop_back();
    }
    return p;
  }

  const std::vector<Monomial>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  unsigned degree() const {
    unsigned d = 0;
    for (const auto& t : terms_) d = std::max(d, t.degree());
    return d;
  }

  std::set<SymbolId> symbols() const {
    std::set<SymbolId> out;
    for (const auto& t : terms_)
      for (const auto& [s, e] : t.exponents) out.insert(s);
    return out;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<Monomial> all = a.terms_;
    all.insert(all.end(), b.terms_.begin(), b.terms_.end());
    return from_terms(std::move(all));
  }
  friend Polynomial operator-(const Polynomial& a) {
    Polynomial r = a;
    for (auto& t : r.terms_) t.coefficient = -t.coefficient;
    return r;
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    return a + (-b);
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::vector<Monomial> all;
    all.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& x : a.terms_)
      for (const auto& y : b.terms_)
        all.push_back(Monomial{x.coefficient * y.coefficient,
                               detail::multiply_exponents(x.exponents, y.exponents)});
    return from_terms(std::move(all));
  }
  Polynomial& operator+=(const Polynomial& o) { return *this = *this + o; }
  Polynomial& operator-=(const Polynomial& o) { return *this = *this - o; }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
  std::vector<Monomial> terms_;
};

inline Polynomial poly_add(const Polynomial& a, const Polynomial& b) { return a + b; }
inline Polynomial poly_mul(const Polynomial& a, const Polynomial& b) { return a * b; }

inline Polynomial pow(const Polynomial& p, unsigned n) {
  Polynomial r(1);
  for (unsigned i = 0; i < n; ++i) r *= p;
  return r;
}

/// s (s-1) ... (s-n+1): the number of ordered selections of n out of s.
inline Polynomial falling_factorial(const SymbolId& s, unsigned n) {
  if (s.kind != SymbolKind::Species)
    throw Error("falling_factorial expects a species symbol, got '" + s.name + "'");
  Polynomial r(1);
  for (unsigned i = 0; i < n; ++i)
    r *= Polynomial::symbol(s) - Polynomial(static_cast<long long>(i));
  return r;
}

/// s^n, the large-population replacement of falling_factorial.
inline Polynomial power_rate(const SymbolId& s, unsigned n) {
  if (s.kind != SymbolKind::Species)
    throw Error("power_rate expects a species symbol, got '" + s.name + "'");
  return Polynomial::symbol(s, n);
}

inline Polynomial substitute(const Polynomial& p,
                             const std::map<SymbolId, Polynomial>& env) {
  Polynomial out;
  for (const auto& t : p.terms()) {
    Polynomial term(t.coefficient);
    Exponents kept;
    for (const auto& [s, e] : t.exponents) {
      if (auto it = env.find(s); it != env.end())
        term *= pow(it->second, e);
      else
        kept.emplace_back(s, e);
    }
    if (!kept.empty()) term *= Polynomial::from_terms({Monomial{1, std::move(kept)}});
    out += term;
  }
  return out;
}

namespace detail {

template <class Scalar>
Scalar ipow(const Scalar& base, unsigned e) {
  Scalar r(1);
  for (unsigned i = 0; i < e; ++i) r *= base;
  return r;
}

template <class Scalar>
Scalar evaluate_generic(const Polynomial& p, const std::map<SymbolId, Scalar>& point) {
  Scalar sum(0);
  for (const auto& t : p.terms()) {
    Scalar term(1);
    for (const auto& [s, e] : t.exponents) {
      auto it = point.find(s);
      if (it == point.end()) throw MissingSymbol(s.name);
      term *= ipow(it->second, e);
    }
    if constexpr (std::is_same_v<Scalar, Rational>)
      sum += t.coefficient * term;
    else
      sum += to_double(t.coefficient) * term;
  }
  return sum;
}

}  // namespace detail

/// Floating evaluation, summing terms in canonical order.
inline double evaluate(const Polynomial& p, const std::map<SymbolId, double>& point) {
  return detail::evaluate_generic<double>(p, point);
}

inline Rational evaluate_exact(const Polynomial& p,
                               const std::map<SymbolId, Rational>& point) {
  return detail::evaluate_generic<Rational>(p, point);
}

/// Display order of symbols. Symbols listed come first, in list order; the
/// rest follow in intrinsic order. Terms are printed lexicographically along
/// this order, larger exponents first.
class SymbolOrder {
public:
  SymbolOrder() = default;
  explicit SymbolOrder(std::vector<SymbolId> symbols) : symbols_(std::move(symbols)) {
    for (std::size_t i = 0; i < symbols_.size(); ++i) rank_.emplace(symbols_[i], i);
  }

  bool less(const SymbolId& a, const SymbolId& b) const {
    std::size_t ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb;
    return a < b;
  }
  const std::vector<SymbolId>& symbols() const noexcept { return symbols_; }

private:
  std::size_t rank(const SymbolId& s) const {
    auto it = rank_.find(s);
    return it == rank_.end() ? symbols_.size() : it->second;
  }
  std::vector<SymbolId> symbols_;
  std::map<SymbolId, std::size_t> rank_;
};

/// Terms of `p` re-sorted for display, with factors inside each term in
/// `order`. Shared by every printer.
inline std::vector<Monomial> ordered_terms(const Polynomial& p,
                                           const SymbolOrder& order = {}) {
  auto less = [&](const SymbolId& a, const SymbolId& b) { return order.less(a, b); };
  std::vector<Monomial> terms = p.terms();
  for (auto& t : terms)
    std::sort(t.exponents.begin(), t.exponents.end(),
              [&](const auto& x, const auto& y) { return less(x.first, y.first); });
  std::stable_sort(terms.begin(), terms.end(), [&](const Monomial& a, const Monomial& b) {
    return detail::compare_exponents(a.exponents, b.exponents, less) < 0;
  });
  return terms;
}

inline std::string canonical_string(const Polynomial& p, const SymbolOrder& order = {}) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : ordered_terms(p, order)) {
    bool negative = t.coefficient < 0;
    Rational magnitude = negative ? Rational(-t.coefficient) : t.coefficient;
    if (first)
      out += negative ? "-" : "";
    else
      out += negative ? " - " : " + ";
    first = false;

    std::string body;
    if (magnitude != 1 || t.exponents.empty()) body = to_string(magnitude);
    for (const auto& [s, e] : t.exponents) {
      if (!body.empty()) body += "*";
      body += s.name;
      if (e > 1) body += "^" + std::to_string(e);
    }
    out += body;
  }
  return out;
}

/// Resolves the kind of names met while parsing.
struct SymbolScope {
  std::map<std::string, SymbolKind, std::less<>> kinds;
  SymbolKind fallback = SymbolKind::Species;

  SymbolKind kind_of(std::string_view name) const {
    auto it = kinds.find(name);
    return it == kinds.end() ? fallback : it->second;
  }
  static SymbolScope of(const std::set<SymbolId>& symbols) {
    SymbolScope scope;
    for (const auto& s : symbols) scope.kinds.emplace(s.name, s.kind);
    return scope;
  }
};

namespace detail {

// expr := ['-'] term (('+'|'-') term)*
// term := factor ('*' factor)*
// factor := number | symbol | symbol '^' uint | '(' expr ')'
class ExpressionParser {
public:
  ExpressionParser(std::string_view text, const SymbolScope& scope)
      : text_(text), scope_(scope) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("operator or end of input");
    return p;
  }

private:
  [[noreturn]] void fail(const std::string& expected) const {
    throw SyntaxError(0, pos_, expected);
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    bool negate = accept('-');
    Polynomial result = term();
    if (negate) result = -result;
    for (;;) {
      if (accept('+'))
        result += term();
      else if (accept('-'))
        result -= term();
      else
        return result;
    }
  }

  Polynomial term() {
    Polynomial result = factor();
    while (accept('*')) result *= factor();
    return result;
  }

  Polynomial factor() {
    skip_ws();
    if (accept('(')) {
      Polynomial inner = expr();
      if (!accept(')')) fail("')'");
      return inner;
    }
    if (auto number = scan_rational(text_, pos_)) return Polynomial(*number);
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);
    if (!is_identifier(name)) {
      pos_ = start;
      fail("number, symbol or '('");
    }
    SymbolId s{std::string(name), scope_.kind_of(name)};
    unsigned power = 1;
    if (accept('^')) {
      skip_ws();
      std::string digits;
      if (!scan_digits(text_, pos_, digits) || digits.size() > 4) fail("unsigned exponent");
      power = static_cast<unsigned>(std::stoul(digits));
    }
    return Polynomial::symbol(s, power);
  }

  std::string_view text_;
  const SymbolScope& scope_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses the ASCII expression grammar. Numbers are exact: "0.2" is 1/5
/// and "1/3" is a single rational literal.
inline Polynomial parse_expression(std::string_view text, const SymbolScope& scope = {}) {
  return detail::ExpressionParser(text, scope).parse();
}

/// Polynomial with species bound to slots of a state array and all other
/// symbols folded into double coefficients. Used on simulation hot paths.
class NumericPolynomial {
public:
  NumericPolynomial() = default;

  NumericPolynomial(const Polynomial& p, const std::map<SymbolId, std::size_t>& slots,
                    const std::map<SymbolId, double>& constants) {
    for (const auto& t : p.terms()) {
      Term term{to_double(t.coefficient), {}};
      for (const auto& [s, e] : t.exponents) {
        if (auto it = slots.find(s); it != slots.end()) {
          term.factors.emplace_back(static_cast<std::uint32_t>(it->second), e);
        } else if (auto c = constants.find(s); c != constants.end()) {
          term.coefficient *= detail::ipow(c->second, e);
        } else {
          throw MissingSymbol(s.name);
        }
      }
      terms_.push_back(std::move(term));
    }
  }

  double operator()(std::span<const double> state) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
      double v = t.coefficient;
      for (const auto& [slot, e] : t.factors)
        for (std::uint32_t k = 0; k < e; ++k) v *= state[slot];
      sum += v;
    }
    return sum;
  }

  bool is_zero() const noexcept { return terms_.empty(); }

private:
  struct Term {
    double coefficient;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> factors;
  };
  std::vector<Term> terms_;
};

}  // namespace stochastize
