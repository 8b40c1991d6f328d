#pragma once

// Rates files: one `symbol = value` binding per line, values written as exact
// decimals or p/q. Rate symbols get rate constants; species symbols get
// their initial population.

#include <cctype>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"
#include "scheme.hpp"
#include "symcore.hpp"

namespace stochastize {

struct Binding {
  std::string name;
  Rational value;
  std::size_t line = 0;
};

/// Parses rates file text. '#' starts a comment; blank lines are skipped.
inline std::vector<Binding> parse_bindings(std::string_view text) {
  std::vector<Binding> out;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t b = 0;
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    if (b == line.size()) continue;

    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw SyntaxError(line_no, line.size(), "'symbol = value'");
    std::size_t e = eq;
    while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
    std::string name(line.substr(b, e - b));
    if (!is_identifier(name)) throw SyntaxError(line_no, b, "symbol name before '='");
    auto value = parse_rational(line.substr(eq + 1));
    if (!value) throw SyntaxError(line_no, eq + 1, "decimal or p/q value after '='");
    out.push_back({std::move(name), *value, line_no});
  }
  return out;
}

struct ResolvedBindings {
  std::map<SymbolId, Rational> rates;
  std::vector<Rational> initial_state;  // scheme species order

  std::map<SymbolId, double> rate_values() const {
    std::map<SymbolId, double> out;
    for (const auto& [s, v] : rates) out.emplace(s, to_double(v));
    return out;
  }
  std::vector<double> initial_values() const {
    std::vector<double> out;
    for (const auto& v : initial_state) out.push_back(to_double(v));
    return out;
  }
};

/// Matches bindings against the scheme. Every rate symbol and every species
/// must be bound exactly once; names outside the scheme are rejected.
inline ResolvedBindings resolve_bindings(const InteractionScheme& scheme,
                                         const std::vector<Binding>& bindings) {
  const auto scope = scheme.scope();
  std::map<std::string, const Binding*> by_name;
  for (const auto& b : bindings) {
    if (!scope.kinds.count(b.name))
      throw BindingError("line " + std::to_string(b.line) + ": '" + b.name +
                         "' is neither a rate nor a species of the scheme");
    if (!by_name.emplace(b.name, &b).second)
      throw BindingError("line " + std::to_string(b.line) + ": '" + b.name + "' is bound twice");
    if (b.value < 0)
      throw BindingError("line " + std::to_string(b.line) + ": '" + b.name + "' must be non-negative");
  }

  ResolvedBindings out;
  std::vector<std::string> missing;
  for (const auto& r : scheme.rate_symbols()) {
    if (auto it = by_name.find(r.name); it != by_name.end())
      out.rates.emplace(r, it->second->value);
    else
      missing.push_back(r.name);
  }
  if (!missing.empty()) throw UnboundRate(missing);
  for (const auto& s : scheme.species()) {
    if (auto it = by_name.find(s.name); it != by_name.end())
      out.initial_state.push_back(it->second->value);
    else
      missing.push_back(s.name);
  }
  if (!missing.empty()) {
    std::string msg = "no initial value for species:";
    for (const auto& m : missing) msg += " " + m;
    throw BindingError(msg);
  }
  return out;
}

}  // namespace stochastize
