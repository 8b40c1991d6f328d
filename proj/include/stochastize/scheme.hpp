#pragma once

// Interaction schemes: species, per-interaction initial/final stoichiometry,
// forward/backward rate symbols, and the state-change vectors r = F - I.
//
// Text format, one interaction per line:
//
//   x + y -> 2y @ k_2
//   phi <-> 2 phi @ lambda, gamma    # forward, backward
//   phi -> 0 @ beta
//
// A complex is '0' or '+'-separated terms `[uint ['*']] species`. '#' starts
// a comment.

#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "symcore.hpp"

namespace stochastize {

inline constexpr unsigned kMaxStoichiometry = 64;

struct Interaction {
  std::vector<unsigned> initial;
  std::vector<unsigned> final;
  SymbolId forward_rate;
  std::optional<SymbolId> backward_rate;

  bool reversible() const noexcept { return backward_rate.has_value(); }
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// r = final - initial for one interaction; never the zero vector.
using ChangeVector = std::vector<int>;

struct SchemeOptions {
  bool allow_shared_rates = false;
};

class InteractionScheme {
public:
  InteractionScheme(std::vector<SymbolId> species, std::vector<Interaction> interactions,
                    SchemeOptions options = {})
      : species_(std::move(species)), interactions_(std::move(interactions)) {
    validate(options);
  }

  const std::vector<SymbolId>& species() const noexcept { return species_; }
  const std::vector<Interaction>& interactions() const noexcept { return interactions_; }
  /// Number of species (n).
  std::size_t dimension() const noexcept { return species_.size(); }
  /// Number of interactions (s).
  std::size_t size() const noexcept { return interactions_.size(); }

  /// Rate symbols: forward rates in interaction order, then backward rates.
  std::vector<SymbolId> rate_symbols() const {
    std::vector<SymbolId> out;
    std::set<SymbolId> seen;
    auto push = [&](const SymbolId& s) {
      if (seen.insert(s).second) out.push_back(s);
    };
    for (const auto& it : interactions_) push(it.forward_rate);
    for (const auto& it : interactions_)
      if (it.backward_rate) push(*it.backward_rate);
    return out;
  }

  /// Printing order for derived expressions: rates, then species.
  SymbolOrder symbol_order() const {
    std::vector<SymbolId> order = rate_symbols();
    order.insert(order.end(), species_.begin(), species_.end());
    return SymbolOrder(std::move(order));
  }

  SymbolScope scope() const {
    SymbolScope scope;
    for (const auto& s : species_) scope.kinds.emplace(s.name, SymbolKind::Species);
    for (const auto& r : rate_symbols()) scope.kinds.emplace(r.name, SymbolKind::Rate);
    return scope;
  }

  std::map<SymbolId, std::size_t> species_slots() const {
    std::map<SymbolId, std::size_t> slots;
    for (std::size_t i = 0; i < species_.size(); ++i) slots.emplace(species_[i], i);
    return slots;
  }

  friend bool operator==(const InteractionScheme&, const InteractionScheme&) = default;

private:
  void validate(const SchemeOptions& options) const {
    if (interactions_.empty()) throw EmptyScheme();
    if (species_.empty()) throw SchemeError("scheme declares no species");
    std::set<std::string> species_names;
    for (const auto& s : species_) {
      if (s.kind != SymbolKind::Species)
        throw SchemeError("'" + s.name + "' is listed as a species but is not one");
      if (!species_names.insert(s.name).second)
        throw SchemeError("species '" + s.name + "' is declared twice");
    }
    std::set<std::string> rate_names;
    auto check_rate = [&](const SymbolId& r) {
      if (r.kind != SymbolKind::Rate)
        throw SchemeError("'" + r.name + "' is used as a rate but is not one");
      if (species_names.count(r.name))
        throw SchemeError("'" + r.name + "' names both a species and a rate");
      if (!rate_names.insert(r.name).second && !options.allow_shared_rates)
        throw DuplicateRateSymbol(r.name);
    };
    for (std::size_t a = 0; a < interactions_.size(); ++a) {
      const auto& it = interactions_[a];
      if (it.initial.size() != species_.size() || it.final.size() != species_.size())
        throw SchemeError("interaction " + std::to_string(a + 1) +
                          ": stoichiometry vector length differs from species count");
      for (std::size_t i = 0; i < species_.size(); ++i)
        if (it.initial[i] > kMaxStoichiometry || it.final[i] > kMaxStoichiometry)
          throw SchemeError("interaction " + std::to_string(a + 1) +
                            ": stoichiometric coefficient exceeds " +
                            std::to_string(kMaxStoichiometry));
      if (it.initial == it.final) throw NoOpInteraction(a + 1);
      check_rate(it.forward_rate);
      if (it.backward_rate) check_rate(*it.backward_rate);
    }
  }

  std::vector<SymbolId> species_;
  std::vector<Interaction> interactions_;
};

inline std::vector<ChangeVector> change_vectors(const InteractionScheme& scheme) {
  std::vector<ChangeVector> out;
  out.reserve(scheme.size());
  for (const auto& it : scheme.interactions()) {
    ChangeVector r(scheme.dimension());
    for (std::size_t i = 0; i < r.size(); ++i)
      r[i] = static_cast<int>(it.final[i]) - static_cast<int>(it.initial[i]);
    out.push_back(std::move(r));
  }
  return out;
}

namespace detail {

class SchemeLineParser {
public:
  using Complex = std::vector<std::pair<std::string, unsigned>>;

  struct Line {
    Complex lhs, rhs;
    bool reversible = false;
    std::vector<std::string> rates;
  };

  SchemeLineParser(std::string_view text, std::size_t line_no)
      : text_(text), line_(line_no) {}

  Line parse() {
    Line out;
    out.lhs = complex();
    skip_ws();
    if (text_.substr(pos_, 3) == "<->") {
      out.reversible = true;
      pos_ += 3;
    } else if (text_.substr(pos_, 2) == "->") {
      pos_ += 2;
    } else {
      fail("'->' or '<->'");
    }
    out.rhs = complex();
    if (!accept('@')) fail("'@' followed by rate symbols");
    out.rates.push_back(identifier("rate symbol"));
    while (accept(',')) out.rates.push_back(identifier("rate symbol"));
    skip_ws();
    if (pos_ != text_.size()) fail("',' or end of line");
    std::size_t expected = out.reversible ? 2 : 1;
    if (out.rates.size() != expected)
      throw SyntaxError(line_, pos_,
                        out.reversible ? "exactly two rates (forward, backward) after '<->'"
                                       : "exactly one rate after '->'");
    return out;
  }

private:
  [[noreturn]] void fail(const std::string& expected) const {
    throw SyntaxError(line_, pos_, expected);
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
  bool at_identifier_start() const {
    return pos_ < text_.size() &&
           (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_');
  }
  std::string identifier(const char* what) {
    skip_ws();
    if (!at_identifier_start()) fail(what);
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Complex complex() {
    Complex terms;
    do {
      skip_ws();
      std::size_t number_start = pos_;
      std::string digits;
      scan_digits(text_, pos_, digits);
      if (!digits.empty()) {
        bool star = accept('*');
        skip_ws();
        if (!at_identifier_start()) {
          if (!star && terms.empty() && std::stoul(digits) == 0 && digits.size() < 10) {
            skip_ws();
            return terms;  // the empty complex "0"
          }
          fail("species name");
        }
        if (digits.size() > 3 || std::stoul(digits) == 0) {
          pos_ = number_start;
          fail("stoichiometric coefficient in 1.." + std::to_string(kMaxStoichiometry));
        }
        unsigned count = static_cast<unsigned>(std::stoul(digits));
        if (count > kMaxStoichiometry) {
          pos_ = number_start;
          fail("stoichiometric coefficient in 1.." + std::to_string(kMaxStoichiometry));
        }
        terms.emplace_back(identifier("species name"), count);
      } else {
        terms.emplace_back(identifier("species name or '0'"), 1u);
      }
    } while (accept('+'));
    return terms;
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses scheme text. Species are numbered by first appearance.
inline InteractionScheme parse_scheme(std::string_view text, SchemeOptions options = {}) {
  struct Parsed {
    detail::SchemeLineParser::Line line;
    std::size_t line_no;
  };
  std::vector<Parsed> lines;
  std::vector<std::string> species_names;
  std::map<std::string, std::size_t> species_index;
  auto note_species = [&](const std::string& name) {
    if (species_index.emplace(name, species_names.size()).second)
      species_names.push_back(name);
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    bool blank = true;
    for (char c : raw)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;

    auto parsed = detail::SchemeLineParser(raw, line_no).parse();
    for (const auto& [name, count] : parsed.lhs) note_species(name);
    for (const auto& [name, count] : parsed.rhs) note_species(name);
    lines.push_back({std::move(parsed), line_no});
  }
  if (lines.empty()) throw EmptyScheme();

  std::vector<SymbolId> species_list;
  for (const auto& name : species_names) species_list.push_back(species(name));

  std::vector<Interaction> interactions;
  for (const auto& [line, number] : lines) {
    Interaction it;
    it.initial.assign(species_list.size(), 0);
    it.final.assign(species_list.size(), 0);
    for (const auto& [name, count] : line.lhs) it.initial[species_index[name]] += count;
    for (const auto& [name, count] : line.rhs) it.final[species_index[name]] += count;
    if (it.initial == it.final) throw NoOpInteraction(number);
    it.forward_rate = rate(line.rates[0]);
    if (line.reversible) it.backward_rate = rate(line.rates[1]);
    interactions.push_back(std::move(it));
  }
  return InteractionScheme(std::move(species_list), std::move(interactions), options);
}

namespace detail {

inline std::string format_complex(const InteractionScheme& scheme,
                                  const std::vector<unsigned>& counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    if (!out.empty()) out += " + ";
    if (counts[i] > 1) out += std::to_string(counts[i]);
    out += scheme.species()[i].name;
  }
  return out.empty() ? "0" : out;
}

}  // namespace detail

inline std::string format_scheme(const InteractionScheme& scheme) {
  std::string out;
  for (const auto& it : scheme.interactions()) {
    out += detail::format_complex(scheme, it.initial);
    out += it.reversible() ? " <-> " : " -> ";
    out += detail::format_complex(scheme, it.final);
    out += " @ " + it.forward_rate.name;
    if (it.backward_rate) out += ", " + it.backward_rate->name;
    out += "\n";
  }
  return out;
}

inline nlohmann::ordered_json scheme_to_json(const InteractionScheme& scheme) {
  nlohmann::ordered_json j;
  j["species"] = nlohmann::ordered_json::array();
  for (const auto& s : scheme.species()) j["species"].push_back(s.name);
  j["interactions"] = nlohmann::ordered_json::array();
  for (const auto& it : scheme.interactions()) {
    nlohmann::ordered_json e;
    e["initial"] = it.initial;
    e["final"] = it.final;
    e["forward_rate"] = it.forward_rate.name;
    e["backward_rate"] = it.backward_rate ? nlohmann::ordered_json(it.backward_rate->name)
                                          : nlohmann::ordered_json(nullptr);
    j["interactions"].push_back(std::move(e));
  }
  return j;
}

template <class Json>
InteractionScheme scheme_from_json(const Json& j, SchemeOptions options = {}) {
  try {
    std::vector<SymbolId> species_list;
    for (const auto& s : j.at("species")) species_list.push_back(species(s.template get<std::string>()));
    std::vector<Interaction> interactions;
    for (const auto& e : j.at("interactions")) {
      Interaction it;
      it.initial = e.at("initial").template get<std::vector<unsigned>>();
      it.final = e.at("final").template get<std::vector<unsigned>>();
      it.forward_rate = rate(e.at("forward_rate").template get<std::string>());
      if (e.contains("backward_rate") && !e.at("backward_rate").is_null())
        it.backward_rate = rate(e.at("backward_rate").template get<std::string>());
      interactions.push_back(std::move(it));
    }
    return InteractionScheme(std::move(species_list), std::move(interactions), options);
  } catch (const nlohmann::json::exception& ex) {
    throw SchemeError(std::string("malformed scheme JSON: ") + ex.what());
  }
}

}  // namespace stochastize
