#pragma once

// Exporters for derived models: LaTeX, a C-dialect compilation unit, and the
// model JSON interchange format (with its reader).

#include <cctype>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "format.hpp"
#include "scheme.hpp"
#include "stochastizer.hpp"
#include "symcore.hpp"

namespace stochastize {

enum class EmitTarget { Latex, CSource, Json };

/// Symbol name -> LaTeX glyph. Names with an underscore are split once into
/// base and subscript ("k_2" -> "k_{2}", "lambda_0" -> "\lambda_{0}").
class LatexNames {
public:
  LatexNames() {
    for (const char* g : {"alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
                          "iota", "kappa", "lambda", "mu", "nu", "xi", "pi", "rho", "sigma",
                          "tau", "upsilon", "chi", "psi", "omega", "varepsilon", "vartheta",
                          "varphi", "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma",
                          "Upsilon", "Phi", "Psi", "Omega"})
      table_[g] = std::string("\\") + g;
    table_["phi"] = "\\varphi";
  }

  void set(const std::string& name, const std::string& latex) { table_[name] = latex; }

  /// Reads `name = \latex` lines; '#' starts a comment.
  void load_overrides(std::string_view text) {
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(start, end - start));
      start = end + 1;
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      auto eq = line.find('=');
      auto trim = [](std::string s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        std::size_t b = 0;
        while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        return s.substr(b);
      };
      if (trim(line).empty()) continue;
      if (eq == std::string::npos) throw SyntaxError(line_no, 0, "'name = latex'");
      std::string name = trim(line.substr(0, eq)), glyph = trim(line.substr(eq + 1));
      if (!is_identifier(name) || glyph.empty()) throw SyntaxError(line_no, 0, "'name = latex'");
      table_[name] = glyph;
    }
  }

  std::string operator()(const std::string& name) const {
    if (auto it = table_.find(name); it != table_.end()) return it->second;
    if (auto us = name.find('_'); us != std::string::npos && us > 0 && us + 1 < name.size())
      return (*this)(name.substr(0, us)) + "_{" + (*this)(name.substr(us + 1)) + "}";
    if (name.size() == 1) return name;
    bool digits = true;
    for (char c : name) digits = digits && std::isdigit(static_cast<unsigned char>(c));
    if (digits) return name;
    return "\\mathrm{" + name + "}";
  }

private:
  std::map<std::string, std::string> table_;
};

inline std::string latex_polynomial(const Polynomial& p, const SymbolOrder& order,
                                    const LatexNames& names) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : ordered_terms(p, order)) {
    const bool negative = t.coefficient < 0;
    const Rational magnitude = negative ? Rational(-t.coefficient) : t.coefficient;
    if (first)
      out += negative ? "- " : "";
    else
      out += negative ? " - " : " + ";
    first = false;
    std::vector<std::string> parts;
    if (magnitude != 1 || t.exponents.empty()) {
      if (is_integer(magnitude))
        parts.push_back(to_string(magnitude));
      else
        parts.push_back("\\frac{" + boost::multiprecision::numerator(magnitude).str() + "}{" +
                        boost::multiprecision::denominator(magnitude).str() + "}");
    }
    for (const auto& [s, e] : t.exponents)
      parts.push_back(names(s.name) + (e > 1 ? "^{" + std::to_string(e) + "}" : ""));
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? " " : "") + parts[i];
  }
  return out;
}

namespace detail {

inline std::string pmatrix(const std::vector<std::vector<std::string>>& rows) {
  std::string out = "\\begin{pmatrix} ";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += " \\\\ ";
    for (std::size_t j = 0; j < rows[i].size(); ++j) out += (j ? " & " : "") + rows[i][j];
  }
  return out + " \\end{pmatrix}";
}

// b[i][a] = r[a][i] sqrt(s+_a + s-_a), as LaTeX entries.
inline std::vector<std::vector<std::string>> per_reaction_gain(const SdeModel& model,
                                                               const LatexNames& names) {
  const auto order = model.scheme.symbol_order();
  const auto rates = transition_rates(model.scheme, model.rate_mode);
  const auto r = change_vectors(model.scheme);
  std::vector<std::vector<std::string>> b(model.dimension());
  for (std::size_t i = 0; i < model.dimension(); ++i)
    for (std::size_t a = 0; a < model.scheme.size(); ++a) {
      if (r[a][i] == 0) {
        b[i].push_back("0");
        continue;
      }
      std::string root =
          "\\sqrt{" + latex_polynomial(rates.forward[a] + rates.backward[a], order, names) + "}";
      if (r[a][i] == 1)
        b[i].push_back(root);
      else if (r[a][i] == -1)
        b[i].push_back("- " + root);
      else
        b[i].push_back((r[a][i] < 0 ? "- " : "") + std::to_string(std::abs(r[a][i])) + " " + root);
    }
  return b;
}

}  // namespace detail

/// LaTeX for A, B and the Langevin equation.
inline std::string emit_latex(const SdeModel& model, const LatexNames& names = {}) {
  const auto order = model.scheme.symbol_order();
  const auto& sp = model.scheme.species();
  const std::size_t n = model.dimension();
  std::string args;
  for (std::size_t i = 0; i < n; ++i) args += (i ? ", " : "") + names(sp[i].name);

  std::vector<std::vector<std::string>> a_col, b_rows(n);
  for (const auto& p : model.drift) a_col.push_back({latex_polynomial(p, order, names)});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      b_rows[i].push_back(latex_polynomial(model.diffusion[i][j], order, names));

  std::string out;
  out += "% Langevin model: rate mode " + std::string(to_string(model.rate_mode)) +
         ", diffusion sign " + to_string(model.diffusion_sign) + ", noise " +
         to_string(model.noise_strategy) + "\n";
  out += "\\begin{align}\n";
  if (n == 1) {
    out += "  A(" + args + ") &= " + a_col[0][0] + ", \\\\\n";
    out += "  B(" + args + ") &= " + b_rows[0][0] + ".\n";
  } else {
    out += "  A^{i}(" + args + ") &= " + detail::pmatrix(a_col) + ", \\\\\n";
    out += "  B^{ij}(" + args + ") &= " + detail::pmatrix(b_rows) + ".\n";
  }
  out += "\\end{align}\n";

  out += "\\begin{equation}\n";
  if (model.noise_strategy == NoiseStrategy::MatrixSqrt) {
    if (n == 1) {
      out += "  d" + args + "(t) = \\left(" + a_col[0][0] + "\\right) dt + \\sqrt{" +
             b_rows[0][0] + "} \\, dW(t)\n";
    } else {
      std::vector<std::vector<std::string>> state, dw;
      for (std::size_t i = 0; i < n; ++i) {
        state.push_back({names(sp[i].name)});
        dw.push_back({"dW^{" + std::to_string(i + 1) + "}"});
      }
      out += "  d " + detail::pmatrix(state) + " = " + detail::pmatrix(a_col) + " dt + b^{i}_{a} " +
             detail::pmatrix(dw) + ", \\quad b^{i}_{a} b^{j}_{a} = B^{ij}\n";
    }
  } else {
    std::vector<std::vector<std::string>> state, dw;
    for (std::size_t i = 0; i < n; ++i) state.push_back({names(sp[i].name)});
    for (std::size_t a = 0; a < model.scheme.size(); ++a)
      dw.push_back({"dW^{" + std::to_string(a + 1) + "}"});
    const auto gain = detail::per_reaction_gain(model, names);
    if (n == 1)
      out += "  d" + args + "(t) = \\left(" + a_col[0][0] + "\\right) dt + " +
             detail::pmatrix(gain) + " " + detail::pmatrix(dw) + "\n";
    else
      out += "  d " + detail::pmatrix(state) + " = " + detail::pmatrix(a_col) + " dt + " +
             detail::pmatrix(gain) + " " + detail::pmatrix(dw) + "\n";
  }
  out += "\\end{equation}\n";
  return out;
}

/// C expression for a polynomial with species read from x[] and rates from
/// k[]. Powers are spelled as repeated multiplication.
inline std::string c_expression(const Polynomial& p, const SymbolOrder& order,
                                const std::map<SymbolId, std::string>& access) {
  if (p.is_zero()) return "0.0";
  std::string out;
  bool first = true;
  for (const auto& t : ordered_terms(p, order)) {
    const bool negative = t.coefficient < 0;
    const Rational magnitude = negative ? Rational(-t.coefficient) : t.coefficient;
    if (first)
      out += negative ? "-" : "";
    else
      out += negative ? " - " : " + ";
    first = false;
    std::vector<std::string> factors;
    if (magnitude != 1 || t.exponents.empty())
      factors.push_back(is_integer(magnitude) ? to_string(magnitude)
                                              : format_number(to_double(magnitude)));
    for (const auto& [s, e] : t.exponents) {
      auto it = access.find(s);
      if (it == access.end()) throw MissingSymbol(s.name);
      for (unsigned k = 0; k < e; ++k) factors.push_back(it->second);
    }
    for (std::size_t i = 0; i < factors.size(); ++i) out += (i ? "*" : "") + factors[i];
  }
  return out;
}

/// Array access used in emitted C: species by scheme order into x[], rates
/// in model order into k[].
inline std::map<SymbolId, std::string> c_symbol_access(const InteractionScheme& scheme) {
  std::map<SymbolId, std::string> access;
  for (std::size_t i = 0; i < scheme.dimension(); ++i)
    access[scheme.species()[i]] = "x[" + std::to_string(i) + "]";
  const auto rates = scheme.rate_symbols();
  for (std::size_t a = 0; a < rates.size(); ++a) access[rates[a]] = "k[" + std::to_string(a) + "]";
  return access;
}

inline std::string emit_c_source(const SdeModel& model, const std::string& function_name) {
  if (!is_identifier(function_name))
    throw Error("'" + function_name + "' is not a valid C identifier");
  const auto order = model.scheme.symbol_order();
  const auto access = c_symbol_access(model.scheme);
  const auto& sp = model.scheme.species();
  const auto rates = model.scheme.rate_symbols();
  const std::size_t n = model.dimension();

  std::string out = "/* Langevin model drift and diffusion.\n";
  out += " * rate mode " + std::string(to_string(model.rate_mode)) + ", diffusion sign " +
         to_string(model.diffusion_sign) + "\n *\n";
  for (std::size_t i = 0; i < n; ++i)
    out += " * x[" + std::to_string(i) + "] = " + sp[i].name + "\n";
  for (std::size_t a = 0; a < rates.size(); ++a)
    out += " * k[" + std::to_string(a) + "] = " + rates[a].name + "\n";
  out += " */\n\n";

  out += "void " + function_name + "_drift(const double *x, const double *k, double *out)\n{\n";
  for (std::size_t i = 0; i < n; ++i)
    out += "  out[" + std::to_string(i) + "] = " + c_expression(model.drift[i], order, access) + ";\n";
  out += "  (void)x;\n  (void)k;\n}\n\n";

  out += "/* Row-major " + std::to_string(n) + "x" + std::to_string(n) + " diffusion matrix. */\n";
  out += "void " + function_name + "_diffusion(const double *x, const double *k, double *out)\n{\n";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out += "  out[" + std::to_string(i * n + j) + "] = " +
             c_expression(model.diffusion[i][j], order, access) + ";\n";
  out += "  (void)x;\n  (void)k;\n}\n";
  return out;
}

inline std::string emit_model_json(const SdeModel& model) {
  const auto order = model.scheme.symbol_order();
  nlohmann::ordered_json j;
  j["version"] = "1";
  j["species"] = nlohmann::ordered_json::array();
  for (const auto& s : model.scheme.species()) j["species"].push_back(s.name);
  j["rates"] = nlohmann::ordered_json::array();
  for (const auto& r : model.scheme.rate_symbols()) j["rates"].push_back(r.name);
  j["scheme"] = scheme_to_json(model.scheme);
  j["drift"] = nlohmann::ordered_json::array();
  for (const auto& p : model.drift) j["drift"].push_back(canonical_string(p, order));
  j["diffusion"] = nlohmann::ordered_json::array();
  for (const auto& row : model.diffusion) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    for (const auto& p : row) r.push_back(canonical_string(p, order));
    j["diffusion"].push_back(std::move(r));
  }
  j["rate_mode"] = to_string(model.rate_mode);
  j["diffusion_sign"] = to_string(model.diffusion_sign);
  j["noise_strategy"] = to_string(model.noise_strategy);
  return j.dump(2) + "\n";
}

inline SdeModel parse_model_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw SyntaxError(0, ex.byte > 0 ? ex.byte - 1 : 0, "valid JSON");
  }
  try {
    if (j.at("version").get<std::string>() != "1")
      throw Error("unsupported model schema version '" + j.at("version").get<std::string>() + "'");
    auto scheme = scheme_from_json(j.at("scheme"), SchemeOptions{true});
    const auto scope = scheme.scope();
    const std::size_t n = scheme.dimension();

    SdeModel model{scheme, {}, {}, RateMode::FokkerPlanck, DiffusionSign::PaperMinus,
                   NoiseStrategy::MatrixSqrt};
    for (const auto& e : j.at("drift")) model.drift.push_back(parse_expression(e.get<std::string>(), scope));
    for (const auto& row : j.at("diffusion")) {
      std::vector<Polynomial> r;
      for (const auto& e : row) r.push_back(parse_expression(e.get<std::string>(), scope));
      model.diffusion.push_back(std::move(r));
    }
    if (model.drift.size() != n || model.diffusion.size() != n)
      throw Error("model JSON: drift/diffusion size differs from species count");
    for (const auto& row : model.diffusion)
      if (row.size() != n) throw Error("model JSON: diffusion matrix is not n x n");

    auto mode = j.at("rate_mode").get<std::string>();
    auto sign = j.at("diffusion_sign").get<std::string>();
    auto noise = j.at("noise_strategy").get<std::string>();
    if (mode != "exact" && mode != "fokker_planck") throw Error("unknown rate_mode '" + mode + "'");
    if (sign != "paper_minus" && sign != "kramers_moyal_plus")
      throw Error("unknown diffusion_sign '" + sign + "'");
    if (noise != "matrix_sqrt" && noise != "per_reaction")
      throw Error("unknown noise_strategy '" + noise + "'");
    model.rate_mode = mode == "exact" ? RateMode::Exact : RateMode::FokkerPlanck;
    model.diffusion_sign =
        sign == "paper_minus" ? DiffusionSign::PaperMinus : DiffusionSign::KramersMoyalPlus;
    model.noise_strategy =
        noise == "matrix_sqrt" ? NoiseStrategy::MatrixSqrt : NoiseStrategy::PerReaction;
    return model;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("malformed model JSON: ") + ex.what());
  }
}

}  // namespace stochastize
