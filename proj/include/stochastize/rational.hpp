#pragma once

#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace stochastize {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& q) {
  return q.convert_to<double>();
}

inline bool is_integer(const Rational& q) {
  return boost::multiprecision::denominator(q) == 1;
}

/// "p" for integers, "p/q" otherwise.
inline std::string to_string(const Rational& q) {
  if (is_integer(q)) return boost::multiprecision::numerator(q).str();
  return boost::multiprecision::numerator(q).str() + "/" +
         boost::multiprecision::denominator(q).str();
}

namespace detail {

inline Integer pow10(unsigned e) {
  Integer r = 1;
  for (unsigned i = 0; i < e; ++i) r *= 10;
  return r;
}

inline bool scan_digits(std::string_view text, std::size_t& pos,
                        std::string& out) {
  const std::size_t start = pos;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
    out.push_back(text[pos++]);
  return pos > start;
}

}  // namespace detail

/// Scans an unsigned exact literal starting at `pos`:
///   digits ['.' digits] [('e'|'E') ['+'|'-'] digits] ['/' digits]
/// Decimals are read exactly ("0.2" is 1/5). On success advances `pos`;
/// returns nullopt (and leaves `pos` untouched) when no digit is present.
inline std::optional<Rational> scan_rational(std::string_view text,
                                             std::size_t& pos) {
  std::size_t p = pos;
  std::string int_part, frac_part;
  bool have_int = detail::scan_digits(text, p, int_part);
  bool have_frac = false;
  if (p < text.size() && text[p] == '.') {
    std::size_t q = p + 1;
    have_frac = detail::scan_digits(text, q, frac_part);
    if (have_frac || have_int) p = q;
  }
  if (!have_int && !have_frac) return std::nullopt;

  long exponent = 0;
  if (p < text.size() && (text[p] == 'e' || text[p] == 'E')) {
    std::size_t q = p + 1;
    bool negative = false;
    if (q < text.size() && (text[q] == '+' || text[q] == '-'))
      negative = text[q++] == '-';
    std::string exp_digits;
    if (detail::scan_digits(text, q, exp_digits) && exp_digits.size() < 6) {
      exponent = std::stol(exp_digits);
      if (negative) exponent = -exponent;
      p = q;
    }
  }

  Integer mantissa(int_part.empty() ? std::string("0") : int_part);
  mantissa = mantissa * detail::pow10(static_cast<unsigned>(frac_part.size())) +
             (frac_part.empty() ? Integer(0) : Integer(frac_part));
  long scale = exponent - static_cast<long>(frac_part.size());
  Rational value = scale >= 0
                       ? Rational(mantissa * detail::pow10(static_cast<unsigned>(scale)))
                       : Rational(mantissa, detail::pow10(static_cast<unsigned>(-scale)));

  if (p + 1 < text.size() && text[p] == '/' &&
      std::isdigit(static_cast<unsigned char>(text[p + 1]))) {
    std::size_t q = p + 1;
    std::string den;
    detail::scan_digits(text, q, den);
    Integer d(den);
    if (d != 0) {
      value /= Rational(d);
      p = q;
    }
  }
  pos = p;
  return value;
}

/// Parses a whole string as an optionally signed exact literal.
inline std::optional<Rational> parse_rational(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  text = text.substr(b, e - b);
  bool negative = false;
  std::size_t pos = 0;
  if (!text.empty() && (text[0] == '-' || text[0] == '+')) {
    negative = text[0] == '-';
    pos = 1;
  }
  auto value = scan_rational(text, pos);
  if (!value || pos != text.size()) return std::nullopt;
  return negative ? Rational(-*value) : *value;
}

}  // namespace stochastize
