#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

#include "treejudge/core/error.hpp"

namespace treejudge {

// Exact rational used for every score. Nested averages stay exact, so
// "score == 1" never suffers from float drift.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational make_rational(long long num, long long den = 1) {
  return Rational(BigInt(num), BigInt(den));
}

// "n/d" in lowest terms, or "n" when the denominator is one.
inline std::string to_exact_string(const Rational& r) {
  auto num = boost::multiprecision::numerator(r);
  auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline Rational parse_rational(std::string_view text) {
  try {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) {
      return Rational(BigInt(std::string(text)));
    }
    BigInt num(std::string(text.substr(0, slash)));
    BigInt den(std::string(text.substr(slash + 1)));
    if (den == 0) throw DocumentError("zero denominator in '" + std::string(text) + "'");
    return Rational(num, den);
  } catch (const DocumentError&) {
    throw;
  } catch (const std::exception&) {
    throw DocumentError("malformed rational '" + std::string(text) + "'");
  }
}

// Fixed-point rendering, rounding half away from zero.
inline std::string to_decimal(const Rational& r, int places = 4) {
  BigInt scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  bool negative = r < 0;
  Rational mag = negative ? Rational(-r) : r;
  Rational scaled = mag * Rational(scale) + Rational(1, 2);
  BigInt q = boost::multiprecision::numerator(scaled) /
             boost::multiprecision::denominator(scaled);
  BigInt whole = q / scale;
  BigInt frac = q % scale;
  std::string frac_str = frac.str();
  if (static_cast<int>(frac_str.size()) < places) {
    frac_str.insert(0, static_cast<std::size_t>(places) - frac_str.size(), '0');
  }
  std::string out = negative && q != 0 ? "-" : "";
  out += whole.str();
  if (places > 0) out += "." + frac_str;
  return out;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace treejudge
