#include "densind/rational.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace densind {

Rational make_rational(std::uint64_t numerator, std::uint64_t denominator) {
  if (denominator == 0) throw std::invalid_argument("rational with zero denominator");
  return Rational(Integer(numerator), Integer(denominator));
}

namespace {

Integer parse_integer(std::string_view digits, std::string_view whole) {
  if (digits.empty()) throw std::invalid_argument("malformed number '" + std::string(whole) + "'");
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("malformed number '" + std::string(whole) + "'");
    }
  }
  // a leading zero would make the conversion read the digits as octal
  const auto first = digits.find_first_not_of('0');
  return first == std::string_view::npos ? Integer(0) : Integer(std::string(digits.substr(first)));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view whole = trim(text);
  std::string_view s = whole;
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Rational value;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    Integer num = parse_integer(s.substr(0, slash), whole);
    Integer den = parse_integer(s.substr(slash + 1), whole);
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(whole) + "'");
    value = Rational(num, den);
  } else {
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
      std::string_view exp_text = s.substr(e + 1);
      bool exp_negative = false;
      if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
        exp_negative = exp_text.front() == '-';
        exp_text.remove_prefix(1);
      }
      Integer magnitude = parse_integer(exp_text, whole);
      if (magnitude > 4000) throw std::invalid_argument("exponent out of range in '" + std::string(whole) + "'");
      exponent = magnitude.convert_to<long>() * (exp_negative ? -1 : 1);
      s = s.substr(0, e);
    }
    std::string digits;
    if (auto dot = s.find('.'); dot != std::string_view::npos) {
      std::string_view int_part = s.substr(0, dot);
      std::string_view frac_part = s.substr(dot + 1);
      if (int_part.empty() && frac_part.empty()) {
        throw std::invalid_argument("malformed number '" + std::string(whole) + "'");
      }
      digits = std::string(int_part) + std::string(frac_part);
      exponent -= static_cast<long>(frac_part.size());
    } else {
      digits = std::string(s);
    }
    Integer mantissa = parse_integer(digits, whole);
    Integer scale = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(std::labs(exponent)));
    value = exponent >= 0 ? Rational(mantissa * scale) : Rational(mantissa, scale);
  }
  return negative ? Rational(-value) : value;
}

Rational exact_rational(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite value has no rational form");
  if (value == 0.0) return Rational(0);
  int exponent = 0;
  const double fraction = std::frexp(value, &exponent);  // |fraction| in [0.5, 1)
  const auto mantissa = static_cast<std::int64_t>(std::ldexp(fraction, 53));
  exponent -= 53;
  Integer num(mantissa);
  if (exponent >= 0) return Rational(num << exponent);
  return Rational(num, Integer(1) << -exponent);
}

std::string to_fraction_string(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" + boost::multiprecision::denominator(q).str();
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

Integer scaled_floor(const Rational& q, unsigned bits) {
  if (q < 0) throw std::invalid_argument("scaled_floor of a negative rational");
  return (boost::multiprecision::numerator(q) << bits) / boost::multiprecision::denominator(q);
}

}  // namespace densind
