#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace densind {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

Rational make_rational(std::uint64_t numerator, std::uint64_t denominator);

/// Parses "3/10", "0.3", "-2.5e-3" or "7" without rounding: decimal
/// literals become decimal fractions.
Rational parse_rational(std::string_view text);

/// Every finite double is a dyadic rational, so this is exact.
Rational exact_rational(double value);

/// Always "p/q", reduced; zero renders as "0/1".
std::string to_fraction_string(const Rational& q);

double to_double(const Rational& q);

/// floor(q * 2^bits) for q >= 0.
Integer scaled_floor(const Rational& q, unsigned bits);

inline bool in_open_unit_interval(const Rational& q) { return q > 0 && q < 1; }

}  // namespace densind
