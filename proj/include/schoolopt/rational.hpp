#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace schoolopt {

/// Exact arithmetic for weights, bounds, averages and utilities.
using Rational = boost::rational<std::int64_t>;

/// Parses "3", "-0.25", "24.53" or "1/3". Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// Converts a double that came from a decimal literal (JSON numbers) by
/// round-tripping through its shortest decimal representation.
Rational rational_from_double(double value);

/// Exact decimal rendering when the denominator is a product of 2s and 5s
/// ("25.65", "8.5", "16"); otherwise "p/q".
std::string to_string(const Rational& r);

/// Fixed-precision rendering with round-half-away-from-zero ("0.80").
std::string to_fixed(const Rational& r, int decimals);

double to_double(const Rational& r);

/// Largest integer n with n <= r.
std::int64_t floor_int(const Rational& r);

}  // namespace schoolopt
