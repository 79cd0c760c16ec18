#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace fairmeasure {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "p/q", "p", or a plain decimal such as "0.25".
Rational parse_rational(std::string_view text);

inline double to_double(const Rational& r) { return static_cast<double>(r); }

inline Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline std::string to_string(const Rational& r) { return r.str(); }

}  // namespace fairmeasure
