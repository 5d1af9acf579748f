#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

#include "dibi/errors.hpp"

namespace dibi {

// Exact arbitrary-precision rational. All probability arithmetic in the
// discrete instances goes through this type so law checks never depend on
// floating-point tolerance.
using Q = boost::multiprecision::cpp_rational;

inline std::string to_string(const Q& q) { return q.str(); }

// Parses "num/den" or a plain integer. Denominator must be positive.
inline Q parse_rational(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      return Q(boost::multiprecision::cpp_int(text));
    }
    boost::multiprecision::cpp_int num(text.substr(0, slash));
    boost::multiprecision::cpp_int den(text.substr(slash + 1));
    if (den <= 0) throw ShapeError("rational with nonpositive denominator: " + text);
    return Q(num, den);
  } catch (const std::exception&) {
    throw ShapeError("malformed rational: " + text);
  }
}

}  // namespace dibi
