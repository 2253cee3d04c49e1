#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cwlaser {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline std::string to_string(const Rational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

/// Parses "num/den" or a bare integer. Throws std::invalid_argument.
inline Rational parse_rational(std::string_view s) {
    auto valid_int = [](std::string_view v) {
        if (v.empty()) return false;
        std::size_t start = (v[0] == '-') ? 1 : 0;
        if (start == v.size()) return false;
        for (std::size_t n = start; n < v.size(); ++n)
            if (v[n] < '0' || v[n] > '9') return false;
        return true;
    };
    std::size_t slash = s.find('/');
    std::string_view num = s.substr(0, slash);
    std::string_view den = slash == std::string_view::npos ? std::string_view("1") : s.substr(slash + 1);
    if (!valid_int(num) || !valid_int(den) || den[0] == '-') {
        throw std::invalid_argument("malformed rational '" + std::string(s) + "'");
    }
    BigInt d(std::string{den});
    if (d == 0) throw std::invalid_argument("zero denominator in '" + std::string(s) + "'");
    return Rational(BigInt(std::string{num}), d);
}

/// Exact value of a finite double (every double is a dyadic rational).
inline Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite value has no rational form");
    if (x == 0.0) return Rational(0);
    int exp = 0;
    double mant = std::frexp(x, &exp);  // x = mant * 2^exp, 0.5 <= |mant| < 1
    auto scaled = static_cast<long long>(std::ldexp(mant, 53));
    exp -= 53;
    Rational r(scaled);
    if (exp > 0) {
        r *= Rational(BigInt(1) << exp);
    } else if (exp < 0) {
        r /= Rational(BigInt(1) << -exp);
    }
    return r;
}

inline double to_double(const Rational& r) {
    return r.convert_to<double>();
}

/// Natural log of a positive big integer without overflowing double.
inline double log_bigint(const BigInt& x) {
    if (x <= 0) throw std::domain_error("log of non-positive integer");
    std::size_t bits = boost::multiprecision::msb(x) + 1;
    if (bits <= 1000) return std::log(x.convert_to<double>());
    std::size_t shift = bits - 64;
    BigInt top = x >> shift;
    return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

}  // namespace cwlaser
