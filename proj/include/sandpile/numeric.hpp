#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sandpile {

/// Exact integers for every counting formula.
using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// Working precision for the moment-problem solve (~166-bit significand).
using HighPrecision = boost::multiprecision::cpp_bin_float_50;

/// Probabilities and closed-form limits; 64-bit significand on x86-64.
using Real = long double;

using Prime = std::uint64_t;

inline BigInt big_pow(std::uint64_t base, std::uint64_t exponent) {
  return boost::multiprecision::pow(BigInt(base), static_cast<unsigned>(exponent));
}

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

inline void require_prime(std::uint64_t p) {
  if (!is_prime(p)) throw std::invalid_argument("not a prime: " + std::to_string(p));
}

/// p-adic valuation of a nonzero integer.
inline int valuation(BigInt value, std::uint64_t p) {
  if (value == 0) throw std::domain_error("valuation of zero");
  int v = 0;
  while (value % p == 0) {
    value /= p;
    ++v;
  }
  return v;
}

template <class T> T real_pow(T base, long long exponent) {
  T result = 1;
  bool invert = exponent < 0;
  unsigned long long k = invert ? static_cast<unsigned long long>(-exponent)
                                : static_cast<unsigned long long>(exponent);
  while (k) {
    if (k & 1) result *= base;
    base *= base;
    k >>= 1;
  }
  return invert ? T(1) / result : result;
}

} // namespace sandpile
