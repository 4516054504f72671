#pragma once

#include "sandpile/numeric.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandpile {

/// Parameters of the entire function H_{m,p,b} = G(z_1) H(z_2, ..., z_m).
struct HactsSpec {
  Prime p = 2;
  std::vector<int> b; ///< weakly decreasing, nonnegative, length m

  int m() const noexcept { return static_cast<int>(b.size()); }

  void validate() const {
    require_prime(p);
    if (b.empty()) throw std::invalid_argument("H needs at least one variable");
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i] < 0) throw std::invalid_argument("b must be nonnegative");
      if (i > 0 && b[i] > b[i - 1]) throw std::invalid_argument("b must be weakly decreasing");
    }
  }

  /// Exponents j of the factors (1 - z_i / p^j) of H in variable z_i, i = 2..m (1-based).
  std::vector<int> root_exponents(int i) const {
    const auto k = static_cast<std::size_t>(i - 1);
    int below = 0;
    for (std::size_t t = 0; t + 1 < k; ++t) below += b[t];
    int lo = below + b[k - 1] + b[k] + 1, hi = below + 2 * b[k - 1];
    std::vector<int> roots;
    for (int j = lo; j <= hi; ++j) roots.push_back(j);
    return roots;
  }
};

namespace detail {

inline BigRational inverse_prime_power(Prime p, int j) {
  return j >= 0 ? BigRational(1, big_pow(p, static_cast<std::uint64_t>(j)))
                : BigRational(big_pow(p, static_cast<std::uint64_t>(-j)));
}

/// Rational upper bound for prod_{i >= 1} (1 - p^{-i})^{-1}: the first 64 factors
/// exactly, the rest bounded by 1 / (1 - sum_{i > 64} p^{-i}).
inline BigRational euler_inverse_upper(Prime p) {
  const int n = 64;
  BigRational value = 1;
  for (int i = 1; i <= n; ++i) value /= 1 - inverse_prime_power(p, i);
  BigRational tail = inverse_prime_power(p, n) / BigRational(p - 1);
  return value / (1 - tail);
}

} // namespace detail

/// Taylor coefficients of H_{m,p,b}: c_n of G for n <= D_1 and the finite
/// polynomial factors of H, all exact. a_d = c_{d_1} prod_i e_i[d_i].
class HactsTable {
public:
  HactsTable(HactsSpec spec, int degree_cap) : spec_(std::move(spec)), degree_cap_(degree_cap) {
    spec_.validate();
    if (degree_cap < 0) throw std::invalid_argument("degree cap must be nonnegative");
    const Prime p = spec_.p;
    const int b1 = spec_.b[0];
    g_.push_back(1);
    for (int n = 1; n <= degree_cap; ++n)
      g_.push_back(-detail::inverse_prime_power(p, b1) * g_.back() / BigRational(big_pow(p, static_cast<std::uint64_t>(n)) - 1));
    for (int i = 2; i <= spec_.m(); ++i) {
      std::vector<BigRational> poly{1};
      for (int j : spec_.root_exponents(i)) {
        std::vector<BigRational> next(poly.size() + 1, 0);
        BigRational r = detail::inverse_prime_power(p, j);
        for (std::size_t k = 0; k < poly.size(); ++k) {
          next[k] += poly[k];
          next[k + 1] -= poly[k] * r;
        }
        poly = std::move(next);
      }
      h_.push_back(std::move(poly));
    }
    bound_constant_ = 1;
    for (const auto& poly : h_) {
      BigRational largest = 0;
      for (const auto& c : poly) largest = std::max(largest, BigRational(abs(c)));
      bound_constant_ *= largest;
    }
    bound_constant_ *= detail::euler_inverse_upper(p);
  }

  const HactsSpec& spec() const noexcept { return spec_; }
  int degree_cap() const noexcept { return degree_cap_; }
  const std::vector<BigRational>& g_coefficients() const noexcept { return g_; }
  /// h_factors()[i - 2] holds the coefficients of the z_i factor.
  const std::vector<std::vector<BigRational>>& h_factors() const noexcept { return h_; }

  /// a_d for a multi-index of length m; zero outside the table's support.
  BigRational coefficient(const std::vector<int>& d) const {
    if (static_cast<int>(d.size()) != spec_.m()) throw std::invalid_argument("multi-index has wrong length");
    if (d[0] < 0 || d[0] > degree_cap_) return 0;
    BigRational a = g_[static_cast<std::size_t>(d[0])];
    for (std::size_t i = 1; i < d.size(); ++i) {
      const auto& poly = h_[i - 1];
      if (d[i] < 0 || static_cast<std::size_t>(d[i]) >= poly.size()) return 0;
      a *= poly[static_cast<std::size_t>(d[i])];
    }
    return a;
  }

  /// Calls visit(d, a_d) for every multi-index in the support.
  template <class Visit> void for_each(Visit&& visit) const {
    std::vector<int> d(static_cast<std::size_t>(spec_.m()), 0);
    auto rec = [&](auto&& self, std::size_t i, const BigRational& partial) -> void {
      if (i == d.size()) {
        for (int d1 = 0; d1 <= degree_cap_; ++d1) {
          d[0] = d1;
          visit(static_cast<const std::vector<int>&>(d), g_[static_cast<std::size_t>(d1)] * partial);
        }
        return;
      }
      const auto& poly = h_[i - 1];
      for (std::size_t k = 0; k < poly.size(); ++k) {
        d[i] = static_cast<int>(k);
        self(self, i + 1, partial * poly[k]);
      }
    };
    rec(rec, 1, BigRational(1));
  }

  /// The constant E with |a_d| <= E p^{-b_1 d_1 - d_1(d_1+1)/2}.
  const BigRational& bound_constant() const noexcept { return bound_constant_; }

  BigRational bound(int d1) const {
    return bound_constant() * detail::inverse_prime_power(spec_.p, spec_.b[0] * d1 + d1 * (d1 + 1) / 2);
  }

private:
  HactsSpec spec_;
  int degree_cap_;
  std::vector<BigRational> g_;
  std::vector<std::vector<BigRational>> h_;
  BigRational bound_constant_;
};

inline HactsTable hacts_coefficients(const HactsSpec& spec, int degree_cap) { return HactsTable(spec, degree_cap); }

/// tails[k] = prod_{i >= k} (1 - p^{-i}) for 1 <= k <= max_k, in working precision.
inline std::vector<HighPrecision> euler_tails(Prime p, int max_k) {
  std::vector<HighPrecision> tails(static_cast<std::size_t>(max_k) + 2, 1);
  const HighPrecision inv = HighPrecision(1) / p;
  const HighPrecision eps = std::numeric_limits<HighPrecision>::epsilon();
  HighPrecision deep = 1, term = pow(inv, max_k + 1);
  for (int i = max_k + 1; term > eps * eps; ++i, term *= inv) deep *= 1 - term;
  tails[static_cast<std::size_t>(max_k) + 1] = deep;
  for (int k = max_k; k >= 1; --k) tails[static_cast<std::size_t>(k)] = tails[static_cast<std::size_t>(k) + 1] * (1 - pow(inv, k));
  return tails;
}

/// H_{m,p,b}(p^{f_1}, p^{f_1+f_2}, ..., p^{f_1+...+f_m}) from the product forms,
/// so vanishing is exact. tails must come from euler_tails(p, k) with k >= b_1 + 1.
inline HighPrecision hacts_value(const HactsSpec& spec, const std::vector<int>& f, const std::vector<HighPrecision>& tails) {
  if (f.size() != spec.b.size()) throw std::invalid_argument("lattice point has wrong length");
  const int b1 = spec.b[0];
  if (f[0] > b1) return 0;
  const auto first = static_cast<std::size_t>(b1 + 1 - f[0]);
  if (first >= tails.size()) throw std::invalid_argument("euler tail table too short");
  HighPrecision value = tails[first];
  const HighPrecision p = spec.p;
  int s = f[0];
  for (int i = 2; i <= spec.m(); ++i) {
    s += f[static_cast<std::size_t>(i - 1)];
    for (int j : spec.root_exponents(i)) {
      if (j == s) return 0;
      value *= 1 - pow(p, s - j);
    }
  }
  return value;
}

inline HighPrecision hacts_value(const HactsSpec& spec, const std::vector<int>& f) {
  return hacts_value(spec, f, euler_tails(spec.p, spec.b[0] + 1));
}

struct SeriesValue {
  HighPrecision value;
  HighPrecision magnitude; ///< sum of |a_d z^d| over the table
};

/// The truncated Taylor series of the table evaluated at the same lattice point.
inline SeriesValue hacts_series(const HactsTable& table, const std::vector<int>& f) {
  const auto& spec = table.spec();
  if (f.size() != spec.b.size()) throw std::invalid_argument("lattice point has wrong length");
  const HighPrecision p = spec.p;
  int s = 0;
  HighPrecision value = 1, magnitude = 1;
  for (int i = 1; i <= spec.m(); ++i) {
    s += f[static_cast<std::size_t>(i - 1)];
    const auto& coefficients = i == 1 ? table.g_coefficients() : table.h_factors()[static_cast<std::size_t>(i - 2)];
    const HighPrecision z = pow(p, s);
    HighPrecision zk = 1, sum = 0, abs_sum = 0;
    for (const auto& c : coefficients) {
      HighPrecision term = c.convert_to<HighPrecision>() * zk;
      sum += term;
      abs_sum += abs(term);
      zk *= z;
    }
    value *= sum;
    magnitude *= abs_sum;
  }
  return {value, magnitude};
}

} // namespace sandpile
