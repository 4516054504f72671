#pragma once

#include "sandpile/abelian/partition.hpp"
#include "sandpile/linalg/mod_matrix.hpp"
#include "sandpile/numeric.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sandpile {

/// Diagonal form of a square matrix.
///  - over Z: invariant factors d_1 | d_2 | ... (zeros trailing), in `diagonal`;
///  - over Z/p^e: p-valuations v_1 <= ... <= v_n in [0, e], in `valuations`,
///    where v = e stands for a zero diagonal entry.
struct SNFResult {
  std::vector<BigInt> diagonal;
  std::vector<int> valuations;
  std::optional<PrimePower> modulus;

  /// Number of zero diagonal entries (free rank over Z, or v = e over Z/p^e).
  std::size_t rank_deficiency() const {
    if (modulus)
      return static_cast<std::size_t>(
          std::count(valuations.begin(), valuations.end(), modulus->e));
    return static_cast<std::size_t>(std::count(diagonal.begin(), diagonal.end(), BigInt(0)));
  }
};

namespace detail {

// Z/p^e with p^e < 2^63, so a difference of two residues never wraps and
// products fit in 128 bits.
struct WordRing {
  using value_type = std::uint64_t;

  WordRing(Prime p_, int e_) : p(p_), e(e_) {
    powers.push_back(1);
    for (int i = 0; i < e; ++i) powers.push_back(powers.back() * p);
    m = powers.back();
  }

  static bool fits(Prime p, int e) {
    unsigned __int128 m = 1;
    for (int i = 0; i < e; ++i) {
      m *= p;
      if (m >= (static_cast<unsigned __int128>(1) << 63)) return false;
    }
    return true;
  }

  value_type from(const BigInt& x) const {
    BigInt r = x % m;
    if (r < 0) r += m;
    return r.convert_to<value_type>();
  }
  value_type mul(value_type a, value_type b) const {
    return static_cast<value_type>(static_cast<unsigned __int128>(a) * b % m);
  }
  value_type sub(value_type a, value_type b) const { return a >= b ? a - b : a + (m - b); }
  bool is_zero(value_type a) const { return a == 0; }
  int val(value_type a) const {
    if (a == 0) return e;
    int v = 0;
    while (a % p == 0) {
      a /= p;
      ++v;
    }
    return v;
  }
  value_type shift_down(value_type a, int v) const { return a / powers[static_cast<std::size_t>(v)]; }
  value_type unit_inverse(value_type u) const {
    __int128 r0 = static_cast<__int128>(m), r1 = static_cast<__int128>(u);
    __int128 t0 = 0, t1 = 1;
    while (r1 != 0) {
      __int128 q = r0 / r1;
      std::swap(r0, r1);
      r1 -= q * r0;
      std::swap(t0, t1);
      t1 -= q * t0;
    }
    if (t0 < 0) t0 += static_cast<__int128>(m);
    return static_cast<value_type>(t0);
  }

  Prime p;
  int e;
  value_type m;
  std::vector<value_type> powers;
};

// Arbitrary-precision fallback for moduli too wide for WordRing.
struct BigRing {
  using value_type = BigInt;

  BigRing(Prime p_, int e_) : p(p_), e(e_) {
    powers.push_back(1);
    for (int i = 0; i < e; ++i) powers.push_back(powers.back() * p);
    m = powers.back();
  }

  value_type from(const BigInt& x) const {
    BigInt r = x % m;
    if (r < 0) r += m;
    return r;
  }
  value_type mul(const value_type& a, const value_type& b) const { return a * b % m; }
  value_type sub(const value_type& a, const value_type& b) const {
    BigInt r = a - b;
    if (r < 0) r += m;
    return r;
  }
  bool is_zero(const value_type& a) const { return a == 0; }
  int val(value_type a) const { return a == 0 ? e : valuation(a, p); }
  value_type shift_down(const value_type& a, int v) const { return a / powers[static_cast<std::size_t>(v)]; }
  value_type unit_inverse(const value_type& u) const {
    BigInt r0 = m, r1 = u, t0 = 0, t1 = 1;
    while (r1 != 0) {
      BigInt q = r0 / r1;
      std::swap(r0, r1);
      r1 -= q * r0;
      std::swap(t0, t1);
      t1 -= q * t0;
    }
    if (t0 < 0) t0 += m;
    return t0;
  }

  Prime p;
  int e;
  BigInt m;
  std::vector<BigInt> powers;
};

// Diagonalizes an n x n matrix over Z/p^e, returning the valuations of the
// diagonal. Pivot: minimum valuation, ties broken by smallest row then column.
// Only row operations touch the trailing block: once the pivot column is
// cleared, column operations would change row k alone.
template <class Ring>
std::vector<int> local_valuations(const Ring& ring, std::vector<typename Ring::value_type> a,
                                  std::size_t n) {
  using T = typename Ring::value_type;
  std::vector<std::size_t> col(n);
  for (std::size_t j = 0; j < n; ++j) col[j] = j;
  auto entry = [&](std::size_t i, std::size_t j) -> T& { return a[i * n + col[j]]; };

  std::vector<int> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    int best = ring.e;
    std::size_t bi = k, bj = k;
    for (std::size_t i = k; i < n && best > 0; ++i)
      for (std::size_t j = k; j < n; ++j) {
        const T& x = entry(i, j);
        if (ring.is_zero(x)) continue;
        int v = ring.val(x);
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
          if (v == 0) break;
        }
      }
    if (best == ring.e) {
      out.resize(n, ring.e);
      break;
    }
    if (bi != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[bi * n + j]);
    std::swap(col[k], col[bj]);

    T unit_inv = ring.unit_inverse(ring.shift_down(entry(k, k), best));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (ring.is_zero(entry(i, k))) continue;
      T factor = ring.mul(ring.shift_down(entry(i, k), best), unit_inv);
      for (std::size_t j = k; j < n; ++j)
        if (!ring.is_zero(entry(k, j))) entry(i, j) = ring.sub(entry(i, j), ring.mul(factor, entry(k, j)));
    }
    out.push_back(best);
  }
  return out;
}

template <class Ring> std::vector<int> local_valuations(const Ring& ring, const ModMatrix& m) {
  std::vector<typename Ring::value_type> a;
  a.reserve(m.entries().size());
  for (const auto& x : m.entries()) a.push_back(ring.from(x));
  return local_valuations(ring, std::move(a), m.size());
}

inline std::vector<int> valuations_mod(const ModMatrix& m, PrimePower pp) {
  if (WordRing::fits(pp.p, pp.e)) return local_valuations(WordRing(pp.p, pp.e), m);
  return local_valuations(BigRing(pp.p, pp.e), m);
}

} // namespace detail

/// Smith normal form over Z by Euclidean pivoting (smallest nonzero
/// magnitude), with remainders taken at every step so entries stay reduced.
inline SNFResult snf_integer(const ModMatrix& input) {
  if (!input.is_integer()) throw std::invalid_argument("snf_integer expects an integer matrix");
  const std::size_t n = input.size();
  std::vector<BigInt> a = input.entries();
  auto at = [&](std::size_t i, std::size_t j) -> BigInt& { return a[i * n + j]; };
  auto swap_rows = [&](std::size_t r, std::size_t s) {
    for (std::size_t j = 0; j < n; ++j) std::swap(at(r, j), at(s, j));
  };
  auto swap_cols = [&](std::size_t r, std::size_t s) {
    for (std::size_t i = 0; i < n; ++i) std::swap(at(i, r), at(i, s));
  };

  SNFResult result;
  for (std::size_t k = 0; k < n; ++k) {
    for (;;) {
      std::size_t bi = n, bj = n;
      BigInt best;
      for (std::size_t i = k; i < n; ++i)
        for (std::size_t j = k; j < n; ++j) {
          if (at(i, j) == 0) continue;
          BigInt mag = abs(at(i, j));
          if (bi == n || mag < best) {
            best = mag;
            bi = i;
            bj = j;
          }
        }
      if (bi == n) break; // trailing block is zero
      swap_rows(k, bi);
      swap_cols(k, bj);
      const BigInt pivot = at(k, k);

      bool clean = true;
      for (std::size_t i = k + 1; i < n; ++i) {
        if (at(i, k) == 0) continue;
        BigInt q = at(i, k) / pivot;
        for (std::size_t j = k; j < n; ++j) at(i, j) -= q * at(k, j);
        if (at(i, k) != 0) clean = false;
      }
      for (std::size_t j = k + 1; j < n; ++j) {
        if (at(k, j) == 0) continue;
        BigInt q = at(k, j) / pivot;
        for (std::size_t i = k; i < n; ++i) at(i, j) -= q * at(i, k);
        if (at(k, j) != 0) clean = false;
      }
      if (!clean) continue;

      // Divisibility: fold any row with an entry not divisible by the pivot
      // into the pivot row and reduce again.
      std::size_t offender = n;
      for (std::size_t i = k + 1; i < n && offender == n; ++i)
        for (std::size_t j = k + 1; j < n; ++j)
          if (at(i, j) % pivot != 0) {
            offender = i;
            break;
          }
      if (offender == n) break;
      for (std::size_t j = k; j < n; ++j) at(k, j) += at(offender, j);
    }
    result.diagonal.push_back(abs(at(k, k)));
  }
  // Zeros go last; the nonzero prefix is already a divisibility chain.
  std::stable_partition(result.diagonal.begin(), result.diagonal.end(),
                        [](const BigInt& d) { return d != 0; });
  return result;
}

inline SNFResult snf_mod_prime_power(const ModMatrix& m) {
  if (!m.modulus()) throw std::invalid_argument("snf_mod_prime_power expects a modular matrix");
  SNFResult result;
  result.modulus = m.modulus();
  result.valuations = detail::valuations_mod(m, *m.modulus());
  return result;
}

/// Sylow p-type of cok(M), possibly truncated at p^exponent.
struct SylowType {
  Partition type;
  bool saturated = false;
  int exponent = 0; ///< working exponent of the final attempt
};

/// Type of cok(M) (x) Z/p^e from the valuations. For integer matrices the
/// exponent doubles while some valuation is capped, up to `ceiling`; a
/// modular matrix is diagonalized at its own exponent only.
inline SylowType cokernel_sylow_type(const ModMatrix& m, Prime p, int e, int ceiling = 64) {
  require_prime(p);
  if (e < 1) throw std::invalid_argument("working exponent must be positive");
  if (m.modulus()) {
    if (m.modulus()->p != p) throw std::invalid_argument("matrix modulus is not a power of p");
    e = std::min(e, m.modulus()->e);
    ceiling = e;
  }
  ceiling = std::max(ceiling, e);
  for (;;) {
    std::vector<int> v = detail::valuations_mod(m, PrimePower{p, e});
    bool capped = std::any_of(v.begin(), v.end(), [&](int x) { return x >= e; });
    if (!capped || e >= ceiling) return SylowType{Partition::from_multiset(std::move(v)), !capped, e};
    e = std::min(2 * e, ceiling);
  }
}

/// Rank over F_p by Gaussian elimination.
inline std::size_t rank_mod_p(const ModMatrix& m, Prime p) {
  require_prime(p);
  if (m.modulus() && m.modulus()->p != p) throw std::invalid_argument("matrix modulus is not a power of p");
  const std::size_t n = m.size();
  std::vector<std::uint64_t> a;
  a.reserve(n * n);
  for (const auto& x : m.entries()) {
    BigInt r = x % p;
    if (r < 0) r += p;
    a.push_back(r.convert_to<std::uint64_t>());
  }
  auto mulmod = [p](std::uint64_t x, std::uint64_t y) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(x) * y % p);
  };
  auto inverse = [&](std::uint64_t x) {
    std::uint64_t result = 1, base = x, k = p - 2;
    while (k) {
      if (k & 1) result = mulmod(result, base);
      base = mulmod(base, base);
      k >>= 1;
    }
    return result;
  };
  std::size_t rank = 0;
  for (std::size_t c = 0; c < n && rank < n; ++c) {
    std::size_t pivot = rank;
    while (pivot < n && a[pivot * n + c] == 0) ++pivot;
    if (pivot == n) continue;
    for (std::size_t j = 0; j < n; ++j) std::swap(a[rank * n + j], a[pivot * n + j]);
    std::uint64_t inv = inverse(a[rank * n + c]);
    for (std::size_t i = rank + 1; i < n; ++i) {
      std::uint64_t f = mulmod(a[i * n + c], inv);
      if (!f) continue;
      for (std::size_t j = c; j < n; ++j)
        a[i * n + j] = (a[i * n + j] + p - mulmod(f, a[rank * n + j])) % p;
    }
    ++rank;
  }
  return rank;
}

} // namespace sandpile
