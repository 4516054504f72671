#pragma once

#include "sandpile/abelian/counting.hpp"
#include "sandpile/abelian/group_spec.hpp"
#include "sandpile/abelian/partition.hpp"
#include "sandpile/numeric.hpp"

#include <boost/math/special_functions/zeta.hpp>

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandpile {

/// How far to carry the infinite products.
struct TruncationPolicy {
  Real tolerance = 1e-15L; ///< stop once the next factor is within this of 1
  int cap = 4096;          ///< hard limit on the number of factors

  void validate() const {
    if (!(tolerance > 0 && tolerance <= 1e-6L)) throw std::invalid_argument("tolerance must lie in (0, 1e-6]");
    if (cap < 64) throw std::invalid_argument("truncation cap must be at least 64");
  }
};

/// A value with an absolute error bound (truncation tail plus round-off).
struct Estimate {
  Real value = 0;
  Real error = 0;
};

inline Real roundoff(Real value, int operations) {
  return std::abs(value) * static_cast<Real>(operations + 1) * std::numeric_limits<Real>::epsilon();
}

/// prod_{i >= first, i += step} (1 - p^{-i}), with the tail bound
/// sum_{omitted} p^{-i} <= x / (1 - p^{-step}) for x the first omitted term.
inline Estimate q_product(Prime p, int first, int step, const TruncationPolicy& policy) {
  policy.validate();
  const Real inv = 1 / static_cast<Real>(p);
  Real term = real_pow(inv, first), value = 1;
  int factors = 0;
  while (term >= policy.tolerance && factors < policy.cap) {
    value *= 1 - term;
    term *= real_pow(inv, step);
    ++factors;
  }
  Real tail = term / (1 - real_pow(inv, step));
  return {value, value * tail + roundoff(value, factors)};
}

/// prod_{k >= 0} (1 - p^{-2k-1}): the mass of the trivial Sylow p-subgroup.
inline Estimate normalizing_constant(Prime p, const TruncationPolicy& policy = {}) {
  require_prime(p);
  return q_product(p, 1, 2, policy);
}

namespace detail {

inline Real to_real(const BigRational& q) { return q.convert_to<Real>(); }

/// #pairings / (|G_lambda| |Aut G_lambda|), exactly.
inline BigRational pairing_fraction(Prime p, const Partition& lambda) {
  return BigRational(pairing_count(p, lambda), big_pow(p, static_cast<std::uint64_t>(lambda.size())) * aut_order(p, lambda));
}

/// The same fraction as p^{-sum mu_i(mu_i+1)/2} prod_i prod_{j <= floor((mu_i - mu_{i+1})/2)} (1 - p^{-2j})^{-1},
/// mu the transpose of lambda, in floating point.
inline Real pairing_fraction_columns(Prime p, const Partition& lambda) {
  const Partition mu = lambda.transpose();
  const Real inv = 1 / static_cast<Real>(p);
  long long exponent = 0;
  Real value = 1;
  for (std::size_t i = 0; i < static_cast<std::size_t>(mu.length()); ++i) {
    exponent += static_cast<long long>(mu[i]) * (mu[i] + 1) / 2;
    for (int j = 1; j <= (mu[i] - mu[i + 1]) / 2; ++j) value /= 1 - real_pow(inv, 2 * j);
  }
  return value * real_pow(inv, exponent);
}

} // namespace detail

struct InconsistentFormulas : std::logic_error {
  using std::logic_error::logic_error;
};

/// lim P(S_p = G_lambda) for the Sylow p-subgroup of a random sandpile group.
/// Both closed forms are evaluated and must agree to 1e-12 relative.
inline Estimate limit_prob_sylow(Prime p, const Partition& lambda, const TruncationPolicy& policy = {}) {
  Estimate c = normalizing_constant(p, policy);
  Real exact = detail::to_real(detail::pairing_fraction(p, lambda));
  Real columns = detail::pairing_fraction_columns(p, lambda);
  if (std::abs(exact - columns) > 1e-12L * std::abs(exact))
    throw InconsistentFormulas("limit formulas disagree at p=" + std::to_string(p) + ", type " + lambda.to_string());
  Real value = exact * c.value;
  return {value, exact * c.error + roundoff(value, 4)};
}

/// lim P(S (x) Z/p^e = G_nu) for a type nu with parts <= e.
///
/// Column counts of the full type agree with those of nu in the first e
/// columns; the sum over the remaining columns w_1 >= w_2 >= ... (w_1 <= mu_e)
/// is V(mu_e), with V(0) = 1 and
/// V(v) (1 - p^{-v(v+1)/2}) = sum_{w < v} f(v - w) p^{-w(w+1)/2} V(w),
/// where f(d) = prod_{j <= d/2} (1 - p^{-2j})^{-1}.
inline Estimate limit_prob_tensor(Prime p, const Partition& nu, int e, const TruncationPolicy& policy = {}) {
  if (e < 1) throw std::invalid_argument("exponent must be positive");
  if (nu.largest() > e) throw std::invalid_argument("type " + nu.to_string() + " has parts above the exponent");
  if (nu.largest() < e) return limit_prob_sylow(p, nu, policy);
  const Partition mu = nu.transpose();
  const Real inv = 1 / static_cast<Real>(p);
  auto f = [&](int d) {
    Real value = 1;
    for (int j = 1; j <= d / 2; ++j) value /= 1 - real_pow(inv, 2 * j);
    return value;
  };
  auto tri = [&](int w) { return real_pow(inv, static_cast<long long>(w) * (w + 1) / 2); };
  const int top = mu[static_cast<std::size_t>(e - 1)];
  std::vector<Real> v(static_cast<std::size_t>(top) + 1, 1);
  for (int x = 1; x <= top; ++x) {
    Real sum = 0;
    for (int w = 0; w < x; ++w) sum += f(x - w) * tri(w) * v[static_cast<std::size_t>(w)];
    v[static_cast<std::size_t>(x)] = sum / (1 - tri(x));
  }
  Real fraction = v[static_cast<std::size_t>(top)];
  for (int i = 0; i < e; ++i) {
    fraction *= tri(mu[static_cast<std::size_t>(i)]);
    if (i + 1 < e) fraction *= f(mu[static_cast<std::size_t>(i)] - mu[static_cast<std::size_t>(i) + 1]);
  }
  Estimate c = normalizing_constant(p, policy);
  Real value = fraction * c.value;
  return {value, fraction * c.error + roundoff(value, 4 * (top + 1) * (top + 1) + 2 * e)};
}

/// lim P(S_P = G) where S_P is the part of S at the primes in P.
inline Estimate limit_prob_multi(const std::set<Prime>& primes, const GroupSpec& g, const TruncationPolicy& policy = {}) {
  if (!g.finite()) throw std::domain_error("limit probability of an infinite group");
  for (const auto& [p, lambda] : g.factors())
    if (!primes.count(p)) throw std::invalid_argument("prime " + std::to_string(p) + " divides |G| but is not in P");
  BigRational fraction = 1;
  Real constant = 1, relative_error = 0;
  for (Prime p : primes) {
    fraction *= detail::pairing_fraction(p, g.sylow(p));
    Estimate c = normalizing_constant(p, policy);
    constant *= c.value;
    relative_error += c.error / c.value;
  }
  Real value = detail::to_real(fraction) * constant;
  return {value, value * relative_error + roundoff(value, 2 * static_cast<int>(primes.size()))};
}

/// lim P(rank(S (x) Z/p) = r).
inline Estimate prank_prob(Prime p, int r, const TruncationPolicy& policy = {}) {
  require_prime(p);
  if (r < 0) throw std::invalid_argument("rank must be nonnegative");
  Estimate upper = q_product(p, r + 1, 1, policy);
  Estimate even = q_product(p, 2, 2, policy);
  Real scale = real_pow(1 / static_cast<Real>(p), static_cast<long long>(r) * (r + 1) / 2);
  Real value = scale * upper.value / even.value;
  Real relative = upper.error / upper.value + even.error / even.value;
  return {value, value * relative + roundoff(value, 3)};
}

/// Number of symmetric n x n matrices over F_p of rank n - r.
inline BigInt macwilliams_rank_count(Prime p, int n, int r) {
  require_prime(p);
  if (n < 0 || r < 0 || r > n) throw std::invalid_argument("need 0 <= r <= n");
  BigRational value = BigRational(big_pow(p, static_cast<std::uint64_t>(n) * (n + 1) / 2 - static_cast<std::uint64_t>(r) * (r + 1) / 2));
  for (int i = 1; i <= (n - r) / 2; ++i) value /= detail::one_minus_inverse_power(p, 2 * i);
  for (int i = r + 1; i <= n; ++i) value *= detail::one_minus_inverse_power(p, i);
  return detail::rational_to_integer(value);
}

/// Primes up to n by the sieve of Eratosthenes.
inline std::vector<Prime> primes_up_to(std::uint64_t n) {
  std::vector<bool> composite(n + 1, false);
  std::vector<Prime> primes;
  for (std::uint64_t i = 2; i <= n; ++i) {
    if (composite[i]) continue;
    primes.push_back(i);
    for (std::uint64_t j = i * i; j <= n; j += i) composite[j] = true;
  }
  return primes;
}

/// Bound on lim P(S cyclic): prod_p prod_{i >= 1} (1 - p^{-2i-1}).
///
/// Primes are taken up to N with sum_{p > N} p^{-3} <= 1/(2N^2) below the
/// tolerance; each per-prime product is carried to the same tolerance.
inline Estimate cyclic_upper_bound(const TruncationPolicy& policy = {}) {
  policy.validate();
  auto limit = static_cast<std::uint64_t>(std::ceil(std::sqrt(1 / (2 * policy.tolerance))));
  Real value = 1, relative = 0;
  std::size_t count = 0;
  for (Prime p : primes_up_to(limit)) {
    Estimate f = q_product(p, 3, 2, policy);
    value *= f.value;
    relative += f.error / f.value;
    ++count;
  }
  Real tail = 1 / (2 * static_cast<Real>(limit) * static_cast<Real>(limit));
  return {value, value * (relative + tail) + roundoff(value, static_cast<int>(std::min<std::size_t>(count, 1u << 30)))};
}

/// The same constant as prod_{k >= 1} zeta(2k+1)^{-1}.
inline Estimate cyclic_upper_bound_zeta(const TruncationPolicy& policy = {}) {
  policy.validate();
  Real value = 1, relative = 0;
  int k = 1;
  for (; k < policy.cap; ++k) {
    Real z = boost::math::zeta(static_cast<Real>(2 * k + 1));
    if (z - 1 < policy.tolerance) break;
    value /= z;
  }
  // zeta(s) - 1 <= 2^{-s} (1 + 2/(s-1)) bounds the omitted factors.
  for (int j = k; j < k + 64; ++j) relative += std::pow(2.0L, -(2 * j + 1)) * 3;
  return {value, value * relative + roundoff(value, k)};
}

/// Bound on lim P(|S| square-free): prod_p (1 + p^{-1}) prod_{k >= 0} (1 - p^{-2k-1}).
///
/// Primes up to N are multiplied directly; for p > N the factor is
/// (1 - p^{-2}) prod_{i >= 1}(1 - p^{-2i-1}), the first part of which is
/// zeta(2)^{-1} / prod_{p <= N} (1 - p^{-2}) in closed form.
inline Estimate squarefree_upper_bound(const TruncationPolicy& policy = {}) {
  policy.validate();
  auto limit = static_cast<std::uint64_t>(std::ceil(std::sqrt(1 / (2 * policy.tolerance))));
  Real direct = 1, head_square = 1, relative = 0;
  for (Prime p : primes_up_to(limit)) {
    Estimate c = q_product(p, 1, 2, policy);
    Real inv = 1 / static_cast<Real>(p);
    direct *= (1 + inv) * c.value;
    head_square *= 1 - inv * inv;
    relative += c.error / c.value;
  }
  const Real pi = 3.141592653589793238462643383279502884L;
  Real tail_square = (6 / (pi * pi)) / head_square;
  Real value = direct * tail_square;
  Real tail = 1 / (2 * static_cast<Real>(limit) * static_cast<Real>(limit));
  return {value, value * (relative + tail) + roundoff(value, 1 << 20)};
}

/// Sum over types lambda with |lambda| <= max_size of lim P(S_p = G_lambda) #Sur(G_lambda, G_mu):
/// the limiting Sur-moment reconstructed from the limiting distribution. The
/// error is the change from max_size - 2 to max_size plus the per-term errors.
inline Estimate sur_moment_from_limits(Prime p, const Partition& mu, int max_size, const TruncationPolicy& policy = {}) {
  Real total = 0, term_errors = 0, previous = 0;
  auto weights = surjection_weights(p, mu);
  for (const Partition& lambda : partitions_up_to(max_size)) {
    if (lambda.length() < mu.length()) continue;
    BigInt s = 0;
    for (const auto& [type, w] : weights) s += w * hom_count(p, lambda, type);
    if (s == 0) continue;
    Estimate q = limit_prob_sylow(p, lambda, policy);
    Real contribution = q.value * s.convert_to<Real>();
    total += contribution;
    term_errors += q.error * s.convert_to<Real>();
    if (lambda.size() <= max_size - 2) previous += contribution;
  }
  return {total, std::abs(total - previous) + term_errors + roundoff(total, 1 << 16)};
}

} // namespace sandpile
