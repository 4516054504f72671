#pragma once

#include "sandpile/abelian/group_spec.hpp"
#include "sandpile/abelian/partition.hpp"
#include "sandpile/abelian/subgroups.hpp"
#include "sandpile/numeric.hpp"

#include <map>
#include <stdexcept>
#include <vector>

namespace sandpile {

namespace detail {

inline BigInt rational_to_integer(const BigRational& q) {
  if (boost::multiprecision::denominator(q) != 1)
    throw std::logic_error("counting formula did not produce an integer");
  return boost::multiprecision::numerator(q);
}

/// (1 - p^{-j}) as an exact rational.
inline BigRational one_minus_inverse_power(Prime p, int j) {
  BigInt pj = big_pow(p, static_cast<std::uint64_t>(j));
  return BigRational(pj - 1, pj);
}

} // namespace detail

/// |wedge^2 G_lambda| = p^{sum_j lambda'_j (lambda'_j - 1) / 2}.
inline BigInt wedge2_order(Prime p, const Partition& lambda) {
  require_prime(p);
  std::uint64_t exponent = 0;
  for (int c : lambda.transpose().parts()) exponent += static_cast<std::uint64_t>(c) * (c - 1) / 2;
  return big_pow(p, exponent);
}

/// prod_i a_i^{i-1} over the invariant factors a_1 >= a_2 >= ... of G.
inline BigInt moment_value(const GroupSpec& g) {
  if (!g.finite()) throw std::domain_error("moment of an infinite group");
  BigInt value = 1;
  auto a = g.invariant_factors();
  for (std::size_t i = 1; i < a.size(); ++i) value *= boost::multiprecision::pow(a[i], static_cast<unsigned>(i));
  return value;
}

/// |Hom(G_mu, G_lambda)| = p^{sum_i mu'_i lambda'_i}.
inline BigInt hom_count(Prime p, const Partition& mu, const Partition& lambda) {
  require_prime(p);
  Partition mt = mu.transpose(), lt = lambda.transpose();
  std::uint64_t exponent = 0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(mt.length()); ++i)
    exponent += static_cast<std::uint64_t>(mt[i]) * lt[i];
  return big_pow(p, exponent);
}

/// |Aut(G_lambda)| = p^{sum lambda'_i^2} prod_i prod_{j <= m_i} (1 - p^{-j}).
inline BigInt aut_order(Prime p, const Partition& lambda) {
  require_prime(p);
  Partition lt = lambda.transpose();
  std::uint64_t exponent = 0;
  BigRational value = 1;
  for (std::size_t i = 0; i < static_cast<std::size_t>(lt.length()); ++i) {
    exponent += static_cast<std::uint64_t>(lt[i]) * lt[i];
    int m = lt[i] - lt[i + 1];
    for (int j = 1; j <= m; ++j) value *= detail::one_minus_inverse_power(p, j);
  }
  return detail::rational_to_integer(value * big_pow(p, exponent));
}

/// Number of perfect symmetric bilinear pairings G_lambda x G_lambda -> C^*.
inline BigInt pairing_count(Prime p, const Partition& lambda) {
  require_prime(p);
  Partition lt = lambda.transpose();
  std::uint64_t exponent = 0;
  BigRational value = 1;
  for (std::size_t i = 0; i < static_cast<std::size_t>(lt.length()); ++i) {
    exponent += static_cast<std::uint64_t>(lt[i]) * (lt[i] + 1) / 2;
    int m = lt[i] - lt[i + 1];
    for (int j = 1; j <= (m + 1) / 2; ++j) value *= detail::one_minus_inverse_power(p, 2 * j - 1);
  }
  return detail::rational_to_integer(value * big_pow(p, exponent));
}

/// Gaussian binomial [n choose k]_p.
inline BigInt gaussian_binomial(Prime p, int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt num = 1, den = 1;
  for (int i = 0; i < k; ++i) {
    num *= big_pow(p, static_cast<std::uint64_t>(n - i)) - 1;
    den *= big_pow(p, static_cast<std::uint64_t>(i + 1)) - 1;
  }
  return num / den;
}

/// Number of subgroups of type nu in G_lambda, from the classical product
/// over columns of the transposed diagrams.
inline BigInt subgroup_count(Prime p, const Partition& nu, const Partition& lambda) {
  require_prime(p);
  if (!lambda.contains(nu)) return 0;
  Partition nt = nu.transpose(), lt = lambda.transpose();
  BigInt count = 1;
  for (std::size_t i = 0; i < static_cast<std::size_t>(lt.length()); ++i) {
    int below = nt[i + 1];
    count *= big_pow(p, static_cast<std::uint64_t>(below) * (lt[i] - nt[i]));
    count *= gaussian_binomial(p, lt[i] - below, nt[i] - below);
  }
  return count;
}

/// Sum over all subgroups H of G_lambda of |wedge^2 H|.
inline BigInt sum_wedge2_over_subgroups(Prime p, const Partition& lambda) {
  BigInt total = 0;
  for (const Partition& nu : partitions_bounded(lambda.size(), lambda.largest(), lambda.length()))
    if (lambda.contains(nu)) total += subgroup_count(p, nu, lambda) * wedge2_order(p, nu);
  return total;
}

/// Types of the preimages in G_lambda of the subspaces of G_lambda / p G_lambda,
/// each weighted by the subspace-lattice Moebius value (-1)^k p^{k(k-1)/2}
/// (k = codimension) and aggregated by type. #Sur(H, G_lambda) is then
/// sum over entries of weight * #Hom(H, preimage).
inline std::map<Partition, BigInt> surjection_weights(Prime p, const Partition& lambda) {
  require_prime(p);
  const int r = lambda.length();
  std::map<Partition, BigInt> weights;
  std::vector<ExponentVector> pG;
  for (int i = 0; i < r; ++i) {
    ExponentVector v(static_cast<std::size_t>(r), 0);
    v[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(p);
    pG.push_back(std::move(v));
  }
  for_each_subspace(p, r, [&](const std::vector<std::vector<int>>& basis) {
    int k = r - static_cast<int>(basis.size());
    std::vector<ExponentVector> gens = pG;
    for (const auto& row : basis) gens.emplace_back(row.begin(), row.end());
    Partition type = subgroup_type_from_generators(p, lambda, gens);
    BigInt w = big_pow(p, static_cast<std::uint64_t>(k) * (k > 0 ? k - 1 : 0) / 2);
    weights[type] += (k % 2 ? -w : w);
  });
  std::erase_if(weights, [](const auto& kv) { return kv.second == 0; });
  return weights;
}

/// #Sur(G_mu, G_lambda) at a single prime.
inline BigInt sur_count(Prime p, const Partition& mu, const Partition& lambda) {
  if (mu.length() < lambda.length()) return 0; // rank obstruction
  BigInt total = 0;
  for (const auto& [type, weight] : surjection_weights(p, lambda)) total += weight * hom_count(p, mu, type);
  return total;
}

/// #Sur(H, G) as a product over the primes of G.
inline BigInt sur_count(const GroupSpec& h, const GroupSpec& g) {
  if (!h.finite()) throw std::domain_error("sur_count requires a finite source group");
  if (!g.finite()) return 0;
  BigInt total = 1;
  for (const auto& [p, lambda] : g.factors()) {
    total *= sur_count(p, h.sylow(p), lambda);
    if (total == 0) break;
  }
  return total;
}

} // namespace sandpile
