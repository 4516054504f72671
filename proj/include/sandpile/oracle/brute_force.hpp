#pragma once

// Exhaustive reference counts over explicit element tables. Nothing here uses
// the closed-form counting formulas; tests compare the two.

#include "sandpile/abelian/small_group.hpp"
#include "sandpile/linalg/snf.hpp"
#include "sandpile/numeric.hpp"

#include <cmath>
#include <deque>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace sandpile::oracle {

namespace detail {

using Count = unsigned __int128;

inline BigInt to_big(Count c) {
  BigInt out = static_cast<std::uint64_t>(c >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(c);
  return out;
}

/// Number of tuples (g_1, ..., g_k) of target elements with p^{orders[i]} g_i = 0
/// that generate the whole target group. Dynamic programming over the subgroup
/// generated so far; states that cannot reach the full group are dropped.
inline Count generating_tuples(const SmallGroupTable& target, const std::vector<int>& orders) {
  using Element = SmallGroupTable::Element;
  const auto p = static_cast<long double>(target.prime());
  std::unordered_map<ElementSet, Count, ElementSet::Hash> states;
  states.emplace(target.trivial_subgroup(), 1);

  std::vector<long double> capacity(orders.size() + 1, 1); // max growth factor from generator i onward
  for (std::size_t i = orders.size(); i-- > 0;) capacity[i] = capacity[i + 1] * std::pow(p, orders[i]);
  const auto full = static_cast<long double>(target.size());

  for (std::size_t i = 0; i < orders.size(); ++i) {
    std::unordered_map<ElementSet, Count, ElementSet::Hash> next;
    for (const auto& [h, ways] : states) {
      std::vector<Element> members = target.elements_of(h);
      ElementSet covered = h;
      for (Element g = 0; g < target.size(); ++g) {
        if (covered.contains(g)) continue;
        Count admissible = 0;
        for (Element x : members) {
          Element y = target.add(x, g);
          covered.insert(y);
          admissible += target.killed_by(y, orders[i]);
        }
        if (admissible == 0) continue;
        std::size_t order = 0;
        ElementSet grown = target.join(h, members, g, &order);
        if (full / static_cast<long double>(order) > capacity[i + 1] * 1.0001L) continue;
        next[grown] += ways * admissible;
      }
      // The coset h itself: g_i lands inside the current subgroup.
      Count inside = 0;
      for (Element x : members) inside += target.killed_by(x, orders[i]);
      if (full / static_cast<long double>(members.size()) <= capacity[i + 1] * 1.0001L) next[h] += ways * inside;
    }
    states = std::move(next);
  }
  Count total = 0;
  for (const auto& [h, ways] : states)
    if (target.count(h) == target.size()) total += ways;
  return total;
}

} // namespace detail

/// |Hom(G_mu, G_lambda)|: each generator of order p^{mu_i} may go to any
/// element killed by p^{mu_i}, independently.
inline BigInt hom_count(Prime p, const Partition& mu, const Partition& lambda,
                        std::size_t bound = default_oracle_bound) {
  SmallGroupTable target(p, lambda, bound);
  BigInt total = 1;
  for (int m : mu.parts()) {
    std::uint64_t n = 0;
    for (SmallGroupTable::Element x = 0; x < target.size(); ++x) n += target.killed_by(x, m);
    total *= n;
  }
  return total;
}

inline BigInt sur_count(Prime p, const Partition& mu, const Partition& lambda,
                        std::size_t bound = default_oracle_bound) {
  SmallGroupTable target(p, lambda, bound);
  return detail::to_big(detail::generating_tuples(target, mu.parts()));
}

/// Automorphisms are the surjective endomorphisms of a finite group.
inline BigInt aut_order(Prime p, const Partition& lambda, std::size_t bound = default_oracle_bound) {
  return sur_count(p, lambda, lambda, bound);
}

/// Literal enumeration of every image tuple, checking the relations and
/// surjectivity; only for tiny groups.
inline BigInt sur_count_exhaustive(Prime p, const Partition& mu, const Partition& lambda,
                                   std::size_t max_tuples = std::size_t{1} << 20) {
  SmallGroupTable target(p, lambda);
  const std::size_t k = static_cast<std::size_t>(mu.length());
  std::size_t tuples = 1;
  for (std::size_t i = 0; i < k; ++i) {
    tuples *= target.size();
    if (tuples > max_tuples) throw OracleBoundExceeded("too many image tuples");
  }
  std::uint64_t count = 0;
  std::vector<SmallGroupTable::Element> images(k, 0);
  for (std::size_t t = 0; t < tuples; ++t) {
    std::size_t rest = t;
    bool relations = true;
    for (std::size_t i = 0; i < k; ++i) {
      images[i] = static_cast<SmallGroupTable::Element>(rest % target.size());
      rest /= target.size();
      auto order = static_cast<std::uint64_t>(big_pow(p, static_cast<std::uint64_t>(mu[i])));
      relations = relations && target.multiple(images[i], order) == 0;
    }
    if (!relations) continue;
    ElementSet span = target.trivial_subgroup();
    for (auto g : images) span = target.join(span, g);
    count += target.count(span) == target.size();
  }
  return count;
}

/// Perfect symmetric pairings on G_lambda. A symmetric pairing is a choice of
/// b(e_i, e_j) in Z/p^{min(lambda_i, lambda_j)} for i <= j.
///
/// Small cases enumerate every form and test its radical on the p-torsion.
/// Larger ones use inclusion-exclusion over the radical K:
/// #perfect = sum_K mu(0, K) #forms(G/K).
inline BigInt pairing_count(Prime p, const Partition& lambda, std::size_t bound = default_oracle_bound,
                            std::size_t direct_limit = std::size_t{1} << 18) {
  SmallGroupTable table(p, lambda, bound);
  const std::size_t r = table.rank();
  auto forms_on = [&](const Partition& nu) {
    std::uint64_t exponent = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(nu.length()); ++i)
      for (std::size_t j = i; j < static_cast<std::size_t>(nu.length()); ++j) exponent += std::min(nu[i], nu[j]);
    return big_pow(p, exponent);
  };

  if (forms_on(lambda) <= direct_limit) {
    const int e = lambda.largest();
    const std::uint64_t top = static_cast<std::uint64_t>(big_pow(p, static_cast<std::uint64_t>(e)));
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    std::vector<std::uint64_t> slot_modulus;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = i; j < r; ++j) {
        slots.emplace_back(i, j);
        slot_modulus.push_back(static_cast<std::uint64_t>(big_pow(p, static_cast<std::uint64_t>(std::min(lambda[i], lambda[j])))));
      }
    std::vector<SmallGroupTable::Element> torsion;
    for (SmallGroupTable::Element x = 1; x < table.size(); ++x)
      if (table.killed_by(x, 1)) torsion.push_back(x);

    // Values in (1/p^e) Z / Z, stored as numerators mod p^e.
    std::vector<std::uint64_t> gram(r * r, 0), value(slots.size(), 0);
    std::uint64_t perfect = 0;
    for (;;) {
      for (std::size_t s = 0; s < slots.size(); ++s) {
        auto [i, j] = slots[s];
        std::uint64_t scaled = value[s] * (top / slot_modulus[s]);
        gram[i * r + j] = gram[j * r + i] = scaled;
      }
      bool degenerate = false;
      for (auto x : torsion) {
        bool in_radical = true;
        for (std::size_t j = 0; j < r && in_radical; ++j) {
          std::uint64_t acc = 0;
          for (std::size_t i = 0; i < r; ++i) acc = (acc + table.coordinate(x, i) * gram[i * r + j]) % top;
          in_radical = acc == 0;
        }
        if (in_radical) {
          degenerate = true;
          break;
        }
      }
      perfect += !degenerate;
      std::size_t s = 0;
      while (s < value.size() && ++value[s] == slot_modulus[s]) value[s++] = 0;
      if (s == value.size()) break;
    }
    return perfect;
  }

  // Moebius function of the subgroup lattice vanishes unless K is elementary.
  BigInt total = 0;
  std::unordered_set<ElementSet, ElementSet::Hash> seen;
  std::deque<ElementSet> queue{table.trivial_subgroup()};
  seen.insert(queue.front());
  while (!queue.empty()) {
    ElementSet k = std::move(queue.front());
    queue.pop_front();
    std::vector<SmallGroupTable::Element> members = table.elements_of(k);
    const std::size_t order = members.size();
    int rank = 0;
    for (std::size_t n = order; n > 1; n /= p) ++rank;
    // Quotient type from |(G/K)[p^j]| = #{g : p^j g in K} / |K|.
    std::vector<int> columns;
    std::size_t previous = 1;
    for (int j = 1; j <= lambda.largest(); ++j) {
      std::size_t n = 0;
      for (SmallGroupTable::Element g = 0; g < table.size(); ++g) n += k.contains(table.times_prime_power(g, j));
      n /= order;
      int column = 0;
      for (std::size_t ratio = n / previous; ratio > 1; ratio /= p) ++column;
      previous = n;
      if (column == 0) break;
      columns.push_back(column);
    }
    Partition quotient = columns.empty() ? Partition{} : Partition(columns).transpose();
    BigInt weight = big_pow(p, static_cast<std::uint64_t>(rank) * (rank > 0 ? rank - 1 : 0) / 2);
    total += (rank % 2 ? -weight : weight) * forms_on(quotient);

    ElementSet covered = k;
    for (SmallGroupTable::Element g = 0; g < table.size(); ++g) {
      if (covered.contains(g)) continue;
      for (auto x : members) covered.insert(table.add(x, g));
      if (!table.killed_by(g, 1)) continue;
      ElementSet next = table.join(k, members, g);
      if (seen.insert(next).second) queue.push_back(std::move(next));
    }
  }
  return total;
}

/// Counts symmetric n x n matrices over F_p by rank deficiency (index r = n - rank).
inline std::vector<BigInt> symmetric_rank_profile(Prime p, std::size_t n) {
  require_prime(p);
  const std::size_t slots = n * (n + 1) / 2;
  std::vector<BigInt> counts(n + 1, 0);
  std::vector<std::uint64_t> value(slots, 0);
  for (;;) {
    ModMatrix m = ModMatrix::integer(n);
    std::size_t s = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j, ++s) m.at(i, j) = m.at(j, i) = value[s];
    counts[n - rank_mod_p(m, p)] += 1;
    s = 0;
    while (s < slots && ++value[s] == p) value[s++] = 0;
    if (s == slots) break;
  }
  return counts;
}

} // namespace sandpile::oracle
