#pragma once

#include "sandpile/abelian/partition.hpp"
#include "sandpile/linalg/snf.hpp"
#include "sandpile/numeric.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sandpile {

/// An element of G_lambda = (+)_i Z/p^{lambda_i}, one coordinate per part.
using ExponentVector = std::vector<std::int64_t>;

/// Type of the subgroup of G_lambda generated by `generators`.
///
/// G_lambda embeds in (Z/p^e)^r (e = lambda_1) by x_i -> p^{e - lambda_i} x_i;
/// the span of the embedded generators has type {e - v} over the valuations v < e
/// of the generator matrix diagonalized over Z/p^e.
inline Partition subgroup_type_from_generators(Prime p, const Partition& ambient,
                                               const std::vector<ExponentVector>& generators) {
  require_prime(p);
  const int e = ambient.largest();
  const std::size_t r = static_cast<std::size_t>(ambient.length());
  if (e == 0 || generators.empty()) return {};
  const std::size_t n = std::max(r, generators.size());

  ModMatrix m = ModMatrix::modular(n, PrimePower{p, e});
  for (std::size_t j = 0; j < generators.size(); ++j) {
    if (generators[j].size() != r) throw std::invalid_argument("generator has wrong number of coordinates");
    for (std::size_t i = 0; i < r; ++i) {
      BigInt scaled = BigInt(generators[j][i]) * big_pow(p, static_cast<std::uint64_t>(e - ambient[i]));
      m.at(i, j) = scaled;
    }
  }
  m = m.reduced(PrimePower{p, e}); // canonical residues

  std::vector<int> parts;
  for (int v : snf_mod_prime_power(m).valuations)
    if (v < e) parts.push_back(e - v);
  return Partition::from_multiset(std::move(parts));
}

/// Calls visit(basis) for every subspace of F_p^r, each once, with its
/// reduced-row-echelon basis.
inline void for_each_subspace(Prime p, int r,
                              const std::function<void(const std::vector<std::vector<int>>&)>& visit) {
  std::vector<std::vector<int>> basis;
  std::vector<int> pivots;
  // Choose pivot columns in increasing order, then fill free entries.
  std::function<void(int)> choose = [&](int next_col) {
    // Enumerate all fillings for the current pivot set.
    const std::size_t k = pivots.size();
    std::vector<std::pair<std::size_t, int>> free_slots;
    for (std::size_t row = 0; row < k; ++row)
      for (int c = pivots[row] + 1; c < r; ++c)
        if (std::find(pivots.begin(), pivots.end(), c) == pivots.end()) free_slots.emplace_back(row, c);
    basis.assign(k, std::vector<int>(static_cast<std::size_t>(r), 0));
    for (std::size_t row = 0; row < k; ++row) basis[row][static_cast<std::size_t>(pivots[row])] = 1;
    std::vector<int> digits(free_slots.size(), 0);
    for (;;) {
      for (std::size_t s = 0; s < free_slots.size(); ++s)
        basis[free_slots[s].first][static_cast<std::size_t>(free_slots[s].second)] = digits[s];
      visit(basis);
      std::size_t s = 0;
      while (s < digits.size() && ++digits[s] == static_cast<int>(p)) digits[s++] = 0;
      if (s == digits.size()) break;
    }
    for (int c = next_col; c < r; ++c) {
      pivots.push_back(c);
      choose(c + 1);
      pivots.pop_back();
    }
  };
  choose(0);
}

} // namespace sandpile
