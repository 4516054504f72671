#pragma once

#include "sandpile/abelian/partition.hpp"
#include "sandpile/abelian/subgroups.hpp"
#include "sandpile/numeric.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace sandpile {

inline constexpr std::size_t default_oracle_bound = 4096;

struct OracleBoundExceeded : std::length_error {
  using std::length_error::length_error;
};

/// A subset of a SmallGroupTable, one bit per element.
class ElementSet {
public:
  ElementSet() = default;
  explicit ElementSet(std::size_t n) : words_((n + 63) / 64, 0) {}

  bool contains(std::uint32_t x) const { return (words_[x >> 6] >> (x & 63)) & 1U; }
  void insert(std::uint32_t x) { words_[x >> 6] |= std::uint64_t{1} << (x & 63); }

  bool operator==(const ElementSet&) const = default;

  std::size_t hash() const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint64_t w : words_) {
      h ^= w;
      h *= 1099511628211ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }

  struct Hash {
    std::size_t operator()(const ElementSet& s) const noexcept { return s.hash(); }
  };

private:
  std::vector<std::uint64_t> words_;
};

/// Explicit element set of G_lambda = (+)_i Z/p^{lambda_i}. Elements are
/// indexed by mixed-radix encoding of their coordinate vectors.
class SmallGroupTable {
public:
  using Element = std::uint32_t;

  SmallGroupTable(Prime p, Partition lambda, std::size_t bound = default_oracle_bound)
      : p_(p), lambda_(std::move(lambda)) {
    require_prime(p);
    std::size_t n = 1;
    for (int part : lambda_.parts()) {
      for (int k = 0; k < part; ++k) {
        n *= p;
        if (n > bound)
          throw OracleBoundExceeded("group " + std::to_string(p) + ":" + lambda_.to_string() +
                                    " exceeds oracle bound " + std::to_string(bound));
      }
      moduli_.push_back(static_cast<std::uint32_t>(big_pow(p, static_cast<std::uint64_t>(part))));
    }
    size_ = n;
    const std::size_t r = moduli_.size();
    digits_.resize(size_ * r);
    for (std::size_t x = 0; x < size_; ++x) {
      std::size_t rest = x;
      for (std::size_t i = 0; i < r; ++i) {
        digits_[x * r + i] = static_cast<std::uint32_t>(rest % moduli_[i]);
        rest /= moduli_[i];
      }
    }
    order_exponent_.assign(size_, 0);
    for (Element x = 0; x < size_; ++x)
      for (std::size_t i = 0; i < r; ++i) {
        int k = 0;
        for (std::uint32_t c = digits_[x * r + i]; c % moduli_[i] != 0; c *= static_cast<std::uint32_t>(p)) ++k;
        order_exponent_[x] = std::max(order_exponent_[x], static_cast<std::uint8_t>(k));
      }
    if (size_ <= 512) {
      sum_table_.resize(size_ * size_);
      for (Element a = 0; a < size_; ++a)
        for (Element b = 0; b < size_; ++b) sum_table_[a * size_ + b] = compute_sum(a, b);
    }
    for (int j = 1; j < lambda_.largest(); ++j)
      for (Element x = 0; x < size_; ++x) prime_powers_.push_back(multiple(x, static_cast<std::uint64_t>(big_pow(p, static_cast<std::uint64_t>(j)))));
  }

  Prime prime() const noexcept { return p_; }
  const Partition& type() const noexcept { return lambda_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t rank() const noexcept { return moduli_.size(); }

  std::uint32_t coordinate(Element x, std::size_t i) const { return digits_[x * rank() + i]; }

  ExponentVector coordinates(Element x) const {
    ExponentVector v(rank());
    for (std::size_t i = 0; i < rank(); ++i) v[i] = coordinate(x, i);
    return v;
  }

  Element encode(const ExponentVector& v) const {
    Element x = 0;
    for (std::size_t i = rank(); i-- > 0;) {
      std::int64_t m = moduli_[i];
      x = static_cast<Element>(x * m + ((v[i] % m) + m) % m);
    }
    return x;
  }

  /// The i-th standard generator.
  Element generator(std::size_t i) const {
    ExponentVector v(rank(), 0);
    v[i] = 1;
    return encode(v);
  }

  Element add(Element a, Element b) const {
    return sum_table_.empty() ? compute_sum(a, b) : sum_table_[a * size_ + b];
  }

  Element multiple(Element a, std::uint64_t k) const {
    ExponentVector v(rank());
    for (std::size_t i = 0; i < rank(); ++i) v[i] = static_cast<std::int64_t>((coordinate(a, i) * (k % moduli_[i])) % moduli_[i]);
    return encode(v);
  }

  /// True iff p^k x = 0.
  bool killed_by(Element x, int k) const { return order_exponent_[x] <= k; }

  /// Smallest k with p^k x = 0.
  int order_exponent(Element x) const { return order_exponent_[x]; }

  /// p^j x, for 0 <= j <= lambda_1.
  Element times_prime_power(Element x, int j) const {
    if (j == 0) return x;
    if (j >= lambda_.largest()) return 0;
    return prime_powers_[static_cast<std::size_t>(j - 1) * size_ + x];
  }

  ElementSet trivial_subgroup() const {
    ElementSet s(size_);
    s.insert(0);
    return s;
  }

  std::vector<Element> elements_of(const ElementSet& s) const {
    std::vector<Element> out;
    for (Element x = 0; x < size_; ++x)
      if (s.contains(x)) out.push_back(x);
    return out;
  }

  /// Subgroup generated by the subgroup h (with element list members) and g;
  /// its order is written to *order when requested.
  ElementSet join(const ElementSet& h, const std::vector<Element>& members, Element g,
                  std::size_t* order = nullptr) const {
    ElementSet out = h;
    Element t = g;
    std::size_t cosets = 1;
    while (!h.contains(t)) {
      for (Element x : members) out.insert(add(x, t));
      t = add(t, g);
      ++cosets;
    }
    if (order) *order = cosets * members.size();
    return out;
  }

  ElementSet join(const ElementSet& h, Element g) const { return join(h, elements_of(h), g); }

  std::size_t count(const ElementSet& s) const {
    std::size_t c = 0;
    for (Element x = 0; x < size_; ++x) c += s.contains(x);
    return c;
  }

  /// Type of a subgroup, read off from |H[p^k]| for k = 1, 2, ...
  Partition type_of(const std::vector<Element>& members) const {
    std::vector<std::size_t> killed(static_cast<std::size_t>(lambda_.largest()) + 1, 0);
    for (Element x : members) ++killed[static_cast<std::size_t>(order_exponent(x))];
    std::vector<int> columns;
    std::size_t n = killed[0];
    for (std::size_t k = 1; k < killed.size(); ++k) {
      std::size_t grown = n + killed[k];
      int column = 0;
      for (std::size_t ratio = grown / n; ratio > 1; ratio /= p_) ++column;
      if (column == 0) break;
      columns.push_back(column);
      n = grown;
    }
    return columns.empty() ? Partition{} : Partition(columns).transpose();
  }

  Partition type_of(const ElementSet& h) const { return type_of(elements_of(h)); }

private:
  Element compute_sum(Element a, Element b) const {
    Element x = 0;
    for (std::size_t i = rank(); i-- > 0;) {
      std::uint32_t s = coordinate(a, i) + coordinate(b, i);
      if (s >= moduli_[i]) s -= moduli_[i];
      x = x * moduli_[i] + s;
    }
    return x;
  }

  Prime p_;
  Partition lambda_;
  std::size_t size_ = 1;
  std::vector<std::uint32_t> moduli_;
  std::vector<std::uint32_t> digits_;
  std::vector<Element> sum_table_;
  std::vector<std::uint8_t> order_exponent_;
  std::vector<Element> prime_powers_;
};

/// Every subgroup of G_lambda, counted once, keyed by type. Breadth-first over
/// the subgroup lattice, extending each subgroup by one coset representative.
/// With elementary_only, only subgroups generated by elements of order p.
inline std::map<Partition, BigInt> enumerate_subgroups(const SmallGroupTable& table, bool elementary_only = false) {
  std::unordered_set<ElementSet, ElementSet::Hash> seen;
  std::deque<ElementSet> queue;
  std::map<Partition, BigInt> result;
  seen.insert(table.trivial_subgroup());
  queue.push_back(table.trivial_subgroup());
  while (!queue.empty()) {
    ElementSet h = std::move(queue.front());
    queue.pop_front();
    std::vector<SmallGroupTable::Element> members = table.elements_of(h);
    result[table.type_of(members)] += 1;
    ElementSet covered = h;
    for (SmallGroupTable::Element g = 0; g < table.size(); ++g) {
      if (covered.contains(g)) continue;
      for (auto x : members) covered.insert(table.add(x, g));
      if (elementary_only && !table.killed_by(g, 1)) continue;
      ElementSet next = table.join(h, members, g);
      if (seen.insert(next).second) queue.push_back(std::move(next));
    }
  }
  return result;
}

inline std::map<Partition, BigInt> enumerate_subgroups(Prime p, const Partition& lambda,
                                                      std::size_t bound = default_oracle_bound) {
  return enumerate_subgroups(SmallGroupTable(p, lambda, bound));
}

/// prod_{i>=1} (1 - 2^{-i}).
inline long double phi_infinity_2() {
  long double value = 1, term = 0.5L;
  for (int i = 1; i < 200; ++i, term /= 2) value *= 1 - term;
  return value;
}

/// Upper bound (prod (1-2^{-i}))^{-lambda_1} p^{sum mu'_i lambda'_i - mu'_i^2} on
/// the number of subgroups of type mu in G_lambda.
inline long double nsub_bound(Prime p, const Partition& mu, const Partition& lambda) {
  Partition mt = mu.transpose(), lt = lambda.transpose();
  long long exponent = 0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(lambda.largest()); ++i)
    exponent += static_cast<long long>(mt[i]) * lt[i] - static_cast<long long>(mt[i]) * mt[i];
  return real_pow<long double>(static_cast<long double>(p), exponent) /
         real_pow(phi_infinity_2(), lambda.largest());
}

/// Checks the enumerated number of type-mu subgroups of G_lambda against nsub_bound.
inline bool nsub_bound_check(Prime p, const Partition& mu, const Partition& lambda,
                             std::size_t bound = default_oracle_bound) {
  auto counts = enumerate_subgroups(p, lambda, bound);
  auto it = counts.find(mu);
  long double n = it == counts.end() ? 0.0L : it->second.convert_to<long double>();
  return n <= nsub_bound(p, mu, lambda) * (1 + 1e-15L);
}

} // namespace sandpile
