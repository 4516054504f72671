#pragma once

#include "sandpile/numeric.hpp"

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandpile {

/// The modulus p^e of a local ring Z/p^e.
struct PrimePower {
  Prime p = 2;
  int e = 1;

  BigInt value() const { return big_pow(p, static_cast<std::uint64_t>(e)); }

  /// Detects p^e from an integer; nullopt if it is not a prime power.
  static std::optional<PrimePower> from_modulus(const BigInt& m) {
    if (m < 2) return std::nullopt;
    for (Prime p = 2; BigInt(p) * p <= m; ++p) {
      if (m % p != 0) continue;
      BigInt rest = m;
      int e = 0;
      while (rest % p == 0) {
        rest /= p;
        ++e;
      }
      if (rest != 1) return std::nullopt;
      return PrimePower{p, e};
    }
    // No factor up to sqrt(m): m itself is prime.
    return PrimePower{m.convert_to<Prime>(), 1};
  }

  bool operator==(const PrimePower&) const = default;
};

/// Square matrix over Z (no modulus) or Z/p^e (entries kept in [0, p^e)).
class ModMatrix {
public:
  ModMatrix() = default;

  static ModMatrix integer(std::size_t n, std::vector<BigInt> entries = {}) {
    ModMatrix m;
    m.n_ = n;
    m.entries_ = entries.empty() ? std::vector<BigInt>(n * n) : std::move(entries);
    if (m.entries_.size() != n * n) throw std::invalid_argument("entry count must be n*n");
    return m;
  }

  static ModMatrix modular(std::size_t n, PrimePower modulus, std::vector<BigInt> entries = {}) {
    require_prime(modulus.p);
    if (modulus.e < 1) throw std::invalid_argument("modulus exponent must be positive");
    ModMatrix m = integer(n, std::move(entries));
    m.modulus_ = modulus;
    m.canonicalize();
    return m;
  }

  static ModMatrix identity(std::size_t n) {
    ModMatrix m = integer(n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  static ModMatrix from_rows(const std::vector<std::vector<long long>>& rows) {
    ModMatrix m = integer(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw std::invalid_argument("matrix must be square");
      for (std::size_t j = 0; j < rows.size(); ++j) m.at(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  const std::optional<PrimePower>& modulus() const noexcept { return modulus_; }
  bool is_integer() const noexcept { return !modulus_.has_value(); }

  BigInt& at(std::size_t i, std::size_t j) { return entries_[i * n_ + j]; }
  const BigInt& at(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  const std::vector<BigInt>& entries() const noexcept { return entries_; }

  bool is_symmetric() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (at(i, j) != at(j, i)) return false;
    return true;
  }

  /// Image under Z -> Z/p^e (or Z/p^E -> Z/p^e for e <= E).
  ModMatrix reduced(PrimePower target) const {
    if (modulus_ && (modulus_->p != target.p || modulus_->e < target.e))
      throw std::invalid_argument("cannot reduce to a modulus that does not divide the current one");
    return modular(n_, target, entries_);
  }

  /// Deletes row and column k.
  ModMatrix minor(std::size_t k) const {
    ModMatrix m = *this;
    m.n_ = n_ - 1;
    m.entries_.clear();
    m.entries_.reserve(m.n_ * m.n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (i == k) continue;
      for (std::size_t j = 0; j < n_; ++j)
        if (j != k) m.entries_.push_back(at(i, j));
    }
    return m;
  }

  bool operator==(const ModMatrix&) const = default;

  /// Text format: first line "n modulus" (modulus 0 means Z), then n rows.
  friend std::istream& operator>>(std::istream& in, ModMatrix& m) {
    std::size_t n = 0;
    std::string modulus_text;
    if (!(in >> n >> modulus_text)) throw std::runtime_error("matrix header must be 'n modulus'");
    BigInt modulus(modulus_text);
    std::vector<BigInt> entries(n * n);
    for (auto& x : entries) {
      std::string token;
      if (!(in >> token)) throw std::runtime_error("matrix has fewer than n*n entries");
      x = BigInt(token);
    }
    if (modulus == 0) {
      m = integer(n, std::move(entries));
    } else {
      auto pp = PrimePower::from_modulus(modulus);
      if (!pp) throw std::runtime_error("modulus must be 0 or a prime power");
      m = modular(n, *pp, std::move(entries));
    }
    return in;
  }

  friend std::ostream& operator<<(std::ostream& out, const ModMatrix& m) {
    out << m.n_ << ' ' << (m.modulus_ ? m.modulus_->value() : BigInt(0)) << '\n';
    for (std::size_t i = 0; i < m.n_; ++i) {
      for (std::size_t j = 0; j < m.n_; ++j) out << (j ? " " : "") << m.at(i, j);
      out << '\n';
    }
    return out;
  }

private:
  void canonicalize() {
    BigInt m = modulus_->value();
    for (auto& x : entries_) {
      x %= m;
      if (x < 0) x += m;
    }
  }

  std::size_t n_ = 0;
  std::optional<PrimePower> modulus_;
  std::vector<BigInt> entries_;
};

} // namespace sandpile
