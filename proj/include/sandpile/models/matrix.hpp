#pragma once

#include "sandpile/linalg/mod_matrix.hpp"
#include "sandpile/models/rng.hpp"
#include "sandpile/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandpile {

/// Law of the independent entries X_ij, i <= j, of a random symmetric matrix.
///
/// The constructor verifies the balance certificate: for each prime in scope,
/// no residue class mod p has probability above 1 - alpha.
class EntryDistribution {
public:
  enum class Kind { uniform_mod, integer_pmf };

  /// Uniform on Z/aZ, represented by 0..a-1.
  static EntryDistribution uniform_mod(std::uint64_t a, double alpha, const std::vector<Prime>& primes) {
    if (a < 2) throw std::invalid_argument("modulus must be at least 2");
    EntryDistribution d;
    d.kind_ = Kind::uniform_mod;
    d.modulus_ = a;
    for (std::uint64_t v = 0; v < a; ++v) d.values_.push_back(static_cast<std::int64_t>(v));
    d.probabilities_.assign(a, 1.0 / static_cast<double>(a));
    d.certify(alpha, primes);
    return d;
  }

  static EntryDistribution integer_pmf(std::vector<std::int64_t> values, std::vector<double> probabilities,
                                       double alpha, const std::vector<Prime>& primes) {
    if (values.empty() || values.size() != probabilities.size())
      throw std::invalid_argument("pmf needs one probability per value");
    double total = 0;
    for (double q : probabilities) {
      if (!(q >= 0)) throw std::invalid_argument("negative probability");
      total += q;
    }
    if (std::abs(total - 1) > 1e-12) throw std::invalid_argument("pmf must sum to 1");
    EntryDistribution d;
    d.kind_ = Kind::integer_pmf;
    d.values_ = std::move(values);
    d.probabilities_ = std::move(probabilities);
    d.certify(alpha, primes);
    return d;
  }

  Kind kind() const noexcept { return kind_; }
  std::uint64_t modulus() const noexcept { return modulus_; }
  double alpha() const noexcept { return alpha_; }
  const std::vector<std::int64_t>& values() const noexcept { return values_; }
  const std::vector<double>& probabilities() const noexcept { return probabilities_; }

  /// Largest probability of a single residue class mod p.
  double max_residue_probability(Prime p) const {
    std::map<std::int64_t, double> mass;
    const auto m = static_cast<std::int64_t>(p);
    for (std::size_t i = 0; i < values_.size(); ++i) mass[((values_[i] % m) + m) % m] += probabilities_[i];
    double best = 0;
    for (const auto& [r, q] : mass) best = std::max(best, q);
    return best;
  }

  std::int64_t draw(SampleStream& stream) const {
    if (kind_ == Kind::uniform_mod) return static_cast<std::int64_t>(stream.uniform_below(modulus_));
    double u = stream.uniform01(), acc = 0;
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      acc += probabilities_[i];
      if (u < acc) return values_[i];
    }
    return values_.back();
  }

private:
  void certify(double alpha, const std::vector<Prime>& primes) {
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0, 1)");
    for (Prime p : primes) {
      require_prime(p);
      double worst = max_residue_probability(p);
      if (worst > 1 - alpha + 1e-12)
        throw std::invalid_argument("entry distribution is not alpha-balanced mod " + std::to_string(p) +
                                    ": a residue has probability " + std::to_string(worst));
    }
    alpha_ = alpha;
  }

  Kind kind_ = Kind::uniform_mod;
  std::uint64_t modulus_ = 0;
  double alpha_ = 0;
  std::vector<std::int64_t> values_;
  std::vector<double> probabilities_;
};

/// Symmetric n x n integer matrix; entries (i, j), i <= j, drawn in row order.
inline ModMatrix sample_symmetric(std::size_t n, const EntryDistribution& dist, std::uint64_t seed,
                                  std::uint64_t sample_index = 0) {
  ModMatrix m = ModMatrix::integer(n);
  SampleStream stream(seed, StreamTag::matrix, sample_index);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.at(i, j) = m.at(j, i) = dist.draw(stream);
  return m;
}

} // namespace sandpile
