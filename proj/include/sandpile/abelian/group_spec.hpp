#pragma once

#include "sandpile/abelian/partition.hpp"
#include "sandpile/numeric.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sandpile {

/// Finitely generated abelian group Z^free_rank (+) (+)_p G_{lambda(p)}.
/// Absent primes have trivial Sylow subgroup; stored partitions are nonempty.
class GroupSpec {
public:
  GroupSpec() = default;

  static GroupSpec p_group(Prime p, Partition type) {
    GroupSpec g;
    g.set_sylow(p, std::move(type));
    return g;
  }

  static GroupSpec cyclic(const BigInt& order) { return from_invariant_factors({order}); }

  /// Accepts factors in any order as long as they form a divisibility chain.
  static GroupSpec from_invariant_factors(std::vector<BigInt> factors) {
    std::sort(factors.begin(), factors.end(), std::greater<>());
    for (std::size_t i = 1; i < factors.size(); ++i)
      if (factors[i] <= 0 || factors[i - 1] % factors[i] != 0)
        throw std::invalid_argument("invariant factors must form a divisibility chain");
    std::map<Prime, std::vector<int>> exponents;
    for (const BigInt& a : factors) {
      if (a <= 0) throw std::invalid_argument("invariant factors must be positive");
      BigInt rest = a;
      for (Prime p = 2; BigInt(p) * p <= rest; ++p) {
        int e = 0;
        while (rest % p == 0) {
          rest /= p;
          ++e;
        }
        if (e) exponents[p].push_back(e);
      }
      if (rest > 1) exponents[rest.convert_to<Prime>()].push_back(1);
    }
    GroupSpec g;
    for (auto& [p, parts] : exponents) g.set_sylow(p, Partition::from_multiset(parts));
    return g;
  }

  void set_sylow(Prime p, Partition type) {
    require_prime(p);
    if (type.empty())
      factors_.erase(p);
    else
      factors_[p] = std::move(type);
  }

  Partition sylow(Prime p) const {
    auto it = factors_.find(p);
    return it == factors_.end() ? Partition{} : it->second;
  }

  const std::map<Prime, Partition>& factors() const noexcept { return factors_; }
  int free_rank() const noexcept { return free_rank_; }
  void set_free_rank(int r) {
    if (r < 0) throw std::invalid_argument("negative free rank");
    free_rank_ = r;
  }
  bool finite() const noexcept { return free_rank_ == 0; }
  bool trivial() const noexcept { return factors_.empty() && free_rank_ == 0; }

  BigInt order() const {
    if (!finite()) throw std::domain_error("order of an infinite group");
    BigInt n = 1;
    for (const auto& [p, type] : factors_) n *= big_pow(p, static_cast<std::uint64_t>(type.size()));
    return n;
  }

  /// a_1, a_2, ..., a_r with a_r | ... | a_1 (empty for the trivial group).
  std::vector<BigInt> invariant_factors() const {
    std::size_t r = 0;
    for (const auto& [p, type] : factors_) r = std::max(r, static_cast<std::size_t>(type.length()));
    std::vector<BigInt> a(r, BigInt(1));
    for (const auto& [p, type] : factors_)
      for (std::size_t i = 0; i < static_cast<std::size_t>(type.length()); ++i)
        a[i] *= big_pow(p, static_cast<std::uint64_t>(type[i]));
    return a;
  }

  /// "2:[2,1];3:[1]"; the trivial group encodes as "1", a free part as "Z^r".
  std::string to_string() const {
    std::string out;
    for (const auto& [p, type] : factors_) {
      if (!out.empty()) out += ';';
      out += std::to_string(p) + ':' + type.to_string();
    }
    if (free_rank_) {
      if (!out.empty()) out += ';';
      out += "Z^" + std::to_string(free_rank_);
    }
    return out.empty() ? "1" : out;
  }

  static GroupSpec parse(std::string_view text) {
    GroupSpec g;
    auto trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    };
    text = trim(text);
    if (text.empty() || text == "1") return g;
    while (!text.empty()) {
      auto semi = text.find(';');
      auto token = trim(text.substr(0, semi));
      if (token.starts_with("Z^")) {
        g.set_free_rank(std::stoi(std::string(token.substr(2))));
      } else {
        auto colon = token.find(':');
        if (colon == std::string_view::npos)
          throw std::invalid_argument("group factor must be p:[...]: " + std::string(token));
        Prime p = std::stoull(std::string(trim(token.substr(0, colon))));
        if (g.factors_.count(p)) throw std::invalid_argument("repeated prime in group spec");
        g.set_sylow(p, Partition::parse(token.substr(colon + 1)));
      }
      if (semi == std::string_view::npos) break;
      text = text.substr(semi + 1);
    }
    return g;
  }

  auto operator<=>(const GroupSpec&) const = default;
  bool operator==(const GroupSpec&) const = default;

private:
  std::map<Prime, Partition> factors_;
  int free_rank_ = 0;
};

} // namespace sandpile
