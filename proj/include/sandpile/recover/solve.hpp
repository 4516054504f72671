#pragma once

#include "sandpile/abelian/counting.hpp"
#include "sandpile/abelian/group_spec.hpp"
#include "sandpile/abelian/partition.hpp"
#include "sandpile/numeric.hpp"
#include "sandpile/recover/hacts.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandpile {

/// One entry of the moment index set: per prime, the transpose of a group
/// type padded with zeros to exactly m_j parts.
using MomentIndex = std::vector<std::vector<int>>;

/// Index-set description shared by moment vectors and recoveries.
struct MomentShape {
  std::vector<Prime> primes;
  std::vector<int> parts; ///< m_j: transposed indices have at most m_j parts (group exponent <= m_j)
  std::vector<int> caps;  ///< K_j: first part of the transposed index (the p-rank) at most K_j

  void validate() const {
    if (primes.empty()) throw std::invalid_argument("moment shape needs at least one prime");
    if (parts.size() != primes.size() || caps.size() != primes.size())
      throw std::invalid_argument("one part bound and one cap per prime");
    for (std::size_t j = 0; j < primes.size(); ++j) {
      require_prime(primes[j]);
      if (j > 0 && primes[j] <= primes[j - 1]) throw std::invalid_argument("primes must be distinct and increasing");
      if (parts[j] < 1) throw std::invalid_argument("part bound must be positive");
      if (caps[j] < 0) throw std::invalid_argument("cap must be nonnegative");
    }
  }

  bool contains(const MomentIndex& index) const {
    if (index.size() != primes.size()) return false;
    for (std::size_t j = 0; j < primes.size(); ++j) {
      const auto& l = index[j];
      if (static_cast<int>(l.size()) != parts[j] || l.empty() || l[0] > caps[j] || l.back() < 0) return false;
      for (std::size_t i = 1; i < l.size(); ++i)
        if (l[i] > l[i - 1]) return false;
    }
    return true;
  }

  /// All indices in lexicographic order (prime by prime, part by part).
  std::vector<MomentIndex> indices() const {
    validate();
    std::vector<std::vector<std::vector<int>>> per_prime;
    for (std::size_t j = 0; j < primes.size(); ++j) {
      std::vector<std::vector<int>> list;
      std::vector<int> current;
      auto rec = [&](auto&& self, int bound) -> void {
        if (static_cast<int>(current.size()) == parts[j]) {
          list.push_back(current);
          return;
        }
        for (int v = 0; v <= bound; ++v) {
          current.push_back(v);
          self(self, v);
          current.pop_back();
        }
      };
      rec(rec, caps[j]);
      std::sort(list.begin(), list.end());
      per_prime.push_back(std::move(list));
    }
    std::vector<MomentIndex> out{{}};
    for (const auto& list : per_prime) {
      std::vector<MomentIndex> next;
      for (const auto& prefix : out)
        for (const auto& l : list) {
          next.push_back(prefix);
          next.back().push_back(l);
        }
      out = std::move(next);
    }
    return out;
  }

  bool operator==(const MomentShape&) const = default;
};

/// The group whose type transposes to the index at each prime.
inline GroupSpec index_group(const MomentShape& shape, const MomentIndex& index) {
  GroupSpec g;
  for (std::size_t j = 0; j < shape.primes.size(); ++j) {
    std::vector<int> positive;
    for (int v : index[j])
      if (v > 0) positive.push_back(v);
    g.set_sylow(shape.primes[j], Partition(positive).transpose());
  }
  return g;
}

/// Inverse of index_group; the group must have exponent within the shape's part bounds.
inline MomentIndex group_index(const MomentShape& shape, const GroupSpec& g) {
  MomentIndex index;
  for (std::size_t j = 0; j < shape.primes.size(); ++j) {
    Partition type = g.sylow(shape.primes[j]);
    if (type.largest() > shape.parts[j]) throw std::invalid_argument("group " + g.to_string() + " exceeds the part bound");
    std::vector<int> l = type.transpose().parts();
    l.resize(static_cast<std::size_t>(shape.parts[j]), 0);
    index.push_back(std::move(l));
  }
  return index;
}

inline std::string index_to_string(const MomentIndex& index) {
  std::ostringstream out;
  for (std::size_t j = 0; j < index.size(); ++j) {
    out << (j ? ";" : "") << '[';
    for (std::size_t i = 0; i < index[j].size(); ++i) out << (i ? "," : "") << index[j][i];
    out << ']';
  }
  return out.str();
}

/// Hom-moments C_lambda = E #Hom(X, G_lambda) on a finite index set.
struct MomentVector {
  MomentShape shape;
  std::map<MomentIndex, HighPrecision> values;

  /// Checks that every index of the shape is present and nothing else.
  void validate() const {
    shape.validate();
    auto all = shape.indices();
    if (all.size() != values.size()) throw std::invalid_argument("moment vector does not cover its index set");
    for (const auto& index : all)
      if (!values.count(index)) throw std::invalid_argument("missing moment at index " + index_to_string(index));
  }

  const HighPrecision& at(const MomentIndex& index) const {
    auto it = values.find(index);
    if (it == values.end()) throw std::out_of_range("no moment at index " + index_to_string(index));
    return it->second;
  }

  /// The moments of a smaller nested index set.
  MomentVector restricted(const std::vector<int>& caps) const {
    MomentVector out{shape, {}};
    out.shape.caps = caps;
    for (const auto& index : out.shape.indices()) out.values[index] = at(index);
    return out;
  }
};

/// Exact Hom-moments of the limiting law: C_lambda = prod_j sum over subgroups
/// H of the p_j-part of G_lambda of |wedge^2 H|.
inline MomentVector build_theoretical_moments(const MomentShape& shape) {
  MomentVector c{shape, {}};
  std::vector<std::map<std::vector<int>, BigInt>> per_prime(shape.primes.size());
  for (const auto& index : shape.indices()) {
    BigInt value = 1;
    for (std::size_t j = 0; j < index.size(); ++j) {
      auto& cache = per_prime[j];
      auto it = cache.find(index[j]);
      if (it == cache.end()) {
        std::vector<int> positive;
        for (int v : index[j])
          if (v > 0) positive.push_back(v);
        it = cache.emplace(index[j], sum_wedge2_over_subgroups(shape.primes[j], Partition(positive).transpose())).first;
      }
      value *= it->second;
    }
    c.values[index] = HighPrecision(value);
  }
  return c;
}

inline std::string to_decimal(const HighPrecision& x) {
  std::ostringstream out;
  out.precision(std::numeric_limits<HighPrecision>::digits10);
  out << x;
  return out.str();
}

inline nlohmann::json to_json(const MomentShape& shape) {
  return {{"primes", shape.primes}, {"parts", shape.parts}, {"caps", shape.caps}};
}

inline MomentShape shape_from_json(const nlohmann::json& j) {
  MomentShape shape{j.at("primes").get<std::vector<Prime>>(), j.at("parts").get<std::vector<int>>(),
                    j.at("caps").get<std::vector<int>>()};
  shape.validate();
  return shape;
}

inline nlohmann::json to_json(const MomentVector& c) {
  nlohmann::json moments = nlohmann::json::array();
  for (const auto& [index, value] : c.values)
    moments.push_back({{"index", index}, {"group", index_group(c.shape, index).to_string()}, {"value", to_decimal(value)}});
  return {{"schema_version", 1}, {"kind", "moment_vector"}, {"shape", to_json(c.shape)}, {"moments", moments}};
}

/// Values may be decimal strings (full precision) or JSON numbers.
inline MomentVector moment_vector_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1) throw std::invalid_argument("unsupported moment vector schema version");
  MomentVector c{shape_from_json(j.at("shape")), {}};
  for (const auto& entry : j.at("moments")) {
    MomentIndex index = entry.at("index").get<MomentIndex>();
    if (!c.shape.contains(index)) throw std::invalid_argument("moment index outside the shape: " + index_to_string(index));
    const auto& v = entry.at("value");
    c.values[index] = v.is_string() ? HighPrecision(v.get<std::string>()) : HighPrecision(v.get<double>());
  }
  c.validate();
  return c;
}

struct IllConditionedStep : std::runtime_error {
  IllConditionedStep(const MomentIndex& at, const std::string& what) : std::runtime_error(what), index(at) {}
  MomentIndex index;
};

struct RecoverOptions {
  bool extrapolate = true;            ///< Richardson over nested caps K-2, K-1, K (single prime only)
  HighPrecision min_pivot = HighPrecision("1e-40");
};

struct RecoveredValue {
  MomentIndex index;
  GroupSpec group;           ///< type of X (x) Z/p^m at each prime
  bool tensor_capped = false; ///< some part reaches m: the value aggregates all deeper types
  HighPrecision value;        ///< reported estimate (extrapolated when enabled)
  HighPrecision raw;          ///< plain solve at the full caps, absent moments taken as zero
  HighPrecision boundary_residual; ///< contribution of the outermost cap layer to the raw value
  HighPrecision error_estimate;    ///< |value - the next-lower-order estimate|
  int levels = 1;                   ///< nested caps available for this index
};

struct Recovery {
  MomentShape shape;
  bool extrapolated = false;
  std::vector<RecoveredValue> values;

  HighPrecision total() const {
    HighPrecision s = 0;
    for (const auto& v : values) s += v.value;
    return s;
  }

  HighPrecision min_value() const {
    HighPrecision m = values.empty() ? HighPrecision(0) : values.front().value;
    for (const auto& v : values) m = std::min(m, v.value);
    return m;
  }

  /// x >= -eps everywhere and the total at most 1 + eps.
  bool plausible(const HighPrecision& eps) const { return min_value() >= -eps && total() <= 1 + eps; }

  const RecoveredValue& at(const GroupSpec& g) const {
    for (const auto& v : values)
      if (v.group == g) return v;
    throw std::out_of_range("no recovered value for " + g.to_string());
  }

  std::map<GroupSpec, Real> distribution() const {
    std::map<GroupSpec, Real> out;
    for (const auto& v : values) out[v.group] = v.value.convert_to<Real>();
    return out;
  }
};

namespace detail {

struct PlainSolve {
  std::map<MomentIndex, HighPrecision> x;
  std::map<MomentIndex, HighPrecision> boundary;
};

/// d-coordinates (lambda_1 - lambda_2, ..., lambda_m) of a transposed index.
inline std::vector<int> differences(const std::vector<int>& l) {
  std::vector<int> d(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) d[i] = l[i] - (i + 1 < l.size() ? l[i + 1] : 0);
  return d;
}

/// The lexicographic solve with absent moments taken as zero.
inline PlainSolve solve_plain(const MomentVector& c, const RecoverOptions& options) {
  const MomentShape& shape = c.shape;
  const std::size_t s = shape.primes.size();
  const auto indices = shape.indices();

  // Per prime: single-prime index list, coefficient rows A and H values.
  struct PrimeData {
    std::vector<std::vector<int>> list;
    std::map<std::vector<int>, std::size_t> position;
    std::vector<std::vector<HighPrecision>> a; // a[nu][lambda]
    std::vector<std::vector<HighPrecision>> h; // h[nu][mu]
  };
  std::vector<PrimeData> data(s);
  for (std::size_t j = 0; j < s; ++j) {
    MomentShape single{{shape.primes[j]}, {shape.parts[j]}, {shape.caps[j]}};
    auto& d = data[j];
    for (const auto& index : single.indices()) {
      d.position[index[0]] = d.list.size();
      d.list.push_back(index[0]);
    }
    const auto tails = euler_tails(shape.primes[j], shape.caps[j] + 1);
    for (const auto& nu : d.list) {
      HactsSpec spec{shape.primes[j], nu};
      HactsTable table(spec, shape.caps[j]);
      std::vector<HighPrecision> row, hrow;
      for (const auto& lambda : d.list) row.push_back(table.coefficient(differences(lambda)).convert_to<HighPrecision>());
      for (const auto& mu : d.list) hrow.push_back(hacts_value(spec, mu, tails));
      d.a.push_back(std::move(row));
      d.h.push_back(std::move(hrow));
    }
  }

  auto positions = [&](const MomentIndex& index) {
    std::vector<std::size_t> pos(s);
    for (std::size_t j = 0; j < s; ++j) pos[j] = data[j].position.at(index[j]);
    return pos;
  };
  std::vector<std::vector<std::size_t>> pos;
  std::vector<bool> on_boundary;
  for (const auto& index : indices) {
    pos.push_back(positions(index));
    bool edge = false;
    for (std::size_t j = 0; j < s; ++j) edge = edge || index[j][0] == shape.caps[j];
    on_boundary.push_back(edge);
  }

  PlainSolve out;
  std::vector<HighPrecision> x(indices.size());
  for (std::size_t n = 0; n < indices.size(); ++n) {
    HighPrecision sum = 0, edge = 0;
    for (std::size_t l = 0; l < indices.size(); ++l) {
      HighPrecision a = 1;
      for (std::size_t j = 0; j < s && a != 0; ++j) a *= data[j].a[pos[n][j]][pos[l][j]];
      if (a == 0) continue;
      HighPrecision term = a * c.at(indices[l]);
      sum += term;
      if (on_boundary[l]) edge += term;
    }
    for (std::size_t k = 0; k < n; ++k) {
      HighPrecision h = 1;
      for (std::size_t j = 0; j < s && h != 0; ++j) h *= data[j].h[pos[n][j]][pos[k][j]];
      sum -= x[k] * h;
    }
    HighPrecision u = 1;
    for (std::size_t j = 0; j < s; ++j) u *= data[j].h[pos[n][j]][pos[n][j]];
    if (abs(u) < options.min_pivot)
      throw IllConditionedStep(indices[n], "ill-conditioned step at index " + index_to_string(indices[n]) + ": pivot " +
                                               to_decimal(u));
    x[n] = sum / u;
    out.x[indices[n]] = x[n];
    out.boundary[indices[n]] = edge / u;
  }
  return out;
}

} // namespace detail

/// Recovers x_mu = P(X (x) Z/p^m = G_mu) from Hom-moments by the lexicographic
/// triangular solve. With one prime and extrapolation on, the solve is repeated
/// on the nested caps K-2, K-1 and combined with tail ratios -1/p and -1/p^2.
inline Recovery recover_distribution(const MomentVector& c, const RecoverOptions& options = {}) {
  c.validate();
  const MomentShape& shape = c.shape;
  const bool extrapolate = options.extrapolate && shape.primes.size() == 1 && shape.caps[0] >= 1;

  std::vector<detail::PlainSolve> levels;
  levels.push_back(detail::solve_plain(c, options));
  if (shape.primes.size() == 1)
    for (int drop = 1; drop <= 2 && shape.caps[0] - drop >= 0; ++drop)
      levels.push_back(detail::solve_plain(c.restricted({shape.caps[0] - drop}), options));

  Recovery out{shape, extrapolate, {}};
  for (const auto& [index, raw] : levels[0].x) {
    RecoveredValue v;
    v.index = index;
    v.group = index_group(shape, index);
    for (std::size_t j = 0; j < shape.primes.size(); ++j) v.tensor_capped = v.tensor_capped || index[j].back() > 0;
    v.raw = raw;
    v.boundary_residual = levels[0].boundary.at(index);
    std::vector<HighPrecision> sequence{raw}; // highest cap first
    for (std::size_t k = 1; k < levels.size(); ++k) {
      auto it = levels[k].x.find(index);
      if (it == levels[k].x.end()) break;
      sequence.push_back(it->second);
    }
    v.levels = static_cast<int>(sequence.size());
    std::reverse(sequence.begin(), sequence.end());
    if (extrapolate && sequence.size() >= 2) {
      const HighPrecision inv = HighPrecision(1) / shape.primes[0];
      auto pass = [](const std::vector<HighPrecision>& s, const HighPrecision& r) {
        std::vector<HighPrecision> next;
        for (std::size_t i = 0; i + 1 < s.size(); ++i) next.push_back((s[i + 1] - r * s[i]) / (1 - r));
        return next;
      };
      auto once = pass(sequence, -inv);
      if (once.size() >= 2) {
        auto twice = pass(once, -inv * inv);
        v.value = twice.back();
        v.error_estimate = abs(twice.back() - once.back());
      } else {
        v.value = once.back();
        v.error_estimate = abs(once.back() - sequence.back());
      }
    } else {
      v.value = raw;
      v.error_estimate = sequence.size() >= 2 ? abs(sequence.back() - sequence[sequence.size() - 2]) : abs(v.boundary_residual);
    }
    out.values.push_back(std::move(v));
  }
  return out;
}

inline nlohmann::json to_json(const Recovery& r) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : r.values)
    values.push_back({{"index", v.index},
                      {"group", v.group.to_string()},
                      {"tensor_capped", v.tensor_capped},
                      {"value", to_decimal(v.value)},
                      {"raw", to_decimal(v.raw)},
                      {"boundary_residual", to_decimal(v.boundary_residual)},
                      {"error_estimate", to_decimal(v.error_estimate)},
                      {"levels", v.levels}});
  return {{"schema_version", 1},
          {"kind", "recovered_distribution"},
          {"shape", to_json(r.shape)},
          {"extrapolated", r.extrapolated},
          {"total", to_decimal(r.total())},
          {"min_value", to_decimal(r.min_value())},
          {"values", values}};
}

} // namespace sandpile
