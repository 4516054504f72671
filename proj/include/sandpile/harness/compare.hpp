#pragma once

#include "sandpile/harness/experiment.hpp"
#include "sandpile/theory/limits.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sandpile {

struct ComparisonPolicy {
  int max_size = 24;              ///< theory table holds types with |lambda| <= max_size
  double tv_tolerance = 0.03;
  double sigmas = 3;
  double prank_floor = 0.02;      ///< p-rank band is max(sigmas * sigma, prank_floor)
  int max_rank = 3;
  double moment_relative = 0.05;  ///< default moment band is max(sigmas * se, moment_relative * |wedge^2 G|)
  std::map<GroupSpec, double> moment_tolerance; ///< fixed absolute bands that override the default
  TruncationPolicy truncation{};
};

struct Verdict {
  std::string name;
  double value = 0; ///< the statistic (distance or deviation)
  double bound = 0; ///< pass iff |value| <= bound
  bool pass = false;
};

struct TypeRow {
  Prime p = 2;
  Partition type;
  double empirical = 0;
  double theory = 0;
  double z = 0; ///< (empirical - theory) / binomial sigma at the theory value
};

struct ComparisonReport {
  std::vector<TypeRow> rows;
  std::map<Prime, double> tv;
  std::map<Prime, double> truncation_mass; ///< theory mass outside the table
  std::vector<Verdict> verdicts;

  bool pass() const {
    for (const auto& v : verdicts)
      if (!v.pass) return false;
    return true;
  }

  const Verdict& verdict(const std::string& name) const {
    for (const auto& v : verdicts)
      if (v.name == name) return v;
    throw std::out_of_range("no verdict named " + name);
  }
};

inline Verdict make_verdict(std::string name, double value, double bound) {
  return {std::move(name), value, bound, std::abs(value) <= bound};
}

/// Limiting law of the recorded Sylow p-type: the full law, or the law of
/// S (x) Z/p^v for mod-a models.
inline std::map<Partition, double> theory_table(const ExperimentConfig& cfg, Prime p, const ComparisonPolicy& policy) {
  std::map<Partition, double> table;
  auto v = cfg.tensor_exponent(p);
  for (const auto& lambda : v ? partitions_bounded(policy.max_size, *v, policy.max_size) : partitions_up_to(policy.max_size))
    table[lambda] = static_cast<double>(v ? limit_prob_tensor(p, lambda, *v, policy.truncation).value
                                           : limit_prob_sylow(p, lambda, policy.truncation).value);
  return table;
}

/// Total variation between two laws on types; mass outside both tables is pooled into one class.
inline double total_variation(const std::map<Partition, double>& a, const std::map<Partition, double>& b) {
  double distance = 0, rest_a = 1, rest_b = 1;
  std::set<Partition> keys;
  for (const auto& [k, x] : a) keys.insert(k);
  for (const auto& [k, x] : b) keys.insert(k);
  for (const auto& k : keys) {
    double x = a.count(k) ? a.at(k) : 0, y = b.count(k) ? b.at(k) : 0;
    distance += std::abs(x - y);
    rest_a -= x;
    rest_b -= y;
  }
  return 0.5 * (distance + std::abs(rest_a - rest_b));
}

/// Empirical law of the Sylow p-type with parts cut at `cap` when given.
inline std::map<Partition, double> empirical_table(const ExperimentRecord& rec, Prime p, std::optional<int> cap = std::nullopt) {
  std::map<Partition, double> table;
  const double n = static_cast<double>(rec.samples());
  for (const auto& [type, c] : rec.sylow_table(p)) table[cap ? type.truncated(*cap) : type] += static_cast<double>(c) / n;
  return table;
}

inline ComparisonReport compare_to_theory(const ExperimentRecord& rec, const ComparisonPolicy& policy = {}) {
  ComparisonReport report;
  const auto& cfg = rec.config;
  const double n = static_cast<double>(rec.samples());
  for (Prime p : cfg.primes) {
    const std::string tag = "p=" + std::to_string(p);
    auto theory = theory_table(cfg, p, policy);
    auto empirical = empirical_table(rec, p);
    double mass = 0;
    for (const auto& [k, q] : theory) mass += q;
    report.truncation_mass[p] = 1 - mass;
    for (const auto& [type, q] : theory) {
      double f = empirical.count(type) ? empirical.at(type) : 0;
      if (q < 1e-6 && f == 0) continue;
      double sigma = std::sqrt(q * (1 - q) / n);
      report.rows.push_back({p, type, f, q, sigma > 0 ? (f - q) / sigma : 0});
    }
    for (const auto& [type, f] : empirical)
      if (!theory.count(type)) report.rows.push_back({p, type, f, 0, 0});
    double tv = total_variation(empirical, theory);
    report.tv[p] = tv;
    report.verdicts.push_back(make_verdict("tv " + tag, tv, policy.tv_tolerance));

    std::vector<double> by_rank(static_cast<std::size_t>(policy.max_rank) + 1, 0);
    for (const auto& [type, f] : empirical)
      if (type.length() <= policy.max_rank) by_rank[static_cast<std::size_t>(type.length())] += f;
    for (int r = 0; r <= policy.max_rank; ++r) {
      double q = static_cast<double>(prank_prob(p, r, policy.truncation).value);
      double band = std::max(policy.sigmas * std::sqrt(q * (1 - q) / n), policy.prank_floor);
      report.verdicts.push_back(make_verdict("prank " + tag + " r=" + std::to_string(r), by_rank[static_cast<std::size_t>(r)] - q, band));
    }
  }
  for (const auto& [g, m] : rec.moments) {
    double expected = moment_value(g).convert_to<double>();
    auto fixed = policy.moment_tolerance.find(g);
    double band = fixed != policy.moment_tolerance.end()
                      ? fixed->second
                      : std::max(policy.sigmas * m.standard_error, policy.moment_relative * expected);
    report.verdicts.push_back(make_verdict("moment " + g.to_string(), m.value - expected, band));
  }
  return report;
}

/// TV distance between the Sylow p tables of two records, both cut at the
/// smaller tensor exponent so mod-a models compare with integer models.
inline double compare_records(const ExperimentRecord& a, const ExperimentRecord& b, Prime p) {
  std::optional<int> cap;
  for (const auto* rec : {&a, &b})
    if (auto v = rec->config.tensor_exponent(p)) cap = cap ? std::min(*cap, *v) : *v;
  return total_variation(empirical_table(a, p, cap), empirical_table(b, p, cap));
}

inline nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"prime", row.p}, {"type", row.type.to_string()}, {"empirical", row.empirical},
                    {"theory", row.theory}, {"z", row.z}});
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts)
    verdicts.push_back({{"name", v.name}, {"value", v.value}, {"bound", v.bound}, {"pass", v.pass}});
  nlohmann::json tv = nlohmann::json::object(), mass = nlohmann::json::object();
  for (const auto& [p, x] : r.tv) tv[std::to_string(p)] = x;
  for (const auto& [p, x] : r.truncation_mass) mass[std::to_string(p)] = x;
  return {{"schema_version", 1}, {"kind", "comparison"}, {"rows", rows}, {"tv", tv},
          {"truncation_mass", mass}, {"verdicts", verdicts}, {"pass", r.pass()}};
}

} // namespace sandpile
