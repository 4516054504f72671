#pragma once

#include "sandpile/abelian/counting.hpp"
#include "sandpile/abelian/group_spec.hpp"
#include "sandpile/linalg/snf.hpp"
#include "sandpile/models/graph.hpp"
#include "sandpile/models/matrix.hpp"
#include "sandpile/recover/solve.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sandpile {

enum class ModelKind { graph, matrix_uniform, matrix_iid };

inline const char* to_string(ModelKind k) {
  switch (k) {
  case ModelKind::graph: return "graph";
  case ModelKind::matrix_uniform: return "matrix-uniform";
  case ModelKind::matrix_iid: return "matrix-iid";
  }
  return "?";
}

inline ModelKind model_from_string(const std::string& s) {
  if (s == "graph") return ModelKind::graph;
  if (s == "matrix-uniform") return ModelKind::matrix_uniform;
  if (s == "matrix-iid") return ModelKind::matrix_iid;
  throw std::invalid_argument("unknown model '" + s + "' (graph, matrix-uniform, matrix-iid)");
}

/// Worker count from SANDPILE_WORKERS, else the hardware concurrency.
inline unsigned default_workers() {
  if (const char* env = std::getenv("SANDPILE_WORKERS")) {
    int w = std::atoi(env);
    if (w >= 1) return static_cast<unsigned>(w);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct ExperimentConfig {
  ModelKind model = ModelKind::graph;
  std::size_t n = 80;
  double q = 0.5;                          ///< graph edge probability
  std::uint64_t modulus = 0;               ///< a for matrix-uniform
  std::vector<std::int64_t> values{0, 1};  ///< matrix-iid support
  std::vector<double> probabilities{0.5, 0.5};
  double alpha = 0.5;                      ///< balance level certified for matrix-iid
  std::vector<Prime> primes{2};
  std::vector<int> exponents{8};           ///< initial working exponent per prime
  int exponent_ceiling = 64;
  std::uint64_t samples = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;                    ///< not part of the record
  std::vector<GroupSpec> test_groups;      ///< empty: Z/p, (Z/p)^2, Z/p^2 per prime where defined
  double max_unsaturated_rate = 0.01;

  void validate() const {
    if (samples < 1) throw std::invalid_argument("need at least one sample");
    if (primes.empty()) throw std::invalid_argument("need at least one prime");
    if (exponents.size() != primes.size()) throw std::invalid_argument("one exponent per prime");
    std::set<Prime> distinct(primes.begin(), primes.end());
    if (distinct.size() != primes.size()) throw std::invalid_argument("primes must be distinct");
    for (Prime p : primes) require_prime(p);
    for (int e : exponents)
      if (e < 1) throw std::invalid_argument("exponents must be at least 1");
    if (exponent_ceiling < 1) throw std::invalid_argument("exponent ceiling must be positive");
    if (workers < 1) throw std::invalid_argument("need at least one worker");
    if (n < 2) throw std::invalid_argument("need n >= 2");
    switch (model) {
    case ModelKind::graph:
      if (!(q > 0 && q < 1)) throw std::invalid_argument("edge probability must lie in (0, 1)");
      break;
    case ModelKind::matrix_uniform:
      if (modulus < 2) throw std::invalid_argument("matrix-uniform needs a modulus a >= 2");
      for (Prime p : primes)
        if (modulus % p != 0) throw std::invalid_argument("prime " + std::to_string(p) + " does not divide the modulus");
      break;
    case ModelKind::matrix_iid: entry_distribution(); break;
    }
  }

  /// v_p(a) for matrix-uniform; the record holds the type of S (x) Z/p^{v_p(a)}.
  std::optional<int> tensor_exponent(Prime p) const {
    if (model != ModelKind::matrix_uniform) return std::nullopt;
    int v = 0;
    for (std::uint64_t a = modulus; a % p == 0; a /= p) ++v;
    return v;
  }

  EntryDistribution entry_distribution() const {
    if (model == ModelKind::matrix_uniform) return EntryDistribution::uniform_mod(modulus, 0.5, primes);
    return EntryDistribution::integer_pmf(values, probabilities, alpha, primes);
  }

  std::vector<GroupSpec> effective_test_groups() const {
    if (!test_groups.empty()) return test_groups;
    std::vector<GroupSpec> out;
    for (Prime p : primes) {
      int cap = tensor_exponent(p).value_or(64);
      out.push_back(GroupSpec::p_group(p, {1}));
      out.push_back(GroupSpec::p_group(p, {1, 1}));
      if (cap >= 2) out.push_back(GroupSpec::p_group(p, {2}));
    }
    return out;
  }
};

/// Outcome of one sample: the Sylow part at the configured primes.
struct SampleOutcome {
  SampleStatus status = SampleStatus::saturated;
  GroupSpec group;
};

inline SampleOutcome process_sample(const ExperimentConfig& cfg, const EntryDistribution* dist, std::uint64_t index) {
  SampleOutcome out;
  ModMatrix m;
  if (cfg.model == ModelKind::graph) {
    GraphSample g = sample_graph(cfg.n, cfg.q, cfg.seed, index);
    if (!g.connected()) return {SampleStatus::disconnected, {}};
    m = reduced_laplacian(g);
  } else {
    m = sample_symmetric(cfg.n, *dist, cfg.seed, index);
  }
  for (std::size_t j = 0; j < cfg.primes.size(); ++j) {
    const Prime p = cfg.primes[j];
    if (auto v = cfg.tensor_exponent(p)) {
      SylowType t = cokernel_sylow_type(m.reduced(PrimePower{p, *v}), p, *v, *v);
      out.group.set_sylow(p, t.type);
      continue;
    }
    SylowType t = cokernel_sylow_type(m, p, cfg.exponents[j], cfg.exponent_ceiling);
    if (!t.saturated) return {SampleStatus::unsaturated, {}};
    out.group.set_sylow(p, t.type);
  }
  return out;
}

/// Mergeable counters; merge is associative and commutative.
struct Tally {
  std::map<GroupSpec, std::uint64_t> counts;
  std::uint64_t disconnected = 0;
  std::uint64_t unsaturated = 0;

  void add(const SampleOutcome& s) {
    switch (s.status) {
    case SampleStatus::saturated: ++counts[s.group]; break;
    case SampleStatus::disconnected: ++disconnected; break;
    case SampleStatus::unsaturated: ++unsaturated; break;
    }
  }

  void merge(const Tally& other) {
    for (const auto& [g, c] : other.counts) counts[g] += c;
    disconnected += other.disconnected;
    unsaturated += other.unsaturated;
  }

  std::uint64_t total() const {
    std::uint64_t t = disconnected + unsaturated;
    for (const auto& [g, c] : counts) t += c;
    return t;
  }

  bool operator==(const Tally&) const = default;
};

struct EmpiricalMoment {
  double value = 0;
  double standard_error = 0;
  bool lower_bound = false; ///< disconnected or unsaturated samples were left out
};

struct ExperimentRecord {
  ExperimentConfig config;
  Tally tally;
  std::map<GroupSpec, EmpiricalMoment> moments;
  std::vector<std::string> warnings;

  std::uint64_t samples() const { return tally.total(); }

  /// Counts of the Sylow p-type, marginalized over the other primes.
  std::map<Partition, std::uint64_t> sylow_table(Prime p) const {
    std::map<Partition, std::uint64_t> table;
    for (const auto& [g, c] : tally.counts) table[g.sylow(p)] += c;
    return table;
  }
};

/// E-hat #Sur(S, G) = sum over types of freq * #Sur(type, G).
inline EmpiricalMoment empirical_sur_moment(const ExperimentRecord& rec, const GroupSpec& g) {
  const auto& cfg = rec.config;
  for (const auto& [p, type] : g.factors()) {
    if (std::find(cfg.primes.begin(), cfg.primes.end(), p) == cfg.primes.end())
      throw std::invalid_argument("test group " + g.to_string() + " involves a prime outside the experiment");
    if (auto v = cfg.tensor_exponent(p); v && type.largest() > *v)
      throw std::invalid_argument("test group " + g.to_string() + " has exponent above the model's modulus");
  }
  if (!g.finite()) throw std::invalid_argument("test group must be finite");
  const double n = static_cast<double>(rec.samples());
  double sum = 0, square = 0;
  for (const auto& [h, c] : rec.tally.counts) {
    GroupSpec local;
    for (const auto& [p, type] : g.factors()) local.set_sylow(p, h.sylow(p));
    double s = sur_count(local, g).convert_to<double>();
    sum += static_cast<double>(c) * s;
    square += static_cast<double>(c) * s * s;
  }
  double mean = sum / n, variance = std::max(0.0, square / n - mean * mean);
  return {mean, std::sqrt(variance / n), rec.tally.disconnected + rec.tally.unsaturated > 0};
}

inline std::map<GroupSpec, EmpiricalMoment> empirical_moments(const ExperimentRecord& rec, const std::vector<GroupSpec>& groups) {
  std::map<GroupSpec, EmpiricalMoment> out;
  for (const auto& g : groups) out[g] = empirical_sur_moment(rec, g);
  return out;
}

/// E-hat #Hom(S, G_lambda) on a recover index set; absent samples are left out.
inline MomentVector empirical_hom_moments(const ExperimentRecord& rec, const MomentShape& shape) {
  shape.validate();
  MomentVector c{shape, {}};
  const HighPrecision n = HighPrecision(rec.samples());
  for (const auto& index : shape.indices()) {
    GroupSpec target = index_group(shape, index);
    HighPrecision sum = 0;
    for (const auto& [h, count] : rec.tally.counts) {
      BigInt hom = 1;
      for (Prime p : shape.primes) hom *= hom_count(p, h.sylow(p), target.sylow(p));
      sum += HighPrecision(count) * HighPrecision(hom);
    }
    c.values[index] = sum / n;
  }
  return c;
}

/// Runs the campaign with static sharding; identical for any worker count.
inline ExperimentRecord run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::optional<EntryDistribution> dist;
  if (cfg.model != ModelKind::graph) dist = cfg.entry_distribution();
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(cfg.workers, cfg.samples));
  std::vector<Tally> partial(workers);
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned w) {
    try {
      std::uint64_t begin = cfg.samples * w / workers, end = cfg.samples * (w + 1) / workers;
      for (std::uint64_t i = begin; i < end; ++i) partial[w].add(process_sample(cfg, dist ? &*dist : nullptr, i));
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentRecord rec;
  rec.config = cfg;
  for (const auto& t : partial) rec.tally.merge(t);
  rec.moments = empirical_moments(rec, cfg.effective_test_groups());
  double rate = static_cast<double>(rec.tally.unsaturated) / static_cast<double>(cfg.samples);
  if (rate > cfg.max_unsaturated_rate)
    rec.warnings.push_back("unsaturated rate " + std::to_string(rate) + " above threshold " +
                           std::to_string(cfg.max_unsaturated_rate));
  return rec;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j = {{"model", to_string(cfg.model)},
                      {"n", cfg.n},
                      {"primes", cfg.primes},
                      {"exponents", cfg.exponents},
                      {"exponent_ceiling", cfg.exponent_ceiling},
                      {"samples", cfg.samples},
                      {"seed", cfg.seed},
                      {"max_unsaturated_rate", cfg.max_unsaturated_rate}};
  std::vector<std::string> groups;
  for (const auto& g : cfg.test_groups) groups.push_back(g.to_string());
  j["test_groups"] = groups;
  if (cfg.model == ModelKind::graph) j["q"] = cfg.q;
  if (cfg.model == ModelKind::matrix_uniform) j["modulus"] = cfg.modulus;
  if (cfg.model == ModelKind::matrix_iid) {
    j["values"] = cfg.values;
    j["probabilities"] = cfg.probabilities;
    j["alpha"] = cfg.alpha;
  }
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.model = model_from_string(j.at("model").get<std::string>());
  cfg.n = j.at("n").get<std::size_t>();
  cfg.primes = j.at("primes").get<std::vector<Prime>>();
  cfg.exponents = j.at("exponents").get<std::vector<int>>();
  cfg.exponent_ceiling = j.value("exponent_ceiling", 64);
  cfg.samples = j.at("samples").get<std::uint64_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.max_unsaturated_rate = j.value("max_unsaturated_rate", 0.01);
  for (const auto& g : j.value("test_groups", std::vector<std::string>{})) cfg.test_groups.push_back(GroupSpec::parse(g));
  if (j.contains("q")) cfg.q = j["q"].get<double>();
  if (j.contains("modulus")) cfg.modulus = j["modulus"].get<std::uint64_t>();
  if (j.contains("values")) cfg.values = j["values"].get<std::vector<std::int64_t>>();
  if (j.contains("probabilities")) cfg.probabilities = j["probabilities"].get<std::vector<double>>();
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  cfg.validate();
  return cfg;
}

/// Canonical record: sorted keys, no worker count or timing.
inline nlohmann::json to_json(const ExperimentRecord& rec) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [g, c] : rec.tally.counts) counts[g.to_string()] = c;
  nlohmann::json moments = nlohmann::json::object();
  for (const auto& [g, m] : rec.moments)
    moments[g.to_string()] = {{"value", m.value}, {"standard_error", m.standard_error}, {"lower_bound", m.lower_bound}};
  return {{"schema_version", 1},
          {"kind", "experiment_record"},
          {"config", to_json(rec.config)},
          {"samples", rec.samples()},
          {"counts", counts},
          {"disconnected", rec.tally.disconnected},
          {"unsaturated", rec.tally.unsaturated},
          {"moments", moments},
          {"warnings", rec.warnings}};
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1 || j.value("kind", "") != "experiment_record")
    throw std::invalid_argument("not a version 1 experiment record");
  ExperimentRecord rec;
  rec.config = config_from_json(j.at("config"));
  for (const auto& [key, c] : j.at("counts").items()) rec.tally.counts[GroupSpec::parse(key)] = c.get<std::uint64_t>();
  rec.tally.disconnected = j.at("disconnected").get<std::uint64_t>();
  rec.tally.unsaturated = j.at("unsaturated").get<std::uint64_t>();
  for (const auto& [key, m] : j.at("moments").items())
    rec.moments[GroupSpec::parse(key)] = {m.at("value").get<double>(), m.at("standard_error").get<double>(),
                                          m.at("lower_bound").get<bool>()};
  rec.warnings = j.value("warnings", std::vector<std::string>{});
  if (rec.samples() != rec.config.samples) throw std::invalid_argument("record counts do not sum to the sample count");
  return rec;
}

/// Canonical text form: two-space indented JSON with a trailing newline.
inline std::string serialize(const ExperimentRecord& rec) { return to_json(rec).dump(2) + "\n"; }

/// CSV: one row per type with its count and frequency, then the excluded samples.
inline std::string to_csv(const ExperimentRecord& rec) {
  std::string out = "group,count,frequency\n";
  const double n = static_cast<double>(rec.samples());
  auto row = [&](const std::string& key, std::uint64_t c) {
    out += "\"" + key + "\"," + std::to_string(c) + "," + nlohmann::json(static_cast<double>(c) / n).dump() + "\n";
  };
  for (const auto& [g, c] : rec.tally.counts) row(g.to_string(), c);
  row("disconnected", rec.tally.disconnected);
  row("unsaturated", rec.tally.unsaturated);
  return out;
}

} // namespace sandpile
