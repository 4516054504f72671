// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// statistics and runtime. Exit status is nonzero if any criterion fails.

#include "sandpile/oracle/brute_force.hpp"
#include "sandpile/sandpile.hpp"

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

using namespace sandpile;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back((ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

std::string fmt(long double x, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

Real to_real(const HighPrecision& x) { return x.convert_to<Real>(); }

// Records shared between the Monte Carlo criteria.
std::optional<ExperimentRecord> graph_record;

ExperimentConfig graph_config() {
  ExperimentConfig cfg;
  cfg.model = ModelKind::graph;
  cfg.n = 80;
  cfg.q = 0.5;
  cfg.samples = 10000;
  cfg.seed = 1;
  cfg.workers = default_workers();
  cfg.test_groups = {GroupSpec::p_group(2, {1}), GroupSpec::p_group(2, {1, 1})};
  return cfg;
}

Outcome closed_forms_agree() {
  Outcome o;
  long double worst = 0;
  int count = 0;
  for (Prime p : {2, 3, 5, 7})
    for (const auto& lambda : partitions_bounded(12, 6, 12)) {
      Real exact = detail::to_real(detail::pairing_fraction(p, lambda));
      Real columns = detail::pairing_fraction_columns(p, lambda);
      worst = std::max(worst, std::abs(exact - columns) / exact);
      ++count;
    }
  o.check(worst <= 1e-12L, std::to_string(count) + " (p, lambda) pairs, worst relative difference " + fmt(worst));
  return o;
}

Outcome constants_reproduced() {
  Outcome o;
  Estimate cyclic = cyclic_upper_bound();
  Estimate square = squarefree_upper_bound();
  Estimate c2 = normalizing_constant(2);
  o.check(std::abs(cyclic.value - 0.7935212L) <= 1e-6L, "cyclic bound " + fmt(cyclic.value, 12) + " +- " + fmt(cyclic.error, 2));
  o.check(std::abs(square.value - 0.48240306L) <= 1e-6L, "square-free bound " + fmt(square.value, 12) + " +- " + fmt(square.error, 2));
  o.check(std::abs(1 - c2.value - 0.5806L) <= 1e-4L, "1 - C(2) = " + fmt(1 - c2.value, 12));
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  for (Prime p : {2, 3}) {
    int size = p == 2 ? 8 : 5; // p^{|lambda|} <= 256
    auto types = partitions_up_to(size);
    std::map<std::string, std::pair<int, int>> tally;
    auto check = [&](const std::string& name, bool ok) {
      ++tally[name].first;
      tally[name].second += !ok;
    };
    for (const auto& lambda : types) {
      check("aut_order", oracle::aut_order(p, lambda) == aut_order(p, lambda));
      check("pairing_count", oracle::pairing_count(p, lambda) == pairing_count(p, lambda));
      for (const auto& [nu, count] : enumerate_subgroups(p, lambda)) check("enumerate_subgroups", subgroup_count(p, nu, lambda) == count);
      for (const auto& mu : types) {
        check("hom_count", oracle::hom_count(p, mu, lambda) == hom_count(p, mu, lambda));
        check("sur_count", oracle::sur_count(p, mu, lambda) == sur_count(p, mu, lambda));
      }
    }
    for (int n = 0; n <= (p == 2 ? 3 : 2); ++n) {
      auto profile = oracle::symmetric_rank_profile(p, static_cast<std::size_t>(n));
      for (int r = 0; r <= n; ++r)
        check("macwilliams_rank_count", profile[static_cast<std::size_t>(r)] == macwilliams_rank_count(p, n, r));
    }
    for (const auto& [name, t] : tally)
      o.check(t.second == 0, "p=" + std::to_string(p) + " " + name + ": " + std::to_string(t.first) + " checks, " +
                                 std::to_string(t.second) + " mismatches");
  }
  return o;
}

Outcome normalization() {
  Outcome o;
  Real mass = 0;
  for (const auto& lambda : partitions_up_to(30)) mass += limit_prob_sylow(2, lambda).value;
  o.check(mass >= 1 - 1e-6L, "sum over |lambda| <= 30 at p=2: 1 - " + fmt(1 - mass, 4));
  Real ranks = 0;
  for (int r = 0; r <= 40; ++r) ranks += prank_prob(2, r).value;
  o.check(std::abs(ranks - 1) <= 1e-10L, "sum of 2-rank law over r <= 40: 1 + " + fmt(ranks - 1, 4));
  return o;
}

Outcome moment_identity() {
  Outcome o;
  for (Prime p : {2, 3})
    for (const Partition& mu : {Partition{1}, Partition{2}, Partition{1, 1}}) {
      Estimate m = sur_moment_from_limits(p, mu, p == 2 ? 24 : 16);
      Real expected = wedge2_order(p, mu).convert_to<Real>();
      Real deviation = std::abs(m.value - expected);
      o.check(deviation <= m.error && m.error <= 1e-4L,
              "p=" + std::to_string(p) + " G type " + mu.to_string() + ": moment " + fmt(m.value, 10) + " vs " +
                  fmt(expected) + ", deviation " + fmt(deviation, 3) + ", tolerance " + fmt(m.error, 3));
    }
  return o;
}

Outcome monte_carlo_vs_theory() {
  Outcome o;
  ExperimentConfig cfg = graph_config();
  graph_record = run_experiment(cfg);
  const auto& rec = *graph_record;
  ComparisonPolicy policy;
  policy.moment_tolerance = {{GroupSpec::p_group(2, {1}), 0.05}, {GroupSpec::p_group(2, {1, 1}), 0.15}};
  auto report = compare_to_theory(rec, policy);
  o.note("graph n=80 q=0.5 N=" + std::to_string(cfg.samples) + " seed " + std::to_string(cfg.seed) + ", " +
         std::to_string(rec.tally.disconnected) + " disconnected, " + std::to_string(rec.tally.unsaturated) + " unsaturated");
  for (const auto& v : report.verdicts)
    o.check(v.pass, v.name + ": " + fmt(v.value, 4) + " (bound " + fmt(v.bound, 4) + ")");
  for (const auto& [g, m] : rec.moments)
    o.note("E #Sur(S, " + g.to_string() + ") = " + fmt(m.value, 5) + " +- " + fmt(m.standard_error, 3) + " (1 se)");
  o.check(static_cast<double>(rec.tally.disconnected) / static_cast<double>(rec.samples()) < 1e-3, "disconnected frequency below 1e-3");
  return o;
}

Outcome universality() {
  Outcome o;
  if (!graph_record) graph_record = run_experiment(graph_config());
  ExperimentConfig uniform = graph_config();
  uniform.model = ModelKind::matrix_uniform;
  uniform.modulus = 8;
  uniform.test_groups.clear();
  ExperimentConfig iid = uniform;
  iid.model = ModelKind::matrix_iid;
  iid.modulus = 0;
  iid.values = {0, 1};
  iid.probabilities = {0.5, 0.5};
  iid.alpha = 0.5;
  auto u = run_experiment(uniform);
  auto b = run_experiment(iid);
  double tv_u = compare_records(*graph_record, u, 2);
  double tv_b = compare_records(*graph_record, b, 2);
  o.check(tv_u < 0.03, "graph vs uniform symmetric mod 8 (types cut at exponent 3): TV " + fmt(tv_u, 4));
  o.check(tv_b < 0.03, "graph vs iid {0,1} entries with probability 1/2 each (alpha = 1/2): TV " + fmt(tv_b, 4));
  o.note("vs theory: uniform mod 8 TV " + fmt(compare_to_theory(u).tv.at(2), 4) + ", iid TV " + fmt(compare_to_theory(b).tv.at(2), 4));
  return o;
}

template <class F> void for_lattice(int m, int top, F f) {
  for (const auto& index : MomentShape{{2}, {m}, {top}}.indices()) f(index[0]);
}

Outcome moment_inversion() {
  Outcome o;
  MomentShape shape{{2}, {3}, {6}};
  auto r = recover_distribution(build_theoretical_moments(shape));
  for (const auto& g : {GroupSpec{}, GroupSpec::p_group(2, {1}), GroupSpec::p_group(2, {2}), GroupSpec::p_group(2, {1, 1})}) {
    const auto& v = r.at(g);
    Real expected = limit_prob_sylow(2, g.sylow(2)).value;
    Real deviation = std::abs(to_real(v.value) - expected);
    Real estimate = to_real(v.error_estimate);
    o.check(deviation < 1e-3L && deviation <= estimate,
            "x(" + g.to_string() + ") = " + fmt(to_real(v.value), 8) + " vs " + fmt(expected, 8) + ": deviation " +
                fmt(deviation, 3) + ", solver error estimate " + fmt(estimate, 3) + ", boundary residual " +
                fmt(to_real(v.boundary_residual), 3));
  }
  o.note("total recovered mass " + fmt(to_real(r.total()), 8) + ", minimum value " + fmt(to_real(r.min_value()), 3));

  long bound_checks = 0, bound_failures = 0;
  for (Prime p : {2, 3})
    for (int m = 1; m <= 3; ++m)
      for_lattice(m, 4, [&](const std::vector<int>& b) {
        HactsTable t({p, b}, 12);
        t.for_each([&](const std::vector<int>& d, const BigRational& a) {
          ++bound_checks;
          bound_failures += BigRational(abs(a)) > t.bound(d[0]);
        });
      });
  o.check(bound_failures == 0, "coefficient bound, exact rational comparison: " + std::to_string(bound_checks) + " coefficients, " +
                                   std::to_string(bound_failures) + " violations");

  long grid = 0, grid_failures = 0;
  for (Prime p : {2, 3}) {
    auto tails = euler_tails(p, 8);
    for (int m = 1; m <= 3; ++m)
      for_lattice(m, 4, [&](const std::vector<int>& b) {
        HactsSpec spec{p, b};
        HactsTable table(spec, 48);
        for_lattice(m, 4, [&](const std::vector<int>& f) {
          ++grid;
          HighPrecision closed = hacts_value(spec, f, tails);
          SeriesValue series = hacts_series(table, f);
          Real scale = to_real(series.magnitude);
          bool ok = to_real(abs(series.value - closed)) <= 1e-10L * scale;
          if (f > b) ok = ok && closed == 0 && to_real(abs(series.value)) <= 1e-10L * scale;
          if (f == b) ok = ok && closed != 0 && to_real(abs(series.value)) > 1e-3L * scale;
          grid_failures += !ok;
        });
      });
  }
  o.check(grid_failures == 0, "vanishing grid (parts <= 4, m <= 3, p in {2,3}): " + std::to_string(grid) + " points, " +
                                  std::to_string(grid_failures) + " failures");
  return o;
}

Outcome determinism() {
  Outcome o;
  if (!graph_record) graph_record = run_experiment(graph_config());
  ExperimentConfig cfg = graph_record->config;
  const std::string reference = serialize(*graph_record);
  for (unsigned w : {1u, 8u}) {
    if (w == cfg.workers) continue;
    ExperimentConfig again = cfg;
    again.workers = w;
    o.check(serialize(run_experiment(again)) == reference,
            "graph record, " + std::to_string(cfg.workers) + " vs " + std::to_string(w) + " workers: byte-identical");
  }
  ExperimentConfig matrix = cfg;
  matrix.model = ModelKind::matrix_uniform;
  matrix.modulus = 8;
  matrix.samples = 2000;
  matrix.test_groups.clear();
  matrix.workers = 1;
  std::string one = serialize(run_experiment(matrix));
  matrix.workers = 8;
  o.check(serialize(run_experiment(matrix)) == one, "uniform mod 8 record, 1 vs 8 workers: byte-identical");
  return o;
}

struct Criterion {
  int number;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "closed-form self-consistency", 5, closed_forms_agree},
      {2, "constants reproduced", 5, constants_reproduced},
      {3, "oracle equivalence", 60, oracle_equivalence},
      {4, "normalization", 10, normalization},
      {5, "moment identity", 30, moment_identity},
      {6, "Monte Carlo vs theory", 600, monte_carlo_vs_theory},
      {7, "universality", 600, universality},
      {8, "moment inversion", 60, moment_inversion},
      {9, "determinism", 600, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(seconds < c.budget_seconds, "runtime " + fmt(seconds, 3) + " s (budget " + fmt(c.budget_seconds) + " s)");
    failures += !o.pass;
    std::cout << "criterion " << c.number << " " << (o.pass ? "PASS" : "FAIL") << " " << c.name << "\n";
    for (const auto& d : o.details) std::cout << "    " << d << "\n";
    std::cout.flush();
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << "\n";
  return failures ? 1 : 0;
}
