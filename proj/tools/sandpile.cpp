#include "sandpile/oracle/brute_force.hpp"
#include "sandpile/sandpile.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace sandpile;
using nlohmann::json;

namespace {

constexpr int exit_mismatch = 2;

std::string real_text(Real x) {
  std::ostringstream s;
  s << std::setprecision(18) << x;
  return s.str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return json::parse(in);
}

std::string csv_quote(const std::string& s) { return "\"" + s + "\""; }

struct TheoryArgs {
  Prime prime = 2;
  int max_size = 6;
  int max_part = 0;
  int tensor = 0;
  double tolerance = 1e-15;
  bool constants = false;
  std::string format = "csv";
  std::string out;
};

int run_theory(const TheoryArgs& a) {
  TruncationPolicy policy;
  policy.tolerance = static_cast<Real>(a.tolerance);
  policy.validate();
  int max_part = a.max_part > 0 ? a.max_part : a.max_size;
  if (a.tensor > 0) max_part = std::min(max_part, a.tensor);
  json rows = json::array();
  std::string csv = "p,type,probability,error\n";
  for (const auto& lambda : partitions_bounded(a.max_size, max_part, a.max_size)) {
    Estimate e = a.tensor > 0 ? limit_prob_tensor(a.prime, lambda, a.tensor, policy) : limit_prob_sylow(a.prime, lambda, policy);
    rows.push_back({{"p", a.prime}, {"type", lambda.to_string()}, {"probability", static_cast<double>(e.value)},
                    {"error", static_cast<double>(e.error)}});
    csv += std::to_string(a.prime) + "," + csv_quote(lambda.to_string()) + "," + real_text(e.value) + "," + real_text(e.error) + "\n";
  }
  json constants;
  if (a.constants) {
    auto c = normalizing_constant(a.prime, policy);
    auto cyc = cyclic_upper_bound(policy);
    auto sq = squarefree_upper_bound(policy);
    constants = {{"normalizing_constant", {{"value", static_cast<double>(c.value)}, {"error", static_cast<double>(c.error)}}},
                 {"cyclic_upper_bound", {{"value", static_cast<double>(cyc.value)}, {"error", static_cast<double>(cyc.error)}}},
                 {"squarefree_upper_bound", {{"value", static_cast<double>(sq.value)}, {"error", static_cast<double>(sq.error)}}}};
    csv += "\nconstant,value,error\n";
    csv += "normalizing_constant(" + std::to_string(a.prime) + ")," + real_text(c.value) + "," + real_text(c.error) + "\n";
    csv += "cyclic_upper_bound," + real_text(cyc.value) + "," + real_text(cyc.error) + "\n";
    csv += "squarefree_upper_bound," + real_text(sq.value) + "," + real_text(sq.error) + "\n";
  }
  if (a.format == "json") {
    json j = {{"schema_version", 1}, {"kind", "theory_table"}, {"rows", rows}};
    if (a.tensor > 0) j["tensor_exponent"] = a.tensor;
    if (a.constants) j["constants"] = constants;
    emit(j.dump(2) + "\n", a.out);
  } else {
    emit(csv, a.out);
  }
  return 0;
}

struct SimulateArgs {
  std::string model = "graph";
  std::size_t n = 80;
  double q = 0.5;
  std::uint64_t modulus = 0;
  std::vector<Prime> primes{2};
  std::vector<int> exponents;
  std::uint64_t samples = 1000;
  std::uint64_t seed = 1;
  unsigned workers = default_workers();
  std::vector<std::int64_t> values{0, 1};
  std::vector<double> probabilities{0.5, 0.5};
  double alpha = 0.5;
  std::vector<std::string> groups;
  std::string format = "json";
  std::string out;
  std::string report;
  bool compare = true;
  double tv_tolerance = ComparisonPolicy{}.tv_tolerance;
};

void print_verdicts(const ComparisonReport& report) {
  for (const auto& v : report.verdicts)
    std::cerr << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.value << " (bound " << v.bound << ")\n";
}

int run_simulate(const SimulateArgs& a) {
  ExperimentConfig cfg;
  cfg.model = model_from_string(a.model);
  cfg.n = a.n;
  cfg.q = a.q;
  cfg.modulus = a.modulus;
  cfg.primes = a.primes;
  cfg.exponents = a.exponents.empty() ? std::vector<int>(a.primes.size(), 8) : a.exponents;
  cfg.samples = a.samples;
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  cfg.values = a.values;
  cfg.probabilities = a.probabilities;
  cfg.alpha = a.alpha;
  for (const auto& g : a.groups) cfg.test_groups.push_back(GroupSpec::parse(g));

  auto start = std::chrono::steady_clock::now();
  ExperimentRecord rec = run_experiment(cfg);
  std::cerr << "wall time " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s\n";
  for (const auto& w : rec.warnings) std::cerr << "warning: " << w << "\n";
  emit(a.format == "csv" ? to_csv(rec) : serialize(rec), a.out);
  if (!a.compare) return 0;
  ComparisonPolicy policy;
  policy.tv_tolerance = a.tv_tolerance;
  ComparisonReport report = compare_to_theory(rec, policy);
  print_verdicts(report);
  if (!a.report.empty()) emit(to_json(report).dump(2) + "\n", a.report);
  return report.pass() ? 0 : exit_mismatch;
}

struct MomentsArgs {
  std::string record;
  std::vector<std::string> groups;
  std::string format = "csv";
  std::string out;
};

int run_moments(const MomentsArgs& a) {
  ExperimentRecord rec = record_from_json(load_json(a.record));
  std::vector<GroupSpec> groups;
  for (const auto& g : a.groups) groups.push_back(GroupSpec::parse(g));
  if (groups.empty()) groups = rec.config.effective_test_groups();
  rec.moments = empirical_moments(rec, groups);
  ComparisonPolicy policy;
  json rows = json::array();
  std::string csv = "group,value,standard_error,lower_bound,expected,pass\n";
  bool pass = true;
  for (const auto& [g, m] : rec.moments) {
    double expected = moment_value(g).convert_to<double>();
    Verdict v = make_verdict(g.to_string(), m.value - expected,
                             std::max(policy.sigmas * m.standard_error, policy.moment_relative * expected));
    pass = pass && v.pass;
    rows.push_back({{"group", g.to_string()}, {"value", m.value}, {"standard_error", m.standard_error},
                    {"lower_bound", m.lower_bound}, {"expected", expected}, {"pass", v.pass}});
    csv += csv_quote(g.to_string()) + "," + json(m.value).dump() + "," + json(m.standard_error).dump() + "," +
           (m.lower_bound ? "true" : "false") + "," + json(expected).dump() + "," + (v.pass ? "true" : "false") + "\n";
  }
  if (a.format == "json")
    emit(json{{"schema_version", 1}, {"kind", "empirical_moments"}, {"samples", rec.samples()}, {"moments", rows}}.dump(2) + "\n", a.out);
  else
    emit(csv, a.out);
  return pass ? 0 : exit_mismatch;
}

struct RecoverArgs {
  std::string record;
  std::string moments;
  std::vector<Prime> primes{2};
  std::vector<int> parts{3};
  std::vector<int> caps{6};
  bool raw = false;
  std::string format = "json";
  std::string out;
  std::string save_moments;
};

int run_recover(const RecoverArgs& a) {
  MomentShape shape{a.primes, a.parts, a.caps};
  MomentVector c;
  if (!a.moments.empty()) {
    c = moment_vector_from_json(load_json(a.moments));
  } else if (!a.record.empty()) {
    c = empirical_hom_moments(record_from_json(load_json(a.record)), shape);
  } else {
    c = build_theoretical_moments(shape);
  }
  if (!a.save_moments.empty()) emit(to_json(c).dump(2) + "\n", a.save_moments);
  Recovery r = recover_distribution(c, {!a.raw});
  if (a.format == "csv") {
    std::string csv = "index,group,tensor_capped,value,raw,boundary_residual,error_estimate\n";
    for (const auto& v : r.values)
      csv += csv_quote(index_to_string(v.index)) + "," + csv_quote(v.group.to_string()) + "," + (v.tensor_capped ? "true" : "false") +
             "," + to_decimal(v.value) + "," + to_decimal(v.raw) + "," + to_decimal(v.boundary_residual) + "," +
             to_decimal(v.error_estimate) + "\n";
    emit(csv, a.out);
  } else {
    emit(to_json(r).dump(2) + "\n", a.out);
  }
  return r.plausible(HighPrecision("1e-2")) ? 0 : exit_mismatch;
}

struct OracleArgs {
  std::vector<Prime> primes{2, 3};
  std::uint64_t max_order = 64;
  int rank_n = 2;
};

int run_oracle(const OracleArgs& a) {
  bool pass = true;
  for (Prime p : a.primes) {
    require_prime(p);
    int size = 0;
    while (big_pow(p, static_cast<std::uint64_t>(size + 1)) <= a.max_order) ++size;
    auto types = partitions_up_to(size);
    std::map<std::string, std::pair<int, int>> tally; // checks, mismatches
    auto check = [&](const std::string& name, bool ok) {
      ++tally[name].first;
      tally[name].second += !ok;
    };
    for (const auto& lambda : types) {
      check("aut_order", oracle::aut_order(p, lambda) == aut_order(p, lambda));
      check("pairing_count", oracle::pairing_count(p, lambda) == pairing_count(p, lambda));
      for (const auto& [nu, count] : enumerate_subgroups(p, lambda)) check("subgroup_count", subgroup_count(p, nu, lambda) == count);
      for (const auto& mu : types) {
        check("hom_count", oracle::hom_count(p, mu, lambda) == hom_count(p, mu, lambda));
        check("sur_count", oracle::sur_count(p, mu, lambda) == sur_count(p, mu, lambda));
      }
    }
    for (int n = 0; n <= a.rank_n; ++n) {
      auto profile = oracle::symmetric_rank_profile(p, static_cast<std::size_t>(n));
      for (int r = 0; r <= n; ++r) check("macwilliams_rank_count", profile[static_cast<std::size_t>(r)] == macwilliams_rank_count(p, n, r));
    }
    for (const auto& [name, t] : tally) {
      std::cout << "p=" << p << " " << name << ": " << t.first << " checks, " << t.second << " mismatches\n";
      pass = pass && t.second == 0;
    }
  }
  return pass ? 0 : exit_mismatch;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sandpile group statistics: closed forms, simulation and moment inversion"};
  app.require_subcommand(1);

  TheoryArgs theory;
  auto* t = app.add_subcommand("theory", "Print limiting probabilities of Sylow p-types");
  t->add_option("--prime", theory.prime, "Prime p")->capture_default_str();
  t->add_option("--max-size", theory.max_size, "Largest |lambda|")->capture_default_str();
  t->add_option("--max-part", theory.max_part, "Largest part (default: max size)");
  t->add_option("--tensor", theory.tensor, "Law of S (x) Z/p^e instead of S");
  t->add_option("--tolerance", theory.tolerance, "Truncation tolerance of infinite products")->capture_default_str();
  t->add_flag("--constants", theory.constants, "Also print the normalizing constant and cyclic/square-free bounds");
  t->add_option("--format", theory.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  t->add_option("--out", theory.out, "Output file (default stdout)");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Sample a model and tabulate Sylow types");
  s->add_option("--model", sim.model)->check(CLI::IsMember({"graph", "matrix-uniform", "matrix-iid"}))->capture_default_str();
  s->add_option("--n", sim.n, "Vertices or matrix size")->capture_default_str();
  s->add_option("--q", sim.q, "Edge probability")->capture_default_str();
  s->add_option("--mod-a", sim.modulus, "Modulus a for matrix-uniform");
  s->add_option("--prime", sim.primes, "Primes to record")->capture_default_str();
  s->add_option("--exponent", sim.exponents, "Initial working exponent per prime (default 8)");
  s->add_option("--samples", sim.samples)->capture_default_str();
  s->add_option("--seed", sim.seed)->capture_default_str();
  s->add_option("--workers", sim.workers, "Threads (default SANDPILE_WORKERS or hardware)")->check(CLI::PositiveNumber);
  s->add_option("--values", sim.values, "Entry support for matrix-iid")->capture_default_str();
  s->add_option("--probabilities", sim.probabilities, "Entry probabilities for matrix-iid")->capture_default_str();
  s->add_option("--alpha", sim.alpha, "Balance level for matrix-iid")->capture_default_str();
  s->add_option("--group", sim.groups, "Test group for Sur-moments, e.g. 2:[1,1]");
  s->add_option("--format", sim.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  s->add_option("--out", sim.out, "Record file (default stdout)");
  s->add_option("--report", sim.report, "Write the comparison report as JSON");
  s->add_flag("!--no-compare", sim.compare, "Skip the comparison with theory");
  s->add_option("--tv-tolerance", sim.tv_tolerance, "Total variation band (sized for N = 10^4 by default)")->capture_default_str();

  MomentsArgs mom;
  auto* m = app.add_subcommand("moments", "Empirical Sur-moments from a record");
  m->add_option("--record", mom.record, "Experiment record (JSON)")->required();
  m->add_option("--group", mom.groups, "Test groups (default: the record's)");
  m->add_option("--format", mom.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  m->add_option("--out", mom.out);

  RecoverArgs rec;
  auto* r = app.add_subcommand("recover", "Recover a distribution from Hom-moments");
  auto* from_record = r->add_option("--record", rec.record, "Use empirical moments of a record");
  r->add_option("--moments", rec.moments, "Use a moment vector file")->excludes(from_record);
  r->add_option("--prime", rec.primes)->capture_default_str();
  r->add_option("--parts", rec.parts, "Parts m per prime")->capture_default_str();
  r->add_option("--cap", rec.caps, "Cap K per prime")->capture_default_str();
  r->add_flag("--raw", rec.raw, "Plain solve without extrapolation");
  r->add_option("--save-moments", rec.save_moments, "Write the moment vector used");
  r->add_option("--format", rec.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  r->add_option("--out", rec.out);

  OracleArgs ora;
  auto* o = app.add_subcommand("oracle", "Check counting formulas against brute force");
  o->add_option("--prime", ora.primes)->capture_default_str();
  o->add_option("--max-order", ora.max_order, "Largest group order")->capture_default_str();
  o->add_option("--rank-n", ora.rank_n, "Largest matrix size for rank counts")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    if (*t) return run_theory(theory);
    if (*s) return run_simulate(sim);
    if (*m) return run_moments(mom);
    if (*r) return run_recover(rec);
    if (*o) return run_oracle(ora);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
