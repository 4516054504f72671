#include "sandpile/recover/hacts.hpp"
#include "sandpile/recover/solve.hpp"
#include "sandpile/theory/limits.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sandpile;

namespace {

// Weakly decreasing vectors of length m with entries <= top.
std::vector<std::vector<int>> lattice(int m, int top) {
  MomentShape shape{{2}, {m}, {top}};
  std::vector<std::vector<int>> out;
  for (const auto& index : shape.indices()) out.push_back(index[0]);
  return out;
}

Real to_real(const HighPrecision& x) { return x.convert_to<Real>(); }

} // namespace

TEST(Hacts, FirstCoefficients) {
  for (Prime p : {2, 3, 5})
    for (int b1 : {0, 1, 3}) {
      HactsTable t({p, {b1}}, 4);
      EXPECT_EQ(t.g_coefficients()[0], 1);
      EXPECT_EQ(t.g_coefficients()[1], -detail::inverse_prime_power(p, b1) / BigRational(p - 1));
      // c_n = (-1)^n p^{-b_1 n} / prod_{i <= n} (p^i - 1).
      BigRational expected = 1;
      for (int n = 1; n <= 4; ++n) {
        expected *= -detail::inverse_prime_power(p, b1) / BigRational(big_pow(p, n) - 1);
        EXPECT_EQ(t.g_coefficients()[static_cast<std::size_t>(n)], expected);
      }
    }
}

TEST(Hacts, PolynomialDegreesAndSupport) {
  HactsSpec spec{2, {4, 2, 1}};
  HactsTable t(spec, 5);
  ASSERT_EQ(t.h_factors().size(), 2u);
  EXPECT_EQ(t.h_factors()[0].size(), 3u); // degree b_1 - b_2
  EXPECT_EQ(t.h_factors()[1].size(), 2u); // degree b_2 - b_3
  EXPECT_EQ(spec.root_exponents(2), (std::vector<int>{7, 8}));
  EXPECT_EQ(spec.root_exponents(3), (std::vector<int>{8}));
  int count = 0;
  t.for_each([&](const std::vector<int>& d, const BigRational& a) {
    ++count;
    EXPECT_LE(d[1] + d[2], spec.b[0]);
    EXPECT_EQ(a, t.coefficient(d));
  });
  EXPECT_EQ(count, 6 * 3 * 2);
  EXPECT_EQ(t.coefficient({2, 3, 0}), 0);
  EXPECT_EQ(t.coefficient({6, 0, 0}), 0);
}

TEST(Hacts, RejectsBadSpecs) {
  EXPECT_THROW(HactsTable({4, {1}}, 3), std::invalid_argument);
  EXPECT_THROW(HactsTable({2, {1, 2}}, 3), std::invalid_argument);
  EXPECT_THROW(HactsTable({2, {}}, 3), std::invalid_argument);
  EXPECT_THROW(HactsTable({2, {1}}, -1), std::invalid_argument);
}

TEST(Hacts, CoefficientBoundHoldsExactly) {
  for (Prime p : {2, 3})
    for (int m = 1; m <= 3; ++m)
      for (const auto& b : lattice(m, 4)) {
        HactsTable t({p, b}, 12);
        t.for_each([&](const std::vector<int>& d, const BigRational& a) { EXPECT_LE(abs(a), t.bound(d[0])) << p; });
      }
}

TEST(Hacts, VanishingGrid) {
  // All lattice points f with parts <= 4 against every b with parts <= 4.
  for (Prime p : {2, 3})
    for (int m = 1; m <= 3; ++m) {
      auto points = lattice(m, 4);
      for (const auto& b : points) {
        HactsSpec spec{p, b};
        HactsTable table(spec, 48);
        auto tails = euler_tails(p, 8);
        for (const auto& f : points) {
          HighPrecision closed = hacts_value(spec, f, tails);
          SeriesValue series = hacts_series(table, f);
          EXPECT_LE(to_real(abs(series.value - closed)), 1e-10L * to_real(series.magnitude));
          if (f > b) {
            EXPECT_EQ(closed, 0);
            EXPECT_LE(to_real(abs(series.value)), 1e-10L * to_real(series.magnitude));
          }
          if (f == b) {
            EXPECT_NE(closed, 0);
            EXPECT_GT(to_real(abs(series.value)), 1e-3L * to_real(series.magnitude));
          }
        }
      }
    }
}

TEST(MomentShape, IndexSetIsLexicographicAndDownwardClosed) {
  MomentShape shape{{2}, {3}, {4}};
  auto indices = shape.indices();
  EXPECT_EQ(indices.size(), 35u); // C(4 + 3, 3)
  EXPECT_TRUE(std::is_sorted(indices.begin(), indices.end()));
  for (const auto& index : indices) EXPECT_TRUE(shape.contains(index));
  MomentShape two{{2, 3}, {2, 1}, {2, 2}};
  auto pairs = two.indices();
  EXPECT_EQ(pairs.size(), 6u * 3u);
  EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end()));
  EXPECT_THROW((MomentShape{{3, 2}, {1, 1}, {1, 1}}).validate(), std::invalid_argument);
}

TEST(MomentShape, GroupIndexRoundTrip) {
  MomentShape shape{{2, 3}, {3, 2}, {5, 5}};
  for (const auto& index : shape.indices()) EXPECT_EQ(group_index(shape, index_group(shape, index)), index);
  EXPECT_EQ(index_group(shape, {{1, 1, 0}, {2, 0}}).to_string(), "2:[2];3:[1,1]");
  EXPECT_THROW(group_index(shape, GroupSpec::cyclic(16)), std::invalid_argument);
}

TEST(TheoreticalMoments, Examples) {
  MomentShape shape{{2}, {2}, {3}};
  auto c = build_theoretical_moments(shape);
  EXPECT_EQ(c.at({{0, 0}}), 1);
  EXPECT_EQ(c.at(group_index(shape, GroupSpec::cyclic(2))), 2);
  // (Z/2)^2: trivial, three lines, and the whole group with |wedge^2| = 2.
  EXPECT_EQ(c.at(group_index(shape, GroupSpec::p_group(2, {1, 1}))), 6);
  EXPECT_EQ(c.at(group_index(shape, GroupSpec::cyclic(4))), 3);
}

TEST(TheoreticalMoments, EnvelopeBound) {
  // C_lambda <= F^m p^{sum lambda_i(lambda_i - 1)/2} on transposed indices, F as in the subgroup-sum bound.
  const Real f = 2 / (1 - std::pow(2.0L, -1.0L / 8)) / q_product(2, 1, 1, {}).value;
  MomentShape shape{{2}, {3}, {6}};
  auto c = build_theoretical_moments(shape);
  for (const auto& [index, value] : c.values) {
    long long e = 0;
    for (int v : index[0]) e += static_cast<long long>(v) * (v - 1) / 2;
    EXPECT_LE(to_real(value), std::pow(f, 3.0L) * real_pow<Real>(2, e));
  }
}

TEST(TheoreticalMoments, MultiPrimeFactorizes) {
  MomentShape shape{{2, 3}, {2, 1}, {2, 2}};
  auto c = build_theoretical_moments(shape);
  auto c2 = build_theoretical_moments({{2}, {2}, {2}});
  auto c3 = build_theoretical_moments({{3}, {1}, {2}});
  for (const auto& [index, value] : c.values) EXPECT_EQ(value, c2.at({index[0]}) * c3.at({index[1]}));
}

TEST(MomentVector, JsonRoundTrip) {
  auto c = build_theoretical_moments({{3}, {2}, {3}});
  auto back = moment_vector_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(back.shape, c.shape);
  for (const auto& [index, value] : c.values) EXPECT_EQ(back.at(index), value);
  auto j = to_json(c);
  j["moments"].erase(0);
  EXPECT_THROW(moment_vector_from_json(j), std::invalid_argument);
}

TEST(Recover, AgreesWithLimitLawAtSmallCaps) {
  auto c = build_theoretical_moments({{2}, {3}, {6}});
  auto r = recover_distribution(c);
  EXPECT_TRUE(r.extrapolated);
  for (const auto& g : {GroupSpec{}, GroupSpec::cyclic(2), GroupSpec::cyclic(4), GroupSpec::p_group(2, {1, 1})}) {
    const auto& v = r.at(g);
    Real expected = limit_prob_sylow(2, g.sylow(2)).value;
    Real deviation = std::abs(to_real(v.value) - expected);
    EXPECT_LT(deviation, 1e-3L) << g.to_string();
    EXPECT_LE(deviation, to_real(v.error_estimate)) << g.to_string();
  }
  EXPECT_TRUE(r.plausible(HighPrecision("1e-3")));
}

TEST(Recover, EndToEndSmallTypes) {
  for (Prime p : {2, 3}) {
    MomentShape shape{{p}, {3}, {6}};
    auto r = recover_distribution(build_theoretical_moments(shape));
    for (const auto& lambda : partitions_up_to(3)) {
      const auto& v = r.at(GroupSpec::p_group(p, lambda));
      Real expected = limit_prob_tensor(p, lambda, 3).value;
      EXPECT_LE(std::abs(to_real(v.value) - expected), to_real(v.error_estimate)) << p << lambda.to_string();
    }
  }
}

TEST(Recover, CappedTypesTargetTensorLaw) {
  auto r = recover_distribution(build_theoretical_moments({{2}, {2}, {6}}));
  const auto& v = r.at(GroupSpec::cyclic(4));
  EXPECT_TRUE(v.tensor_capped);
  EXPECT_FALSE(r.at(GroupSpec::cyclic(2)).tensor_capped);
  EXPECT_NEAR(static_cast<double>(to_real(v.value)), static_cast<double>(limit_prob_tensor(2, {2}, 2).value), 1e-3);
}

TEST(Recover, RawSolveConvergesWithCap) {
  Real previous = 2;
  for (int cap : {4, 8, 12, 14}) {
    RecoverOptions options;
    options.extrapolate = false;
    auto r = recover_distribution(build_theoretical_moments({{2}, {2}, {cap}}), options);
    Real deviation = std::abs(to_real(r.at(GroupSpec{}).value) - normalizing_constant(2).value);
    EXPECT_LT(deviation, previous);
    previous = deviation;
  }
  // The error shrinks by about p^2 every two cap steps.
  EXPECT_LT(previous, 0.002L);
}

TEST(Recover, PerturbationStability) {
  auto c = build_theoretical_moments({{2}, {3}, {6}});
  auto base = recover_distribution(c);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> noise(-1e-8, 1e-8);
  for (auto& [index, value] : c.values) value += noise(rng);
  auto shaken = recover_distribution(c);
  for (const auto& g : {GroupSpec{}, GroupSpec::cyclic(2), GroupSpec::cyclic(4), GroupSpec::p_group(2, {1, 1})})
    EXPECT_LT(to_real(abs(shaken.at(g).value - base.at(g).value)), 1e-4L);
}

TEST(Recover, FiniteDistributionIsReproducedExactly) {
  // Moments of a law supported on a few types: the solve is exact once the cap covers the support.
  MomentShape shape{{3}, {2}, {12}};
  std::map<Partition, Real> law{{{}, 0.5L}, {{1}, 0.25L}, {{2, 1}, 0.125L}, {{1, 1, 1}, 0.125L}};
  MomentVector c{shape, {}};
  for (const auto& index : shape.indices()) {
    HighPrecision sum = 0;
    Partition target = index_group(shape, index).sylow(3);
    for (const auto& [type, x] : law) sum += HighPrecision(x) * HighPrecision(hom_count(3, type, target));
    c.values[index] = sum;
  }
  RecoverOptions options;
  options.extrapolate = false;
  auto r = recover_distribution(c, options);
  for (const auto& v : r.values) {
    Partition type = v.group.sylow(3);
    Real expected = law.count(type) ? law[type] : 0;
    EXPECT_NEAR(static_cast<double>(to_real(v.value)), static_cast<double>(expected), 1e-9) << type.to_string();
  }
}

TEST(Recover, TwoPrimeSmoke) {
  MomentShape shape{{2, 3}, {1, 1}, {10, 10}};
  auto r = recover_distribution(build_theoretical_moments(shape));
  EXPECT_FALSE(r.extrapolated);
  Real expected = limit_prob_tensor(2, {}, 1).value * limit_prob_tensor(3, {}, 1).value;
  EXPECT_NEAR(static_cast<double>(to_real(r.at(GroupSpec{}).value)), static_cast<double>(expected), 0.02);
  Real expected6 = limit_prob_tensor(2, {1}, 1).value * limit_prob_tensor(3, {1}, 1).value;
  EXPECT_NEAR(static_cast<double>(to_real(r.at(GroupSpec::cyclic(6)).value)), static_cast<double>(expected6), 0.02);
}

TEST(Recover, JsonReportsDiagnostics) {
  auto r = recover_distribution(build_theoretical_moments({{2}, {2}, {4}}));
  auto j = to_json(r);
  EXPECT_EQ(j["kind"], "recovered_distribution");
  EXPECT_EQ(j["values"].size(), r.values.size());
  for (const auto& v : j["values"]) {
    EXPECT_TRUE(v.contains("boundary_residual"));
    EXPECT_TRUE(v.contains("error_estimate"));
  }
}
