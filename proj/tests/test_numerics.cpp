#include <gtest/gtest.h>

#include <cmath>

#include "pitman/numerics.hpp"
#include "pitman/params.hpp"

using namespace pitman;

namespace {

Real rel_err(const Real& got, const Real& want) { return abs(got / want - Real(1)); }

}  // namespace

TEST(RisingFactorial, Examples) {
  EXPECT_EQ(rising_factorial(Rational(7, 3), 0, Rational(5)), Rational(1));
  EXPECT_EQ(rising_factorial(Rational(2), 3, Rational(1)), Rational(24));
  EXPECT_EQ(rising_factorial(Rational(1, 2), 2, Rational(1, 2)), Rational(1, 2));
  EXPECT_EQ(rising_factorial(Rational(3, 2), 2), Rational(15, 4));
  EXPECT_EQ(rising_factorial(Real(2), 3).to_double(), 24.0);
}

TEST(LogGamma, Examples) {
  EXPECT_TRUE(log_gamma(Real(1)).is_zero());
  EXPECT_LT(abs(log_gamma(Real(0.5)) - log(sqrt(Real::pi(128)))).to_double(), 1e-35);
  EXPECT_LT(abs(log_gamma(Real(5)) - log(Real(24))).to_double(), 1e-35);
  EXPECT_LT(abs(log_gamma(Rational(5, 2)) - log(Real(3) * sqrt(Real::pi(128)) / Real(4))).to_double(), 1e-35);
}

// Reference values computed independently with mpmath at 40 digits.
TEST(LogGamma, CertifiedAgainstReferenceValues) {
  const std::vector<std::pair<const char*, const char*>> ref{
      {"0.001", "6.90717888538385368251234466808"},   {"0.1", "2.25271265173420595986970164637"},
      {"0.5", "0.572364942924700087071713675677"},    {"1", "0"},
      {"1.5", "-0.120782237635245222345518445782"},   {"2", "0"},
      {"2.5", "0.284682870472919159632494669683"},    {"3.7", "1.42807232666538792187238112505"},
      {"5", "3.1780538303479456196469416013"},        {"7.25", "7.05218545073853944492574925313"},
      {"10", "12.8018274800814696112077178746"},      {"12.5", "18.7343475119364457016341244572"},
      {"20", "39.3398841871994940362246523946"},      {"33.3", "82.6037235816549529283230340109"},
      {"50", "144.565743946344886008918443063"},      {"100", "359.13420536957539877604401046"},
      {"250.75", "1132.66449168657458570075836699"},  {"1000", "5905.22042320918121182607691236"},
      {"12345.678", "103959.919905546060921080570494"}, {"1e6", "12815504.569147611659976971785"}};
  ASSERT_EQ(ref.size(), 20u);
  for (const auto& [x, want] : ref) {
    Real got = log_gamma(Real::from_string(x));
    Real expected = Real::from_string(want);
    if (expected.is_zero()) {
      EXPECT_LT(abs(got).to_double(), 1e-30) << x;
    } else {
      EXPECT_LT(rel_err(got, expected).to_double(), 1e-20) << x;
    }
  }
}

TEST(StirlingGamma, Examples) {
  // The two-term formula is 3.18e-5 off at x = 10, just inside 1/(288 x^2).
  Real g10 = stirling_gamma(Real(10));
  EXPECT_LT(rel_err(g10, Real(362880)).to_double(), 1.0 / 28800);
  EXPECT_GT(rel_err(g10, Real(362880)).to_double(), 3e-5);
  Real g100 = stirling_gamma(Real(100));
  EXPECT_LT(rel_err(g100, exp(log_gamma(Real(100)))).to_double(), 1e-6);
  double at_one = std::sqrt(2 * M_PI) * std::exp(-1.0) * 13.0 / 12.0;
  EXPECT_NEAR(stirling_gamma(Real(1)).to_double(), at_one, 1e-12);
  EXPECT_NEAR(at_one, 0.99898, 1e-5);
}

TEST(StirlingGamma, RelativeErrorBound) {
  for (double x : {5.0, 7.5, 10.0, 20.0, 50.0, 100.0, 1000.0}) {
    double err = rel_err(stirling_gamma(Real(x)), exp(log_gamma(Real(x)))).to_double();
    EXPECT_LE(err, 0.01 / (x * x)) << x;
    EXPECT_LE(err, 1.0 / (288 * x * x) * 1.05) << x;
  }
}

TEST(GammaRatioProduct, ExactExamples) {
  ExactParams p = make_exact_params(3, Rational(1, 2), Rational(1, 2));
  EXPECT_EQ(gamma_ratio_product(p, 0), Rational(1));
  EXPECT_EQ(gamma_ratio_product(p, 1), Rational(16, 5));
  EXPECT_EQ(gamma_ratio_product(p, 2), Rational(14));
  // Identity anchor: the two n-dependent ratios alone give 8/5.
  EXPECT_EQ(gamma_ratio_product(p, 1) / Rational(2), Rational(8, 5));
  ExactParams one = make_exact_params(1, Rational(1, 3), Rational(2));
  for (std::uint64_t i = 1; i <= 4; ++i) EXPECT_EQ(gamma_ratio_product(one, i), rising_factorial(Rational(7), i));
}

TEST(GammaRatioProduct, ExactMatchesLogGamma) {
  for (std::uint64_t n : {1u, 2u, 7u, 50u, 1000u, 10000u}) {
    for (auto [a, t] : {std::pair{Rational(1, 2), Rational(1, 2)}, {Rational(1, 3), Rational(5)},
                        {Rational(3, 4), Rational(-1, 2)}, {Rational(1, 4), Rational(0)}}) {
      ExactParams e = make_exact_params(n, a, t);
      FloatParams f = to_float(e);
      for (std::uint64_t i = 1; i <= 6; ++i) {
        Real ex = Real(gamma_ratio_product(e, i));
        // Independent oracle: the three gamma ratios straight from log_gamma.
        Real ia = Real(static_cast<unsigned long>(i)) * f.alpha;
        Real nn(static_cast<unsigned long>(n));
        Real lg = log_gamma(f.theta / f.alpha + Real(static_cast<unsigned long>(i) + 1)) -
                  log_gamma(f.theta / f.alpha + Real(1)) + log_gamma(f.theta + nn + ia) - log_gamma(f.theta + nn) +
                  log_gamma(f.theta + Real(1)) - log_gamma(f.theta + Real(1) + ia);
        EXPECT_LT(rel_err(ex, exp(lg)).to_double(), 1e-28) << n << " " << i;
        EXPECT_LT(rel_err(gamma_ratio_product(f, i), ex).to_double(), 1e-28) << n << " " << i;
      }
    }
  }
}

TEST(Lemma41, MatchesExactAtScale) {
  FloatParams p = make_float_params(1000000, Real(0.5), Real(1000));
  Real rel = rel_err(lemma41_expansion(p, 1), gamma_ratio_product(p, 1));
  EXPECT_LT(rel.to_double(), 1e-5);
  EXPECT_GT(rel.to_double(), 1e-8);
}

TEST(Lemma42, Examples) {
  Real alpha(0.5), theta(10);
  std::uint64_t n = 1000000;
  Real nn(static_cast<unsigned long>(n));
  Real rel = rel_err(lemma42_expansion(n, theta, alpha, 1), lemma42_exact(n, theta, alpha, 1));
  EXPECT_LT(rel.to_double(), 1.0 / 1e6 + 100.0 / 1e12);
  // theta = 0 gives n^{i alpha} with an O(1/n) residual.
  Real zero(0);
  EXPECT_EQ(lemma42_expansion(n, zero, alpha, 2).to_double(), pow(nn, Real(1)).to_double());
  EXPECT_LT(rel_err(lemma42_expansion(4096, zero, Real(0.75), 2), lemma42_exact(4096, zero, Real(0.75), 2)).to_double(),
            1.0 / 4096);
}

TEST(Lemma43, Examples) {
  EXPECT_EQ(lemma43_expansion(Real(10), Real(0.5), 0).to_double(), 1.0);
  Real rel = rel_err(lemma43_expansion(Real(1000), Real(0.5), 1), lemma43_exact(Real(1000), Real(0.5), 1));
  EXPECT_LT(rel.to_double(), 1.0 / 1e6);
  // i alpha = 1: exact ratio 1/(theta+1), expansion theta^{-1}(1 - 1/theta).
  Real third = Real(1) / Real(3);
  Real theta(100);
  Real exact = lemma43_exact(theta, third, 3);
  EXPECT_LT(rel_err(exact, Real(1) / Real(101)).to_double(), 1e-30);
  Real expansion = lemma43_expansion(theta, third, 3);
  EXPECT_LT(rel_err(expansion, (Real(1) - Real(1) / theta) / theta).to_double(), 1e-30);
  EXPECT_LT(abs(expansion - exact).to_double(), 2e-6);
}

TEST(Lemma44, Examples) {
  Real theta(1000), alpha(0.5);
  EXPECT_LT(rel_err(lemma44_expansion(theta, alpha, 2), lemma44_exact(theta, alpha, 2)).to_double(), 1.0 / 1e6);
  EXPECT_LT(rel_err(lemma44_expansion(theta, alpha, 1), theta / alpha + Real(1)).to_double(), 1e-35);
}

TEST(CompensatedSum, DetectsCancellation) {
  CompensatedSum s;
  s.add(Real(1) + pow(Real(2), -100L));
  s.add(Real(-1));
  EXPECT_GE(s.lost_bits(), 99);
  EXPECT_EQ(s.total().to_double(), std::ldexp(1.0, -100));
  CompensatedSum t;
  t.add(Real(3));
  t.add(Real(4));
  EXPECT_EQ(t.lost_bits(), 0);
}

TEST(EscalatePrecision, DoublesThenFails) {
  std::vector<long> seen;
  Real v = escalate_precision(
      64, [&](long bits) -> std::optional<Real> {
        seen.push_back(bits);
        if (bits < 256) return std::nullopt;
        return Real(1);
      },
      "test");
  EXPECT_EQ(seen, (std::vector<long>{64, 128, 256}));
  EXPECT_EQ(v.precision(), 64);
  EXPECT_THROW(escalate_precision(64, [](long) -> std::optional<Real> { return std::nullopt; }, "never"),
               PrecisionError);
}

TEST(Precision, EnvironmentOverride) {
  setenv("PITMAN_PRECISION_BITS", "200", 1);
  EXPECT_EQ(default_precision_bits(), 200);
  unsetenv("PITMAN_PRECISION_BITS");
  EXPECT_EQ(default_precision_bits(), kDefaultPrecisionBits);
}
