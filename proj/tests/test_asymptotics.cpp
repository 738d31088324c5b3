#include <gtest/gtest.h>

#include <cmath>

#include "pitman/asymptotics.hpp"
#include "pitman/harness.hpp"

using namespace pitman;

namespace {

const double kSqrtPi = std::sqrt(M_PI);

double g_half(double x) { return std::exp(-x * x / 4) / kSqrtPi; }

}  // namespace

TEST(DiversityMoment, Examples) {
  EXPECT_NEAR(diversity_moment(Real(0.5), Real(0.5), 1).to_double(), kSqrtPi, 1e-14);
  EXPECT_NEAR(diversity_moment(Real(0.5), Real(0.5), 2).to_double(), 4.0, 1e-14);
  EXPECT_NEAR(diversity_moment(Real(0.5), Real(0), 1).to_double(), 2 / kSqrtPi, 1e-14);
  for (double a : {0.25, 0.6}) {
    for (double t : {-0.1, 2.0}) {
      for (int r = 1; r <= 4; ++r) {
        double want = std::tgamma(t / a + 1 + r) / std::tgamma(t / a + 1) * std::tgamma(t + 1) / std::tgamma(t + r * a + 1);
        EXPECT_NEAR(diversity_moment(Real(a), Real(t), r).to_double() / want, 1.0, 1e-12);
      }
    }
  }
}

TEST(DiversityMoment, ExactOnlyWhenRational) {
  EXPECT_EQ(diversity_moment_exact(Rational(1, 2), Rational(1, 2), 2), std::optional<Rational>(Rational(4)));
  EXPECT_EQ(diversity_moment_exact(Rational(1, 2), Rational(1, 2), 1), std::nullopt);
  EXPECT_EQ(diversity_moment_exact(Rational(1, 3), Rational(1), 3), std::optional<Rational>(Rational(60)));
}

TEST(GalphaDensity, ClosedFormAtHalf) {
  double worst = 0.0;
  for (double x = 0.01; x <= 10.0 + 1e-12; x += 0.01) {
    worst = std::max(worst, std::abs(galpha_density(0.5, x).to_double() - g_half(x)));
  }
  EXPECT_LE(worst, 1e-10);
  EXPECT_NEAR(galpha_density(0.5, 1e-9).to_double(), 1 / kSqrtPi, 1e-9);
  EXPECT_NEAR(galpha_density(0.5, 1.0).to_double(), 0.439391, 1e-6);
}

TEST(GalphaDensity, ZeroSineTermsDoNotStopSeries) {
  // At alpha = 1/2 every even term vanishes; truncation must look past them.
  EXPECT_NEAR(galpha_density(0.5, 6.0, 1e-30).to_double(), g_half(6.0), 1e-14);
  EXPECT_THROW(galpha_density(0.5, 40.0, 1e-30, 20), PrecisionError);
}

TEST(GalphaDensity, QuadratureMomentIdentity) {
  for (double a : {0.25, 0.5, 0.75}) {
    GalphaQuadrature quad(a);
    for (int p = 0; p <= 3; ++p) {
      double want = std::tgamma(p + 1.0) / std::tgamma(p * a + 1.0);
      EXPECT_NEAR(quad.moment(p) / want, 1.0, 1e-6) << a << " p=" << p;
    }
  }
}

TEST(DiversityDensity, Examples) {
  for (double x : {0.3, 1.0, 2.5}) {
    EXPECT_NEAR(diversity_density(0.5, 0.0, x).to_double(), galpha_density(0.5, x).to_double(), 1e-15);
  }
  EXPECT_NEAR(diversity_density(0.5, 0.5, 1.0).to_double(), std::exp(-0.25) / 2, 1e-10);
  EXPECT_NEAR(diversity_moment_quadrature(0.5, 0.5, 1.0), kSqrtPi, 1e-6);
  for (double a : {0.25, 0.5, 0.75}) {
    EXPECT_NEAR(diversity_moment_quadrature(a, 1.0, 0.0), 1.0, 1e-6);
    for (int r = 1; r <= 3; ++r) {
      double want = diversity_moment(Real(a), Real(1), r).to_double();
      EXPECT_NEAR(diversity_moment_quadrature(a, 1.0, r) / want, 1.0, 1e-6);
    }
  }
}

TEST(Theorem31, LimitAndRefinement) {
  Real a(0.5), t(1);
  Real big = theorem31_approx(make_float_params(1000000000000ULL, a, t), 2);
  Real limit = diversity_moment(a, t, 2);
  EXPECT_NEAR(big.to_double(), limit.to_double(), 2e-5);
  Real bigger = theorem31_approx(make_float_params(100000000000000ULL, a, t), 2);
  EXPECT_LT(abs(bigger - limit), abs(big - limit));
  // r = 1 display: leading [1 - theta Gamma(theta+alpha)/Gamma(theta+1) n^{-alpha}].
  FloatParams p = make_float_params(400, a, t);
  double lead = diversity_moment(a, t, 1).to_double();
  double want = lead * (1 - std::tgamma(1.5) / std::tgamma(2.0) / 20.0);
  EXPECT_NEAR(theorem31_approx(p, 1).to_double(), want, 1e-13);
}

TEST(Theorem31, ResidualConstantStable) {
  Real a(0.5), t(1);
  std::vector<double> c;
  for (std::uint64_t n : {2500u, 5000u, 10000u, 20000u}) {
    FloatParams p = make_float_params(n, a, t);
    Real exact = normalized_moment(p, 2, ScalingKind::n_alpha);
    double res = abs(theorem31_approx(p, 2) - exact).to_double();
    c.push_back(res / (2.0 / static_cast<double>(n)));
  }
  double hi = *std::max_element(c.begin(), c.end()), lo = *std::min_element(c.begin(), c.end());
  EXPECT_LT(hi / lo, 1.2);
}

TEST(Theorem31, ResidualSlopes) {
  std::vector<std::uint64_t> grid = parse_grid("2^8..2^16");
  std::vector<double> xs(grid.begin(), grid.end());
  for (double t : {0.5, 1.0, 5.0}) {
    for (std::uint64_t r = 2; r <= 3; ++r) {
      std::vector<Real> lead, refined;
      for (std::uint64_t n : grid) {
        FloatParams p = make_float_params(n, Real(0.5), Real(t));
        Real exact = normalized_moment(p, r, ScalingKind::n_alpha);
        lead.push_back(diversity_moment(p.alpha, p.theta, r) - exact);
        refined.push_back(theorem31_approx(p, r) - exact);
      }
      EXPECT_NEAR(fit_slope(xs, lead, 6).slope, -0.5, 0.1) << t << " r=" << r;
      EXPECT_NEAR(fit_slope(xs, refined, 6).slope, -1.0, 0.15) << t << " r=" << r;
    }
  }
}

TEST(Remark32, MomentDeficit) {
  for (double t : {0.5, 1.0, 5.0}) {
    for (std::uint64_t r = 1; r <= 4; ++r) {
      for (std::uint64_t n : {256u, 4096u, 65536u}) {
        FloatParams p = make_float_params(n, Real(0.5), Real(t));
        EXPECT_LT(normalized_moment(p, r, ScalingKind::n_alpha), diversity_moment(p.alpha, p.theta, r));
      }
    }
  }
}

TEST(Corrected, Examples) {
  EXPECT_NEAR(corrected_mean_limit(Real(0.5), Real(0.5)).to_double(), kSqrtPi, 1e-14);
  EXPECT_NEAR(corrected_mean_limit(Real(0.5), Real(0.5)).to_double(),
              diversity_moment(Real(0.5), Real(0.5), 1).to_double(), 1e-14);
  FloatParams p = make_float_params(1000, Real(0.5), Real(2));
  EXPECT_LT(corrected_scale(p), pow(Real(1000), Real(0.5)));
  EXPECT_THROW(corrected_scale(make_float_params(2, Real(0.5), Real(50))), InputError);
}

TEST(Kle, Examples) {
  FloatParams p = make_float_params(1000000000000ULL, Real(0.5), Real(1000000));
  EXPECT_NEAR(kle_normalized_approx(p, 1).to_double(), 1.0, 2e-3);
  Real a = p.alpha, t = p.theta, n(1e12);
  Real diff = kle_normalized_approx(p, 1) - kle_normalized_approx(p, 2);
  Real want = pow(t / n, a) - Real(3) * a * (Real(1) - a) / (Real(2) * t);
  EXPECT_LT(abs(diff - want).to_double(), 1e-25);
}

TEST(Kle, ResidualWithinBound) {
  FloatParams p = make_float_params(1000000, Real(0.5), Real(1000));
  Real exact = normalized_moment(p, 2, ScalingKind::kle);
  Real res = abs(kle_normalized_approx(p, 2) - exact);
  double q = std::sqrt(1e-3);
  double bound = q * (q + q) + 1e-3 * (q + 1e-3);
  EXPECT_LT(res.to_double(), 10 * bound);
}

TEST(MthA, Examples) {
  EXPECT_NEAR(mthA_scale(make_float_params(3, Real(0.5), Real(1))).to_double(), 2.0, 1e-30);
  FloatParams p = make_float_params(3, Real(0.5), Real(1));
  EXPECT_TRUE(z_statistic(2, p).is_zero() || abs(z_statistic(2, p)).to_double() < 1e-30);
  EXPECT_FALSE(joint_regime_warnings(make_float_params(100, Real(0.5), Real(100))).empty());
  EXPECT_TRUE(joint_regime_warnings(make_float_params(100000, Real(0.5), Real(100))).empty());
}

TEST(MthA, SecondOrderBeatsFirstAlongPath) {
  RegimePath path = regime_path(0.25, parse_grid("2^8..2^18"), 0.5);
  for (std::uint64_t r = 1; r <= 2; ++r) {
    Real prev(1e9);
    for (const RegimePoint& pt : path.points) {
      FloatParams p = make_float_params(pt.n, Real(0.5), pt.theta);
      Real m = normalized_moment(p, r, ScalingKind::mthA);
      Real first = abs(m - Real(1));
      Real second = abs(m - mthA_normalized_approx(p, r));
      EXPECT_LT(second, first);
      EXPECT_LT(first, prev);
      prev = first;
    }
  }
}

TEST(Ewens, Examples) {
  EXPECT_NEAR(ewens_reference_scale(Real(M_E - 1), Real(1)).to_double(), 1.0, 1e-15);
  EXPECT_NEAR(ewens_reference_scale(Real(10000), Real(100)).to_double(), 100 * std::log(101.0), 1e-10);
  EXPECT_NEAR(ewens_reference_scale(Real(10000), Real(100)).to_double(), 461.51, 0.01);
  FloatParams p = make_float_params(10000, Real(1e-6), Real(100));
  EXPECT_NEAR((mthA_scale(p) / ewens_reference_scale(Real(10000), Real(100))).to_double(), 1.0, 1e-4);
}

TEST(ZMoments, ExactSequenceApproachesLimits) {
  RegimePath path = regime_path(0.2, parse_grid("2^8..2^16"), 0.5, true);
  Real prev_mean(1e9), prev_gap(1e9);
  for (const RegimePoint& pt : path.points) {
    ZMoments z = exact_z_moments(make_float_params(pt.n, Real(0.5), pt.theta));
    Real gap = abs(z.second - Real(0.25));
    EXPECT_LT(abs(z.mean), prev_mean);
    EXPECT_LT(gap, prev_gap);
    prev_mean = abs(z.mean);
    prev_gap = gap;
  }
}

TEST(Regime, Feasibility) {
  EXPECT_TRUE(cr_feasibility(0.5, 0.25).feasible());
  CrFeasibility f = cr_feasibility(0.5, 0.5);
  EXPECT_FALSE(f.feasible());
  EXPECT_NE(f.violated().find("beta(2 alpha + 1) < 2 alpha"), std::string::npos);
  CrFeasibility g = cr_feasibility(0.75, 0.55);
  EXPECT_TRUE(g.power_ok);
  EXPECT_NE(g.violated().find("beta < 1/2"), std::string::npos);
  EXPECT_EQ(regime_path(0.0, {10, 20}, 0.5).kind, RegimeKind::fixed_theta);
  EXPECT_EQ(regime_path(0.25, {10, 20}, 0.5, true).kind, RegimeKind::joint);
  EXPECT_THROW(regime_path(0.5, {10, 20}, 0.5, true), InputError);
  EXPECT_THROW(regime_path(1.0, {10, 20}, 0.5), InputError);
  EXPECT_THROW(regime_path(0.25, {20, 10}, 0.5), InputError);
}

TEST(MomentReport, BuildsConsistentReport) {
  FloatParams p = make_float_params(500, Real(0.5), Real(3));
  for (ScalingKind k : {ScalingKind::n_alpha, ScalingKind::corrected, ScalingKind::kle, ScalingKind::mthA}) {
    MomentReport m = make_moment_report(p, 2, k);
    EXPECT_TRUE(m.residuals_consistent());
    EXPECT_EQ(m.approximations.size(), 4u);
    EXPECT_EQ(m.approximations[0].label, "leading");
  }
  MomentReport z = make_moment_report(make_float_params(50, Real(0.5), Real(-0.25)), 1);
  EXPECT_EQ(z.approximations.size(), 2u);
  EXPECT_EQ(parse_scaling("mthA"), ScalingKind::mthA);
  EXPECT_THROW(parse_scaling("nope"), InputError);
}
