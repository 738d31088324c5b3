#include <gtest/gtest.h>

#include "pitman/distribution.hpp"

using namespace pitman;

namespace {

const std::vector<Rational> kAlphas{Rational(1, 4), Rational(1, 3), Rational(1, 2), Rational(3, 4)};

std::vector<Rational> thetas_for(const Rational& a) {
  return {Rational(-a + Rational(1, 8)), Rational(1, 2), Rational(1), Rational(10)};
}

}  // namespace

TEST(PsfPmf, Examples) {
  ExactParams p = make_exact_params(3, Rational(1, 2), Rational(1, 2));
  EXPECT_EQ(psf_pmf(PartitionCounts{{0, 0, 1}}, p), Rational(1, 5));
  EXPECT_EQ(psf_pmf(PartitionCounts{{3, 0, 0}}, p), Rational(2, 5));
  EXPECT_EQ(psf_pmf(PartitionCounts{{1, 1, 0}}, p), Rational(2, 5));
  for (Rational t : {Rational(-1, 3), Rational(7)}) {
    EXPECT_EQ(psf_pmf(PartitionCounts{{1}}, make_exact_params(1, Rational(1, 2), t)), Rational(1));
  }
  EXPECT_THROW(psf_pmf(PartitionCounts{{1, 1, 1}}, p), InputError);
}

TEST(PsfPmf, SumsToOne) {
  for (const Rational& a : kAlphas) {
    for (const Rational& t : thetas_for(a)) {
      for (std::uint64_t n = 1; n <= 12; ++n) {
        Rational total = 0;
        for_each_partition(n, [&](const PartitionCounts& c) { total += psf_pmf(c, make_exact_params(n, a, t)); });
        EXPECT_EQ(total, Rational(1));
      }
    }
  }
}

TEST(LengthPmf, Examples) {
  EXPECT_EQ(length_pmf(make_exact_params(3, Rational(1, 2), Rational(1, 2))),
            (std::vector<Rational>{Rational(1, 5), Rational(2, 5), Rational(2, 5)}));
  EXPECT_EQ(length_pmf(make_exact_params(1, Rational(1, 4), Rational(3))), std::vector<Rational>{Rational(1)});
  for (const Rational& a : kAlphas) {
    for (const Rational& t : thetas_for(a)) {
      std::vector<Rational> want{Rational((1 - a) / (t + 1)), Rational((t + a) / (t + 1))};
      EXPECT_EQ(length_pmf(make_exact_params(2, a, t)), want);
    }
  }
}

TEST(LengthPmf, ThetaZeroIsContinuous) {
  std::vector<Rational> pmf = length_pmf(make_exact_params(4, Rational(1, 2), Rational(0)));
  Rational total = 0;
  for (const Rational& v : pmf) total += v;
  EXPECT_EQ(total, Rational(1));
  EXPECT_EQ(pmf, length_pmf_oracle(make_exact_params(4, Rational(1, 2), Rational(0))));
}

TEST(LengthPmf, FloatingAgreesWithExact) {
  ExactParams e = make_exact_params(150, Rational(2, 3), Rational(5, 2));
  std::vector<Rational> exact = length_pmf(e);
  std::vector<Real> approx = length_pmf(to_float(e));
  for (std::size_t k = 0; k < exact.size(); ++k) {
    EXPECT_LT(abs(approx[k] - Real(exact[k])).to_double(), 1e-30 + 1e-25 * Real(exact[k]).to_double()) << k;
  }
  EXPECT_THROW(length_pmf(make_exact_params(201, Rational(1, 2), Rational(1))), InputError);
}

TEST(Oracle, Examples) {
  ExactParams p = make_exact_params(3, Rational(1, 2), Rational(1, 2));
  EXPECT_EQ(length_pmf_oracle(p), (std::vector<Rational>{Rational(1, 5), Rational(2, 5), Rational(2, 5)}));
  EXPECT_EQ(oracle_moment(make_exact_params(1, Rational(1, 3), Rational(2)), 3), Rational(1));
  EXPECT_EQ(oracle_moment(make_exact_params(2, Rational(1, 2), Rational(1, 2)), 1), Rational(5, 3));
  ExactParams q = make_exact_params(4, Rational(1, 3), Rational(2, 3));
  EXPECT_EQ(length_pmf_oracle(q), length_pmf(q));
}

TEST(ExactMoment, Fixtures) {
  ExactParams p = make_exact_params(3, Rational(1, 2), Rational(1, 2));
  EXPECT_EQ(exact_moment(p, 1), Rational(11, 5));
  EXPECT_EQ(exact_moment(p, 2), Rational(27, 5));
  for (std::uint64_t r = 1; r <= 5; ++r) {
    EXPECT_EQ(exact_moment(make_exact_params(1, Rational(3, 4), Rational(-1, 2)), r), Rational(1));
  }
  EXPECT_THROW(exact_moment(p, 0), InputError);
}

TEST(ExactMoment, EqualsOracleOnGrid) {
  for (const Rational& a : kAlphas) {
    for (const Rational& t : thetas_for(a)) {
      for (std::uint64_t n = 1; n <= 10; ++n) {
        ExactParams p = make_exact_params(n, a, t);
        EXPECT_EQ(length_pmf(p), length_pmf_oracle(p));
        for (std::uint64_t r = 1; r <= 4; ++r) EXPECT_EQ(exact_moment(p, r), oracle_moment(p, r));
      }
    }
  }
}

TEST(ExactMoment, MonotoneInR) {
  for (const Rational& a : kAlphas) {
    for (std::uint64_t n : {1u, 5u, 30u}) {
      ExactParams p = make_exact_params(n, a, Rational(1, 2));
      for (std::uint64_t r = 1; r < 6; ++r) EXPECT_LE(exact_moment(p, r), exact_moment(p, r + 1));
    }
  }
}

TEST(ExactMoment, MatchesPmfMoments) {
  ExactParams p = make_exact_params(40, Rational(3, 7), Rational(9, 4));
  std::vector<Rational> pmf = length_pmf(p);
  for (std::uint64_t r = 1; r <= 5; ++r) {
    Rational want = 0;
    for (std::uint64_t k = 1; k <= p.n; ++k) {
      Rational power = 1;
      for (std::uint64_t j = 0; j < r; ++j) power *= Rational(k);
      want += power * pmf[k - 1];
    }
    EXPECT_EQ(exact_moment(p, r), want);
  }
}

TEST(ExactMoment, FloatingAgreesWithRational) {
  PrecisionScope scope(128);
  for (std::uint64_t n : {1u, 10u, 137u, 1000u}) {
    for (auto [a, t] : {std::pair{Rational(1, 2), Rational(1)}, {Rational(1, 4), Rational(-1, 8)},
                        {Rational(3, 4), Rational(10)}, {Rational(1, 3), Rational(0)}}) {
      ExactParams e = make_exact_params(n, a, t);
      for (std::uint64_t r = 1; r <= 6; ++r) {
        Real want(exact_moment(e, r));
        Real got = exact_moment(to_float(e), r);
        EXPECT_LT(abs(got / want - Real(1)).to_double(), 1e-20) << n << " r=" << r;
      }
    }
  }
}

TEST(ExactMoment, EscalatesUnderCancellation) {
  // At 53 bits the alternating sum for n = 1 cancels completely (the answer
  // is 1 while the largest term is ~lambda^r); escalation recovers it.
  FloatParams p = make_float_params(1, Real(0.001), Real(50));
  Real v = exact_moment(p, 6, 53);
  EXPECT_NEAR(v.to_double(), 1.0, 1e-12);
  EXPECT_THROW(exact_moment(make_float_params(1, Real(1e-12), Real(1e6)), 10, 53), PrecisionError);
}

TEST(MomentReport, ResidualsConsistent) {
  MomentReport m;
  m.normalized = Real(2);
  m.approximations = {{"a", Real(2.5)}};
  m.residuals = {{"a", Real(0.5)}};
  EXPECT_TRUE(m.residuals_consistent());
  m.residuals[0].value = Real(0.25);
  EXPECT_FALSE(m.residuals_consistent());
}

TEST(Params, Validation) {
  EXPECT_THROW(make_exact_params(0, Rational(1, 2), Rational(1)), InputError);
  EXPECT_THROW(make_exact_params(3, Rational(1), Rational(1)), InputError);
  EXPECT_THROW(make_exact_params(3, Rational(0), Rational(1)), InputError);
  EXPECT_THROW(make_exact_params(3, Rational(1, 2), Rational(-1, 2)), InputError);
  EXPECT_NO_THROW(make_exact_params(3, Rational(1, 2), Rational(-1, 4)));
}
