#pragma once

// Exact laws and moments of the partition length K: the sampling formula for
// component counts, the pmf of K, E[K^r] via weighted Stirling numbers, and
// the brute-force enumeration oracles used to check them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pitman/combinatorics.hpp"
#include "pitman/errors.hpp"
#include "pitman/numerics.hpp"
#include "pitman/params.hpp"
#include "pitman/scalar.hpp"

namespace pitman {

namespace detail {

/// (theta)_{k;alpha} / (theta)_n with the common factor theta cancelled,
/// i.e. (theta+alpha)_{k-1;alpha} / (theta+1)_{n-1}. This is also the
/// continuous extension at theta = 0.
template <class Scalar>
Scalar weight_ratio(const PitmanParams<Scalar>& p, std::uint64_t k) {
  Scalar num = rising_factorial(Scalar(p.theta + p.alpha), k - 1, p.alpha);
  Scalar den = rising_factorial(Scalar(p.theta + Scalar(1)), p.n - 1);
  return Scalar(num / den);
}

/// Row n of the C-number triangle using O(n) memory.
template <class Scalar>
std::vector<Scalar> c_number_row(std::uint64_t n, const Scalar& alpha) {
  std::vector<Scalar> row{alpha};
  for (std::uint64_t m = 1; m < n; ++m) {
    std::vector<Scalar> next;
    next.reserve(m + 1);
    for (std::uint64_t k = 1; k <= m + 1; ++k) {
      Scalar value = Scalar(0);
      if (k <= m) value += (Scalar(static_cast<unsigned long>(m)) - Scalar(static_cast<unsigned long>(k)) * alpha) * row[k - 1];
      if (k >= 2) value += alpha * row[k - 2];
      next.push_back(std::move(value));
    }
    row = std::move(next);
  }
  return row;
}

}  // namespace detail

/// P(C = counts) under the two-parameter sampling formula:
///   n! (theta)_{k;alpha} / (theta)_n  prod_i [((1-alpha)_{i-1} / i!)^{c_i} / c_i!].
template <class Scalar>
Scalar psf_pmf(const PartitionCounts& counts, const PitmanParams<Scalar>& params) {
  params.validate();
  require(counts.valid(), "component counts must satisfy sum i*c_i = n");
  require(counts.n() == params.n, "component counts describe a different n");
  const std::uint64_t n = params.n;
  Scalar value = Scalar(1);
  for (std::uint64_t m = 2; m <= n; ++m) value *= Scalar(static_cast<unsigned long>(m));
  value *= detail::weight_ratio(params, counts.length());
  Scalar one_minus_alpha = Scalar(1) - params.alpha;
  Scalar factorial = Scalar(1);
  Scalar block_weight = Scalar(1);  // (1-alpha)_{i-1}
  for (std::uint64_t i = 1; i <= n; ++i) {
    if (i >= 2) {
      block_weight *= Scalar(one_minus_alpha + Scalar(static_cast<unsigned long>(i - 2)));
      factorial *= Scalar(static_cast<unsigned long>(i));
    }
    const std::uint64_t c = counts.counts[i - 1];
    if (c == 0) continue;
    Scalar ratio = Scalar(block_weight / factorial);
    Scalar c_factorial = Scalar(1);
    for (std::uint64_t j = 1; j <= c; ++j) {
      value *= ratio;
      c_factorial *= Scalar(static_cast<unsigned long>(j));
    }
    value /= c_factorial;
  }
  return value;
}

/// P(K = k) for k = 1..n (index k-1): c(n,k,alpha)/alpha^k (theta)_{k;alpha}/(theta)_n.
/// Exact mode is capped at CNumberTable<Rational>::kExactCap.
template <class Scalar>
std::vector<Scalar> length_pmf(const PitmanParams<Scalar>& params) {
  params.validate();
  if constexpr (std::is_same_v<Scalar, Rational>) {
    require(params.n <= CNumberTable<Rational>::kExactCap,
            "exact pmf is capped at n = " + std::to_string(CNumberTable<Rational>::kExactCap) +
                "; use floating mode for larger n");
  }
  std::vector<Scalar> c = detail::c_number_row(params.n, params.alpha);
  Scalar denominator = rising_factorial(Scalar(params.theta + Scalar(1)), params.n - 1);
  std::vector<Scalar> pmf;
  pmf.reserve(params.n);
  Scalar numerator = Scalar(1);  // (theta+alpha)_{k-1;alpha}
  Scalar alpha_power = Scalar(1);
  for (std::uint64_t k = 1; k <= params.n; ++k) {
    if (k >= 2) numerator *= Scalar(params.theta + Scalar(static_cast<unsigned long>(k - 1)) * params.alpha);
    alpha_power *= params.alpha;
    pmf.push_back(Scalar(c[k - 1] / alpha_power * numerator / denominator));
  }
  return pmf;
}

/// E[K^r] = sum_{i=0}^{r} (-1)^{r-i} R(r, i, theta/alpha) G_i, where G_i is
/// gamma_ratio_product(params, i) (which contains the (1+theta/alpha)_i factor).
inline Rational exact_moment(const ExactParams& params, std::uint64_t r) {
  params.validate();
  require(r >= 1, "moment order r must be at least 1");
  Rational lambda = params.lambda();
  Rational total = 0;
  for (std::uint64_t i = 0; i <= r; ++i) {
    Rational term = weighted_stirling_R(r, i, lambda) * gamma_ratio_product(params, i);
    if ((r - i) % 2 == 1) {
      total -= term;
    } else {
      total += term;
    }
  }
  return total;
}

/// Floating E[K^r]. The alternating sum is accumulated largest term first;
/// if it cancels by more than half of the working bits the evaluation is
/// repeated at doubled precision, failing with PrecisionError after
/// kMaxPrecisionDoublings retries.
inline Real exact_moment(const FloatParams& params, std::uint64_t r, long bits = working_precision()) {
  params.validate();
  require(r >= 1, "moment order r must be at least 1");
  return escalate_precision(
      bits,
      [&](long current) -> std::optional<Real> {
        FloatParams p{params.n, params.alpha.at_precision(std::max(current, params.alpha.precision())),
                      params.theta.at_precision(std::max(current, params.theta.precision()))};
        Real lambda = p.lambda();
        CompensatedSum sum;
        for (std::uint64_t i = 0; i <= r; ++i) {
          Real term = weighted_stirling_R(r, i, lambda) * gamma_ratio_product(p, i);
          sum.add((r - i) % 2 == 1 ? -term : term);
        }
        if (sum.lost_bits() > current / 2) return std::nullopt;
        return sum.total();
      },
      "exact_moment(n=" + std::to_string(params.n) + ", r=" + std::to_string(r) + ")");
}

/// Sum over the partition set of K^r times the sampling-formula probability.
inline Rational oracle_moment(const ExactParams& params, std::uint64_t r, std::uint64_t cap = kEnumerationCap) {
  params.validate();
  require(r >= 1, "moment order r must be at least 1");
  Rational total = 0;
  for_each_partition(
      params.n,
      [&](const PartitionCounts& counts) {
        Integer k_power;
        mpz_ui_pow_ui(k_power.get_mpz_t(), counts.length(), r);
        total += Rational(k_power) * psf_pmf(counts, params);
      },
      cap);
  return total;
}

/// pmf of K obtained by marginalizing the sampling formula over partitions.
inline std::vector<Rational> length_pmf_oracle(const ExactParams& params, std::uint64_t cap = kEnumerationCap) {
  params.validate();
  std::vector<Rational> pmf(params.n, Rational(0));
  for_each_partition(
      params.n, [&](const PartitionCounts& counts) { pmf[counts.length() - 1] += psf_pmf(counts, params); }, cap);
  return pmf;
}

struct LabeledValue {
  std::string label;
  Real value;
};

/// E[K^r] together with a normalized moment E[(K/scale)^r] and labelled
/// approximations of the normalized moment. Residuals are approximation
/// minus normalized value.
struct MomentReport {
  std::uint64_t r = 1;
  std::optional<Rational> exact_rational;
  Real exact;
  std::string scaling;
  Real scale;
  Real normalized;
  std::vector<LabeledValue> approximations;
  std::vector<LabeledValue> residuals;

  /// Residuals recomputed from the stored fields match the stored ones.
  bool residuals_consistent() const {
    if (approximations.size() != residuals.size()) return false;
    for (std::size_t j = 0; j < residuals.size(); ++j) {
      if (residuals[j].label != approximations[j].label) return false;
      if (residuals[j].value != approximations[j].value - normalized) return false;
    }
    return true;
  }
};

}  // namespace pitman
