#pragma once

// Special-function kernel: rising factorials, log-gamma, Stirling's formula
// and the gamma-ratio products entering the moment formula, together with
// their large-parameter expansions.

#include <algorithm>
#include <bit>
#include <limits>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pitman/errors.hpp"
#include "pitman/params.hpp"
#include "pitman/scalar.hpp"

namespace pitman {

/// (x)_{i;y} = x (x+y) ... (x+(i-1)y), with (x)_{0;y} = 1.
/// Requires y >= 0 and, for i >= 1, x > -y.
template <class Scalar>
Scalar rising_factorial(const Scalar& x, std::uint64_t i, const Scalar& y) {
  require(y >= Scalar(0), "rising_factorial: step must be nonnegative");
  if (i == 0) return Scalar(1);
  require(x > Scalar(-y), "rising_factorial: x must exceed -y");
  Scalar result = x;
  Scalar term = x;
  for (std::uint64_t j = 1; j < i; ++j) {
    term += y;
    result *= term;
  }
  return result;
}

/// (x)_i with unit step.
template <class Scalar>
Scalar rising_factorial(const Scalar& x, std::uint64_t i) {
  return rising_factorial(x, i, Scalar(1));
}

/// Natural log of Gamma(x) for x > 0 at the precision of x.
inline Real log_gamma(const Real& x) {
  require(x > Real(0), "log_gamma: argument must be positive");
  return lgamma(x);
}

inline Real log_gamma(const Rational& x) { return log_gamma(Real(x)); }

/// Two-term Stirling approximation sqrt(2 pi) e^{-x} x^{x-1/2} (1 + 1/(12x)).
inline Real stirling_gamma(const Real& x) {
  require(x > Real(0), "stirling_gamma: argument must be positive");
  Real two_pi = Real(2) * Real::pi(x.precision());
  Real log_lead = Real(0.5) * log(two_pi) - x + (x - Real(0.5)) * log(x);
  return exp(log_lead) * (Real(1) + Real(1) / (Real(12) * x));
}

namespace detail {

/// ln Gamma(a + shift) - ln Gamma(a), evaluated with enough guard bits that
/// the subtraction of two large logs keeps the working precision.
inline Real log_gamma_difference(const Real& a, const Real& shift) {
  long bits = std::max(a.precision(), shift.precision());
  Real top = a + shift;
  require(a > Real(0) && top > Real(0), "gamma ratio: arguments must be positive");
  long magnitude = std::max(0L, std::max(top.exponent(), a.exponent()));
  // |ln Gamma(z)| < z ln z, which has at most exponent(z) + log2(exponent(z)) + 1 bits.
  long guard = 16 + magnitude + (magnitude > 1 ? static_cast<long>(std::bit_width(static_cast<unsigned long>(magnitude))) : 1);
  PrecisionScope scope(bits + guard);
  Real hi = top.at_precision(bits + guard);
  Real lo = a.at_precision(bits + guard);
  return (lgamma(hi) - lgamma(lo)).at_precision(bits);
}

}  // namespace detail

/// Gamma(a + shift) / Gamma(a) in floating arithmetic.
inline Real gamma_ratio(const Real& a, const Real& shift) { return exp(detail::log_gamma_difference(a, shift)); }

/// The three-factor product
///   [Gamma(theta/alpha+1+i)/Gamma(theta/alpha+1)]
///   [Gamma(theta+n+i alpha)/Gamma(theta+n)] [Gamma(theta+1)/Gamma(theta+1+i alpha)].
///
/// Exact mode uses the rising-factorial reduction
///   (theta/alpha+1)_i (theta+i alpha+1)_{n-1} / (theta+1)_{n-1},
/// so no transcendental value is ever formed. i = 0 gives 1.
inline Rational gamma_ratio_product(const ExactParams& params, std::uint64_t i) {
  params.validate();
  if (i == 0) return Rational(1);
  Rational lambda1 = params.lambda() + 1;
  Rational shifted = params.theta + Rational(i) * params.alpha + 1;
  Rational base = params.theta + 1;
  Rational result = rising_factorial(lambda1, i) * rising_factorial(shifted, params.n - 1) /
                    rising_factorial(base, params.n - 1);
  return result;
}

/// Floating counterpart, evaluated in log space.
inline Real gamma_ratio_product(const FloatParams& params, std::uint64_t i) {
  params.validate();
  if (i == 0) return Real(1);
  const Real& alpha = params.alpha;
  const Real& theta = params.theta;
  Real ia = Real(static_cast<unsigned long>(i)) * alpha;
  Real log_value = detail::log_gamma_difference(params.lambda() + Real(1), Real(static_cast<unsigned long>(i))) +
                   detail::log_gamma_difference(theta + Real(static_cast<unsigned long>(params.n)), ia) -
                   detail::log_gamma_difference(theta + Real(1), ia);
  return exp(log_value);
}

/// (theta/alpha * n^alpha / theta^alpha)^i {1 + i alpha theta/n + i^2 alpha(1-alpha)/(2 theta)};
/// requires theta > 0.
inline Real lemma41_expansion(const FloatParams& params, std::uint64_t i) {
  params.validate();
  require(params.theta > Real(0), "product expansion requires theta > 0");
  require(i >= 1, "product expansion requires i >= 1");
  const Real& a = params.alpha;
  const Real& t = params.theta;
  Real n(static_cast<unsigned long>(params.n));
  Real ir(static_cast<unsigned long>(i));
  Real lead = pow(t / a * pow(n / t, a), static_cast<long>(i));
  return lead * (Real(1) + ir * a * t / n + ir * ir * a * (Real(1) - a) / (Real(2) * t));
}

/// Gamma(theta+n+i alpha)/Gamma(theta+n) ~ n^{i alpha} (1 + i alpha theta / n).
inline Real lemma42_expansion(std::uint64_t n, const Real& theta, const Real& alpha, std::uint64_t i) {
  require(n >= 1, "n must be positive");
  require(theta >= Real(0), "theta must be nonnegative");
  Real nr(static_cast<unsigned long>(n));
  Real ia = Real(static_cast<unsigned long>(i)) * alpha;
  return pow(nr, ia) * (Real(1) + ia * theta / nr);
}

/// Gamma(theta+1)/Gamma(theta+1+i alpha) ~ theta^{-i alpha} (1 - i alpha (i alpha + 1) / (2 theta)).
inline Real lemma43_expansion(const Real& theta, const Real& alpha, std::uint64_t i) {
  require(theta > Real(0), "theta must be positive");
  if (i == 0) return Real(1);
  Real ia = Real(static_cast<unsigned long>(i)) * alpha;
  return pow(theta, -ia) * (Real(1) - ia * (ia + Real(1)) / (Real(2) * theta));
}

/// Gamma(theta/alpha+1+i)/Gamma(theta/alpha+1) ~ (theta/alpha)^i (1 + i(i+1) alpha / (2 theta)).
inline Real lemma44_expansion(const Real& theta, const Real& alpha, std::uint64_t i) {
  require(theta > Real(0), "theta must be positive");
  require(i >= 1, "i must be at least 1");
  Real ir(static_cast<unsigned long>(i));
  return pow(theta / alpha, static_cast<long>(i)) * (Real(1) + ir * (ir + Real(1)) * alpha / (Real(2) * theta));
}

/// Exact sides of the three single-ratio expansions.
inline Real lemma42_exact(std::uint64_t n, const Real& theta, const Real& alpha, std::uint64_t i) {
  return gamma_ratio(theta + Real(static_cast<unsigned long>(n)), Real(static_cast<unsigned long>(i)) * alpha);
}
inline Real lemma43_exact(const Real& theta, const Real& alpha, std::uint64_t i) {
  if (i == 0) return Real(1);
  return Real(1) / gamma_ratio(theta + Real(1), Real(static_cast<unsigned long>(i)) * alpha);
}
inline Real lemma44_exact(const Real& theta, const Real& alpha, std::uint64_t i) {
  return rising_factorial(Real(theta / alpha + Real(1)), i);
}

// ---------------------------------------------------------------------------
// Precision escalation

/// Largest number of doublings attempted before giving up.
inline constexpr int kMaxPrecisionDoublings = 4;

/// Runs `eval(bits)` at `bits`, 2*bits, ... until it returns a value.
/// `eval` returns std::nullopt when it detects an unstable result.
template <class Eval>
Real escalate_precision(long bits, Eval&& eval, const std::string& what,
                        int max_doublings = kMaxPrecisionDoublings) {
  long current = bits;
  for (int attempt = 0; attempt <= max_doublings; ++attempt, current *= 2) {
    PrecisionScope scope(current);
    if (std::optional<Real> value = eval(current)) return value->at_precision(bits);
  }
  throw PrecisionError(what + ": result unstable up to " + std::to_string(current / 2) + " bits");
}

/// Sum of signed terms added largest magnitude first with Neumaier
/// compensation. `lost_bits()` reports how far the sum fell below the
/// largest term, i.e. the cancellation the sum suffered.
class CompensatedSum {
 public:
  void add(Real term) { terms_.push_back(std::move(term)); }

  Real total() {
    std::sort(terms_.begin(), terms_.end(), [](const Real& a, const Real& b) { return abs(a) > abs(b); });
    Real sum = Real(0);
    Real compensation = Real(0);
    for (const Real& t : terms_) {
      Real next = sum + t;
      if (abs(sum) >= abs(t)) {
        compensation += (sum - next) + t;
      } else {
        compensation += (t - next) + sum;
      }
      sum = std::move(next);
    }
    return sum + compensation;
  }

  /// log2(max |term|) - log2(|sum|); large when the terms cancel.
  long lost_bits() {
    if (terms_.empty()) return 0;
    long max_exp = std::numeric_limits<long>::min();
    for (const Real& t : terms_) {
      if (!t.is_zero()) max_exp = std::max(max_exp, t.exponent());
    }
    if (max_exp == std::numeric_limits<long>::min()) return 0;
    Real s = total();
    if (s.is_zero()) return std::numeric_limits<long>::max() / 4;
    return std::max(0L, max_exp - s.exponent());
  }

 private:
  std::vector<Real> terms_;
};

}  // namespace pitman
