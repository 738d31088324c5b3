#pragma once

#include <cstdint>
#include <string>

#include "pitman/errors.hpp"
#include "pitman/scalar.hpp"

namespace pitman {

/// Sample size and the two model parameters. `Scalar` is Rational for
/// exact evaluation and Real for floating evaluation.
template <class Scalar>
struct PitmanParams {
  std::uint64_t n = 1;
  Scalar alpha;
  Scalar theta;

  /// Throws InputError unless n >= 1, 0 < alpha < 1 and theta > -alpha.
  void validate() const {
    require(n >= 1, "n must be a positive integer");
    require(alpha > Scalar(0) && alpha < Scalar(1), "alpha must lie in (0, 1)");
    require(theta > Scalar(-alpha), "theta must exceed -alpha");
  }

  /// theta / alpha, the weight that appears throughout the moment formulas.
  Scalar lambda() const { return Scalar(theta / alpha); }
};

using ExactParams = PitmanParams<Rational>;
using FloatParams = PitmanParams<Real>;

inline ExactParams make_exact_params(std::uint64_t n, const Rational& alpha, const Rational& theta) {
  ExactParams p{n, alpha, theta};
  p.validate();
  return p;
}

inline FloatParams make_float_params(std::uint64_t n, const Real& alpha, const Real& theta) {
  FloatParams p{n, alpha, theta};
  p.validate();
  return p;
}

/// Floating copy at the current working precision.
inline FloatParams to_float(const ExactParams& p) { return FloatParams{p.n, Real(p.alpha), Real(p.theta)}; }
inline FloatParams to_float(const FloatParams& p) { return p; }

template <class Scalar>
double to_double(const Scalar& x) {
  if constexpr (std::is_same_v<Scalar, Rational>) {
    return x.get_d();
  } else if constexpr (std::is_same_v<Scalar, Real>) {
    return x.to_double();
  } else {
    return static_cast<double>(x);
  }
}

}  // namespace pitman
