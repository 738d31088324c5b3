#pragma once

// Limiting and approximate formulas for the moments of K: moments and density
// of the alpha-diversity, the refined fixed-theta expansion, the corrected
// scaling, the joint-regime normalizations, the Z statistic and regime paths.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pitman/distribution.hpp"
#include "pitman/errors.hpp"
#include "pitman/numerics.hpp"
#include "pitman/params.hpp"
#include "pitman/scalar.hpp"

namespace pitman {

// ---------------------------------------------------------------------------
// alpha-diversity moments

/// E[S^r] = (1 + theta/alpha)_r Gamma(theta+1) / Gamma(theta + r alpha + 1).
inline Real diversity_moment(const Real& alpha, const Real& theta, std::uint64_t r) {
  require(alpha > Real(0) && alpha < Real(1), "alpha must lie in (0, 1)");
  require(theta > -alpha, "theta must exceed -alpha");
  require(r >= 1, "moment order r must be at least 1");
  Real lead = rising_factorial(Real(Real(1) + theta / alpha), r);
  Real ra = Real(static_cast<unsigned long>(r)) * alpha;
  return lead / gamma_ratio(theta + Real(1), ra);
}

/// Exact E[S^r] when r alpha is an integer m, where the gamma ratio is
/// 1 / (theta+1)_m. Otherwise the value is not rational-representable and
/// std::nullopt is returned.
inline std::optional<Rational> diversity_moment_exact(const Rational& alpha, const Rational& theta, std::uint64_t r) {
  require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
  require(theta > -alpha, "theta must exceed -alpha");
  require(r >= 1, "moment order r must be at least 1");
  Rational ra = Rational(r) * alpha;
  if (ra.get_den() != 1) return std::nullopt;
  std::uint64_t m = ra.get_num().get_ui();
  Rational lambda1 = theta / alpha + 1;
  Rational value = rising_factorial(lambda1, r) / rising_factorial(Rational(theta + 1), m);
  return value;
}

// ---------------------------------------------------------------------------
// g_alpha series

/// g_alpha(x) = 1/(pi alpha) sum_{i>=1} (-1)^{i+1}/i! Gamma(i alpha + 1) x^{i-1} sin(pi i alpha).
///
/// The terms grow far above the final value before they decay, so each
/// evaluation first locates the largest term in double precision and works
/// with that many extra bits; the working precision is raised again if the
/// observed cancellation exceeds it. Truncation uses the sin-free envelope
/// e_i = Gamma(i alpha + 1) x^{i-1} / (pi alpha i!): it stops once e_i is
/// below tol * |sum|, e_i < e_{i-1}, and the geometric tail bound
/// e_i q / (1 - q), q = e_{i+1}/e_i, is below tol * |sum| as well.
///
/// Coefficients are cached per instance, so one instance must not be used
/// from several threads at once.
class GalphaSeries {
 public:
  explicit GalphaSeries(double alpha, std::uint64_t max_terms = 10000) : alpha_(alpha), max_terms_(max_terms) {
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    require(max_terms >= 2, "max_terms must be at least 2");
  }

  double alpha() const { return alpha_; }

  /// g_alpha(x) with relative truncation tolerance `tol`, returned at `bits`.
  Real operator()(double x, double tol, long bits = working_precision()) const {
    require(x > 0.0, "g_alpha: x must be positive");
    require(tol > 0.0, "g_alpha: tol must be positive");
    const double peak = peak_log2_term(x);
    long extra = static_cast<long>(std::ceil(std::max(0.0, peak))) + 32;
    for (int attempt = 0; attempt <= kMaxPrecisionDoublings; ++attempt) {
      long work = bits + extra;
      auto [value, lost] = sum_series(x, tol, work);
      if (work - lost >= bits + 8) return value.at_precision(bits);
      extra = std::max(extra * 2, lost + 32);
    }
    throw PrecisionError("g_alpha: cancellation not resolved at x = " + std::to_string(x));
  }

 private:
  static double log_envelope(double alpha, std::uint64_t i, double log_x) {
    double di = static_cast<double>(i);
    return std::lgamma(di * alpha + 1.0) - std::lgamma(di + 1.0) + (di - 1.0) * log_x - std::log(M_PI * alpha);
  }

  /// log2 of the largest envelope term.
  double peak_log2_term(double x) const {
    double log_x = std::log(x);
    double best = -std::numeric_limits<double>::infinity();
    double prev = best;
    for (std::uint64_t i = 1; i <= max_terms_; ++i) {
      double e = log_envelope(alpha_, i, log_x);
      best = std::max(best, e);
      if (e < prev && e < best - 60.0) break;
      prev = e;
    }
    return best / std::log(2.0);
  }

  void ensure_coefficients(std::uint64_t count, long bits) const {
    if (coeff_bits_ < bits) {
      // Grow geometrically so a scan over increasing x rebuilds rarely.
      coeff_bits_ = std::max(bits, 2 * coeff_bits_);
      coefficients_.clear();
      envelopes_.clear();
    }
    if (coefficients_.size() >= count) return;
    PrecisionScope scope(coeff_bits_);
    Real alpha(alpha_);
    Real pi_alpha = Real::pi(coeff_bits_) * alpha;
    while (coefficients_.size() < count) {
      std::uint64_t i = coefficients_.size() + 1;
      Real ia = Real(static_cast<unsigned long>(i)) * alpha;
      Real log_mag = lgamma(ia + Real(1)) - lgamma(Real(static_cast<unsigned long>(i + 1)));
      Real envelope = exp(log_mag) / pi_alpha;
      Real coefficient = envelope * sin_pi(ia);
      if (i % 2 == 0) coefficient = -coefficient;
      coefficients_.push_back(std::move(coefficient));
      envelopes_.push_back(std::move(envelope));
    }
  }

  std::pair<Real, long> sum_series(double x, double tol, long work) const {
    PrecisionScope scope(work);
    Real xr(x);
    Real power(1);
    Real sum(0);
    Real prev_env;
    long max_exp = std::numeric_limits<long>::min();
    for (std::uint64_t i = 1; i <= max_terms_; ++i) {
      ensure_coefficients(i + 1, work);
      Real term = coefficients_[i - 1] * power;
      Real env = envelopes_[i - 1] * power;
      if (!term.is_zero()) max_exp = std::max(max_exp, term.exponent());
      sum += term;
      if (i >= 2 && env < prev_env) {
        Real threshold = Real(tol) * abs(sum);
        Real next_env = envelopes_[i] * power * xr;
        Real q = next_env / env;
        if (env < threshold && q < Real(1) && env * q / (Real(1) - q) < threshold) {
          long lost = sum.is_zero() ? work : std::max(0L, max_exp - sum.exponent());
          return {sum, lost};
        }
      }
      prev_env = env;
      power *= xr;
    }
    throw PrecisionError("g_alpha: series did not reach tolerance within " + std::to_string(max_terms_) + " terms");
  }

  double alpha_;
  std::uint64_t max_terms_;
  mutable long coeff_bits_ = 0;
  mutable std::vector<Real> coefficients_;
  mutable std::vector<Real> envelopes_;
};

/// g_alpha(x) at the working precision.
inline Real galpha_density(double alpha, double x, double tol = 1e-30, std::uint64_t max_terms = 10000) {
  return GalphaSeries(alpha, max_terms)(x, tol);
}

/// Density of S: Gamma(theta+1)/Gamma(theta/alpha+1) x^{theta/alpha} g_alpha(x).
inline Real diversity_density(double alpha, double theta, double x, double tol = 1e-30,
                              std::uint64_t max_terms = 10000) {
  require(theta > -alpha, "theta must exceed -alpha");
  Real t(theta);
  Real lambda = t / Real(alpha);
  Real prefactor = exp(lgamma(t + Real(1)) - lgamma(lambda + Real(1)));
  return prefactor * pow(Real(x), lambda) * galpha_density(alpha, x, tol, max_terms);
}

/// Quadrature of x^p g_alpha(x) weights over (0, infinity). The integration
/// range is cut where the integrand has dropped below 1e-20 of its peak;
/// g_alpha values are memoized so several weights share evaluations.
class GalphaQuadrature {
 public:
  explicit GalphaQuadrature(double alpha, double series_tol = 1e-22, long bits = 64)
      : series_(alpha), series_tol_(series_tol), bits_(bits) {}

  double g(double x) const {
    if (x <= 0.0) x = std::numeric_limits<double>::min();
    auto it = cache_.find(x);
    if (it != cache_.end()) return it->second;
    double v = series_(x, series_tol_, bits_).to_double();
    cache_.emplace(x, v);
    return v;
  }

  /// Integral of x^p g_alpha(x) dx for real p > -1.
  double moment(double p, double tol = 1e-12) const {
    require(p > -1.0, "moment order must exceed -1");
    auto integrand = [&](double x) { return x <= 0.0 ? (p == 0.0 ? g(0.0) : 0.0) : std::pow(x, p) * g(x); };
    double upper = cutoff(integrand);
    double error = 0.0;
    double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, upper, 20, tol, &error);
    return value;
  }

 private:
  template <class F>
  double cutoff(F&& f) const {
    double peak = 0.0;
    double x = 0.5;
    for (; x < 1e4; x += 0.5) {
      double v = std::abs(f(x));
      peak = std::max(peak, v);
      if (peak > 0.0 && v < 1e-20 * peak) return x;
    }
    return x;
  }

  GalphaSeries series_;
  double series_tol_;
  long bits_;
  mutable std::map<double, double> cache_;
};

/// Integral of x^p g_alpha(x) dx; equals Gamma(p+1)/Gamma(p alpha + 1).
inline double galpha_moment_quadrature(double alpha, double p) { return GalphaQuadrature(alpha).moment(p); }

/// E[S^r] by quadrature of the density (r = 0 gives the total mass).
inline double diversity_moment_quadrature(double alpha, double theta, double r) {
  require(theta > -alpha, "theta must exceed -alpha");
  double lambda = theta / alpha;
  double prefactor = std::exp(std::lgamma(theta + 1.0) - std::lgamma(lambda + 1.0));
  return prefactor * GalphaQuadrature(alpha).moment(lambda + r);
}

// ---------------------------------------------------------------------------
// Fixed-theta regime

/// Two-term approximation of E[(K/n^alpha)^r]:
///   lead [1 - {r(r-1)alpha/2 + r theta} Gamma(theta+r alpha)/Gamma(theta+(r-1)alpha+1) n^{-alpha}].
inline Real theorem31_approx(const FloatParams& params, std::uint64_t r) {
  params.validate();
  require(r >= 1, "moment order r must be at least 1");
  const Real& a = params.alpha;
  const Real& t = params.theta;
  Real rr(static_cast<unsigned long>(r));
  Real lead = diversity_moment(a, t, r);
  Real base = t + (rr - Real(1)) * a + Real(1);
  Real ratio = gamma_ratio(base, a - Real(1));  // Gamma(theta + r alpha) / Gamma(base)
  Real weight = rr * (rr - Real(1)) * a / Real(2) + rr * t;
  Real n(static_cast<unsigned long>(params.n));
  return lead * (Real(1) - weight * ratio / pow(n, a));
}

/// theta Gamma(theta+alpha) / Gamma(theta+1), the amount removed from n^alpha.
inline Real corrected_offset(const Real& alpha, const Real& theta) {
  return theta / gamma_ratio(theta + alpha, Real(1) - alpha);
}

/// n^alpha - theta Gamma(theta+alpha)/Gamma(theta+1). Rejects n for which
/// the scale is not positive and reports the threshold.
inline Real corrected_scale(const FloatParams& params) {
  params.validate();
  Real offset = corrected_offset(params.alpha, params.theta);
  Real scale = pow(Real(static_cast<unsigned long>(params.n)), params.alpha) - offset;
  if (scale <= Real(0)) {
    Real threshold = pow(offset, Real(1) / params.alpha);
    throw InputError("corrected scale is not positive for n = " + std::to_string(params.n) +
                     "; need n > " + threshold.to_string(8));
  }
  return scale;
}

/// Limit of E[K / corrected_scale]: Gamma(theta+1) / (alpha Gamma(theta+alpha)).
inline Real corrected_mean_limit(const Real& alpha, const Real& theta) {
  require(alpha > Real(0) && alpha < Real(1), "alpha must lie in (0, 1)");
  require(theta > -alpha, "theta must exceed -alpha");
  return gamma_ratio(theta + alpha, Real(1) - alpha) / alpha;
}

// ---------------------------------------------------------------------------
// Joint regime: n, theta -> infinity with theta/n -> 0

/// (theta/alpha)(n/theta)^alpha, so that K / kle_scale = alpha K / (theta (n/theta)^alpha).
inline Real kle_scale(const FloatParams& params) {
  params.validate();
  require(params.theta > Real(0), "joint-regime scaling requires theta > 0");
  return params.theta / params.alpha * pow(Real(static_cast<unsigned long>(params.n)) / params.theta, params.alpha);
}

/// 1 - r (theta/n)^alpha + r^2 alpha (1-alpha) / (2 theta).
inline Real kle_normalized_approx(const FloatParams& params, std::uint64_t r) {
  params.validate();
  require(params.theta > Real(0), "joint-regime approximation requires theta > 0");
  require(r >= 1, "moment order r must be at least 1");
  const Real& a = params.alpha;
  const Real& t = params.theta;
  Real rr(static_cast<unsigned long>(r));
  Real n(static_cast<unsigned long>(params.n));
  return Real(1) - rr * pow(t / n, a) + rr * rr * a * (Real(1) - a) / (Real(2) * t);
}

/// theta {((n+theta)/theta)^alpha - 1} / alpha.
inline Real mthA_scale(const FloatParams& params) {
  params.validate();
  require(params.theta > Real(0), "joint-regime scaling requires theta > 0");
  Real n(static_cast<unsigned long>(params.n));
  return params.theta * expm1(params.alpha * log1p(n / params.theta)) / params.alpha;
}

/// 1 + r^2 alpha (1-alpha) / (2 theta), the finer joint-regime approximation.
inline Real mthA_normalized_approx(const FloatParams& params, std::uint64_t r) {
  params.validate();
  require(params.theta > Real(0), "joint-regime approximation requires theta > 0");
  require(r >= 1, "moment order r must be at least 1");
  Real rr(static_cast<unsigned long>(r));
  return Real(1) + rr * rr * params.alpha * (Real(1) - params.alpha) / (Real(2) * params.theta);
}

/// Z = sqrt(theta) [alpha K / (theta {((n+theta)/theta)^alpha - 1}) - 1].
inline Real z_statistic(std::uint64_t k_observed, const FloatParams& params) {
  params.validate();
  require(params.theta > Real(0), "Z requires theta > 0");
  require(k_observed >= 1 && k_observed <= params.n, "observed K must lie in 1..n");
  Real x = Real(static_cast<unsigned long>(k_observed)) / mthA_scale(params);
  return sqrt(params.theta) * (x - Real(1));
}

/// theta log(1 + n/theta), the normalizer of the alpha = 0 case.
inline Real ewens_reference_scale(const Real& n, const Real& theta) {
  require(n >= Real(1), "n must be at least 1");
  require(theta > Real(0), "theta must be positive");
  return theta * log1p(n / theta);
}

/// Warnings for parameters far from the joint regime.
inline std::vector<std::string> joint_regime_warnings(const FloatParams& params) {
  std::vector<std::string> out;
  Real ratio = params.theta / Real(static_cast<unsigned long>(params.n));
  if (ratio >= Real(0.5)) out.push_back("theta/n = " + ratio.to_string(6) + " is not small; joint-regime formulas may be inaccurate");
  if (params.theta < Real(1)) out.push_back("theta < 1; joint-regime formulas assume theta large");
  return out;
}

// ---------------------------------------------------------------------------
// Scalings and moment reports

enum class ScalingKind { n_alpha, corrected, kle, mthA, ewens_ref };

inline std::string to_string(ScalingKind kind) {
  switch (kind) {
    case ScalingKind::n_alpha: return "n_alpha";
    case ScalingKind::corrected: return "corrected";
    case ScalingKind::kle: return "kle";
    case ScalingKind::mthA: return "mthA";
    case ScalingKind::ewens_ref: return "ewens_ref";
  }
  return "unknown";
}

inline ScalingKind parse_scaling(const std::string& label) {
  for (ScalingKind k : {ScalingKind::n_alpha, ScalingKind::corrected, ScalingKind::kle, ScalingKind::mthA,
                        ScalingKind::ewens_ref}) {
    if (to_string(k) == label) return k;
  }
  throw InputError("unknown scaling '" + label + "'");
}

/// Scale denominator s so the normalized statistic is K / s.
inline Real scale_value(ScalingKind kind, const FloatParams& params) {
  switch (kind) {
    case ScalingKind::n_alpha: return pow(Real(static_cast<unsigned long>(params.n)), params.alpha);
    case ScalingKind::corrected: return corrected_scale(params);
    case ScalingKind::kle: return kle_scale(params);
    case ScalingKind::mthA: return mthA_scale(params);
    case ScalingKind::ewens_ref: return ewens_reference_scale(Real(static_cast<unsigned long>(params.n)), params.theta);
  }
  throw InputError("unknown scaling");
}

/// E[(K / scale)^r] from the exact moment.
inline Real normalized_moment(const FloatParams& params, std::uint64_t r, ScalingKind kind) {
  return exact_moment(params, r) / pow(scale_value(kind, params), static_cast<long>(r));
}

/// Builds a MomentReport: each available approximation is converted to an
/// approximation of E[K^r] and then expressed on the requested scaling.
/// Labels: leading, theorem31 (always); lemma32, theorem33 (theta > 0).
inline MomentReport make_moment_report(const FloatParams& params, std::uint64_t r,
                                       ScalingKind kind = ScalingKind::n_alpha,
                                       std::optional<Rational> exact_rational = std::nullopt) {
  params.validate();
  MomentReport report;
  report.r = r;
  report.exact_rational = std::move(exact_rational);
  report.exact = report.exact_rational ? Real(*report.exact_rational) : exact_moment(params, r);
  report.scaling = to_string(kind);
  report.scale = scale_value(kind, params);
  Real scale_r = pow(report.scale, static_cast<long>(r));
  report.normalized = report.exact / scale_r;

  Real n_alpha_r = pow(scale_value(ScalingKind::n_alpha, params), static_cast<long>(r));
  auto add = [&](const std::string& label, const Real& raw_moment) {
    Real approx = raw_moment / scale_r;
    report.residuals.push_back({label, approx - report.normalized});
    report.approximations.push_back({label, std::move(approx)});
  };
  add("leading", diversity_moment(params.alpha, params.theta, r) * n_alpha_r);
  add("theorem31", theorem31_approx(params, r) * n_alpha_r);
  if (params.theta > Real(0)) {
    add("lemma32", kle_normalized_approx(params, r) * pow(kle_scale(params), static_cast<long>(r)));
    add("theorem33", mthA_normalized_approx(params, r) * pow(mthA_scale(params), static_cast<long>(r)));
  }
  return report;
}

/// E[Z] and E[Z^2] from the exact first two moments of K.
struct ZMoments {
  Real mean;
  Real second;
};

inline ZMoments exact_z_moments(const FloatParams& params) {
  Real s = mthA_scale(params);
  Real m1 = exact_moment(params, 1) / s;
  Real m2 = exact_moment(params, 2) / (s * s);
  return {sqrt(params.theta) * (m1 - Real(1)), params.theta * (m2 - Real(2) * m1 + Real(1))};
}

// ---------------------------------------------------------------------------
// Regime paths

enum class RegimeKind { fixed_theta, joint };

inline std::string to_string(RegimeKind kind) { return kind == RegimeKind::fixed_theta ? "fixed_theta" : "joint"; }

struct RegimePoint {
  std::uint64_t n;
  Real theta;
};

struct RegimePath {
  RegimeKind kind = RegimeKind::fixed_theta;
  double beta = 0.0;
  bool cr = false;
  std::vector<RegimePoint> points;
};

/// Whether theta = n^beta satisfies the strengthened regime for a given alpha.
/// Substituting theta = n^beta:
///   theta^{2 alpha + 1} / n^{2 alpha} = n^{beta(2 alpha + 1) - 2 alpha} -> 0  iff  beta (2 alpha + 1) < 2 alpha,
///   theta^2 / n = n^{2 beta - 1} -> 0                                          iff  beta < 1/2,
/// on top of 0 < beta < 1 for theta -> infinity with theta/n -> 0.
struct CrFeasibility {
  bool joint_ok = false;
  bool power_ok = false;
  bool square_ok = false;
  bool feasible() const { return joint_ok && power_ok && square_ok; }
  std::string violated() const {
    std::string out;
    auto add = [&](const char* what) { out += (out.empty() ? "" : "; ") + std::string(what); };
    if (!joint_ok) add("0 < beta < 1 (theta -> infinity, theta/n -> 0)");
    if (!power_ok) add("beta(2 alpha + 1) < 2 alpha (theta^{2 alpha+1}/n^{2 alpha} -> 0)");
    if (!square_ok) add("beta < 1/2 (theta^2/n -> 0)");
    return out;
  }
};

inline CrFeasibility cr_feasibility(double alpha, double beta) {
  CrFeasibility f;
  f.joint_ok = beta > 0.0 && beta < 1.0;
  f.power_ok = beta * (2.0 * alpha + 1.0) < 2.0 * alpha;
  f.square_ok = beta < 0.5;
  return f;
}

/// Builds a path over `n_grid`. beta = 0 gives the fixed-theta kind with
/// theta = fixed_theta; 0 < beta < 1 gives theta_j = n_j^beta. With
/// `require_cr` the (alpha, beta) pair must satisfy the strengthened regime.
inline RegimePath regime_path(double beta, const std::vector<std::uint64_t>& n_grid, double alpha,
                              bool require_cr = false, const Real& fixed_theta = Real(1)) {
  require(!n_grid.empty(), "regime path needs a nonempty n grid");
  for (std::size_t j = 1; j < n_grid.size(); ++j) require(n_grid[j] > n_grid[j - 1], "n grid must be strictly increasing");
  require(n_grid.front() >= 1, "n grid entries must be positive");
  RegimePath path;
  path.beta = beta;
  if (beta == 0.0) {
    require(!require_cr, "CR flag needs a joint path (0 < beta < 1)");
    path.kind = RegimeKind::fixed_theta;
    for (std::uint64_t n : n_grid) path.points.push_back({n, fixed_theta});
    return path;
  }
  require(beta > 0.0 && beta < 1.0, "joint path requires 0 < beta < 1 so that theta/n -> 0");
  if (require_cr) {
    CrFeasibility f = cr_feasibility(alpha, beta);
    if (!f.feasible()) throw InputError("path infeasible for CR regime: violates " + f.violated());
  }
  path.kind = RegimeKind::joint;
  path.cr = require_cr;
  Real b(beta);
  for (std::uint64_t n : n_grid) path.points.push_back({n, pow(Real(static_cast<unsigned long>(n)), b)});
  return path;
}

}  // namespace pitman
