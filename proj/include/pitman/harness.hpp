#pragma once

// Experiment runner: convergence-order studies for both regimes, residual
// slope fitting, the exact verification grid, and CSV/JSON artifacts.
//
// CSV schema (fixed): header "n,theta,alpha,r,label,exact,approx,residual";
// floating values with 17 significant digits, rationals as "p/q".

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pitman/asymptotics.hpp"
#include "pitman/distribution.hpp"
#include "pitman/errors.hpp"
#include "pitman/numerics.hpp"
#include "pitman/params.hpp"
#include "pitman/sampler.hpp"
#include "pitman/scalar.hpp"

namespace pitman {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Slope fitting

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  std::size_t points = 0;
};

namespace detail {
inline SlopeFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    mx += x[j];
    my += y[j];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    sxx += (x[j] - mx) * (x[j] - mx);
    sxy += (x[j] - mx) * (y[j] - my);
  }
  require(sxx > 0.0, "slope fit needs distinct x values");
  double slope = sxy / sxx;
  double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double e = y[j] - intercept - slope * x[j];
    sse += e * e;
  }
  double se = m > 2 ? std::sqrt(sse / static_cast<double>(m - 2) / sxx) : 0.0;
  return {slope, se, m};
}
}  // namespace detail

/// Least-squares slope of log y against log x over the last `tail` points.
inline SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points, std::size_t tail) {
  require(tail >= 3, "slope fit needs at least 3 tail points");
  require(points.size() >= tail, "slope fit: fewer points than the requested tail");
  std::vector<double> lx, ly;
  for (std::size_t j = points.size() - tail; j < points.size(); ++j) {
    require(points[j].first > 0.0 && points[j].second > 0.0, "slope fit: values must be positive");
    lx.push_back(std::log(points[j].first));
    ly.push_back(std::log(points[j].second));
  }
  return detail::least_squares(lx, ly);
}

/// Same fit for high-precision y values (|y| is used; zero is rejected).
inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<Real>& y, std::size_t tail) {
  require(x.size() == y.size(), "slope fit: size mismatch");
  require(tail >= 3, "slope fit needs at least 3 tail points");
  require(x.size() >= tail, "slope fit: fewer points than the requested tail");
  std::vector<double> lx, ly;
  for (std::size_t j = x.size() - tail; j < x.size(); ++j) {
    require(x[j] > 0.0 && !y[j].is_zero(), "slope fit: values must be nonzero");
    lx.push_back(std::log(x[j]));
    ly.push_back(log(abs(y[j])).to_double());
  }
  return detail::least_squares(lx, ly);
}

// ---------------------------------------------------------------------------
// Grids

/// Parses "2^8..2^16" (factor-2 geometric), "256..65536" (factor 2),
/// "a..b:f" (factor f) or a comma list "100,200,400".
inline std::vector<std::uint64_t> parse_grid(const std::string& text) {
  auto parse_value = [&](const std::string& s) -> std::uint64_t {
    auto caret = s.find('^');
    try {
      if (caret == std::string::npos) return std::stoull(s);
      std::uint64_t base = std::stoull(s.substr(0, caret));
      std::uint64_t e = std::stoull(s.substr(caret + 1));
      std::uint64_t v = 1;
      for (std::uint64_t j = 0; j < e; ++j) {
        require(v <= std::numeric_limits<std::uint64_t>::max() / base, "grid value overflows");
        v *= base;
      }
      return v;
    } catch (const std::logic_error&) {
      throw InputError("bad grid value '" + s + "'");
    }
  };
  std::vector<std::uint64_t> grid;
  auto dots = text.find("..");
  if (dots != std::string::npos) {
    std::string rest = text.substr(dots + 2);
    std::uint64_t factor = 2;
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
      factor = parse_value(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    require(factor >= 2, "grid factor must be at least 2");
    std::uint64_t lo = parse_value(text.substr(0, dots));
    std::uint64_t hi = parse_value(rest);
    require(lo >= 1 && lo <= hi, "grid bounds must satisfy 1 <= lo <= hi");
    for (std::uint64_t v = lo; v <= hi; v *= factor) {
      grid.push_back(v);
      if (v > hi / factor) break;
    }
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(parse_value(item));
  }
  require(!grid.empty(), "empty grid");
  for (std::size_t j = 1; j < grid.size(); ++j) require(grid[j] > grid[j - 1], "grid must be strictly increasing");
  return grid;
}

// ---------------------------------------------------------------------------
// Study configuration and results

enum class StudyName { thm31, corrected, kle, mthA, corollary34, z_moments, lemma_expansions, verify };

inline const std::vector<std::pair<StudyName, std::string>>& study_names() {
  static const std::vector<std::pair<StudyName, std::string>> names{
      {StudyName::thm31, "thm31"},           {StudyName::corrected, "corrected"},
      {StudyName::kle, "kle"},               {StudyName::mthA, "mthA"},
      {StudyName::corollary34, "corollary34"}, {StudyName::z_moments, "z_moments"},
      {StudyName::lemma_expansions, "lemma_expansions"}, {StudyName::verify, "verify"}};
  return names;
}

inline std::string to_string(StudyName s) {
  for (const auto& [k, v] : study_names()) {
    if (k == s) return v;
  }
  return "unknown";
}

inline StudyName parse_study(const std::string& s) {
  for (const auto& [k, v] : study_names()) {
    if (v == s) return k;
  }
  throw InputError("unknown study '" + s + "'");
}

struct StudyConfig {
  StudyName study = StudyName::thm31;
  Rational alpha{1, 2};
  Rational theta{1};
  std::vector<std::uint64_t> r_values{1};
  std::vector<std::uint64_t> n_grid = parse_grid("2^8..2^16");
  double beta = 0.0;  // 0: fixed theta; otherwise theta = n^beta
  bool cr = false;
  long precision_bits = default_precision_bits();
  double tol = 1e-30;
  std::uint64_t seed = 20210521;
  std::uint64_t replicates = 100000;
  std::uint64_t streams = 1;
  std::size_t tail = 6;
  std::string output_path;  // prefix for <prefix>.csv and <prefix>.json

  /// Throws InputError naming the violated condition.
  void validate() const {
    require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
    require(!r_values.empty(), "r_values must be nonempty");
    for (std::uint64_t r : r_values) require(r >= 1, "moment orders must be at least 1");
    require(tail >= 3, "tail must be at least 3");
    require(precision_bits >= kMinPrecisionBits, "precision_bits must be at least 53");
    switch (study) {
      case StudyName::thm31:
      case StudyName::corrected:
        require(beta == 0.0, to_string(study) + " runs on a fixed-theta path (beta = 0)");
        require(theta > -alpha, "theta must exceed -alpha");
        require(n_grid.size() >= tail, "grid has fewer points than the fit tail");
        break;
      case StudyName::kle:
      case StudyName::mthA:
      case StudyName::corollary34:
        require(beta > 0.0 && beta < 1.0, to_string(study) + " needs a joint path with 0 < beta < 1");
        require(n_grid.size() >= tail, "grid has fewer points than the fit tail");
        break;
      case StudyName::z_moments: {
        require(beta > 0.0 && beta < 1.0, "z_moments needs a joint path with 0 < beta < 1");
        CrFeasibility f = cr_feasibility(alpha.get_d(), beta);
        if (!f.feasible()) throw InputError("z_moments requires a CR-feasible path; violates " + f.violated());
        require(n_grid.size() >= tail, "grid has fewer points than the fit tail");
        break;
      }
      default:
        break;
    }
    if (study == StudyName::corollary34 || study == StudyName::z_moments) {
      require(replicates >= 2 * streams, "each stream needs at least 2 replicates");
    }
  }
};

/// One grid record. Exact and approx are stored at full precision (and as
/// rationals when the study is exact); residual = approx - exact.
struct StudyRow {
  std::uint64_t n = 0;
  std::string theta;
  std::string alpha;
  std::uint64_t r = 0;
  std::string label;
  Real exact;
  Real approx;
  Real residual;
  std::optional<Rational> exact_q;
  std::optional<Rational> approx_q;
};

struct SlopeReport {
  std::string label;
  SlopeFit fit;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct StudyResult {
  std::string study;
  std::vector<StudyRow> rows;
  std::vector<SlopeReport> slopes;
  std::vector<Check> checks;
  bool verify_passed = false;

  bool all_pass() const {
    return std::all_of(slopes.begin(), slopes.end(), [](const SlopeReport& s) { return s.pass; }) &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  /// Labelled consistent only if the exact verification grid passed too.
  bool theory_consistent() const { return verify_passed && all_pass(); }
};

namespace detail {

inline std::string format_rational_or_real(const Rational& q) { return to_string(q); }

inline void add_row(StudyResult& result, std::uint64_t n, const std::string& theta, const std::string& alpha,
                    std::uint64_t r, const std::string& label, const Real& exact, const Real& approx) {
  result.rows.push_back({n, theta, alpha, r, label, exact, approx, approx - exact, std::nullopt, std::nullopt});
}

inline void add_exact_row(StudyResult& result, std::uint64_t n, const Rational& theta, const Rational& alpha,
                          std::uint64_t r, const std::string& label, const Rational& exact, const Rational& approx) {
  Rational diff = approx - exact;
  result.rows.push_back({n, to_string(theta), to_string(alpha), r, label, Real(exact), Real(approx), Real(diff),
                         exact, approx});
}

inline SlopeReport slope_report(const std::string& label, const std::vector<double>& x, const std::vector<Real>& y,
                                std::size_t tail, double expected, double tolerance) {
  SlopeReport s;
  s.label = label;
  s.fit = fit_slope(x, y, tail);
  s.expected = expected;
  s.tolerance = tolerance;
  s.pass = std::abs(s.fit.slope - expected) <= tolerance;
  return s;
}

inline std::string real_text(const Real& x) { return x.to_string(17); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Verification grid

struct VerifyGrid {
  std::uint64_t n_max = 10;
  std::vector<Rational> alphas{Rational(1, 4), Rational(1, 3), Rational(1, 2), Rational(3, 4)};
  std::uint64_t r_max = 4;
  /// theta values: -alpha + 1/8, 1/2, 1, 10.
  static std::vector<Rational> thetas(const Rational& alpha) {
    return {Rational(-alpha + Rational(1, 8)), Rational(1, 2), Rational(1), Rational(10)};
  }
};

/// Exact-vs-oracle equalities over the grid, the normalization of both
/// pmfs, and the n = 3 regression fixture.
inline StudyResult run_verify(const VerifyGrid& grid = {}) {
  StudyResult result;
  result.study = "verify";
  std::uint64_t moment_mismatch = 0, pmf_mismatch = 0, norm_fail = 0, psf_norm_fail = 0, cases = 0;
  for (const Rational& alpha : grid.alphas) {
    for (const Rational& theta : VerifyGrid::thetas(alpha)) {
      for (std::uint64_t n = 1; n <= grid.n_max; ++n) {
        ExactParams p = make_exact_params(n, alpha, theta);
        std::vector<Rational> pmf = length_pmf(p);
        std::vector<Rational> oracle = length_pmf_oracle(p);
        Rational total = 0;
        for (const Rational& v : pmf) total += v;
        if (total != 1) ++norm_fail;
        if (pmf != oracle) ++pmf_mismatch;
        Rational psf_total = 0;
        for_each_partition(n, [&](const PartitionCounts& c) { psf_total += psf_pmf(c, p); });
        if (psf_total != 1) ++psf_norm_fail;
        for (std::uint64_t r = 1; r <= grid.r_max; ++r) {
          ++cases;
          Rational exact = exact_moment(p, r);
          Rational brute = oracle_moment(p, r);
          if (exact != brute) ++moment_mismatch;
          detail::add_exact_row(result, n, theta, alpha, r, "oracle_moment", exact, brute);
        }
      }
    }
  }
  result.checks.push_back({"moment_equals_oracle", moment_mismatch == 0,
                           std::to_string(cases - moment_mismatch) + "/" + std::to_string(cases) + " exact"});
  result.checks.push_back({"pmf_equals_oracle", pmf_mismatch == 0, std::to_string(pmf_mismatch) + " mismatches"});
  result.checks.push_back({"pmf_sums_to_one", norm_fail == 0, std::to_string(norm_fail) + " failures"});
  result.checks.push_back({"psf_sums_to_one", psf_norm_fail == 0, std::to_string(psf_norm_fail) + " failures"});

  ExactParams fixture = make_exact_params(3, Rational(1, 2), Rational(1, 2));
  std::vector<Rational> pmf = length_pmf(fixture);
  bool fixture_ok = pmf == std::vector<Rational>{Rational(1, 5), Rational(2, 5), Rational(2, 5)} &&
                    exact_moment(fixture, 1) == Rational(11, 5) && exact_moment(fixture, 2) == Rational(27, 5);
  result.checks.push_back({"fixture_n3", fixture_ok, "pmf (1/5,2/5,2/5), E[K]=11/5, E[K^2]=27/5"});
  result.verify_passed = result.all_pass();
  return result;
}

/// Result of the default verification grid, computed once per process.
inline bool verification_passed() {
  static std::once_flag once;
  static bool passed = false;
  std::call_once(once, [] { passed = run_verify().all_pass(); });
  return passed;
}

// ---------------------------------------------------------------------------
// Studies

namespace detail {

inline Real joint_bound_kle(const Real& n, const Real& t, const Real& a) {
  Real q = t / n;
  Real qa = pow(q, a);
  return qa * (qa + pow(q, Real(1) - a)) + (qa + Real(1) / t) / t;
}

inline Real joint_bound_mthA(const Real& n, const Real& t, const Real& a) {
  Real q = t / n;
  return pow(q, Real(2) * a) + q + Real(1) / t;
}

inline std::vector<double> as_double(const std::vector<std::uint64_t>& v) {
  std::vector<double> out;
  for (std::uint64_t x : v) out.push_back(static_cast<double>(x));
  return out;
}

inline StudyResult study_thm31(const StudyConfig& cfg) {
  StudyResult result;
  Real alpha(cfg.alpha);
  Real theta(cfg.theta);
  double a = cfg.alpha.get_d();
  std::vector<double> xs = as_double(cfg.n_grid);
  for (std::uint64_t r : cfg.r_values) {
    std::vector<Real> lead_res, t31_res;
    bool deficit = true;
    for (std::uint64_t n : cfg.n_grid) {
      FloatParams p = make_float_params(n, alpha, theta);
      Real exact = normalized_moment(p, r, ScalingKind::n_alpha);
      Real lead = diversity_moment(alpha, theta, r);
      Real t31 = theorem31_approx(p, r);
      add_row(result, n, to_string(cfg.theta), to_string(cfg.alpha), r, "leading", exact, lead);
      add_row(result, n, to_string(cfg.theta), to_string(cfg.alpha), r, "theorem31", exact, t31);
      lead_res.push_back(lead - exact);
      t31_res.push_back(t31 - exact);
      if (n >= 256 && !(exact < lead)) deficit = false;
    }
    std::string suffix = "/r=" + std::to_string(r);
    result.slopes.push_back(slope_report("leading" + suffix, xs, lead_res, cfg.tail, -a, 0.1));
    result.slopes.push_back(slope_report("theorem31" + suffix, xs, t31_res, cfg.tail, -std::min(2 * a, 1.0), 0.15));
    result.checks.push_back({"moment_deficit" + suffix, deficit, "E[(K/n^alpha)^r] < E[S^r] for all n >= 256"});
  }
  return result;
}

inline StudyResult study_corrected(const StudyConfig& cfg) {
  StudyResult result;
  Real alpha(cfg.alpha);
  Real theta(cfg.theta);
  double a = cfg.alpha.get_d();
  Real limit = corrected_mean_limit(alpha, theta);
  std::vector<Real> res;
  for (std::uint64_t n : cfg.n_grid) {
    FloatParams p = make_float_params(n, alpha, theta);
    Real exact = normalized_moment(p, 1, ScalingKind::corrected);
    add_row(result, n, to_string(cfg.theta), to_string(cfg.alpha), 1, "corrected", exact, limit);
    res.push_back(limit - exact);
  }
  result.slopes.push_back(slope_report("corrected/r=1", as_double(cfg.n_grid), res, cfg.tail, -std::min(2 * a, 1.0), 0.15));
  return result;
}

inline StudyResult study_kle(const StudyConfig& cfg) {
  StudyResult result;
  Real alpha(cfg.alpha);
  RegimePath path = regime_path(cfg.beta, cfg.n_grid, cfg.alpha.get_d(), cfg.cr);
  std::vector<double> xs = as_double(cfg.n_grid);
  for (std::uint64_t r : cfg.r_values) {
    std::vector<Real> res, bound;
    for (const RegimePoint& pt : path.points) {
      FloatParams p = make_float_params(pt.n, alpha, pt.theta);
      Real exact = normalized_moment(p, r, ScalingKind::kle);
      Real approx = kle_normalized_approx(p, r);
      add_row(result, pt.n, real_text(pt.theta), to_string(cfg.alpha), r, "lemma32", exact, approx);
      res.push_back(approx - exact);
      bound.push_back(joint_bound_kle(Real(static_cast<unsigned long>(pt.n)), pt.theta, alpha));
    }
    double expected = fit_slope(xs, bound, cfg.tail).slope;
    result.slopes.push_back(slope_report("lemma32/r=" + std::to_string(r), xs, res, cfg.tail, expected, 0.2));
  }
  return result;
}

inline StudyResult study_mthA(const StudyConfig& cfg) {
  StudyResult result;
  Real alpha(cfg.alpha);
  RegimePath path = regime_path(cfg.beta, cfg.n_grid, cfg.alpha.get_d(), cfg.cr);
  const std::size_t first_tail = path.points.size() - cfg.tail;
  for (std::uint64_t r : cfg.r_values) {
    std::vector<Real> before, after, ratio;
    for (const RegimePoint& pt : path.points) {
      FloatParams p = make_float_params(pt.n, alpha, pt.theta);
      Real exact = normalized_moment(p, r, ScalingKind::mthA);
      Real second = mthA_normalized_approx(p, r);
      add_row(result, pt.n, real_text(pt.theta), to_string(cfg.alpha), r, "first_order", exact, Real(1));
      add_row(result, pt.n, real_text(pt.theta), to_string(cfg.alpha), r, "second_order", exact, second);
      before.push_back(abs(exact - Real(1)));
      after.push_back(abs(exact - second));
      ratio.push_back(before.back() / joint_bound_mthA(Real(static_cast<unsigned long>(pt.n)), pt.theta, alpha));
    }
    std::string suffix = "/r=" + std::to_string(r);
    bool monotone = true, improves = true;
    for (std::size_t j = first_tail; j < before.size(); ++j) {
      if (j > first_tail && !(before[j] < before[j - 1])) monotone = false;
      if (!(after[j] < before[j])) improves = false;
    }
    Real lo = *std::min_element(ratio.begin() + first_tail, ratio.end());
    Real hi = *std::max_element(ratio.begin() + first_tail, ratio.end());
    result.checks.push_back({"decreasing_to_one" + suffix, monotone, "|E[X^r] - 1| strictly decreasing on the tail"});
    result.checks.push_back({"second_order_improves" + suffix, improves,
                             "|E[X^r] - 1 - r^2 a(1-a)/(2 theta)| < |E[X^r] - 1| at every tail point"});
    result.checks.push_back({"first_display_bounded" + suffix, (hi / lo) <= Real(3),
                             "max/min of |E[X^r]-1| / (theta^{2a}/n^{2a} + theta/n + 1/theta) = " +
                                 (hi / lo).to_string(6)});
  }
  return result;
}

inline StudyResult study_corollary34(const StudyConfig& cfg) {
  StudyResult result;
  Real alpha(cfg.alpha);
  RegimePath path = regime_path(cfg.beta, cfg.n_grid, cfg.alpha.get_d(), cfg.cr);
  std::vector<double> variances;
  bool near_one = true, near_exact = true;
  for (std::size_t j = 0; j < path.points.size(); ++j) {
    const RegimePoint& pt = path.points[j];
    FloatParams p = make_float_params(pt.n, alpha, pt.theta);
    Real scale = mthA_scale(p);
    Real m1 = exact_moment(p, 1) / scale;
    Real m2 = exact_moment(p, 2) / (scale * scale);
    double s = scale.to_double();
    SamplerParams sp = SamplerParams::from(p);
    SeedSpec seed{cfg.seed, j * cfg.streams};
    auto statistic = [s](std::uint64_t k) { return static_cast<double>(k) / s; };
    SampleStats stats = cfg.streams == 1 ? mc_statistic(sp, cfg.replicates, seed, statistic)
                                         : mc_statistic_parallel(sp, cfg.replicates, seed, cfg.streams, statistic);
    add_row(result, pt.n, real_text(pt.theta), to_string(cfg.alpha), 1, "mc_mean", m1, Real(stats.mean));
    add_row(result, pt.n, real_text(pt.theta), to_string(cfg.alpha), 2, "mc_variance", m2 - m1 * m1,
            Real(stats.variance()));
    variances.push_back(stats.variance());
    double se = stats.standard_error();
    if (std::abs(stats.mean - 1.0) > 4 * se) near_one = false;
    if (std::abs(stats.mean - m1.to_double()) > 4 * se) near_exact = false;
  }
  bool decreasing = true;
  for (std::size_t j = 2; j < variances.size(); ++j) {
    if (!(variances[j] < variances[j - 1])) decreasing = false;
  }
  result.checks.push_back({"variance_decreasing", decreasing, "MC variance strictly decreasing beyond the first point"});
  result.checks.push_back({"mean_within_4se_of_one", near_one, "MC mean of the normalized statistic within 4 SE of 1"});
  result.checks.push_back({"mean_within_4se_of_exact", near_exact, "MC mean within 4 SE of the exact finite-n mean"});
  return result;
}

/// Statistics of f(K) and f(K)^2 from the same draws, split over streams.
template <class F>
std::pair<SampleStats, SampleStats> mc_pair(const SamplerParams& p, std::uint64_t replicates, const SeedSpec& seed,
                                            std::uint64_t streams, F f) {
  SampleStats first, second;
  for (std::uint64_t s = 0; s < streams; ++s) {
    std::uint64_t share = replicates / streams + (s < replicates % streams ? 1 : 0);
    Engine engine = make_engine({seed.root_seed, seed.stream_index + s});
    SampleStats a, b;
    for (std::uint64_t j = 0; j < share; ++j) {
      double v = f(sample_k(p, engine));
      a.add(v);
      b.add(v * v);
    }
    first.merge(a);
    second.merge(b);
  }
  return {first, second};
}

inline StudyResult study_z_moments(const StudyConfig& cfg) {
  StudyResult result;
  Real alpha(cfg.alpha);
  double a = cfg.alpha.get_d();
  RegimePath path = regime_path(cfg.beta, cfg.n_grid, a, true);
  const std::size_t first_tail = path.points.size() - cfg.tail;
  bool z_zero = true, z_exact = true, z2_exact = true, z2_shrinks = true;
  Real limit = alpha * (Real(1) - alpha);
  Real prev_gap;
  for (std::size_t j = 0; j < path.points.size(); ++j) {
    const RegimePoint& pt = path.points[j];
    FloatParams p = make_float_params(pt.n, alpha, pt.theta);
    ZMoments exact = exact_z_moments(p);
    double s = mthA_scale(p).to_double();
    double root_theta = sqrt(pt.theta).to_double();
    SamplerParams sp = SamplerParams::from(p);
    SeedSpec seed{cfg.seed, j * cfg.streams};
    auto z = [s, root_theta](std::uint64_t k) { return root_theta * (static_cast<double>(k) / s - 1.0); };
    auto [mz, mz2] = mc_pair(sp, cfg.replicates, seed, cfg.streams, z);
    add_row(result, pt.n, real_text(pt.theta), to_string(cfg.alpha), 1, "mean_z", exact.mean, Real(mz.mean));
    add_row(result, pt.n, real_text(pt.theta), to_string(cfg.alpha), 2, "mean_z2", exact.second, Real(mz2.mean));
    if (j < first_tail) continue;
    if (std::abs(mz.mean) > 4 * mz.standard_error()) z_zero = false;
    if (std::abs(mz.mean - exact.mean.to_double()) > 4 * mz.standard_error()) z_exact = false;
    if (std::abs(mz2.mean - exact.second.to_double()) > 4 * mz2.standard_error()) z2_exact = false;
    Real gap = abs(exact.second - limit);
    if (j > first_tail && !(gap < prev_gap)) z2_shrinks = false;
    prev_gap = gap;
  }
  result.checks.push_back({"mean_z_within_4se_of_zero", z_zero, "MC mean of Z within 4 SE of 0 at each tail point"});
  result.checks.push_back({"mean_z_within_4se_of_exact", z_exact, "MC mean of Z within 4 SE of the exact E[Z]"});
  result.checks.push_back({"mean_z2_within_4se_of_exact", z2_exact, "MC mean of Z^2 within 4 SE of the exact E[Z^2]"});
  result.checks.push_back({"exact_z2_gap_shrinks", z2_shrinks, "|E[Z^2] - a(1-a)| strictly decreasing on the tail"});
  return result;
}

/// Fixed grids for the four gamma-ratio expansions. Residual slopes are
/// fitted on relative residuals |approx/exact - 1|.
inline StudyResult study_lemma_expansions(const StudyConfig& cfg) {
  StudyResult result;
  const std::size_t tail = cfg.tail;
  {
    Real alpha(Rational(3, 4));
    Real theta(10);
    std::vector<std::uint64_t> grid = parse_grid("2^10..2^20");
    std::vector<Real> rel;
    for (std::uint64_t n : grid) {
      Real exact = lemma42_exact(n, theta, alpha, 2);
      Real approx = lemma42_expansion(n, theta, alpha, 2);
      add_row(result, n, "10", "3/4", 2, "lemma42", exact, approx);
      rel.push_back(approx / exact - Real(1));
    }
    result.slopes.push_back(slope_report("lemma42", as_double(grid), rel, tail, -1.0, 0.15));
  }
  {
    Real alpha(Rational(1, 2));
    std::vector<std::uint64_t> grid = parse_grid("2^4..2^14");
    std::vector<Real> rel;
    for (std::uint64_t t : grid) {
      Real theta(static_cast<unsigned long>(t));
      Real exact = lemma43_exact(theta, alpha, 1);
      Real approx = lemma43_expansion(theta, alpha, 1);
      add_row(result, 0, std::to_string(t), "1/2", 1, "lemma43", exact, approx);
      rel.push_back(approx / exact - Real(1));
    }
    result.slopes.push_back(slope_report("lemma43", as_double(grid), rel, tail, -2.0, 0.15));
  }
  {
    Real alpha(Rational(3, 4));
    std::vector<std::uint64_t> grid = parse_grid("50..51200");
    std::vector<Real> rel;
    for (std::uint64_t t : grid) {
      Real theta(static_cast<unsigned long>(t));
      Real exact = lemma44_exact(theta, alpha, 4);
      Real approx = lemma44_expansion(theta, alpha, 4);
      add_row(result, 0, std::to_string(t), "3/4", 4, "lemma44", exact, approx);
      rel.push_back(approx / exact - Real(1));
    }
    result.slopes.push_back(slope_report("lemma44", as_double(grid), rel, tail, -2.0, 0.15));
  }
  {
    Real alpha(Rational(1, 4));
    std::vector<std::uint64_t> grid = parse_grid("2^8..2^20");
    RegimePath path = regime_path(0.5, grid, 0.25);
    std::vector<Real> c;
    for (const RegimePoint& pt : path.points) {
      FloatParams p = make_float_params(pt.n, alpha, pt.theta);
      Real exact = gamma_ratio_product(p, 3);
      Real approx = lemma41_expansion(p, 3);
      add_row(result, pt.n, real_text(pt.theta), "1/4", 3, "lemma41", exact, approx);
      Real n(static_cast<unsigned long>(pt.n));
      Real bound = Real(1) / (pt.theta * pt.theta) + pt.theta * pt.theta / (n * n);
      c.push_back(abs(approx / exact - Real(1)) / bound);
    }
    Real lo = *std::min_element(c.end() - static_cast<long>(tail), c.end());
    Real hi = *std::max_element(c.end() - static_cast<long>(tail), c.end());
    result.checks.push_back({"lemma41_constant_stable", hi / lo <= Real(3),
                             "max/min of |rel. residual| / (1/theta^2 + theta^2/n^2) on the tail = " +
                                 (hi / lo).to_string(6)});
  }
  return result;
}

}  // namespace detail

/// Runs a study. Deterministic given the config (including the seed).
/// Writes <output_path>.csv and <output_path>.json when output_path is set.
StudyResult run_study(const StudyConfig& config);

// ---------------------------------------------------------------------------
// Serialization

inline void write_csv(std::ostream& out, const StudyResult& result) {
  out << "n,theta,alpha,r,label,exact,approx,residual\n";
  for (const StudyRow& row : result.rows) {
    out << row.n << ',' << row.theta << ',' << row.alpha << ',' << row.r << ',' << row.label << ',';
    if (row.exact_q && row.approx_q) {
      out << to_string(*row.exact_q) << ',' << to_string(*row.approx_q) << ','
          << to_string(Rational(*row.approx_q - *row.exact_q)) << '\n';
    } else {
      out << row.exact.to_string(17) << ',' << row.approx.to_string(17) << ',' << row.residual.to_string(17) << '\n';
    }
  }
}

inline Json config_to_json(const StudyConfig& cfg) {
  Json j;
  j["study"] = to_string(cfg.study);
  j["alpha"] = to_string(cfg.alpha);
  j["theta"] = to_string(cfg.theta);
  j["r_values"] = cfg.r_values;
  j["n_grid"] = cfg.n_grid;
  j["beta"] = cfg.beta;
  j["cr"] = cfg.cr;
  j["precision_bits"] = cfg.precision_bits;
  j["tol"] = cfg.tol;
  j["seed"] = cfg.seed;
  j["replicates"] = cfg.replicates;
  j["streams"] = cfg.streams;
  j["tail"] = cfg.tail;
  return j;
}

/// Reads a JSON config. Keys mirror StudyConfig; "alpha"/"theta" accept
/// "p/q" strings or numbers, "n_grid" a grid string or an array.
inline StudyConfig config_from_json(const Json& j) {
  StudyConfig cfg;
  auto rational = [](const Json& v) {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long>());
    if (v.is_number()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
      return parse_rational(buf);
    }
    throw InputError("expected a number or \"p/q\" string");
  };
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const Json& v = it.value();
      if (key == "study") cfg.study = parse_study(v.get<std::string>());
      else if (key == "alpha") cfg.alpha = rational(v);
      else if (key == "theta") cfg.theta = rational(v);
      else if (key == "r_values") cfg.r_values = v.get<std::vector<std::uint64_t>>();
      else if (key == "n_grid") cfg.n_grid = v.is_string() ? parse_grid(v.get<std::string>()) : v.get<std::vector<std::uint64_t>>();
      else if (key == "beta") cfg.beta = v.get<double>();
      else if (key == "cr") cfg.cr = v.get<bool>();
      else if (key == "precision_bits") cfg.precision_bits = v.get<long>();
      else if (key == "tol") cfg.tol = v.get<double>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "replicates") cfg.replicates = v.get<std::uint64_t>();
      else if (key == "streams") cfg.streams = v.get<std::uint64_t>();
      else if (key == "tail") cfg.tail = v.get<std::size_t>();
      else if (key == "output_path") cfg.output_path = v.get<std::string>();
      else throw InputError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad config: ") + e.what());
  }
  return cfg;
}

inline Json result_to_json(const StudyConfig& cfg, const StudyResult& result) {
  Json j;
  j["study"] = result.study;
  j["config"] = config_to_json(cfg);
  Json slopes = Json::object();
  Json flags = Json::object();
  for (const SlopeReport& s : result.slopes) {
    slopes[s.label] = {{"slope", s.fit.slope}, {"stderr", s.fit.stderr_}, {"points", s.fit.points},
                       {"expected", s.expected}, {"tolerance", s.tolerance}};
    flags[s.label] = s.pass;
  }
  for (const Check& c : result.checks) flags[c.name] = c.pass;
  j["fitted_slopes"] = slopes;
  j["pass_flags"] = flags;
  Json checks = Json::array();
  for (const Check& c : result.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = checks;
  j["rows"] = result.rows.size();
  j["verify_passed"] = result.verify_passed;
  j["theory_consistent"] = result.theory_consistent();
  return j;
}

inline StudyResult run_study(const StudyConfig& config) {
  config.validate();
  PrecisionScope scope(config.precision_bits);
  StudyResult result;
  switch (config.study) {
    case StudyName::thm31: result = detail::study_thm31(config); break;
    case StudyName::corrected: result = detail::study_corrected(config); break;
    case StudyName::kle: result = detail::study_kle(config); break;
    case StudyName::mthA: result = detail::study_mthA(config); break;
    case StudyName::corollary34: result = detail::study_corollary34(config); break;
    case StudyName::z_moments: result = detail::study_z_moments(config); break;
    case StudyName::lemma_expansions: result = detail::study_lemma_expansions(config); break;
    case StudyName::verify: result = run_verify(); break;
  }
  result.study = to_string(config.study);
  if (config.study != StudyName::verify) result.verify_passed = verification_passed();
  if (!config.output_path.empty()) {
    std::ofstream csv(config.output_path + ".csv");
    std::ofstream json(config.output_path + ".json");
    require(csv && json, "cannot write to output path '" + config.output_path + "'");
    write_csv(csv, result);
    json << result_to_json(config, result).dump(2) << '\n';
  }
  return result;
}

}  // namespace pitman
