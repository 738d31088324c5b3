#pragma once

// Scalar types shared by every module.
//
//   Rational  exact arbitrary-size rational (GMP), always in lowest terms.
//   Real      MPFR floating value that carries its own precision in bits.
//
// New Real values take the thread's working precision (see PrecisionScope).
// Arithmetic on two Reals yields max(precision) of the operands and unary
// functions keep the precision of their argument, so a result is never
// computed at fewer bits than its inputs.

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "pitman/errors.hpp"

namespace pitman {

using Rational = mpq_class;
using Integer = mpz_class;

inline constexpr long kDefaultPrecisionBits = 128;
inline constexpr long kMinPrecisionBits = 53;

namespace detail {
inline mpfr_prec_t& working_precision_ref() {
  thread_local mpfr_prec_t bits = kDefaultPrecisionBits;
  return bits;
}
}  // namespace detail

inline long working_precision() { return static_cast<long>(detail::working_precision_ref()); }

/// Sets the working precision for the current thread until destruction.
class PrecisionScope {
 public:
  explicit PrecisionScope(long bits) : saved_(detail::working_precision_ref()) {
    require(bits >= kMinPrecisionBits && bits <= MPFR_PREC_MAX,
            "precision_bits must be at least " + std::to_string(kMinPrecisionBits));
    detail::working_precision_ref() = static_cast<mpfr_prec_t>(bits);
  }
  ~PrecisionScope() { detail::working_precision_ref() = saved_; }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  mpfr_prec_t saved_;
};

/// Default precision, overridable through PITMAN_PRECISION_BITS.
inline long default_precision_bits() {
  if (const char* env = std::getenv("PITMAN_PRECISION_BITS")) {
    char* end = nullptr;
    long bits = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && bits >= kMinPrecisionBits) return bits;
    throw InputError("PITMAN_PRECISION_BITS must be an integer >= 53");
  }
  return kDefaultPrecisionBits;
}

class Real {
 public:
  Real() : Real(Bits{working_precision()}) { mpfr_set_zero(v_, 1); }
  Real(double x) : Real(Bits{working_precision()}) { mpfr_set_d(v_, x, MPFR_RNDN); }  // NOLINT
  Real(int x) : Real(static_cast<long>(x)) {}                                         // NOLINT
  Real(long x) : Real(Bits{working_precision()}) { mpfr_set_si(v_, x, MPFR_RNDN); }   // NOLINT
  Real(unsigned long x) : Real(Bits{working_precision()}) { mpfr_set_ui(v_, x, MPFR_RNDN); }  // NOLINT
  Real(unsigned x) : Real(static_cast<unsigned long>(x)) {}                           // NOLINT
  Real(long long x) : Real(static_cast<long>(x)) {}                                   // NOLINT
  Real(unsigned long long x) : Real(static_cast<unsigned long>(x)) {}                 // NOLINT
  Real(const Rational& q) : Real(Bits{working_precision()}) { mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN); }  // NOLINT
  Real(const Integer& z) : Real(Bits{working_precision()}) { mpfr_set_z(v_, z.get_mpz_t(), MPFR_RNDN); }  // NOLINT

  /// Parses a decimal string at the working precision.
  static Real from_string(std::string_view text) {
    Real r;
    std::string s(text);
    if (mpfr_set_str(r.v_, s.c_str(), 10, MPFR_RNDN) != 0) throw InputError("not a number: " + s);
    return r;
  }

  static Real pi(long bits = working_precision()) {
    Real r = with_precision(bits);
    mpfr_const_pi(r.v_, MPFR_RNDN);
    return r;
  }

  /// Zero at an explicit precision.
  static Real with_precision(long bits) {
    Real r(Bits{bits});
    mpfr_set_zero(r.v_, 1);
    return r;
  }

  Real(const Real& other) : Real(Bits{other.precision()}) { mpfr_set(v_, other.v_, MPFR_RNDN); }
  Real(Real&& other) noexcept : Real(Bits{other.precision()}) { mpfr_swap(v_, other.v_); }
  Real& operator=(const Real& other) {
    if (this != &other) {
      mpfr_set_prec(v_, mpfr_get_prec(other.v_));
      mpfr_set(v_, other.v_, MPFR_RNDN);
    }
    return *this;
  }
  Real& operator=(Real&& other) noexcept {
    mpfr_swap(v_, other.v_);
    return *this;
  }
  ~Real() { mpfr_clear(v_); }

  long precision() const { return static_cast<long>(mpfr_get_prec(v_)); }

  /// Copy rounded (or widened) to `bits`.
  Real at_precision(long bits) const {
    Real r = with_precision(bits);
    mpfr_set(r.v_, v_, MPFR_RNDN);
    return r;
  }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long double to_long_double() const { return mpfr_get_ld(v_, MPFR_RNDN); }

  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }
  /// Binary exponent e with 0.5 <= |x| / 2^e < 1; very negative for zero.
  long exponent() const { return is_zero() ? std::numeric_limits<long>::min() / 4 : static_cast<long>(mpfr_get_exp(v_)); }

  /// `digits` significant decimal digits in %g style.
  std::string to_string(int digits = 17) const {
    char* buf = nullptr;
    mpfr_asprintf(&buf, "%.*Rg", digits, v_);
    std::string s(buf);
    mpfr_free_str(buf);
    return s;
  }

  mpfr_srcptr get() const { return v_; }
  mpfr_ptr get() { return v_; }

  Real& operator+=(const Real& o) { return assign_binary(o, mpfr_add); }
  Real& operator-=(const Real& o) { return assign_binary(o, mpfr_sub); }
  Real& operator*=(const Real& o) { return assign_binary(o, mpfr_mul); }
  Real& operator/=(const Real& o) { return assign_binary(o, mpfr_div); }

  Real operator-() const {
    Real r(*this);
    mpfr_neg(r.v_, r.v_, MPFR_RNDN);
    return r;
  }

  friend Real operator+(const Real& a, const Real& b) { return binary(a, b, mpfr_add); }
  friend Real operator-(const Real& a, const Real& b) { return binary(a, b, mpfr_sub); }
  friend Real operator*(const Real& a, const Real& b) { return binary(a, b, mpfr_mul); }
  friend Real operator/(const Real& a, const Real& b) { return binary(a, b, mpfr_div); }

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend bool operator!=(const Real& a, const Real& b) { return !(a == b); }
  friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
  friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
  friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
  friend bool operator>=(const Real& a, const Real& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }

 private:
  struct Bits {
    long value;
  };
  explicit Real(Bits bits) { mpfr_init2(v_, static_cast<mpfr_prec_t>(bits.value)); }

  using BinaryFn = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t);

  static Real binary(const Real& a, const Real& b, BinaryFn fn) {
    Real r = with_precision(std::max(a.precision(), b.precision()));
    fn(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  Real& assign_binary(const Real& o, BinaryFn fn) {
    if (o.precision() > precision()) mpfr_prec_round(v_, mpfr_get_prec(o.v_), MPFR_RNDN);
    fn(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }

  mpfr_t v_;
};

namespace detail {
using UnaryFn = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_rnd_t);
inline Real unary(const Real& x, UnaryFn fn) {
  Real r = Real::with_precision(x.precision());
  fn(r.get(), x.get(), MPFR_RNDN);
  return r;
}
}  // namespace detail

inline Real abs(const Real& x) { return detail::unary(x, mpfr_abs); }
inline Real sqrt(const Real& x) { return detail::unary(x, mpfr_sqrt); }
inline Real log(const Real& x) { return detail::unary(x, mpfr_log); }
inline Real log1p(const Real& x) { return detail::unary(x, mpfr_log1p); }
inline Real exp(const Real& x) { return detail::unary(x, mpfr_exp); }
inline Real expm1(const Real& x) { return detail::unary(x, mpfr_expm1); }
inline Real sin(const Real& x) { return detail::unary(x, mpfr_sin); }
inline Real log2(const Real& x) { return detail::unary(x, mpfr_log2); }

inline Real pow(const Real& base, const Real& exponent) {
  Real r = Real::with_precision(std::max(base.precision(), exponent.precision()));
  mpfr_pow(r.get(), base.get(), exponent.get(), MPFR_RNDN);
  return r;
}

inline Real pow(const Real& base, long exponent) {
  Real r = Real::with_precision(base.precision());
  mpfr_pow_si(r.get(), base.get(), exponent, MPFR_RNDN);
  return r;
}

/// ln|Gamma(x)|; the sign of Gamma(x) is written to `sign` when given.
inline Real lgamma(const Real& x, int* sign = nullptr) {
  Real r = Real::with_precision(x.precision());
  int s = 0;
  mpfr_lgamma(r.get(), &s, x.get(), MPFR_RNDN);
  if (sign) *sign = s;
  return r;
}

/// sin(pi * x) with the product formed at extra precision.
inline Real sin_pi(const Real& x) {
  long bits = x.precision();
  PrecisionScope scope(bits + 32 + std::max(0L, x.exponent()));
  Real arg = Real::pi(working_precision()) * x.at_precision(working_precision());
  return sin(arg).at_precision(bits);
}

inline Real to_real(const Rational& q) { return Real(q); }
inline const Real& to_real(const Real& x) { return x; }

/// Parses "p/q", an integer, or a terminating decimal ("0.25") into lowest terms.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto fail = [&]() -> Rational { throw InputError("not a rational number: '" + s + "'"); };
  if (s.empty()) return fail();
  Rational q;
  auto dot = s.find('.');
  auto exp_pos = s.find_first_of("eE");
  if (dot == std::string::npos && exp_pos == std::string::npos) {
    if (s.find_first_not_of("+-0123456789/") != std::string::npos) return fail();
    if (s.front() == '+') s.erase(0, 1);
    if (q.set_str(s, 10) != 0) return fail();
    if (q.get_den() == 0) throw InputError("zero denominator in '" + s + "'");
    q.canonicalize();
    return q;
  }
  // Decimal: mantissa digits scaled by a power of ten.
  std::string mantissa = exp_pos == std::string::npos ? s : s.substr(0, exp_pos);
  long exp10 = 0;
  if (exp_pos != std::string::npos) {
    try {
      size_t used = 0;
      exp10 = std::stol(s.substr(exp_pos + 1), &used);
      if (used != s.size() - exp_pos - 1) return fail();
    } catch (const std::exception&) {
      return fail();
    }
  }
  bool negative = !mantissa.empty() && mantissa.front() == '-';
  if (!mantissa.empty() && (mantissa.front() == '-' || mantissa.front() == '+')) mantissa.erase(0, 1);
  auto d = mantissa.find('.');
  std::string digits = mantissa;
  if (d != std::string::npos) {
    digits = mantissa.substr(0, d) + mantissa.substr(d + 1);
    exp10 -= static_cast<long>(mantissa.size() - d - 1);
  }
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) return fail();
  Integer num(digits, 10);
  Integer scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
  q = exp10 < 0 ? Rational(num, scale) : Rational(num * scale);
  q.canonicalize();
  if (negative) q = -q;
  return q;
}

/// "p/q", or "p" when the denominator is 1.
inline std::string to_string(const Rational& q) { return q.get_str(10); }

inline std::string to_string(const Real& x, int digits = 17) { return x.to_string(digits); }

}  // namespace pitman
