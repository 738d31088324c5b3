#pragma once

// Stirling numbers of the second kind, Carlitz's weighted Stirling numbers,
// the generalized Stirling numbers c(n, k, alpha) and enumeration of the set
// of integer partitions of n in component-count form.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "pitman/errors.hpp"
#include "pitman/scalar.hpp"

namespace pitman {

/// S2(r, i); zero when i > r.
inline Integer stirling2(std::uint64_t r, std::uint64_t i) {
  if (i > r) return Integer(0);
  // row[k] holds S2(m, k) for the current m.
  std::vector<Integer> row(r + 1, Integer(0));
  row[0] = 1;
  for (std::uint64_t m = 1; m <= r; ++m) {
    for (std::uint64_t k = std::min(m, i); k >= 1; --k) {
      row[k] = Integer(k) * row[k] + row[k - 1];
    }
    row[0] = 0;
  }
  return row[i];
}

inline Integer binomial(std::uint64_t n, std::uint64_t k) {
  Integer b;
  mpz_bin_uiui(b.get_mpz_t(), n, k);
  return b;
}

/// R(r, i, lambda) = sum_j binom(r, j) lambda^j S2(r - j, i), for 0 <= i <= r.
template <class Scalar>
Scalar weighted_stirling_R(std::uint64_t r, std::uint64_t i, const Scalar& lambda) {
  require(i <= r, "weighted_stirling_R: i must not exceed r");
  Scalar total = Scalar(0);
  Scalar power = Scalar(1);
  for (std::uint64_t j = 0; j + i <= r; ++j) {
    Integer s2 = stirling2(r - j, i);
    if (s2 != 0) total += Scalar(Integer(binomial(r, j) * s2)) * power;
    power *= lambda;
  }
  return total;
}

/// Triangular table of the generalized Stirling numbers c(n, k, alpha),
/// 1 <= k <= n <= n_max, built with
///   c(n+1, k) = (n - k alpha) c(n, k) + alpha c(n, k-1),  c(1, 1) = alpha.
/// Every entry is positive for 0 < alpha < 1. Instances are immutable once
/// built and may be shared between threads.
template <class Scalar>
class CNumberTable {
 public:
  /// Largest n accepted in exact (rational) mode.
  static constexpr std::uint64_t kExactCap = 200;

  CNumberTable(std::uint64_t n_max, Scalar alpha) : n_max_(n_max), alpha_(std::move(alpha)) {
    require(n_max_ >= 1, "C-number table needs n_max >= 1");
    require(alpha_ > Scalar(0) && alpha_ < Scalar(1), "C-number table needs alpha in (0, 1)");
    if constexpr (std::is_same_v<Scalar, Rational>) {
      require(n_max_ <= kExactCap, "exact C-number table is capped at n = " + std::to_string(kExactCap) +
                                       "; use floating mode for larger n");
    }
    rows_.reserve(n_max_);
    rows_.push_back({alpha_});
    for (std::uint64_t n = 1; n < n_max_; ++n) {
      const std::vector<Scalar>& prev = rows_.back();
      std::vector<Scalar> next;
      next.reserve(n + 1);
      for (std::uint64_t k = 1; k <= n + 1; ++k) {
        Scalar value = Scalar(0);
        if (k <= n) value += (Scalar(static_cast<unsigned long>(n)) - Scalar(static_cast<unsigned long>(k)) * alpha_) * prev[k - 1];
        if (k >= 2) value += alpha_ * prev[k - 2];
        next.push_back(std::move(value));
      }
      rows_.push_back(std::move(next));
    }
  }

  std::uint64_t n_max() const { return n_max_; }
  const Scalar& alpha() const { return alpha_; }

  /// c(n, k, alpha); zero for k = 0 or k > n.
  Scalar operator()(std::uint64_t n, std::uint64_t k) const {
    require(n >= 1 && n <= n_max_, "C-number table: n out of range");
    if (k == 0 || k > n) return Scalar(0);
    return rows_[n - 1][k - 1];
  }

  /// Row n as c(n, 1..n, alpha).
  const std::vector<Scalar>& row(std::uint64_t n) const {
    require(n >= 1 && n <= n_max_, "C-number table: n out of range");
    return rows_[n - 1];
  }

  /// Debug dump with header n,k,value,log_space.
  void write_csv(std::ostream& out, bool log_space = false) const {
    out << "n,k,value,log_space\n";
    for (std::uint64_t n = 1; n <= n_max_; ++n) {
      for (std::uint64_t k = 1; k <= n; ++k) {
        const Scalar& v = rows_[n - 1][k - 1];
        out << n << ',' << k << ',';
        if constexpr (std::is_same_v<Scalar, Rational>) {
          if (log_space) {
            out << log(Real(v)).to_string();
          } else {
            out << to_string(v);
          }
        } else {
          out << (log_space ? log(v).to_string() : v.to_string());
        }
        out << ',' << (log_space ? 1 : 0) << '\n';
      }
    }
  }

 private:
  std::uint64_t n_max_;
  Scalar alpha_;
  std::vector<std::vector<Scalar>> rows_;
};

/// c(n, k, alpha) for a single pair; builds the table up to n.
template <class Scalar>
Scalar gen_stirling_c(std::uint64_t n, std::uint64_t k, const Scalar& alpha) {
  require(n >= 1, "gen_stirling_c: n must be positive");
  require(k >= 1 && k <= n, "gen_stirling_c: k must lie in 1..n");
  return CNumberTable<Scalar>(n, alpha)(n, k);
}

// ---------------------------------------------------------------------------
// Partitions

/// Component counts (c_1, ..., c_n) of a partition of n: c_i parts of size i.
struct PartitionCounts {
  std::vector<std::uint64_t> counts;

  std::uint64_t n() const { return counts.size(); }

  /// K = sum_i c_i.
  std::uint64_t length() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

  /// True when sum_i i c_i equals n.
  bool valid() const {
    if (counts.empty()) return false;
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < counts.size(); ++i) total += (i + 1) * counts[i];
    return total == counts.size();
  }

  /// Parts in non-increasing order.
  std::vector<std::uint64_t> parts() const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t size = counts.size(); size >= 1; --size) {
      out.insert(out.end(), counts[size - 1], size);
    }
    return out;
  }

  static PartitionCounts from_parts(const std::vector<std::uint64_t>& parts, std::uint64_t n) {
    PartitionCounts pc{std::vector<std::uint64_t>(n, 0)};
    for (std::uint64_t p : parts) {
      require(p >= 1 && p <= n, "part size out of range");
      ++pc.counts[p - 1];
    }
    require(pc.valid(), "parts do not sum to n");
    return pc;
  }

  friend bool operator==(const PartitionCounts&, const PartitionCounts&) = default;
};

/// Default upper bound on n for exhaustive enumeration (p(40) = 37338).
inline constexpr std::uint64_t kEnumerationCap = 40;

/// Walks the partitions of n with parts listed in non-increasing order,
/// sequences in ascending lexicographic order: 1+1+...+1 first, n last.
class PartitionGenerator {
 public:
  explicit PartitionGenerator(std::uint64_t n) : n_(n), parts_(n, 1) { require(n >= 1, "n must be positive"); }

  const std::vector<std::uint64_t>& parts() const { return parts_; }
  PartitionCounts counts() const { return PartitionCounts::from_parts(parts_, n_); }

  /// Advances to the next partition; false once the last one was visited.
  bool next() {
    // Rightmost position that can grow by one while the prefix stays
    // non-increasing and at least one unit remains after it.
    std::uint64_t tail = 0;
    for (std::size_t j = parts_.size(); j-- > 0;) {
      bool fits = j == 0 || parts_[j] + 1 <= parts_[j - 1];
      if (tail >= 1 && fits) {
        ++parts_[j];
        parts_.resize(j + 1);
        parts_.insert(parts_.end(), tail - 1, 1);
        return true;
      }
      tail += parts_[j];
    }
    return false;
  }

 private:
  std::uint64_t n_;
  std::vector<std::uint64_t> parts_;
};

template <class Visitor>
void for_each_partition(std::uint64_t n, Visitor&& visit, std::uint64_t cap = kEnumerationCap) {
  require(n >= 1, "n must be positive");
  require(n <= cap, "enumeration is capped at n = " + std::to_string(cap));
  PartitionGenerator gen(n);
  do {
    visit(gen.counts());
  } while (gen.next());
}

/// Every element of the partition set of n, exactly once.
inline std::vector<PartitionCounts> enumerate_partitions(std::uint64_t n, std::uint64_t cap = kEnumerationCap) {
  std::vector<PartitionCounts> out;
  for_each_partition(n, [&](PartitionCounts pc) { out.push_back(std::move(pc)); }, cap);
  return out;
}

/// p(n) by the parts-bounded counting recurrence.
inline Integer partition_number(std::uint64_t n) {
  std::vector<Integer> ways(n + 1, Integer(0));
  ways[0] = 1;
  for (std::uint64_t part = 1; part <= n; ++part) {
    for (std::uint64_t total = part; total <= n; ++total) ways[total] += ways[total - part];
  }
  return ways[n];
}

}  // namespace pitman
