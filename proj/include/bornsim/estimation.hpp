#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bornsim/typeclass.hpp"

// The statistician's side of the experiment: plug-in estimates of the
// coefficient moduli from registered counts, the cascaded-count ratios, and
// an exact binomial confidence bound for the testing step. Counts identify
// |c_j| only; the relative phase is invisible to a fixed readout and needs
// a different coupling.
namespace bornsim::estimation {

struct CountRecord {
  std::size_t m0 = 0;  // registered 0s
  std::size_t m1 = 0;  // registered 1s
  std::size_t total() const { return m0 + m1; }
};

/// Conditional counts taken after an intermediate readout selected the
/// A = 0 branch: m0_given_0 + m1_given_0 == m0_total.
struct ConditionalCounts {
  std::size_t m0_given_0 = 0;
  std::size_t m1_given_0 = 0;
  std::size_t m0_total = 0;
};

struct CascadeCounts {
  std::size_t m00 = 0, m01 = 0, m10 = 0, m11 = 0;  // registered (A,B) pairs
  std::optional<ConditionalCounts> conditional;
  std::size_t total() const { return m00 + m01 + m10 + m11; }

  void validate() const {
    if (conditional &&
        conditional->m0_given_0 + conditional->m1_given_0 != conditional->m0_total)
      throw std::invalid_argument("conditional counts do not sum to M0");
  }
};

struct CoefficientEstimate {
  double c0_hat = 0.0;
  double c1_hat = 0.0;
  std::size_t sample_size = 0;
  double standard_error = 0.0;  // of p_hat = m0/N, sqrt(p_hat (1-p_hat) / N)
};

/// c0_hat = sqrt(m0/N), c1_hat = sqrt(1 - m0/N).
inline CoefficientEstimate estimate_coefficients(const CountRecord& record) {
  const std::size_t n = record.total();
  if (n == 0) throw std::invalid_argument("cannot estimate from zero counts");
  const double p_hat = static_cast<double>(record.m0) / static_cast<double>(n);
  CoefficientEstimate est;
  est.c0_hat = std::sqrt(p_hat);
  est.c1_hat = std::sqrt(1.0 - p_hat);
  est.sample_size = n;
  est.standard_error = std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
  return est;
}

inline CountRecord count_bits(const std::vector<std::uint8_t>& bits) {
  CountRecord r;
  for (std::uint8_t b : bits) {
    if (b > 1) throw std::invalid_argument("outcome bits must be 0 or 1");
    if (b == 0)
      ++r.m0;
    else
      ++r.m1;
  }
  return r;
}

struct CascadeEstimates {
  double c0_sq = 0.0;  // (m00 + m01) / N
  double c1_sq = 0.0;  // (m10 + m11) / N
  // Conditional ratios; empty when the conditioning branch has zero counts.
  std::optional<double> c0p_sq, c1p_sq;    // m00/(m00+m01), m01/(m00+m01)
  std::optional<double> c0pp_sq, c1pp_sq;  // m10/(m10+m11), m11/(m10+m11)
};

// Real-valued counts are accepted so that exact expected counts
// N * |c_i c'_j|^2 round-trip without integer truncation.
inline CascadeEstimates cascade_estimates(double m00, double m01, double m10, double m11) {
  for (double m : {m00, m01, m10, m11})
    if (m < 0.0 || !std::isfinite(m)) throw std::invalid_argument("counts must be finite and nonnegative");
  const double n = m00 + m01 + m10 + m11;
  if (n <= 0.0) throw std::invalid_argument("cannot estimate from zero counts");
  CascadeEstimates est;
  est.c0_sq = (m00 + m01) / n;
  est.c1_sq = (m10 + m11) / n;
  if (m00 + m01 > 0.0) {
    est.c0p_sq = m00 / (m00 + m01);
    est.c1p_sq = m01 / (m00 + m01);
  }
  if (m10 + m11 > 0.0) {
    est.c0pp_sq = m10 / (m10 + m11);
    est.c1pp_sq = m11 / (m10 + m11);
  }
  return est;
}

inline CascadeEstimates cascade_estimates(const CascadeCounts& counts) {
  counts.validate();
  return cascade_estimates(static_cast<double>(counts.m00), static_cast<double>(counts.m01),
                           static_cast<double>(counts.m10), static_cast<double>(counts.m11));
}

namespace detail {

/// log P(X <= k) for X ~ Binomial(n, p).
inline double log_binomial_cdf(std::size_t k, std::size_t n, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return k == n ? 0.0 : typeclass::kNegInf;
  std::vector<double> terms(k + 1);
  const double lp = std::log(p), lq = std::log1p(-p);
  for (std::size_t i = 0; i <= k; ++i)
    terms[i] = typeclass::log_choose(static_cast<double>(n), static_cast<double>(i)) +
               static_cast<double>(i) * lp + static_cast<double>(n - i) * lq;
  return typeclass::detail::logsumexp(terms.begin(), terms.end());
}

}  // namespace detail

// Exact (Clopper-Pearson) upper confidence bound for the per-trial flag-1
// probability after observing `failures` flags in n trials: the p solving
// P(X <= failures) = 1 - level, found by bisection on the log CDF. For
// failures = 0 this reduces to 1 - (1-level)^(1/n).
inline double test_confidence(std::size_t failures, std::size_t n, double level) {
  if (n == 0) throw std::invalid_argument("need at least one trial");
  if (failures > n) throw std::invalid_argument("failures exceed trial count");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
  if (failures == n) return 1.0;

  const double target = std::log1p(-level);  // log(1 - level)
  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (detail::log_binomial_cdf(failures, n, mid) > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace bornsim::estimation
