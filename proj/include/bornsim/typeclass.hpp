#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bornsim/hilbert.hpp"
#include "bornsim/random.hpp"

// Type-basis representation of (c0|00> + c1|11>)^xN: the 2^N-amplitude
// product state collapses to N+1 symmetric-basis coefficients
//
//     p^(m/2) q^((N-m)/2) C(N,m)^(1/2),    p = |c0|^2, q = 1 - p,
//
// indexed by the type m = number of 0 outcomes. All coefficient arithmetic
// is done on natural logs with lgamma, so N up to 10^6 and beyond is exact
// to double precision where C(N,m) itself would overflow any float width.
//
// One boundary is deliberate and documented here rather than hidden: the
// squared-weight distribution over types *is* the object this expansion
// derives; sampling a finite-N world from it does not import an external
// probability postulate. Within a type class every sequence carries equal
// amplitude by construction of the symmetrizer, so the uniform within-type
// arrangement is the only symmetric choice.
//
// Outcomes are binary throughout. A k-valued register expands the same way
// over compositions (m_1, ..., m_k) with multinomial coefficients in place
// of C(N,m); nothing below depends on k = 2 except the type index being a
// single count.
namespace bornsim::typeclass {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Exact binomial coefficient for n <= 64 (the largest n where every C(n,k)
/// fits in 64 bits); cross-check path for the log-domain route.
inline std::uint64_t exact_binomial(unsigned n, unsigned k) {
  if (n > 64) throw std::invalid_argument("exact_binomial supports n <= 64");
  if (k > n) throw std::invalid_argument("k exceeds n");
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;  // integral at every step: r == C(n-k+i, i)
  }
  return static_cast<std::uint64_t>(r);
}

/// ln C(n, k) via lgamma.
inline double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

namespace detail {

/// log(sum exp(v)) over a range, safe against all -inf.
template <typename It>
double logsumexp(It first, It last) {
  double mx = kNegInf;
  for (It it = first; it != last; ++it) mx = std::max(mx, *it);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (It it = first; it != last; ++it) s += std::exp(*it - mx);
  return mx + std::log(s);
}

}  // namespace detail

/// Log of the symmetric-basis coefficient for type m at repetition count n:
/// (1/2)[m ln p + (n-m) ln q + ln C(n,m)]; -inf when the coefficient is 0.
inline double type_log_weight(std::size_t m, std::size_t n, double p) {
  if (m > n) throw std::out_of_range("type index m exceeds N");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0, 1]");
  const double q = 1.0 - p;
  if (p == 0.0) return m == 0 ? 0.0 : kNegInf;
  if (q == 0.0) return m == n ? 0.0 : kNegInf;
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  return 0.5 * (dm * std::log(p) + (dn - dm) * std::log(q) + log_choose(dn, dm));
}

/// Squared coefficient of type m: C(n,m) p^m q^(n-m), the mass the type
/// carries. Equals the Binomial(n, p) mass function at m.
inline double type_weight(std::size_t m, std::size_t n, double p) {
  return std::exp(2.0 * type_log_weight(m, n, p));
}

// The N+1 symmetric-basis coefficients of (c0|00> + c1|11>)^xN, stored as
// logs, index m = count of 0 outcomes.
class TypeDistribution {
 public:
  TypeDistribution(std::size_t n, double p, std::vector<double> log_weights)
      : n_(n), p_(p), log_w_(std::move(log_weights)) {
    if (log_w_.size() != n_ + 1)
      throw std::invalid_argument("need N+1 log weights");
    std::vector<double> doubled(log_w_.size());
    for (std::size_t i = 0; i < log_w_.size(); ++i) doubled[i] = 2.0 * log_w_[i];
    const double total = detail::logsumexp(doubled.begin(), doubled.end());
    if (std::abs(total) > 1e-10)
      throw std::domain_error("type weights are not the coefficients of a unit vector");
  }

  std::size_t repetitions() const { return n_; }
  double p() const { return p_; }
  const std::vector<double>& log_weights() const { return log_w_; }
  double log_weight(std::size_t m) const { return log_w_.at(m); }
  double weight_squared(std::size_t m) const { return std::exp(2.0 * log_w_.at(m)); }

 private:
  std::size_t n_;
  double p_;
  std::vector<double> log_w_;
};

/// Expands (c0|00> + c1|11>)^xN over the N+1 orthonormal symmetrized states.
inline TypeDistribution symmetric_expand(cplx c0, cplx c1, std::size_t n) {
  if (n == 0) throw std::invalid_argument("repetition count N must be >= 1");
  const double p = std::norm(c0);
  if (std::abs(p + std::norm(c1) - 1.0) > hilbert::kTol)
    throw std::invalid_argument("coefficients are not normalized");
  std::vector<double> lw(n + 1);
  for (std::size_t m = 0; m <= n; ++m) lw[m] = type_log_weight(m, n, std::min(p, 1.0));

  // lgamma carries a few ulp of its ~1e7-sized result at N ~ 10^6, which
  // drifts the summed mass to ~1e-9. The family is exactly normalized in
  // exact arithmetic, so pin it back in log domain; the shift is ~1e-16
  // for small N and never touches the leading 12 digits of any weight.
  std::vector<double> doubled(n + 1);
  for (std::size_t m = 0; m <= n; ++m) doubled[m] = 2.0 * lw[m];
  const double shift = 0.5 * detail::logsumexp(doubled.begin(), doubled.end());
  for (double& value : lw)
    if (value != kNegInf) value -= shift;
  return TypeDistribution(n, std::min(p, 1.0), std::move(lw));
}

struct DominantType {
  std::int64_t m_star = 0;        // argmax type; smaller index on an exact tie
  bool tie = false;               // a neighboring type has equal weight
  std::int64_t tie_with = 0;      // the tied neighbor (== m_star when no tie)
  bool shifted_from_floor = false;  // argmax differs from floor(N p)
};

// The dominant type. floor(N p) is the nominal answer; the floor can land
// one off the true argmax (and rounding of N*p itself can, for values like
// 0.36 * 10^6), so the three candidate neighbors are compared and the true
// argmax returned, flagged when it is not the floor value.
inline DominantType dominant_type(std::size_t n, double p) {
  if (n == 0) throw std::invalid_argument("N must be >= 1");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0, 1]");
  const auto nn = static_cast<std::int64_t>(n);
  std::int64_t floor_np = static_cast<std::int64_t>(std::floor(p * static_cast<double>(n)));
  floor_np = std::max<std::int64_t>(0, std::min(nn, floor_np));

  DominantType result;
  std::int64_t best = -1;
  double best_lw = kNegInf;
  for (std::int64_t cand = std::max<std::int64_t>(0, floor_np - 1);
       cand <= std::min(nn, floor_np + 1); ++cand) {
    const double lw = type_log_weight(static_cast<std::size_t>(cand), n, p);
    if (lw > best_lw) {
      best = cand;
      best_lw = lw;
    } else if (lw == best_lw && best >= 0) {
      result.tie = true;
      result.tie_with = cand;
    }
  }
  result.m_star = best;
  if (!result.tie) result.tie_with = best;
  result.shifted_from_floor = (best != floor_np);
  return result;
}

/// Natural log of the total squared weight of types with |m/N - p| > eps,
/// accumulated in log domain so tails far below double underflow keep their
/// value.
inline double log_tail_mass(std::size_t n, double p, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0, 1]");
  const double np = p * static_cast<double>(n);
  const double half_width = eps * static_cast<double>(n);
  std::vector<double> terms;
  for (std::size_t m = 0; m <= n; ++m) {
    if (std::abs(static_cast<double>(m) - np) > half_width)
      terms.push_back(2.0 * type_log_weight(m, n, p));
  }
  return detail::logsumexp(terms.begin(), terms.end());
}

/// exp of log_tail_mass; may underflow to 0 for deep tails (use the log
/// form for bound comparisons).
inline double tail_mass(std::size_t n, double p, double eps) {
  return std::exp(log_tail_mass(n, p, eps));
}

/// Binary KL divergence D(x || p), the decay rate governing the tails.
inline double binary_kl(double x, double p) {
  if (x < 0.0 || x > 1.0 || p <= 0.0 || p >= 1.0)
    throw std::invalid_argument("binary_kl domain");
  double d = 0.0;
  if (x > 0.0) d += x * std::log(x / p);
  if (x < 1.0) d += (1.0 - x) * std::log((1.0 - x) / (1.0 - p));
  return d;
}

struct WorldSample {
  std::vector<std::uint8_t> bits;  // registered outcomes i_1..i_N
  std::size_t m0 = 0;              // count of zeros
};

// Draws one registered world: the type m from the squared type weights,
// then a uniformly random arrangement of m zeros over the N slots (every
// arrangement within a type has identical amplitude). Deterministic for a
// fixed seed; parallel trials must use random::derive_seed(seed, trial).
inline WorldSample sample_world(std::size_t n, double p, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("N must be >= 1");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0, 1]");
  random::SplitMix64 rng(seed);
  const double u = random::uniform01(rng);

  std::size_t m = n;  // fallback if rounding leaves u above the final cumsum
  double cum = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    cum += type_weight(k, n, p);
    if (u < cum) {
      m = k;
      break;
    }
  }

  WorldSample sample;
  sample.m0 = m;
  sample.bits.assign(n, 1);
  for (std::size_t i = 0; i < m; ++i) sample.bits[i] = 0;
  random::shuffle(sample.bits, rng);
  return sample;
}

struct DenseExpansion {
  std::vector<cplx> amplitudes;   // 2^N entries, one bit per SA pair, pair 0 most significant
  std::vector<double> type_mass;  // squared amplitude collected per type m
};

// Brute-force oracle: materializes the full 2^N product expansion with each
// SA pair collapsed to its outcome bit, and groups squared amplitudes by
// type. Counterpart the log-domain expansion is tested against.
inline DenseExpansion dense_oracle_expand(cplx c0, cplx c1, std::size_t n) {
  if (n == 0) throw std::invalid_argument("repetition count N must be >= 1");
  if (n > 24) throw ResourceLimitError("dense expansion guarded at N <= 24");
  if (std::abs(std::norm(c0) + std::norm(c1) - 1.0) > hilbert::kTol)
    throw std::invalid_argument("coefficients are not normalized");

  std::vector<cplx> pow0(n + 1), pow1(n + 1);
  pow0[0] = pow1[0] = cplx{1.0, 0.0};
  for (std::size_t k = 1; k <= n; ++k) {
    pow0[k] = pow0[k - 1] * c0;
    pow1[k] = pow1[k - 1] * c1;
  }

  DenseExpansion out;
  const std::size_t total = std::size_t{1} << n;
  out.amplitudes.resize(total);
  out.type_mass.assign(n + 1, 0.0);
  for (std::size_t b = 0; b < total; ++b) {
    const std::size_t ones = static_cast<std::size_t>(__builtin_popcountll(b));
    const std::size_t zeros = n - ones;
    const cplx amp = pow0[zeros] * pow1[ones];
    out.amplitudes[b] = amp;
    out.type_mass[zeros] += std::norm(amp);
  }
  return out;
}

}  // namespace bornsim::typeclass
