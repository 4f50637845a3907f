#include "bornsim/typeclass.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <numeric>

#include "gtest/gtest.h"
#include "support.hpp"

using namespace bornsim;
using namespace bornsim::typeclass;
using testsupport::random_coefficients;

namespace {

// Independent big-integer oracle: C(n, k) p^k q^(n-k) evaluated in 50-digit
// float arithmetic from an exact integer binomial.
double bigint_binomial_mass(unsigned n, unsigned k, double p) {
  namespace mp = boost::multiprecision;
  mp::cpp_int c = 1;
  for (unsigned i = 1; i <= k; ++i) {
    c *= n - k + i;
    c /= i;
  }
  using big_float = mp::cpp_bin_float_50;
  big_float value(c);
  value *= mp::pow(big_float(p), static_cast<int>(k));
  value *= mp::pow(big_float(1.0 - p), static_cast<int>(n - k));
  return value.convert_to<double>();
}

}  // namespace

TEST(exact_binomial, small_table_and_limits) {
  EXPECT_EQ(exact_binomial(2, 1), 2u);
  EXPECT_EQ(exact_binomial(4, 2), 6u);
  EXPECT_EQ(exact_binomial(7, 3), 35u);
  EXPECT_EQ(exact_binomial(20, 10), 184756u);
  EXPECT_EQ(exact_binomial(64, 32), 1832624140942590534ull);
  EXPECT_THROW(exact_binomial(65, 2), std::invalid_argument);
  EXPECT_THROW(exact_binomial(4, 5), std::invalid_argument);
}

TEST(symmetric_expand, two_copies_match_displayed_coefficients) {
  // (c0|00> + c1|11>)^x2 = c0^2 (m=2 term) + sqrt2 c0 c1 (m=1) + c1^2 (m=0).
  auto dist = symmetric_expand(0.6, 0.8, 2);
  EXPECT_NEAR(std::exp(dist.log_weight(2)), 0.36, 1e-15);
  EXPECT_NEAR(std::exp(dist.log_weight(1)), std::sqrt(2.0) * 0.48, 1e-15);
  EXPECT_NEAR(std::exp(dist.log_weight(0)), 0.64, 1e-15);
}

TEST(symmetric_expand, deterministic_state_concentrates_one_type) {
  auto dist = symmetric_expand(1.0, 0.0, 7);
  EXPECT_EQ(dist.log_weight(7), 0.0);
  for (std::size_t m = 0; m < 7; ++m) EXPECT_EQ(dist.log_weight(m), kNegInf);
}

TEST(symmetric_expand, balanced_state_gives_binomial_half) {
  // Dual oracle: dense enumeration grouped by type, and exact C(10,m)/2^10.
  const double r = 1.0 / std::sqrt(2.0);
  auto dist = symmetric_expand(r, r, 10);
  auto dense = dense_oracle_expand(r, r, 10);
  for (std::size_t m = 0; m <= 10; ++m) {
    const double exact = static_cast<double>(exact_binomial(10, m)) * std::ldexp(1.0, -10);
    EXPECT_NEAR(dist.weight_squared(m), exact, 1e-15);
    EXPECT_NEAR(dense.type_mass[m], exact, 1e-15);
  }
}

TEST(symmetric_expand, validates_inputs) {
  EXPECT_THROW(symmetric_expand(1.0, 1.0, 4), std::invalid_argument);
  EXPECT_THROW(symmetric_expand(1.0, 0.0, 0), std::invalid_argument);
}

TEST(symmetric_expand, complex_coefficients_supported) {
  random::SplitMix64 rng(5);
  auto [c0, c1] = random_coefficients(rng);
  auto dist = symmetric_expand(c0, c1, 9);
  auto dense = dense_oracle_expand(c0, c1, 9);
  for (std::size_t m = 0; m <= 9; ++m)
    EXPECT_NEAR(dist.weight_squared(m), dense.type_mass[m], 1e-12);
}

TEST(type_weight, middle_type_of_two_repetitions) {
  // Enumerating the four amplitudes of (c0|00> + c1|11>)^x2 at p = 1/2 puts
  // squared mass 1/4 + 1/4 on the m = 1 class.
  EXPECT_NEAR(type_weight(1, 2, 0.5), 0.5, 1e-15);
}

TEST(type_weight, certain_outcome) {
  EXPECT_DOUBLE_EQ(type_weight(5, 5, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(type_weight(0, 5, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(type_weight(0, 5, 0.0), 1.0);
}

TEST(type_weight, out_of_range_rejected) {
  EXPECT_THROW(type_weight(6, 5, 0.5), std::out_of_range);
  EXPECT_THROW(type_weight(1, 5, 1.5), std::invalid_argument);
}

TEST(type_weight, matches_bigint_oracle_at_n_1000) {
  const double oracle = bigint_binomial_mass(1000, 500, 0.5);
  const double value = type_weight(500, 1000, 0.5);
  EXPECT_NEAR(value / oracle, 1.0, 1e-12);  // agree to 12 significant digits
}

TEST(type_weight, matches_bigint_oracle_off_center) {
  for (unsigned m : {100u, 300u, 360u, 420u, 700u}) {
    const double oracle = bigint_binomial_mass(1000, m, 0.36);
    const double value = type_weight(m, 1000, 0.36);
    EXPECT_NEAR(value / oracle, 1.0, 1e-11) << "m=" << m;
  }
}

TEST(type_distribution, normalization_across_scales) {
  for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{17}, std::size_t{1000},
                        std::size_t{1000000}}) {
    auto dist = symmetric_expand(0.6, 0.8, n);  // construction enforces unit mass to 1e-10
    std::vector<double> doubled(n + 1);
    for (std::size_t m = 0; m <= n; ++m) doubled[m] = 2.0 * dist.log_weight(m);
    EXPECT_NEAR(typeclass::detail::logsumexp(doubled.begin(), doubled.end()), 0.0, 1e-10);
  }
}

TEST(dominant_type, floor_of_np) {
  EXPECT_EQ(dominant_type(10, 0.3).m_star, 3);
  EXPECT_EQ(dominant_type(1000000, 0.36).m_star, 360000);
  EXPECT_EQ(dominant_type(10, 1.0).m_star, 10);
  EXPECT_EQ(dominant_type(10, 0.0).m_star, 0);
}

TEST(dominant_type, exact_tie_is_flagged_with_smaller_index) {
  // C(7,3) = C(7,4) and p = 1/2 weights them equally.
  auto d = dominant_type(7, 0.5);
  EXPECT_EQ(d.m_star, 3);
  EXPECT_TRUE(d.tie);
  EXPECT_EQ(d.tie_with, 4);
}

TEST(dominant_type, floor_boundary_shift_is_corrected) {
  // N=2, p=0.49: floor(Np) = 0 but mass(1) = 0.4998 > mass(0) = 0.2601.
  auto d = dominant_type(2, 0.49);
  EXPECT_EQ(d.m_star, 1);
  EXPECT_TRUE(d.shifted_from_floor);
}

TEST(dominant_type, maximizes_weight_everywhere) {
  random::SplitMix64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + rng.next() % 40;
    const double p = random::uniform01(rng);
    const auto d = dominant_type(n, p);
    const double best = type_weight(static_cast<std::size_t>(d.m_star), n, p);
    for (std::size_t m = 0; m <= n; ++m)
      EXPECT_GE(best + 1e-15, type_weight(m, n, p)) << "n=" << n << " p=" << p << " m=" << m;
  }
}

TEST(tail_mass, extreme_eps_leaves_only_endpoints) {
  // p = 1/2, eps just under 1/2: only m = 0 and m = 100 lie outside, each
  // carrying 2^-100.
  const double expected = std::ldexp(2.0, -100);
  EXPECT_NEAR(tail_mass(100, 0.5, 0.4999) / expected, 1.0, 1e-12);
}

TEST(tail_mass, degenerate_p_has_no_tail) {
  EXPECT_DOUBLE_EQ(tail_mass(50, 1.0, 0.1), 0.0);
  EXPECT_EQ(log_tail_mass(50, 1.0, 0.1), kNegInf);
}

TEST(tail_mass, bounded_by_chernoff) {
  for (double p : {0.3, 0.5, 0.36}) {
    for (double eps : {0.05, 0.1}) {
      for (std::size_t n : {std::size_t{100}, std::size_t{1000}, std::size_t{10000}}) {
        const double dstar =
            std::min(binary_kl(p - eps, p), binary_kl(p + eps, p));
        const double bound_log = std::log(2.0) - static_cast<double>(n) * dstar;
        EXPECT_LE(log_tail_mass(n, p, eps), bound_log) << "p=" << p << " eps=" << eps << " n=" << n;
      }
    }
  }
}

TEST(tail_mass, monotone_in_eps_and_n) {
  EXPECT_LT(log_tail_mass(1000, 0.3, 0.08), log_tail_mass(1000, 0.3, 0.05));
  EXPECT_LT(log_tail_mass(1000, 0.3, 0.05), log_tail_mass(100, 0.3, 0.05));
  EXPECT_LT(log_tail_mass(10000, 0.3, 0.05), log_tail_mass(1000, 0.3, 0.05));
  EXPECT_THROW(tail_mass(100, 0.3, 0.0), std::invalid_argument);
}

TEST(sample_world, degenerate_types) {
  auto all_zero = sample_world(5, 1.0, 42);
  EXPECT_EQ(all_zero.m0, 5u);
  for (auto b : all_zero.bits) EXPECT_EQ(b, 0);
  auto all_one = sample_world(5, 0.0, 43);
  EXPECT_EQ(all_one.m0, 0u);
  for (auto b : all_one.bits) EXPECT_EQ(b, 1);
}

TEST(sample_world, deterministic_given_seed) {
  auto a = sample_world(64, 0.3, 999);
  auto b = sample_world(64, 0.3, 999);
  EXPECT_EQ(a.bits, b.bits);
  auto c = sample_world(64, 0.3, random::derive_seed(999, 1));
  EXPECT_NE(a.bits, c.bits);
}

TEST(sample_world, count_matches_bits) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto w = sample_world(100, 0.3, seed);
    std::size_t zeros = 0;
    for (auto b : w.bits) zeros += (b == 0);
    EXPECT_EQ(zeros, w.m0);
  }
}

TEST(sample_world, mean_type_fraction_within_three_sigma) {
  // sigma of m0/N is sqrt(pq/N) ~ 0.005 at p = 1/2, N = 10^4; the band
  // 0.5 +/- 0.015 is the 3-sigma envelope for the *per-sample* fraction, so
  // the 100-seed mean sits far inside it.
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto w = sample_world(10000, 0.5, random::derive_seed(7000, seed));
    sum += static_cast<double>(w.m0) / 10000.0;
  }
  const double mean = sum / 100.0;
  EXPECT_GT(mean, 0.485);
  EXPECT_LT(mean, 0.515);
}

TEST(sample_world, chi_squared_against_type_weights) {
  // 10^5 draws of the type at N = 100, p = 0.3, goodness-of-fit against the
  // squared weights; cells with expectation < 5 merge into their neighbor.
  const std::size_t n = 100;
  const double p = 0.3;
  const std::size_t draws = 100000;
  std::vector<std::size_t> observed(n + 1, 0);
  for (std::size_t i = 0; i < draws; ++i)
    observed[sample_world(n, p, random::derive_seed(31337, i)).m0]++;

  std::vector<double> expected(n + 1);
  for (std::size_t m = 0; m <= n; ++m)
    expected[m] = static_cast<double>(draws) * type_weight(m, n, p);

  double chi2 = 0.0;
  std::size_t bins = 0;
  double exp_acc = 0.0, obs_acc = 0.0;
  for (std::size_t m = 0; m <= n; ++m) {
    exp_acc += expected[m];
    obs_acc += static_cast<double>(observed[m]);
    const bool last = (m == n);
    if (exp_acc >= 5.0 || last) {
      if (exp_acc > 0.0) {
        chi2 += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
        ++bins;
      }
      exp_acc = obs_acc = 0.0;
    }
  }
  ASSERT_GT(bins, 3u);
  const double dof = static_cast<double>(bins - 1);
  const double p_value = testsupport::gamma_q(dof / 2.0, chi2 / 2.0);
  EXPECT_GT(p_value, 0.001) << "chi2=" << chi2 << " bins=" << bins;
}

TEST(dense_oracle, base_case) {
  auto e = dense_oracle_expand(0.6, 0.8, 1);
  ASSERT_EQ(e.amplitudes.size(), 2u);
  EXPECT_NEAR(std::abs(e.amplitudes[0] - cplx{0.6, 0}), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(e.amplitudes[1] - cplx{0.8, 0}), 0.0, 1e-15);
}

TEST(dense_oracle, hand_expansion_n2) {
  auto e = dense_oracle_expand(0.6, 0.8, 2);
  ASSERT_EQ(e.amplitudes.size(), 4u);
  EXPECT_NEAR(e.amplitudes[0].real(), 0.36, 1e-15);
  EXPECT_NEAR(e.amplitudes[1].real(), 0.48, 1e-15);
  EXPECT_NEAR(e.amplitudes[2].real(), 0.48, 1e-15);
  EXPECT_NEAR(e.amplitudes[3].real(), 0.64, 1e-15);
}

TEST(dense_oracle, grouped_sums_match_log_domain_expansion) {
  random::SplitMix64 rng(271828);
  for (int trial = 0; trial < 8; ++trial) {
    auto [c0, c1] = random_coefficients(rng);
    auto dist = symmetric_expand(c0, c1, 12);
    auto dense = dense_oracle_expand(c0, c1, 12);
    for (std::size_t m = 0; m <= 12; ++m)
      EXPECT_NEAR(dense.type_mass[m], dist.weight_squared(m), 1e-12);
  }
}

TEST(dense_oracle, memory_guard) {
  EXPECT_THROW(dense_oracle_expand(1.0, 0.0, 25), ResourceLimitError);
}
