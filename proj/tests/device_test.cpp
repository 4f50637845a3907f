#include "bornsim/device.hpp"

#include <algorithm>
#include <set>

#include "gtest/gtest.h"

using namespace bornsim;
using namespace bornsim::device;

namespace {

std::uint32_t down_mask_of(const ChainConfig& c) {
  std::uint32_t mask = 0;
  for (std::size_t i = 0; i < c.sites; ++i)
    if (c.spins[i] == 0) mask |= 1u << i;
  return mask;
}

}  // namespace

TEST(cycle_length, binomial_counts) {
  EXPECT_EQ(cycle_length(2), 2u);
  EXPECT_EQ(cycle_length(4), 6u);
  EXPECT_EQ(cycle_length(20), 184756u);
  EXPECT_THROW(cycle_length(5), std::invalid_argument);
  EXPECT_THROW(cycle_length(0), std::invalid_argument);
}

TEST(gray_sequence, starts_at_alternating_pattern) {
  for (std::size_t sites : {std::size_t{2}, std::size_t{4}, std::size_t{6}, std::size_t{8}}) {
    auto walk = balanced_gray_sequence(sites);
    std::uint32_t odd_sites = 0;
    for (std::size_t i = 1; i < sites; i += 2) odd_sites |= 1u << i;
    EXPECT_EQ(walk.front(), odd_sites) << "L=" << sites;
  }
}

TEST(gray_sequence, visits_every_balanced_subset_once_by_single_exchanges) {
  for (std::size_t sites : {std::size_t{2}, std::size_t{4}, std::size_t{6}, std::size_t{8},
                            std::size_t{10}, std::size_t{12}}) {
    auto walk = balanced_gray_sequence(sites);
    EXPECT_EQ(walk.size(), cycle_length(sites));
    std::set<std::uint32_t> seen(walk.begin(), walk.end());
    EXPECT_EQ(seen.size(), walk.size()) << "repeat at L=" << sites;
    for (std::uint32_t mask : walk)
      EXPECT_EQ(static_cast<std::size_t>(__builtin_popcount(mask)), sites / 2);
    for (std::size_t i = 0; i + 1 < walk.size(); ++i) {
      const std::uint32_t diff = walk[i] ^ walk[i + 1];
      EXPECT_EQ(__builtin_popcount(diff), 2) << "step " << i << " at L=" << sites;
    }
    // the revolving-door order is cyclic: last and first also differ by one swap
    EXPECT_EQ(__builtin_popcount(walk.back() ^ walk.front()), 2) << "L=" << sites;
  }
}

TEST(run_cycle, two_site_chain) {
  auto t = run_cycle(2);
  // emission, absorption, one exchange, re-emission
  ASSERT_EQ(t.moves.size(), 4u);
  ASSERT_EQ(t.configs.size(), 5u);
  std::set<std::uint32_t> balanced{down_mask_of(t.configs[2]), down_mask_of(t.configs[3])};
  EXPECT_EQ(balanced, (std::set<std::uint32_t>{0b01, 0b10}));
  EXPECT_EQ(t.moves[2].kind, MoveKind::Exchange);
  EXPECT_EQ(t.configs.back().photon, 1);
  EXPECT_EQ(t.configs.back().spins, (std::vector<std::uint8_t>{1, 1}));
}

TEST(run_cycle, visits_every_balanced_config_once) {
  for (std::size_t sites : {std::size_t{2}, std::size_t{4}, std::size_t{6}, std::size_t{8},
                            std::size_t{10}, std::size_t{12}}) {
    auto t = run_cycle(sites);
    const std::uint64_t cycle = cycle_length(sites);
    ASSERT_EQ(t.configs.size(), cycle + 3);
    std::set<std::uint32_t> seen;
    for (std::size_t i = 2; i < 2 + cycle; ++i) {
      EXPECT_EQ(t.configs[i].photon, 0);
      EXPECT_EQ(static_cast<std::uint64_t>(__builtin_popcount(down_mask_of(t.configs[i]))),
                sites / 2);
      seen.insert(down_mask_of(t.configs[i]));
    }
    EXPECT_EQ(seen.size(), cycle) << "L=" << sites;
  }
}

TEST(run_cycle, closes_on_the_post_emission_config_without_earlier_repeats) {
  auto t = run_cycle(8);
  EXPECT_EQ(t.configs.back(), t.configs[1]);
  std::set<std::size_t> indices;
  for (std::size_t i = 0; i + 1 < t.configs.size(); ++i)
    indices.insert(config_index(t.configs[i]));
  EXPECT_EQ(indices.size(), t.configs.size() - 1);  // all distinct before closure
}

TEST(run_cycle, every_step_matches_its_move) {
  auto t = run_cycle(6);
  for (std::size_t i = 0; i < t.moves.size(); ++i) {
    EXPECT_EQ(apply_move(t.moves[i], t.configs[i]), t.configs[i + 1]) << "step " << i;
  }
}

TEST(run_cycle, reversed_moves_restore_the_initial_config) {
  for (std::size_t sites : {std::size_t{2}, std::size_t{6}, std::size_t{10}}) {
    auto t = run_cycle(sites);
    ChainConfig c = t.configs.back();
    for (std::size_t i = t.moves.size(); i-- > 0;) c = apply_move(t.moves[i], c);
    EXPECT_EQ(c, t.configs.front()) << "L=" << sites;
  }
}

TEST(run_cycle, guard) {
  EXPECT_THROW(run_cycle(14), ResourceLimitError);
  EXPECT_THROW(run_cycle(3), std::invalid_argument);
}

TEST(coarse_grain, total_spin_readout) {
  EXPECT_EQ(coarse_grain(config_from_mask(4, AtomLevel::Ground, 1, 0)), 0);
  EXPECT_DOUBLE_EQ(total_spin(config_from_mask(4, AtomLevel::Ground, 1, 0)), 2.0);
  // down-up-down-up
  EXPECT_EQ(coarse_grain(config_from_mask(4, AtomLevel::Ground, 0, 0b0101)), 1);
  EXPECT_DOUBLE_EQ(total_spin(config_from_mask(4, AtomLevel::Ground, 0, 0b0101)), 0.0);
}

TEST(coarse_grain, label_constant_over_absorbed_segment) {
  for (std::size_t sites : {std::size_t{2}, std::size_t{4}, std::size_t{6}, std::size_t{8},
                            std::size_t{10}, std::size_t{12}}) {
    auto t = run_cycle(sites);
    const std::uint64_t cycle = cycle_length(sites);
    EXPECT_EQ(coarse_grain(t.configs[0]), 0);
    EXPECT_EQ(coarse_grain(t.configs[1]), 0);
    for (std::size_t i = 2; i < 2 + cycle; ++i) EXPECT_EQ(coarse_grain(t.configs[i]), 1);
    EXPECT_EQ(coarse_grain(t.configs.back()), 0);
  }
}

TEST(permutations, every_move_is_a_bijection) {
  auto t = run_cycle(6);
  const std::size_t dim = basis_dimension(6);
  for (const Move& m : t.moves) {
    auto perm = move_permutation(m, 6);
    std::vector<char> seen(dim, 0);
    for (std::size_t image : perm) {
      ASSERT_LT(image, dim);
      ASSERT_FALSE(seen[image]);
      seen[image] = 1;
    }
  }
}

TEST(permutations, moves_are_involutions) {
  auto t = run_cycle(4);
  for (const Move& m : t.moves) {
    auto perm = move_permutation(m, 4);
    auto twice = compose(perm, perm);
    for (std::size_t i = 0; i < twice.size(); ++i) EXPECT_EQ(twice[i], i);
  }
}

TEST(permutations, full_cycle_orbit_closes) {
  for (std::size_t sites : {std::size_t{2}, std::size_t{4}, std::size_t{6}}) {
    auto t = run_cycle(sites);
    std::vector<std::size_t> cycle_perm(basis_dimension(sites));
    for (std::size_t i = 0; i < cycle_perm.size(); ++i) cycle_perm[i] = i;
    for (const Move& m : t.moves) cycle_perm = compose(move_permutation(m, sites), cycle_perm);

    const std::size_t start = config_index(t.configs.front());
    EXPECT_EQ(cycle_perm[start], config_index(t.configs.back()));
    // iterate until return: the orbit of the initial state closes exactly
    std::size_t at = start;
    std::size_t steps = 0;
    do {
      at = cycle_perm[at];
      ++steps;
      ASSERT_LE(steps, cycle_perm.size());
    } while (at != start);
    EXPECT_EQ(cycle_perm[config_index(t.configs.back())], start);
  }
}

TEST(as_unitary, exchange_is_a_transposition_matrix) {
  Move m{MoveKind::Exchange, 0, 1, 0};
  auto u = as_unitary(m, 2);
  EXPECT_EQ(u.dimension(), 16u);
  // entries are exactly 0 or 1
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 16; ++c) {
      const cplx v = u.entry(r, c);
      EXPECT_TRUE((v == cplx{0.0, 0.0} || v == cplx{1.0, 0.0}));
    }
  // swapping site 0 and site 1 exchanges |up down> and |down up>
  auto perm = move_permutation(m, 2);
  EXPECT_EQ(perm[0b0001], 0b0010u);
  EXPECT_EQ(perm[0b0010], 0b0001u);
  EXPECT_EQ(perm[0b0000], 0b0000u);
  EXPECT_EQ(perm[0b0011], 0b0011u);
}

TEST(as_unitary, inverse_is_transpose) {
  auto t = run_cycle(4);
  for (const Move& m : t.moves) {
    auto u = as_unitary(m, 4);
    auto inv = u.adjoint();
    for (std::size_t r = 0; r < u.dimension(); ++r)
      for (std::size_t c = 0; c < u.dimension(); ++c)
        EXPECT_EQ(u.entry(r, c), inv.entry(c, r));
  }
}

TEST(as_unitary, guard) {
  Move m{MoveKind::Emission, 0, 0, 0};
  EXPECT_THROW(as_unitary(m, 10), ResourceLimitError);
  EXPECT_NO_THROW(as_unitary(m, 8));
}

TEST(config_index, round_trips) {
  auto t = run_cycle(6);
  for (const ChainConfig& c : t.configs)
    EXPECT_EQ(config_from_index(6, config_index(c)), c);
}
