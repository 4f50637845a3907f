#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bornsim/hilbert.hpp"
#include "bornsim/typeclass.hpp"

// Stable measurement device as a strictly reversible permutation dynamics:
// an excited atom emits one photon, an L-site spin chain absorbs it with
// L/2 flips, single up/down exchanges walk the chain through every balanced
// configuration exactly once, and the chain re-emits the photon back to
// all-up. The recurrence time C(L, L/2) grows combinatorially while the
// coarse readout (total spin) sits constant at 1 for the whole absorbed
// segment, which is what makes the record look irreversible.
//
// The exchange schedule is a revolving-door Gray sequence over the
// (L/2)-subsets of down-sites: consecutive subsets differ by moving one
// site between the up and down sets, the list is cyclic, and it is
// relabeled so the walk starts at the alternating up/down pattern the
// absorption produces. Exchanges are not restricted to adjacent sites.
namespace bornsim::device {

enum class AtomLevel : std::uint8_t { Ground = 0, Excited = 1 };

struct ChainConfig {
  std::size_t sites = 0;            // L
  AtomLevel atom = AtomLevel::Ground;
  std::uint8_t photon = 0;          // occupation of the photon mode
  std::vector<std::uint8_t> spins;  // per site, 1 = up

  bool operator==(const ChainConfig&) const = default;
};

enum class MoveKind : std::uint8_t {
  Emission,    // atom excited -> ground, photon appears
  Absorption,  // photon vanishes, L/2 spins flip down
  Exchange,    // one up spin and one down spin swap
  Reemission,  // balanced chain flips back to all-up, photon reappears
};

struct Move {
  MoveKind kind = MoveKind::Exchange;
  std::size_t site_to_up = 0;    // Exchange: the down site flipping up
  std::size_t site_to_down = 0;  // Exchange: the up site flipping down
  std::uint32_t pattern = 0;     // Absorption/Reemission: the balanced down-site mask
};

struct DeviceTrajectory {
  std::size_t sites = 0;
  std::vector<ChainConfig> configs;  // moves.size() + 1 entries
  std::vector<Move> moves;
};

/// Number of balanced configurations, C(L, L/2).
inline std::uint64_t cycle_length(std::size_t sites) {
  if (sites < 2 || sites % 2 != 0) throw std::invalid_argument("chain length must be even and >= 2");
  if (sites > 64) throw std::invalid_argument("cycle_length supports L <= 64");
  return typeclass::exact_binomial(static_cast<unsigned>(sites), static_cast<unsigned>(sites / 2));
}

namespace detail {

// Revolving-door list of all k-subsets of {0..n-1} as bitmasks: consecutive
// subsets (cyclically) differ by one element swapped. First entry {0..k-1}.
inline std::vector<std::uint32_t> revolving_door(std::size_t n, std::size_t k) {
  if (k == 0) return {0u};
  if (k == n) return {(n == 32 ? ~0u : (1u << n) - 1u)};
  auto without = revolving_door(n - 1, k);
  auto with = revolving_door(n - 1, k - 1);
  std::reverse(with.begin(), with.end());
  for (std::uint32_t& mask : with) mask |= 1u << (n - 1);
  without.insert(without.end(), with.begin(), with.end());
  return without;
}

}  // namespace detail

// Down-site masks of the balanced walk, starting from the alternating
// pattern (down on odd sites) that absorption produces.
inline std::vector<std::uint32_t> balanced_gray_sequence(std::size_t sites) {
  if (sites < 2 || sites % 2 != 0) throw std::invalid_argument("chain length must be even and >= 2");
  if (sites > 28) throw ResourceLimitError("balanced walk guarded at L <= 28");
  const std::size_t half = sites / 2;
  auto raw = detail::revolving_door(sites, half);
  // Relabel sites so the canonical start {0..L/2-1} becomes the odd sites.
  std::vector<std::size_t> relabel(sites);
  for (std::size_t i = 0; i < half; ++i) relabel[i] = 2 * i + 1;
  for (std::size_t j = 0; j < half; ++j) relabel[half + j] = 2 * j;
  for (std::uint32_t& mask : raw) {
    std::uint32_t mapped = 0;
    for (std::size_t i = 0; i < sites; ++i)
      if (mask & (1u << i)) mapped |= 1u << relabel[i];
    mask = mapped;
  }
  return raw;
}

inline ChainConfig initial_config(std::size_t sites) {
  ChainConfig c;
  c.sites = sites;
  c.atom = AtomLevel::Excited;
  c.photon = 0;
  c.spins.assign(sites, 1);
  return c;
}

inline ChainConfig config_from_mask(std::size_t sites, AtomLevel atom, std::uint8_t photon,
                                    std::uint32_t down_mask) {
  ChainConfig c;
  c.sites = sites;
  c.atom = atom;
  c.photon = photon;
  c.spins.assign(sites, 1);
  for (std::size_t i = 0; i < sites; ++i)
    if (down_mask & (1u << i)) c.spins[i] = 0;
  return c;
}

/// Total spin with up = +1/2, down = -1/2.
inline double total_spin(const ChainConfig& c) {
  double s = 0.0;
  for (std::uint8_t up : c.spins) s += up ? 0.5 : -0.5;
  return s;
}

/// Macroscopic readout from S_tot: 0 only for the all-up row, 1 otherwise.
inline int coarse_grain(const ChainConfig& c) {
  return total_spin(c) == 0.5 * static_cast<double>(c.sites) ? 0 : 1;
}

// Full emission -> absorption -> balanced walk -> re-emission trajectory.
// Every balanced configuration appears exactly once; the final config
// revisits the post-emission one (all-up, photon restored), closing the
// cycle after C(L, L/2) - 1 exchanges.
inline DeviceTrajectory run_cycle(std::size_t sites) {
  if (sites < 2 || sites % 2 != 0) throw std::invalid_argument("chain length must be even and >= 2");
  if (sites > 12) throw ResourceLimitError("trajectory materialization guarded at L <= 12");

  const auto walk = balanced_gray_sequence(sites);
  DeviceTrajectory t;
  t.sites = sites;
  t.configs.push_back(initial_config(sites));

  t.moves.push_back({MoveKind::Emission, 0, 0, 0});
  t.configs.push_back(config_from_mask(sites, AtomLevel::Ground, 1, 0));

  t.moves.push_back({MoveKind::Absorption, 0, 0, walk.front()});
  t.configs.push_back(config_from_mask(sites, AtomLevel::Ground, 0, walk.front()));

  for (std::size_t i = 1; i < walk.size(); ++i) {
    const std::uint32_t gone_up = walk[i - 1] & ~walk[i];   // was down, now up
    const std::uint32_t gone_down = walk[i] & ~walk[i - 1]; // was up, now down
    if (__builtin_popcount(gone_up) != 1 || __builtin_popcount(gone_down) != 1)
      throw std::logic_error("gray walk step is not a single exchange");
    Move m;
    m.kind = MoveKind::Exchange;
    m.site_to_up = static_cast<std::size_t>(__builtin_ctz(gone_up));
    m.site_to_down = static_cast<std::size_t>(__builtin_ctz(gone_down));
    t.moves.push_back(m);
    t.configs.push_back(config_from_mask(sites, AtomLevel::Ground, 0, walk[i]));
  }

  t.moves.push_back({MoveKind::Reemission, 0, 0, walk.back()});
  t.configs.push_back(config_from_mask(sites, AtomLevel::Ground, 1, 0));
  return t;
}

// --- exact permutation picture on the (atom x photon x chain) basis ---

inline std::size_t basis_dimension(std::size_t sites) {
  return std::size_t{1} << (sites + 2);
}

/// Flat index with layout (atom, photon, s0..s_{L-1}); spin digit 0 = up.
inline std::size_t config_index(const ChainConfig& c) {
  std::size_t idx = (c.atom == AtomLevel::Excited ? 1u : 0u);
  idx = (idx << 1) | c.photon;
  for (std::uint8_t up : c.spins) idx = (idx << 1) | (up ? 0u : 1u);
  return idx;
}

inline ChainConfig config_from_index(std::size_t sites, std::size_t index) {
  ChainConfig c;
  c.sites = sites;
  c.spins.assign(sites, 1);
  for (std::size_t i = sites; i-- > 0;) {
    c.spins[i] = (index & 1u) ? 0 : 1;
    index >>= 1;
  }
  c.photon = static_cast<std::uint8_t>(index & 1u);
  index >>= 1;
  c.atom = (index & 1u) ? AtomLevel::Excited : AtomLevel::Ground;
  return c;
}

namespace detail {

inline std::uint32_t down_mask_bits(std::size_t sites, std::uint32_t site_mask) {
  // site k (bit k of site_mask) occupies index bit (sites - 1 - k)
  std::uint32_t bits = 0;
  for (std::size_t k = 0; k < sites; ++k)
    if (site_mask & (1u << k)) bits |= 1u << (sites - 1 - k);
  return bits;
}

}  // namespace detail

// Each move as an involution on the full basis: the configurations the move
// connects swap, everything else stays put. An involution is its own
// inverse, so the reversed move list inverts the whole cycle exactly.
inline std::vector<std::size_t> move_permutation(const Move& move, std::size_t sites) {
  const std::size_t dim = basis_dimension(sites);
  std::vector<std::size_t> perm(dim);
  for (std::size_t i = 0; i < dim; ++i) perm[i] = i;
  const std::size_t spin_bits = sites;
  const std::size_t photon_bit = std::size_t{1} << spin_bits;
  const std::size_t atom_bit = std::size_t{1} << (spin_bits + 1);

  auto swap_pair = [&perm](std::size_t a, std::size_t b) { std::swap(perm[a], perm[b]); };

  switch (move.kind) {
    case MoveKind::Emission:
      // (excited, no photon, s) <-> (ground, photon, s)
      for (std::size_t s = 0; s < (std::size_t{1} << spin_bits); ++s)
        swap_pair(atom_bit | s, photon_bit | s);
      break;
    case MoveKind::Absorption:
      // (a, photon, all-up) <-> (a, no photon, pattern)
      for (std::size_t a = 0; a < 2; ++a) {
        const std::size_t atom = a ? atom_bit : 0;
        swap_pair(atom | photon_bit | 0,
                  atom | detail::down_mask_bits(sites, move.pattern));
      }
      break;
    case MoveKind::Reemission:
      for (std::size_t a = 0; a < 2; ++a) {
        const std::size_t atom = a ? atom_bit : 0;
        swap_pair(atom | detail::down_mask_bits(sites, move.pattern),
                  atom | photon_bit | 0);
      }
      break;
    case MoveKind::Exchange: {
      const std::size_t bit_a = std::size_t{1} << (sites - 1 - move.site_to_up);
      const std::size_t bit_b = std::size_t{1} << (sites - 1 - move.site_to_down);
      for (std::size_t i = 0; i < dim; ++i) {
        const bool a_set = i & bit_a, b_set = i & bit_b;
        if (a_set && !b_set) swap_pair(i, (i & ~bit_a) | bit_b);
      }
      break;
    }
  }
  return perm;
}

inline ChainConfig apply_move(const Move& move, const ChainConfig& c) {
  const auto perm = move_permutation(move, c.sites);
  return config_from_index(c.sites, perm[config_index(c)]);
}

/// Composition, applied right-to-left: result[i] = outer[inner[i]].
inline std::vector<std::size_t> compose(const std::vector<std::size_t>& outer,
                                        const std::vector<std::size_t>& inner) {
  std::vector<std::size_t> out(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) out[i] = outer[inner[i]];
  return out;
}

/// The move as a dense permutation matrix on (atom, photon, s0..s_{L-1}).
inline hilbert::UnitaryOp as_unitary(const Move& move, std::size_t sites) {
  if (sites > 8) throw ResourceLimitError("dense device matrices guarded at L <= 8");
  std::vector<std::string> names{"atom", "photon"};
  for (std::size_t i = 0; i < sites; ++i) names.push_back("s" + std::to_string(i));
  return hilbert::UnitaryOp::permutation(names, move_permutation(move, sites));
}

}  // namespace bornsim::device
