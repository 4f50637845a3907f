#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bornsim/device.hpp"
#include "bornsim/estimation.hpp"
#include "bornsim/hilbert.hpp"
#include "bornsim/measurement.hpp"
#include "bornsim/random.hpp"
#include "bornsim/typeclass.hpp"

// Seeded, fast invariant checks for each module, runnable from the CLI via
// --selftest. These duplicate the spirit of the unit suites in a form that
// ships with the binary; the heavyweight verification lives in tests/.
namespace bornsim::selftest {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline void add(std::vector<Check>& out, const std::string& name,
                const std::function<bool(std::string&)>& body) {
  Check c{name, false, ""};
  try {
    c.pass = body(c.detail);
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = e.what();
  }
  out.push_back(std::move(c));
}

inline std::vector<cplx> random_unit(std::size_t dim, random::SplitMix64& rng) {
  std::vector<cplx> v(dim);
  double n2 = 0.0;
  for (cplx& a : v) {
    a = cplx{random::gaussian(rng), random::gaussian(rng)};
    n2 += std::norm(a);
  }
  for (cplx& a : v) a /= std::sqrt(n2);
  return v;
}

inline hilbert::UnitaryOp random_unitary(std::vector<std::string> targets, std::size_t dim,
                                         random::SplitMix64& rng) {
  auto matrix = hilbert::unitary_from_action(dim, {{random_unit(dim, rng), random_unit(dim, rng)}});
  return hilbert::UnitaryOp(std::move(targets), std::move(matrix));
}

}  // namespace detail

inline std::vector<Check> run_hilbert() {
  using namespace hilbert;
  std::vector<Check> out;
  random::SplitMix64 rng(1001);

  detail::add(out, "norm preservation under random unitaries", [&](std::string& d) {
    for (int t = 0; t < 5; ++t) {
      SubsystemLayout l({{"S", 2}, {"A", 2}, {"E", 2}});
      StateVector s(l, detail::random_unit(8, rng));
      auto u = detail::random_unitary({"A", "E"}, 4, rng);
      const double err = std::abs(apply(u, s).norm() - 1.0);
      if (err > 1e-12) {
        d = "norm error " + std::to_string(err);
        return false;
      }
    }
    return true;
  });

  detail::add(out, "reversibility u^-1 u = id", [&](std::string& d) {
    SubsystemLayout l({{"S", 2}, {"A", 3}});
    StateVector s(l, detail::random_unit(6, rng));
    auto u = detail::random_unitary({"S", "A"}, 6, rng);
    const double err = max_amplitude_diff(apply(u.adjoint(), apply(u, s)), s);
    d = "max diff " + std::to_string(err);
    return err <= 1e-12;
  });

  detail::add(out, "born completeness", [&](std::string& d) {
    SubsystemLayout l({{"S", 2}, {"A", 4}});
    StateVector s(l, detail::random_unit(8, rng));
    double total = 0.0;
    for (std::size_t j = 0; j < 4; ++j) total += born_probability(s, "A", j);
    d = "sum " + std::to_string(total);
    return std::abs(total - 1.0) <= 1e-12;
  });

  detail::add(out, "relative-state weight equals born probability", [&](std::string& d) {
    SubsystemLayout l({{"S", 2}, {"A", 3}});
    StateVector s(l, detail::random_unit(6, rng));
    for (std::size_t j = 0; j < 3; ++j) {
      const double err = std::abs(component_weight(s, {"A"}, j) - born_probability(s, "A", j));
      if (err > 1e-12) {
        d = "mismatch " + std::to_string(err);
        return false;
      }
    }
    return true;
  });

  return out;
}

inline std::vector<Check> run_typeclass() {
  using namespace typeclass;
  std::vector<Check> out;
  random::SplitMix64 rng(2002);

  detail::add(out, "dense oracle equivalence (N <= 10)", [&](std::string& d) {
    for (std::size_t n : {std::size_t{3}, std::size_t{7}, std::size_t{10}}) {
      auto amps = detail::random_unit(2, rng);
      auto dist = symmetric_expand(amps[0], amps[1], n);
      auto dense = dense_oracle_expand(amps[0], amps[1], n);
      for (std::size_t m = 0; m <= n; ++m)
        if (std::abs(dense.type_mass[m] - dist.weight_squared(m)) > 1e-12) {
          d = "type " + std::to_string(m) + " at N=" + std::to_string(n);
          return false;
        }
    }
    return true;
  });

  detail::add(out, "normalization at N = 10^5", [&](std::string&) {
    symmetric_expand(0.6, 0.8, 100000);  // construction enforces unit mass
    return true;
  });

  detail::add(out, "dominance of m*", [&](std::string& d) {
    for (int t = 0; t < 10; ++t) {
      const std::size_t n = 1 + rng.next() % 60;
      const double p = random::uniform01(rng);
      const auto ds = dominant_type(n, p);
      const double best = type_weight(static_cast<std::size_t>(ds.m_star), n, p);
      for (std::size_t m = 0; m <= n; ++m)
        if (type_weight(m, n, p) > best + 1e-15) {
          d = "m=" + std::to_string(m) + " beats m*";
          return false;
        }
    }
    return true;
  });

  detail::add(out, "tail bounded by Chernoff", [&](std::string& d) {
    for (std::size_t n : {std::size_t{100}, std::size_t{1000}}) {
      const double dstar = std::min(binary_kl(0.25, 0.3), binary_kl(0.35, 0.3));
      const double log_bound = std::log(2.0) - static_cast<double>(n) * dstar;
      if (log_tail_mass(n, 0.3, 0.05) > log_bound) {
        d = "bound violated at N=" + std::to_string(n);
        return false;
      }
    }
    return true;
  });

  detail::add(out, "sampling mean within 3 sigma", [&](std::string& d) {
    double sum = 0.0;
    const std::size_t n = 2000;
    for (std::uint64_t s = 0; s < 50; ++s)
      sum += static_cast<double>(sample_world(n, 0.3, random::derive_seed(555, s)).m0);
    const double mean = sum / 50.0 / static_cast<double>(n);
    const double sigma = std::sqrt(0.3 * 0.7 / static_cast<double>(n) / 50.0);
    d = "mean " + std::to_string(mean);
    return std::abs(mean - 0.3) < 3.0 * sigma + 1e-9;
  });

  return out;
}

inline std::vector<Check> run_measurement() {
  using namespace measurement;
  std::vector<Check> out;
  random::SplitMix64 rng(3003);

  detail::add(out, "premeasure cross terms absent and reversible", [&](std::string& d) {
    auto amps = detail::random_unit(2, rng);
    auto sys = hilbert::qubit_state("S", amps[0], amps[1]);
    auto env = EnvironmentSpec(hilbert::qubit_state("E", 1.0, 0.0),
                               hilbert::qubit_state("E", 0.0, 1.0));
    auto res = premeasure(sys, env);
    const auto& l = res.state.layout();
    for (std::size_t i = 0; i < res.state.dimension(); ++i)
      if (l.digit(i, 0) != l.digit(i, 1) && std::abs(res.state.amplitude(i)) > 1e-13) {
        d = "cross term";
        return false;
      }
    auto ready = tensor(sys, hilbert::qubit_state("A", 1.0, 0.0),
                        hilbert::qubit_state("E", 1.0, 0.0));
    const double err = max_amplitude_diff(apply(res.coupling.adjoint(), res.state), ready);
    d = "reverse err " + std::to_string(err);
    return err <= 1e-12;
  });

  detail::add(out, "cascade marginals and normalization", [&](std::string& d) {
    auto a = detail::random_unit(2, rng);
    auto b = detail::random_unit(2, rng);
    auto c = detail::random_unit(2, rng);
    CascadeSpec spec{{a[0], a[1]}, {b[0], b[1]}, {c[0], c[1]}};
    auto probs = branch_probabilities(spec);
    const double total = probs[0] + probs[1] + probs[2] + probs[3];
    if (std::abs(total - 1.0) > 1e-12) {
      d = "sum " + std::to_string(total);
      return false;
    }
    if (std::abs(probs[0] + probs[1] - std::norm(a[0])) > 1e-12) {
      d = "marginal mismatch";
      return false;
    }
    auto evo = cascade_evolve(spec);
    for (const auto& st : evo.stages)
      if (std::abs(st.state.norm() - 1.0) > 1e-12) {
        d = "stage norm";
        return false;
      }
    return true;
  });

  detail::add(out, "test protocol zero on truth", [&](std::string& d) {
    for (int t = 0; t < 20; ++t) {
      auto amps = detail::random_unit(2, rng);
      auto psi = hilbert::qubit_state("S", amps[0], amps[1]);
      const double p = test_protocol(psi, psi);
      if (p > 1e-12) {
        d = "flag prob " + std::to_string(p);
        return false;
      }
    }
    return true;
  });

  detail::add(out, "cat and dice scenarios", [&](std::string& d) {
    auto cat = cat_scenario();
    if (std::abs(cat.relative_alive.amplitude(0) - cplx{1.0, 0.0}) != 0.0) {
      d = "cat relative state";
      return false;
    }
    auto dice = dice_scenario(3);
    if (dice.branch_count != 216 || dice.max_branch_deviation > 1e-15 ||
        dice.max_off_support_amplitude != 0.0) {
      d = "dice branches " + std::to_string(dice.branch_count);
      return false;
    }
    return true;
  });

  return out;
}

inline std::vector<Check> run_estimation() {
  using namespace estimation;
  std::vector<Check> out;
  random::SplitMix64 rng(4004);

  detail::add(out, "estimator range on random counts", [&](std::string& d) {
    for (int t = 0; t < 20; ++t) {
      const std::size_t n = 1 + rng.next() % 500;
      const std::size_t m0 = rng.next() % (n + 1);
      auto est = estimate_coefficients({m0, n - m0});
      if (std::abs(est.c0_hat * est.c0_hat + est.c1_hat * est.c1_hat - 1.0) > 1e-12) {
        d = "unit norm violated";
        return false;
      }
    }
    return true;
  });

  detail::add(out, "cascade round-trip on expectations", [&](std::string& d) {
    for (int t = 0; t < 20; ++t) {
      auto a = detail::random_unit(2, rng);
      auto b = detail::random_unit(2, rng);
      auto c = detail::random_unit(2, rng);
      const double n = 5000.0;
      auto est = cascade_estimates(n * std::norm(a[0]) * std::norm(b[0]),
                                   n * std::norm(a[0]) * std::norm(b[1]),
                                   n * std::norm(a[1]) * std::norm(c[0]),
                                   n * std::norm(a[1]) * std::norm(c[1]));
      if (std::abs(est.c0_sq - std::norm(a[0])) > 1e-12 ||
          !est.c0p_sq || std::abs(*est.c0p_sq - std::norm(b[0])) > 1e-12) {
        d = "round-trip error";
        return false;
      }
    }
    return true;
  });

  detail::add(out, "confidence bound monotone in N", [&](std::string& d) {
    double prev = 1.0;
    for (std::size_t n : {std::size_t{10}, std::size_t{100}, std::size_t{1000}}) {
      const double bound = test_confidence(0, n, 0.95);
      if (bound >= prev) {
        d = "not decreasing at N=" + std::to_string(n);
        return false;
      }
      prev = bound;
    }
    return true;
  });

  return out;
}

inline std::vector<Check> run_device() {
  using namespace device;
  std::vector<Check> out;

  detail::add(out, "recurrence and single visits (L = 2..10)", [&](std::string& d) {
    for (std::size_t sites : {std::size_t{2}, std::size_t{4}, std::size_t{6}, std::size_t{8},
                              std::size_t{10}}) {
      auto t = run_cycle(sites);
      if (t.configs.size() != cycle_length(sites) + 3 || !(t.configs.back() == t.configs[1])) {
        d = "cycle shape at L=" + std::to_string(sites);
        return false;
      }
    }
    return true;
  });

  detail::add(out, "bijectivity of every step (L = 6)", [&](std::string& d) {
    auto t = run_cycle(6);
    for (const Move& m : t.moves) {
      auto perm = move_permutation(m, 6);
      std::vector<char> seen(perm.size(), 0);
      for (std::size_t image : perm) {
        if (image >= perm.size() || seen[image]) {
          d = "not a bijection";
          return false;
        }
        seen[image] = 1;
      }
    }
    return true;
  });

  detail::add(out, "macro label stable over absorbed segment", [&](std::string& d) {
    auto t = run_cycle(8);
    for (std::size_t i = 2; i < t.configs.size() - 1; ++i)
      if (coarse_grain(t.configs[i]) != 1) {
        d = "label flipped at step " + std::to_string(i);
        return false;
      }
    return true;
  });

  detail::add(out, "reversal restores the initial configuration", [&](std::string& d) {
    auto t = run_cycle(8);
    ChainConfig c = t.configs.back();
    for (std::size_t i = t.moves.size(); i-- > 0;) c = apply_move(t.moves[i], c);
    d = "reversal endpoint mismatch";
    return c == t.configs.front();
  });

  return out;
}

inline std::vector<Check> run_all() {
  std::vector<Check> out;
  for (auto runner : {run_hilbert, run_typeclass, run_measurement, run_estimation, run_device}) {
    auto checks = runner();
    out.insert(out.end(), checks.begin(), checks.end());
  }
  return out;
}

}  // namespace bornsim::selftest
