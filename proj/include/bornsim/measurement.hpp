#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bornsim/hilbert.hpp"

// The measurement scenarios as explicit unitary pipelines. Nothing in this
// module collapses anything: every stage is a unitary on an enlarged space,
// and each builder hands back the operators it used so a caller can run the
// whole pipeline backwards.
namespace bornsim::measurement {

using hilbert::StateVector;
using hilbert::SubsystemLayout;
using hilbert::UnitaryOp;

// Environment register prepared in |f0> or |f1> depending on the system
// branch. overlap() == 1 (up to phase) exactly when the environment learns
// nothing and the SA pair factorizes away from it.
class EnvironmentSpec {
 public:
  EnvironmentSpec(StateVector f0, StateVector f1) : f0_(std::move(f0)), f1_(std::move(f1)) {
    if (!(f0_.layout() == f1_.layout()))
      throw std::invalid_argument("environment states need identical layouts");
    if (f0_.layout().size() != 1)
      throw std::invalid_argument("environment states live on a single register");
    overlap_ = hilbert::inner_product(f0_, f1_);
    if (std::abs(overlap_) > 1.0 + hilbert::kTol)
      throw std::logic_error("environment overlap exceeds 1");
  }

  /// Both branches leave the same final state |f>.
  static EnvironmentSpec same(const StateVector& f) { return EnvironmentSpec(f, f); }

  const StateVector& f0() const { return f0_; }
  const StateVector& f1() const { return f1_; }
  cplx overlap() const { return overlap_; }

 private:
  StateVector f0_, f1_;
  cplx overlap_{0.0, 0.0};
};

struct PremeasureResult {
  StateVector state;       // on (S, A, E)
  UnitaryOp coupling;      // the stage map that produced it
  bool factorized = false; // SA pair separates from E (|overlap| = 1)
  cplx env_overlap{0.0, 0.0};
};

// First measurement step: couple S to the apparatus and environment,
//   c0|0>_S|0>_A|0>_E + c1|1>_S|1>_A|f1 vs f0>_E.
// error_angle tilts the apparatus response away from the perfect copy;
// at the default 0 the cross patterns |0>_S|1>_A and |1>_S|0>_A stay at
// exactly zero amplitude.
inline PremeasureResult premeasure(const StateVector& system, const EnvironmentSpec& env,
                                   double error_angle = 0.0) {
  if (system.layout().size() != 1 || system.layout().at(0).dim != 2)
    throw std::invalid_argument("premeasure expects a single-qubit system");
  const std::string s_name = system.layout().at(0).name;
  const std::string e_name = env.f0().layout().at(0).name;
  const std::size_t e_dim = env.f0().layout().at(0).dim;

  SubsystemLayout joint({{s_name, 2}, {"A", 2}, {e_name, e_dim}});
  const std::size_t dim = joint.total_dimension();
  const double ca = std::cos(error_angle), sa = std::sin(error_angle);

  // Columns for |0,0,0> and |1,0,0>; images orthogonal because S differs.
  std::vector<cplx> col0(dim, cplx{0, 0}), col1(dim, cplx{0, 0});
  for (std::size_t e = 0; e < e_dim; ++e) {
    col0[joint.flat_index({0, 0, e})] = ca * env.f0().amplitude(e);
    col0[joint.flat_index({0, 1, e})] = sa * env.f0().amplitude(e);
    col1[joint.flat_index({1, 0, e})] = sa * env.f1().amplitude(e);
    col1[joint.flat_index({1, 1, e})] = ca * env.f1().amplitude(e);
  }
  auto matrix = hilbert::complete_columns(
      dim, {{joint.flat_index({0, 0, 0}), col0}, {joint.flat_index({1, 0, 0}), col1}});
  UnitaryOp coupling({s_name, "A", e_name}, std::move(matrix));

  auto ready = tensor(system, StateVector::basis_state(SubsystemLayout({{"A", 2}}), 0),
                      StateVector::basis_state(env.f0().layout(), 0));
  PremeasureResult result{apply(coupling, ready), std::move(coupling), false, env.overlap()};
  result.factorized = std::abs(std::abs(result.env_overlap) - 1.0) <= hilbert::kTol;
  return result;
}

// Readout permutation on (A registers..., F): the F register starts in the
// ready state |Omega> (index 0) and picks up a copy of the joint A pattern;
// |pattern, Omega> swaps with |pattern, pattern>, all else fixed.
inline UnitaryOp readout_op(const SubsystemLayout& layout, const std::vector<std::string>& a_names,
                            const std::string& f_name) {
  std::size_t a_span = 1;
  for (const std::string& name : a_names) a_span *= layout.dim_of(name);
  const std::size_t f_dim = layout.dim_of(f_name);
  if (f_dim != a_span + 1)
    throw std::invalid_argument("F register must have one state per A pattern plus the ready state");

  const std::size_t dim = a_span * f_dim;
  std::vector<std::size_t> perm(dim);
  for (std::size_t i = 0; i < dim; ++i) perm[i] = i;
  for (std::size_t pattern = 0; pattern < a_span; ++pattern)
    std::swap(perm[pattern * f_dim + 0], perm[pattern * f_dim + 1 + pattern]);

  std::vector<std::string> targets = a_names;
  targets.push_back(f_name);
  return UnitaryOp::permutation(targets, perm);
}

/// Applies the readout; requires F in |Omega> wherever amplitude is nonzero.
inline StateVector readout(const StateVector& state, const std::vector<std::string>& a_names,
                           const std::string& f_name) {
  const auto& layout = state.layout();
  const std::size_t f_pos = layout.position_of(f_name);
  for (std::size_t i = 0; i < state.dimension(); ++i)
    if (layout.digit(i, f_pos) != 0 && std::abs(state.amplitude(i)) > 1e-13)
      throw std::domain_error("F register is not in the ready state");
  return apply(readout_op(layout, a_names, f_name), state);
}

/// Index of the F-register level that records a given A pattern.
inline std::size_t f_level_for_pattern(std::size_t pattern) { return pattern + 1; }
inline constexpr std::size_t kFReady = 0;  // the |Omega> level

// --- cascaded measurement ---

struct CascadeSpec {
  std::array<cplx, 2> c;        // first coupling
  std::array<cplx, 2> c_prime;  // second coupling on the A = 0 branch
  std::array<cplx, 2> c_dprime; // second coupling on the A = 1 branch

  void validate() const {
    for (const auto& pair : {c, c_prime, c_dprime})
      if (std::abs(std::norm(pair[0]) + std::norm(pair[1]) - 1.0) > hilbert::kTol)
        throw std::invalid_argument("cascade coefficients are not normalized");
  }
};

enum class Stage { In, PostM1, PostM2, PostReadout };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::In: return "in";
    case Stage::PostM1: return "post-M1";
    case Stage::PostM2: return "post-M2";
    case Stage::PostReadout: return "post-readout";
  }
  return "?";
}

struct ScenarioState {
  Stage stage;
  StateVector state;
};

struct CascadeEvolution {
  std::vector<ScenarioState> stages;  // in, post-M1, post-M2
  UnitaryOp first_coupling;           // CNOT-style copy S -> A
  UnitaryOp second_coupling;          // controlled on A: V' or V'' on (S, B)
};

namespace detail {

/// (S,B) unitary sending |s0, 0> to c0|00> + c1|11>, completed canonically.
inline std::vector<cplx> second_stage_block(std::size_t s0, const std::array<cplx, 2>& pair) {
  std::vector<cplx> image(4, cplx{0, 0});
  image[0] = pair[0];  // |0>_S |0>_B
  image[3] = pair[1];  // |1>_S |1>_B
  return hilbert::complete_columns(4, {{s0 * 2 + 0, image}});
}

}  // namespace detail

// Second-stage coupling U on (A, S, B), block diagonal in A. The branch
// seen by the A = a block is the adaptive hook: the pair may depend on the
// registered outcome a.
inline UnitaryOp cascade_second_coupling(
    const std::function<std::array<cplx, 2>(std::size_t)>& branch_pair) {
  std::vector<cplx> matrix(64, cplx{0, 0});
  for (std::size_t a = 0; a < 2; ++a) {
    auto block = detail::second_stage_block(a, branch_pair(a));
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) matrix[(a * 4 + r) * 8 + (a * 4 + c)] = block[r * 4 + c];
  }
  return UnitaryOp({"A", "S", "B"}, std::move(matrix));
}

inline CascadeEvolution cascade_evolve(const CascadeSpec& spec) {
  spec.validate();
  UnitaryOp m1 = UnitaryOp::permutation({"S", "A"}, {0, 1, 3, 2});  // |s,a> -> |s, a xor s>
  UnitaryOp m2 = cascade_second_coupling(
      [&spec](std::size_t a) { return a == 0 ? spec.c_prime : spec.c_dprime; });

  auto in = tensor(hilbert::qubit_state("S", spec.c[0], spec.c[1]),
                   hilbert::qubit_state("A", 1.0, 0.0), hilbert::qubit_state("B", 1.0, 0.0));
  auto t1 = apply(m1, in);
  auto t2 = apply(m2, t1);

  CascadeEvolution evo{{{Stage::In, std::move(in)}, {Stage::PostM1, std::move(t1)},
                        {Stage::PostM2, std::move(t2)}},
                       std::move(m1), std::move(m2)};
  return evo;
}

/// |c0 c0'|^2, |c0 c1'|^2, |c1 c0''|^2, |c1 c1''|^2 in that order.
inline std::array<double, 4> branch_probabilities(const CascadeSpec& spec) {
  spec.validate();
  return {std::norm(spec.c[0]) * std::norm(spec.c_prime[0]),
          std::norm(spec.c[0]) * std::norm(spec.c_prime[1]),
          std::norm(spec.c[1]) * std::norm(spec.c_dprime[0]),
          std::norm(spec.c[1]) * std::norm(spec.c_dprime[1])};
}

// Expected counts computed both ways for the A = 0 branch: reading B only
// at the end versus reading A in between and rerunning the second stage on
// the M0 selected systems. M0 is the expected zero count round(N |c0|^2);
// note the constraint couples the two sample sizes as M0 ~ N |c0|^2 (it is
// M0 that is the sub-sample of N, not the other way around). Agreement up
// to the rounding of M0 is what makes the two experiments equivalent.
struct ReadoutEquivalence {
  double expected_m00 = 0.0;      // N |c0 c0'|^2
  double expected_m01 = 0.0;      // N |c0 c1'|^2
  std::size_t m0_selected = 0;    // round(N |c0|^2)
  double expected_m0_given_0 = 0.0;  // M0 |c0'|^2
  double expected_m1_given_0 = 0.0;  // M0 |c1'|^2
  double discrepancy_00 = 0.0;
  double discrepancy_01 = 0.0;
};

inline ReadoutEquivalence intermediate_readout_equivalence(const CascadeSpec& spec, std::size_t n) {
  spec.validate();
  if (n == 0) throw std::invalid_argument("N must be >= 1");
  ReadoutEquivalence rec;
  const double dn = static_cast<double>(n);
  rec.expected_m00 = dn * std::norm(spec.c[0]) * std::norm(spec.c_prime[0]);
  rec.expected_m01 = dn * std::norm(spec.c[0]) * std::norm(spec.c_prime[1]);
  rec.m0_selected = static_cast<std::size_t>(std::llround(dn * std::norm(spec.c[0])));
  const double m0 = static_cast<double>(rec.m0_selected);
  rec.expected_m0_given_0 = m0 * std::norm(spec.c_prime[0]);
  rec.expected_m1_given_0 = m0 * std::norm(spec.c_prime[1]);
  rec.discrepancy_00 = std::abs(rec.expected_m00 - rec.expected_m0_given_0);
  rec.discrepancy_01 = std::abs(rec.expected_m01 - rec.expected_m1_given_0);
  return rec;
}

// --- testing protocol ---

/// Coupling that flags the apparatus exactly when the system is orthogonal
/// to the hypothesis: |psi_hat, 0> fixed, |psi_hat_perp, 0> -> |psi_hat_perp, 1>,
/// with psi_hat_perp = conj(c1)|0> - conj(c0)|1>.
inline UnitaryOp test_coupling(const StateVector& psi_hat) {
  if (psi_hat.layout().size() != 1 || psi_hat.layout().at(0).dim != 2)
    throw std::invalid_argument("test protocol expects a single-qubit hypothesis");
  const cplx h0 = psi_hat.amplitude(0), h1 = psi_hat.amplitude(1);
  const cplx p0 = std::conj(h1), p1 = -std::conj(h0);

  // SA basis: |s,a> with s most significant.
  std::vector<cplx> hat0{h0, cplx{0, 0}, h1, cplx{0, 0}};   // |psi_hat>|0>
  std::vector<cplx> perp0{p0, cplx{0, 0}, p1, cplx{0, 0}};  // |perp>|0>
  std::vector<cplx> perp1{cplx{0, 0}, p0, cplx{0, 0}, p1};  // |perp>|1>
  auto matrix = hilbert::unitary_from_action(4, {{hat0, hat0}, {perp0, perp1}});
  return UnitaryOp({psi_hat.layout().at(0).name, "A"}, std::move(matrix));
}

/// Probability that the test flags 1 when the true state is psi_true:
/// |<psi_hat_perp | psi_true>|^2, read off the apparatus register.
inline double test_protocol(const StateVector& psi_hat, const StateVector& psi_true) {
  if (psi_true.layout().size() != 1 || psi_true.layout().at(0).dim != 2)
    throw std::invalid_argument("test protocol expects a single-qubit state");
  auto coupling = test_coupling(psi_hat);
  auto ready = tensor(StateVector(psi_hat.layout(), psi_true.amplitudes()),
                      hilbert::qubit_state("A", 1.0, 0.0));
  return born_probability(apply(coupling, ready), "A", 1);
}

// --- fixed scenarios ---

// Cat with a self-referencing memory: C levels {0: alive pointer state L,
// 1: dead pointer state D}, C' levels {0: Omega, 1: "I am alive"}.
struct CatScenario {
  StateVector initial;          // (|L> + |D>)/sqrt2 x |Omega>
  StateVector final_state;      // (|L>|alive> + |D>|Omega>)/sqrt2
  UnitaryOp self_reference;
  StateVector relative_alive;   // conditioned on C' = alive: exactly |L>
  StateVector relative_omega;   // conditioned on C' = Omega: exactly |D>
  double p_alive = 0.0;
};

inline CatScenario cat_scenario() {
  const double r = 1.0 / std::sqrt(2.0);
  auto initial = tensor(hilbert::qubit_state("C", r, r),
                        StateVector::basis_state(SubsystemLayout({{"Cm", 2}}), 0));
  // |L, Omega> <-> |L, alive>, the D column untouched.
  auto self_ref = UnitaryOp::permutation({"C", "Cm"}, {1, 0, 2, 3});
  auto final_state = apply(self_ref, initial);
  auto rel_alive = relative_state(final_state, "Cm", 1);
  auto rel_omega = relative_state(final_state, "Cm", 0);
  const double p_alive = born_probability(final_state, "Cm", 1);
  return CatScenario{std::move(initial), std::move(final_state), std::move(self_ref),
                     std::move(rel_alive), std::move(rel_omega), p_alive};
}

// Dice throws: one register per throw with levels {0: Omega, 1..6: faces,
// 7: unused filler to keep the register a power of two}. Each throw sends
// its register's Omega to the uniform superposition of the six faces.
struct DiceScenario {
  std::size_t throws = 0;
  std::uint64_t branch_count = 0;
  double expected_amplitude = 0.0;         // 6^(-throws/2)
  double max_branch_deviation = 0.0;       // worst |amp - expected| over branches
  double max_off_support_amplitude = 0.0;  // mass outside the face patterns
  StateVector final_state;
  std::vector<UnitaryOp> throw_ops;
  std::vector<std::uint64_t> stage_branch_counts;  // after each throw
};

inline DiceScenario dice_scenario(std::size_t throws) {
  if (throws > 8) throw ResourceLimitError("dice scenario guarded at 8 throws");
  const std::size_t registers = std::max<std::size_t>(throws, 1);
  std::vector<hilbert::Subsystem> subs;
  for (std::size_t i = 0; i < registers; ++i) subs.push_back({"d" + std::to_string(i), 8});
  SubsystemLayout layout(subs);

  StateVector state = StateVector::basis_state(layout, 0);  // all registers in Omega
  const double face_amp = 1.0 / std::sqrt(6.0);

  DiceScenario result{throws, 1, std::pow(6.0, -0.5 * static_cast<double>(throws)),
                      0.0, 0.0, state, {}, {}};

  for (std::size_t t = 0; t < throws; ++t) {
    std::vector<cplx> spread(8, cplx{0, 0});
    for (std::size_t face = 1; face <= 6; ++face) spread[face] = cplx{face_amp, 0.0};
    auto matrix = hilbert::complete_columns(8, {{0, spread}});
    UnitaryOp throw_op({"d" + std::to_string(t)}, std::move(matrix));
    state = apply(throw_op, state);
    result.throw_ops.push_back(std::move(throw_op));
    result.stage_branch_counts.push_back(
        static_cast<std::uint64_t>(std::pow(6.0, static_cast<double>(t + 1))));
  }

  // Scan amplitudes: branches are the patterns with every thrown register
  // on a face; everything else (Omega or the filler level anywhere) must
  // carry exactly zero.
  std::uint64_t branches = 0;
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    bool on_support = true;
    for (std::size_t reg = 0; reg < registers; ++reg) {
      const std::size_t level = layout.digit(i, reg);
      const bool ok = reg < throws ? (level >= 1 && level <= 6) : level == 0;
      if (!ok) {
        on_support = false;
        break;
      }
    }
    if (on_support) {
      ++branches;
      result.max_branch_deviation =
          std::max(result.max_branch_deviation,
                   std::abs(state.amplitude(i) - cplx{result.expected_amplitude, 0.0}));
    } else {
      result.max_off_support_amplitude =
          std::max(result.max_off_support_amplitude, std::abs(state.amplitude(i)));
    }
  }
  result.branch_count = branches;
  result.final_state = std::move(state);
  return result;
}

}  // namespace bornsim::measurement
