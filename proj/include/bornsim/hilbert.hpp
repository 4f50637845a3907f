#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bornsim {

using cplx = std::complex<double>;

/// Thrown when a request would exceed a documented size guard.
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when conditioning on an expansion term of zero norm: the relative
/// state u_alpha / ||u_alpha|| exists only for terms actually present.
class UndefinedRelativeStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace hilbert {

/// Tolerance for normalization and unitarity checks.
inline constexpr double kTol = 1e-12;

struct Subsystem {
  std::string name;
  std::size_t dim = 0;
};

// Ordered list of named subsystems. Basis convention, fixed project-wide:
// the first-listed subsystem is the most significant digit of a flat index.
class SubsystemLayout {
 public:
  SubsystemLayout() = default;

  explicit SubsystemLayout(std::vector<Subsystem> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw std::invalid_argument("layout needs at least one subsystem");
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (parts_[i].dim < 2)
        throw std::invalid_argument("subsystem '" + parts_[i].name + "' must have dimension >= 2");
      for (std::size_t j = i + 1; j < parts_.size(); ++j)
        if (parts_[i].name == parts_[j].name)
          throw std::invalid_argument("duplicate subsystem name '" + parts_[i].name + "'");
    }
    strides_.assign(parts_.size(), 1);
    total_ = 1;
    for (std::size_t i = parts_.size(); i-- > 0;) {
      strides_[i] = total_;
      const std::size_t next = total_ * parts_[i].dim;
      if (next / parts_[i].dim != total_)
        throw std::invalid_argument("layout dimension overflows size_t");
      total_ = next;
    }
  }

  std::size_t size() const { return parts_.size(); }
  const Subsystem& at(std::size_t i) const { return parts_.at(i); }
  const std::vector<Subsystem>& subsystems() const { return parts_; }
  std::size_t total_dimension() const { return total_; }
  std::size_t stride(std::size_t pos) const { return strides_.at(pos); }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < parts_.size(); ++i)
      if (parts_[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t position_of(const std::string& name) const {
    if (auto pos = find(name)) return *pos;
    throw std::invalid_argument("unknown subsystem '" + name + "'");
  }

  std::size_t dim_of(const std::string& name) const { return parts_[position_of(name)].dim; }

  /// Digit of `flat` at subsystem position `pos`.
  std::size_t digit(std::size_t flat, std::size_t pos) const {
    return (flat / strides_[pos]) % parts_[pos].dim;
  }

  std::size_t flat_index(const std::vector<std::size_t>& digits) const {
    if (digits.size() != parts_.size())
      throw std::invalid_argument("digit count does not match layout");
    std::size_t flat = 0;
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (digits[i] >= parts_[i].dim) throw std::out_of_range("digit exceeds subsystem dimension");
      flat += digits[i] * strides_[i];
    }
    return flat;
  }

  bool operator==(const SubsystemLayout& other) const {
    if (parts_.size() != other.parts_.size()) return false;
    for (std::size_t i = 0; i < parts_.size(); ++i)
      if (parts_[i].name != other.parts_[i].name || parts_[i].dim != other.parts_[i].dim)
        return false;
    return true;
  }

 private:
  std::vector<Subsystem> parts_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 0;
};

// Immutable unit vector over a layout. Values may be shared freely between
// workers; every operation below is a pure function.
class StateVector {
 public:
  StateVector(SubsystemLayout layout, std::vector<cplx> amplitudes)
      : layout_(std::move(layout)), amps_(std::move(amplitudes)) {
    if (amps_.size() != layout_.total_dimension())
      throw std::invalid_argument("amplitude count does not match layout dimension");
    const double n = norm_of(amps_);
    if (std::abs(n - 1.0) > kTol)
      throw std::invalid_argument("state vector is not normalized (norm " + std::to_string(n) + ")");
  }

  static StateVector basis_state(SubsystemLayout layout, std::size_t index) {
    std::vector<cplx> amps(layout.total_dimension(), cplx{0.0, 0.0});
    amps.at(index) = cplx{1.0, 0.0};
    return StateVector(std::move(layout), std::move(amps));
  }

  const SubsystemLayout& layout() const { return layout_; }
  const std::vector<cplx>& amplitudes() const { return amps_; }
  cplx amplitude(std::size_t flat) const { return amps_.at(flat); }
  std::size_t dimension() const { return amps_.size(); }

  double norm() const { return norm_of(amps_); }

  static double norm_of(const std::vector<cplx>& amps) {
    double s = 0.0;
    for (const cplx& a : amps) s += std::norm(a);
    return std::sqrt(s);
  }

 private:
  SubsystemLayout layout_;
  std::vector<cplx> amps_;
};

/// Single-qubit state c0|0> + c1|1> on a named subsystem.
inline StateVector qubit_state(const std::string& name, cplx c0, cplx c1) {
  return StateVector(SubsystemLayout({{name, 2}}), {c0, c1});
}

inline cplx inner_product(const StateVector& a, const StateVector& b) {
  if (!(a.layout() == b.layout()))
    throw std::invalid_argument("inner product requires identical layouts");
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.dimension(); ++i)
    s += std::conj(a.amplitude(i)) * b.amplitude(i);
  return s;
}

inline double max_amplitude_diff(const StateVector& a, const StateVector& b) {
  if (!(a.layout() == b.layout()))
    throw std::invalid_argument("comparison requires identical layouts");
  double d = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i)
    d = std::max(d, std::abs(a.amplitude(i) - b.amplitude(i)));
  return d;
}

// Unitary acting on an ordered subset of subsystems. The matrix is row-major
// over the product of the target dimensions, targets in declared order with
// the first target as the most significant digit.
class UnitaryOp {
 public:
  UnitaryOp(std::vector<std::string> targets, std::vector<cplx> matrix)
      : targets_(std::move(targets)), matrix_(std::move(matrix)) {
    dim_ = derive_dimension(targets_, matrix_);
    check_unitary();
  }

  /// Permutation matrix |c> -> |perm[c]>. Validated exactly (bijection test),
  /// no floating-point tolerance involved.
  static UnitaryOp permutation(std::vector<std::string> targets, const std::vector<std::size_t>& perm) {
    const std::size_t dim = perm.size();
    std::vector<char> seen(dim, 0);
    for (std::size_t image : perm) {
      if (image >= dim) throw std::invalid_argument("permutation image out of range");
      if (seen[image]) throw std::invalid_argument("permutation is not a bijection");
      seen[image] = 1;
    }
    std::vector<cplx> m(dim * dim, cplx{0.0, 0.0});
    for (std::size_t c = 0; c < dim; ++c) m[perm[c] * dim + c] = cplx{1.0, 0.0};
    return UnitaryOp(Trusted{}, std::move(targets), std::move(m), dim);
  }

  const std::vector<std::string>& targets() const { return targets_; }
  std::size_t dimension() const { return dim_; }
  const std::vector<cplx>& matrix() const { return matrix_; }
  cplx entry(std::size_t row, std::size_t col) const { return matrix_[row * dim_ + col]; }

  /// Conjugate transpose; the inverse, since the operator is unitary.
  UnitaryOp adjoint() const {
    std::vector<cplx> m(dim_ * dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) m[c * dim_ + r] = std::conj(matrix_[r * dim_ + c]);
    return UnitaryOp(Trusted{}, targets_, std::move(m), dim_);
  }

 private:
  struct Trusted {};
  UnitaryOp(Trusted, std::vector<std::string> targets, std::vector<cplx> matrix, std::size_t dim)
      : targets_(std::move(targets)), matrix_(std::move(matrix)), dim_(dim) {}

  static std::size_t derive_dimension(const std::vector<std::string>& targets,
                                      const std::vector<cplx>& matrix) {
    if (targets.empty()) throw std::invalid_argument("unitary needs at least one target");
    std::size_t dim = 1;
    while (dim * dim < matrix.size()) ++dim;
    if (dim * dim != matrix.size()) throw std::invalid_argument("unitary matrix is not square");
    return dim;
  }

  // Entrywise |(U^dagger U - I)| <= kTol.
  void check_unitary() const {
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = 0; j < dim_; ++j) {
        cplx s{0.0, 0.0};
        for (std::size_t k = 0; k < dim_; ++k)
          s += std::conj(matrix_[k * dim_ + i]) * matrix_[k * dim_ + j];
        if (i == j) s -= 1.0;
        if (std::abs(s) > kTol)
          throw std::invalid_argument("matrix is not unitary within tolerance");
      }
    }
  }

  std::vector<std::string> targets_;
  std::vector<cplx> matrix_;
  std::size_t dim_ = 0;
};

/// Tensor product of disjointly-labeled states; layouts concatenate in
/// argument order.
inline StateVector tensor(const std::vector<StateVector>& parts) {
  if (parts.empty()) throw std::invalid_argument("tensor of zero states");
  std::vector<Subsystem> subs;
  for (const StateVector& part : parts)
    for (const Subsystem& s : part.layout().subsystems()) subs.push_back(s);
  SubsystemLayout joint(subs);  // rejects duplicate names

  std::vector<cplx> amps{cplx{1.0, 0.0}};
  for (const StateVector& part : parts) {
    std::vector<cplx> next(amps.size() * part.dimension());
    for (std::size_t i = 0; i < amps.size(); ++i)
      for (std::size_t j = 0; j < part.dimension(); ++j)
        next[i * part.dimension() + j] = amps[i] * part.amplitude(j);
    amps = std::move(next);
  }
  return StateVector(std::move(joint), std::move(amps));
}

template <typename... Rest>
StateVector tensor(const StateVector& first, const Rest&... rest) {
  return tensor(std::vector<StateVector>{first, rest...});
}

/// Applies `u` to its target subsystems, identity on the rest.
inline StateVector apply(const UnitaryOp& u, const StateVector& state) {
  const SubsystemLayout& layout = state.layout();
  const std::size_t total = layout.total_dimension();

  std::vector<std::size_t> tpos;
  tpos.reserve(u.targets().size());
  std::size_t m = 1;
  for (const std::string& name : u.targets()) {
    const std::size_t pos = layout.position_of(name);
    for (std::size_t seen : tpos)
      if (seen == pos) throw std::invalid_argument("repeated target '" + name + "'");
    tpos.push_back(pos);
    m *= layout.at(pos).dim;
  }
  if (m != u.dimension())
    throw std::invalid_argument("unitary dimension does not match target subsystems");

  // Flat offsets of the target subspace, target digits in declared order.
  std::vector<std::size_t> toffs(m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    std::size_t rem = a;
    for (std::size_t i = tpos.size(); i-- > 0;) {
      const std::size_t d = layout.at(tpos[i]).dim;
      toffs[a] += (rem % d) * layout.stride(tpos[i]);
      rem /= d;
    }
  }

  std::vector<std::size_t> rest;
  for (std::size_t pos = 0; pos < layout.size(); ++pos)
    if (std::find(tpos.begin(), tpos.end(), pos) == tpos.end()) rest.push_back(pos);

  std::vector<cplx> out(total);
  std::vector<cplx> x(m), y(m);
  std::vector<std::size_t> rdigits(rest.size(), 0);
  std::size_t base = 0;
  const std::size_t blocks = total / m;
  for (std::size_t block = 0; block < blocks; ++block) {
    for (std::size_t a = 0; a < m; ++a) x[a] = state.amplitude(base + toffs[a]);
    for (std::size_t r = 0; r < m; ++r) {
      cplx s{0.0, 0.0};
      for (std::size_t c = 0; c < m; ++c) s += u.entry(r, c) * x[c];
      y[r] = s;
    }
    for (std::size_t a = 0; a < m; ++a) out[base + toffs[a]] = y[a];

    for (std::size_t i = rest.size(); i-- > 0;) {  // odometer over rest digits
      const std::size_t pos = rest[i];
      base += layout.stride(pos);
      if (++rdigits[i] < layout.at(pos).dim) break;
      base -= layout.stride(pos) * layout.at(pos).dim;
      rdigits[i] = 0;
    }
  }
  return StateVector(layout, std::move(out));
}

// The statistician's functional: squared norm of the component with the
// given subsystem in basis state j. Everything above this line is plain
// unitary linear algebra; probability enters only here and in the type
// weights, as a limiting relative frequency.
inline double born_probability(const StateVector& state, const std::string& subsystem, std::size_t j) {
  const SubsystemLayout& layout = state.layout();
  const std::size_t pos = layout.position_of(subsystem);
  if (j >= layout.at(pos).dim)
    throw std::out_of_range("basis index " + std::to_string(j) + " out of range for '" + subsystem + "'");
  double mass = 0.0;
  for (std::size_t i = 0; i < state.dimension(); ++i)
    if (layout.digit(i, pos) == j) mass += std::norm(state.amplitude(i));
  return mass;
}

namespace detail {

struct Conditioning {
  std::vector<std::size_t> positions;      // positions of conditioning subsystems
  std::vector<std::size_t> alpha_digits;   // their required digits
  SubsystemLayout remaining;               // layout of the rest, order preserved
  std::vector<std::size_t> remaining_pos;
};

inline Conditioning resolve_conditioning(const SubsystemLayout& layout,
                                         const std::vector<std::string>& names, std::size_t alpha) {
  if (names.empty()) throw std::invalid_argument("conditioning set is empty");
  Conditioning c;
  for (const std::string& n : names) c.positions.push_back(layout.position_of(n));
  std::size_t span = 1;
  for (std::size_t pos : c.positions) span *= layout.at(pos).dim;
  if (alpha >= span) throw std::out_of_range("conditioning basis index out of range");
  c.alpha_digits.assign(c.positions.size(), 0);
  std::size_t rem = alpha;
  for (std::size_t i = c.positions.size(); i-- > 0;) {
    c.alpha_digits[i] = rem % layout.at(c.positions[i]).dim;
    rem /= layout.at(c.positions[i]).dim;
  }
  std::vector<Subsystem> keep;
  for (std::size_t pos = 0; pos < layout.size(); ++pos) {
    if (std::find(c.positions.begin(), c.positions.end(), pos) == c.positions.end()) {
      keep.push_back(layout.at(pos));
      c.remaining_pos.push_back(pos);
    }
  }
  if (keep.empty()) throw std::invalid_argument("conditioning on every subsystem leaves no state");
  c.remaining = SubsystemLayout(keep);
  return c;
}

inline bool matches(const SubsystemLayout& layout, std::size_t flat, const Conditioning& c) {
  for (std::size_t i = 0; i < c.positions.size(); ++i)
    if (layout.digit(flat, c.positions[i]) != c.alpha_digits[i]) return false;
  return true;
}

}  // namespace detail

/// Squared norm ||u_alpha||^2 of the component selected by the conditioning;
/// equals born_probability when the conditioning set is a single subsystem.
inline double component_weight(const StateVector& state, const std::vector<std::string>& conditioning,
                               std::size_t alpha) {
  const auto c = detail::resolve_conditioning(state.layout(), conditioning, alpha);
  double mass = 0.0;
  for (std::size_t i = 0; i < state.dimension(); ++i)
    if (detail::matches(state.layout(), i, c)) mass += std::norm(state.amplitude(i));
  return mass;
}

// Relative state u_alpha / ||u_alpha|| on the remaining subsystems, given
// the conditioning subsystems in joint basis state alpha (digits decoded in
// the order the conditioning names are listed, most significant first).
inline StateVector relative_state(const StateVector& state, const std::vector<std::string>& conditioning,
                                  std::size_t alpha) {
  const auto c = detail::resolve_conditioning(state.layout(), conditioning, alpha);
  const SubsystemLayout& layout = state.layout();

  std::vector<cplx> component(c.remaining.total_dimension(), cplx{0.0, 0.0});
  double mass = 0.0;
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    if (!detail::matches(layout, i, c)) continue;
    std::size_t out = 0;
    for (std::size_t k = 0; k < c.remaining_pos.size(); ++k)
      out += layout.digit(i, c.remaining_pos[k]) * c.remaining.stride(k);
    component[out] = state.amplitude(i);
    mass += std::norm(state.amplitude(i));
  }
  const double nrm = std::sqrt(mass);
  if (nrm <= kTol)
    throw UndefinedRelativeStateError("relative state undefined: conditioned component has zero norm");
  for (cplx& a : component) a /= nrm;
  return StateVector(c.remaining, std::move(component));
}

inline StateVector relative_state(const StateVector& state, const std::string& conditioning,
                                  std::size_t alpha) {
  return relative_state(state, std::vector<std::string>{conditioning}, alpha);
}

// Builds the unitary determined by U|in_k> = |out_k> for the given pairs
// (each side an orthonormal set), completed deterministically by
// Gram-Schmidt over the canonical basis.
inline std::vector<cplx> unitary_from_action(
    std::size_t dim, const std::vector<std::pair<std::vector<cplx>, std::vector<cplx>>>& pairs) {
  if (pairs.size() > dim) throw std::invalid_argument("more pinned pairs than dimensions");

  auto check_orthonormal = [dim](const std::vector<std::vector<cplx>>& vs) {
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (vs[i].size() != dim) throw std::invalid_argument("pinned vector has wrong dimension");
      for (std::size_t j = 0; j <= i; ++j) {
        cplx s{0.0, 0.0};
        for (std::size_t k = 0; k < dim; ++k) s += std::conj(vs[j][k]) * vs[i][k];
        if (i == j) s -= 1.0;
        if (std::abs(s) > 1e-10) throw std::invalid_argument("pinned vectors are not orthonormal");
      }
    }
  };

  auto extend = [dim](std::vector<std::vector<cplx>> vs) {
    for (std::size_t cand = 0; cand < dim && vs.size() < dim; ++cand) {
      std::vector<cplx> v(dim, cplx{0.0, 0.0});
      v[cand] = cplx{1.0, 0.0};
      for (int pass = 0; pass < 2; ++pass) {  // re-orthogonalize once for stability
        for (const auto& b : vs) {
          cplx proj{0.0, 0.0};
          for (std::size_t k = 0; k < dim; ++k) proj += std::conj(b[k]) * v[k];
          for (std::size_t k = 0; k < dim; ++k) v[k] -= proj * b[k];
        }
      }
      double n2 = 0.0;
      for (const cplx& a : v) n2 += std::norm(a);
      if (n2 < 0.25) continue;  // candidate already in span
      const double n = std::sqrt(n2);
      for (cplx& a : v) a /= n;
      vs.push_back(std::move(v));
    }
    if (vs.size() != dim) throw std::invalid_argument("failed to complete orthonormal basis");
    return vs;
  };

  std::vector<std::vector<cplx>> ins, outs;
  for (const auto& [in, out] : pairs) {
    ins.push_back(in);
    outs.push_back(out);
  }
  check_orthonormal(ins);
  check_orthonormal(outs);
  ins = extend(std::move(ins));
  outs = extend(std::move(outs));

  // U = sum_k |out_k><in_k|
  std::vector<cplx> matrix(dim * dim, cplx{0.0, 0.0});
  for (std::size_t k = 0; k < dim; ++k)
    for (std::size_t r = 0; r < dim; ++r) {
      if (outs[k][r] == cplx{0.0, 0.0}) continue;
      for (std::size_t c = 0; c < dim; ++c) matrix[r * dim + c] += outs[k][r] * std::conj(ins[k][c]);
    }
  return matrix;
}

/// unitary_from_action with basis-state inputs: column `col` is pinned to `value`.
inline std::vector<cplx> complete_columns(std::size_t dim,
                                          const std::vector<std::pair<std::size_t, std::vector<cplx>>>& pinned) {
  std::vector<std::pair<std::vector<cplx>, std::vector<cplx>>> pairs;
  for (const auto& [col, value] : pinned) {
    if (col >= dim) throw std::invalid_argument("pinned column out of range");
    std::vector<cplx> e(dim, cplx{0.0, 0.0});
    e[col] = cplx{1.0, 0.0};
    pairs.emplace_back(std::move(e), value);
  }
  return unitary_from_action(dim, pairs);
}

}  // namespace hilbert
}  // namespace bornsim
