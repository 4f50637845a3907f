#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bornsim/hilbert.hpp"
#include "bornsim/random.hpp"

namespace testsupport {

using bornsim::cplx;
using bornsim::random::SplitMix64;

/// Haar-ish random unit vector of the given dimension (Gaussian, normalized).
inline std::vector<cplx> random_unit_vector(std::size_t dim, SplitMix64& rng) {
  std::vector<cplx> v(dim);
  double n2 = 0.0;
  for (cplx& a : v) {
    a = cplx{bornsim::random::gaussian(rng), bornsim::random::gaussian(rng)};
    n2 += std::norm(a);
  }
  const double n = std::sqrt(n2);
  for (cplx& a : v) a /= n;
  return v;
}

inline bornsim::hilbert::StateVector random_state(bornsim::hilbert::SubsystemLayout layout,
                                                  SplitMix64& rng) {
  auto amps = random_unit_vector(layout.total_dimension(), rng);
  return bornsim::hilbert::StateVector(std::move(layout), std::move(amps));
}

/// Random normalized qubit pair (c0, c1).
inline std::pair<cplx, cplx> random_coefficients(SplitMix64& rng) {
  auto v = random_unit_vector(2, rng);
  return {v[0], v[1]};
}

/// Random unitary matrix (row-major) of the given dimension via Gram-Schmidt
/// on Gaussian columns.
inline std::vector<cplx> random_unitary_matrix(std::size_t dim, SplitMix64& rng) {
  std::vector<std::vector<cplx>> cols;
  while (cols.size() < dim) {
    std::vector<cplx> v(dim);
    for (cplx& a : v) a = cplx{bornsim::random::gaussian(rng), bornsim::random::gaussian(rng)};
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : cols) {
        cplx proj{0.0, 0.0};
        for (std::size_t k = 0; k < dim; ++k) proj += std::conj(b[k]) * v[k];
        for (std::size_t k = 0; k < dim; ++k) v[k] -= proj * b[k];
      }
    }
    double n2 = 0.0;
    for (const cplx& a : v) n2 += std::norm(a);
    if (n2 < 1e-6) continue;
    const double n = std::sqrt(n2);
    for (cplx& a : v) a /= n;
    cols.push_back(std::move(v));
  }
  std::vector<cplx> m(dim * dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) m[r * dim + c] = cols[c][r];
  return m;
}

// Regularized upper incomplete gamma Q(a, x), for chi-squared p-values.
// Series for x < a + 1, Lentz continued fraction otherwise (standard
// numerical-recipes construction; test-only oracle helper).
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 10000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - lg);
    return 1.0 - p;
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - lg) * h;
}

}  // namespace testsupport
