#pragma once

// Random instances. Every sweep instance lives in C^{dim+1} as
// R_0 = 0 (+) T_0 with u = sqrt(tau) e + sqrt(1 - tau) k, where k spans the
// kernel and e is a unit vector of the active space. The support of R_0 is
// then stable from the first step and tau is exactly the weight of the
// active block.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "wrdyn/matcore.hpp"

namespace wrdyn {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Standard complex Gaussian: real and imaginary parts N(0, 1/2).
inline Matrix complex_gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double re = nd(rng);
      const double im = nd(rng);
      g(i, j) = Complex(re, im);
    }
  return g;
}

inline UnitVector random_unit(Index n, Rng& rng) { return UnitVector::normalize(complex_gaussian(n, 1, rng).col(0)); }

/// Haar-distributed unitary (QR of a Gaussian matrix with phases fixed).
inline Matrix random_unitary(Index n, Rng& rng) {
  const Matrix g = complex_gaussian(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

/// G G^* + eps I with G standard complex Gaussian.
inline PSDMatrix wishart(Index n, Rng& rng, double eps = 1e-6) {
  const Matrix g = complex_gaussian(n, n, rng);
  return PSDMatrix(Matrix(g * g.adjoint() + eps * Matrix::Identity(n, n)));
}

enum class Ensemble { Wishart, CoupledBlock, Decoupled };

inline std::string_view to_string(Ensemble e) {
  switch (e) {
    case Ensemble::Wishart: return "wishart";
    case Ensemble::CoupledBlock: return "coupled-block";
    case Ensemble::Decoupled: return "decoupled";
  }
  return "wishart";
}

inline Ensemble parse_ensemble(const std::string& s) {
  if (s == "wishart") return Ensemble::Wishart;
  if (s == "coupled-block") return Ensemble::CoupledBlock;
  if (s == "decoupled") return Ensemble::Decoupled;
  throw Error(ErrorCode::SpecError, "unknown ensemble '" + s + "'");
}

struct Instance {
  PSDMatrix R0;
  UnitVector u;
  Matrix T0;     // active block in its own coordinates
  Vector e;      // defect direction in T0 coordinates
  double tau = 0.0;
  Index planted_rank = -1;  // expected limit rank when the ensemble fixes it
};

/// Active block T0 of dimension dim with defect direction e:
///  wishart        generic strictly positive T0, generic e;
///  coupled-block  T0 = K (+) W with W a coupled plane containing e, K
///                 strictly positive of dimension dim - 2, all rotated by a
///                 random unitary; the limit is K (+) 0;
///  decoupled      T0 = l0 |e><e| (+) B0 with B0 strictly positive on e-perp;
///                 the limit is 0 (+) B0.
inline Instance make_instance(Ensemble ens, Index dim, double tau, Rng& rng) {
  require(dim >= 1, ErrorCode::InvalidConfig, "active dimension must be positive");
  require(tau > 0.0 && tau < 1.0, ErrorCode::InvalidConfig, "tau must lie in (0, 1)");
  Instance inst;
  inst.tau = tau;
  switch (ens) {
    case Ensemble::Wishart: {
      inst.T0 = wishart(dim, rng).dense();
      inst.e = random_unit(dim, rng).vector();
      break;
    }
    case Ensemble::CoupledBlock: {
      require(dim >= 2, ErrorCode::InvalidConfig, "coupled-block needs dimension >= 2");
      Matrix t = Matrix::Zero(dim, dim);
      const Matrix w = wishart(2, rng).dense();
      t.topLeftCorner(2, 2) = w;
      if (dim > 2) t.bottomRightCorner(dim - 2, dim - 2) = wishart(dim - 2, rng).dense();
      Vector e = Vector::Zero(dim);
      e.head(2) = random_unit(2, rng).vector();
      const Matrix q = random_unitary(dim, rng);
      inst.T0 = q * t * q.adjoint();
      inst.e = q * e;
      inst.planted_rank = dim - 2;
      break;
    }
    case Ensemble::Decoupled: {
      Matrix t = Matrix::Zero(dim, dim);
      std::uniform_real_distribution<double> ud(0.5, 2.0);
      t(0, 0) = ud(rng);
      if (dim > 1) t.bottomRightCorner(dim - 1, dim - 1) = wishart(dim - 1, rng).dense();
      Vector e = Vector::Zero(dim);
      e(0) = 1.0;
      const Matrix q = random_unitary(dim, rng);
      inst.T0 = q * t * q.adjoint();
      inst.e = q * e;
      inst.planted_rank = dim - 1;
      break;
    }
  }
  inst.T0 = detail::hermitian_part(inst.T0);
  const Index n = dim + 1;
  Matrix r0 = Matrix::Zero(n, n);
  r0.bottomRightCorner(dim, dim) = inst.T0;
  Vector u = Vector::Zero(n);
  u(0) = std::sqrt(1.0 - tau);
  u.tail(dim) = std::sqrt(tau) * inst.e;
  inst.R0 = PSDMatrix(r0);
  inst.u = UnitVector::normalize(u);
  return inst;
}

}  // namespace wrdyn
