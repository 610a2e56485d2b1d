#pragma once

// Dense Hermitian / positive-semidefinite kernel.
//
// PSDMatrix keeps its own spectral factorization (ascending eigenvalues plus
// a unitary eigenvector matrix) as the primary representation; the dense
// matrix is derived from it. Iterations that stay in this representation
// (see gram_eigen) keep tiny eigenvalues to full relative accuracy, which a
// dense round trip through an eigensolver cannot do.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "wrdyn/errors.hpp"

namespace wrdyn {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();
/// Eigenvalues at or below this fraction of the largest one are roundoff
/// when a PSD matrix is built from dense entries.
inline constexpr double kNoiseFloor = 1e3 * kEps;
/// Smallest eigenvalue a spectral factorization carries; below it the
/// factors of X = C diag(sqrt l) reach subnormal range and lose digits.
inline constexpr double kUnderflowFloor = std::numeric_limits<double>::min() / kEps;

namespace detail {

inline bool all_finite(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

/// Rotates v so that its first non-negligible component is real positive.
inline void normalize_phase(Eigen::Ref<Vector> v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag > std::sqrt(kEps) * scale) {
      v *= std::conj(v(i)) / mag;
      v(i) = Complex(mag, 0.0);
      return;
    }
  }
}

}  // namespace detail

/// Spectral norm of an arbitrary dense matrix.
inline double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
inline double hermitian_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  /// Validates and symmetrizes. Throws NonHermitianInput when the
  /// anti-Hermitian part exceeds 1e-8 of the matrix (Frobenius).
  explicit HermitianMatrix(const Matrix& m) {
    require(m.rows() == m.cols(), ErrorCode::DimensionMismatch, "matrix is not square");
    require(detail::all_finite(m), ErrorCode::NonHermitianInput, "matrix has non-finite entries");
    const double skew = 0.5 * (m - m.adjoint()).norm();
    require(skew <= 1e-8 * m.norm(), ErrorCode::NonHermitianInput,
            "anti-Hermitian residual " + std::to_string(skew));
    m_ = detail::hermitian_part(m);
  }

  static HermitianMatrix zero(Index n) { return HermitianMatrix(Matrix::Zero(n, n)); }
  static HermitianMatrix identity(Index n) { return HermitianMatrix(Matrix::Identity(n, n)); }
  static HermitianMatrix diagonal(const RealVector& d) {
    return HermitianMatrix(d.cast<Complex>().asDiagonal().toDenseMatrix());
  }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  Complex operator()(Index i, Index j) const { return m_(i, j); }
  double norm() const { return hermitian_norm(m_); }

 private:
  Matrix m_;
};

// ---------------------------------------------------------------------------

class UnitVector {
 public:
  UnitVector() = default;

  /// Accepts v when | |v| - 1 | <= 1e-12 and renormalizes it exactly.
  explicit UnitVector(const Vector& v) {
    require(v.size() > 0, ErrorCode::DimensionMismatch, "empty vector");
    const double n = v.norm();
    require(std::isfinite(n), ErrorCode::NotUnitVector, "non-finite vector");
    require(std::abs(n - 1.0) <= 1e-12, ErrorCode::NotUnitVector,
            "vector norm " + std::to_string(n) + " is not 1");
    v_ = v / n;
  }

  static UnitVector normalize(const Vector& v) {
    const double n = v.norm();
    require(n > 0.0 && std::isfinite(n), ErrorCode::ZeroVector, "cannot normalize a zero vector");
    return UnitVector(Vector(v / n));
  }

  static UnitVector basis(Index dim, Index i) {
    Vector v = Vector::Zero(dim);
    v(i) = 1.0;
    return UnitVector(v);
  }

  Index dim() const { return v_.size(); }
  const Vector& vector() const { return v_; }
  Complex operator[](Index i) const { return v_(i); }

 private:
  Vector v_;
};

// ---------------------------------------------------------------------------

class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Index ambient_dim = 0) : cols_(ambient_dim, 0) {}

  /// Columns must be orthonormal within 1e-10.
  explicit OrthonormalBasis(const Matrix& cols) : cols_(cols) {
    if (cols_.cols() > 0) {
      const double err =
          (cols_.adjoint() * cols_ - Matrix::Identity(cols_.cols(), cols_.cols())).cwiseAbs().maxCoeff();
      require(err <= 1e-10, ErrorCode::DimensionMismatch,
              "basis columns are not orthonormal (error " + std::to_string(err) + ")");
    }
  }

  static OrthonormalBasis standard(Index n) { return OrthonormalBasis(Matrix(Matrix::Identity(n, n))); }

  static OrthonormalBasis standard_subset(Index n, const std::vector<Index>& idx) {
    Matrix c = Matrix::Zero(n, static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) c(idx[j], static_cast<Index>(j)) = 1.0;
    return OrthonormalBasis(c);
  }

  Index ambient_dim() const { return cols_.rows(); }
  Index size() const { return cols_.cols(); }
  bool empty() const { return cols_.cols() == 0; }
  const Matrix& matrix() const { return cols_; }
  Vector column(Index j) const { return cols_.col(j); }
  Matrix projector() const { return cols_ * cols_.adjoint(); }

  /// Orthonormal basis of the orthogonal complement, from a full Householder QR.
  OrthonormalBasis complement() const {
    const Index n = ambient_dim();
    const Index k = size();
    if (k == 0) return standard(n);
    if (k == n) return OrthonormalBasis(n);
    Eigen::HouseholderQR<Matrix> qr(cols_);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    Matrix rest = q.rightCols(n - k);
    for (Index j = 0; j < rest.cols(); ++j) detail::normalize_phase(rest.col(j));
    return OrthonormalBasis(rest);
  }

 private:
  Matrix cols_;
};

/// Sine of the largest principal angle between two subspaces (1 when the
/// dimensions differ).
inline double principal_angle_sin(const OrthonormalBasis& a, const OrthonormalBasis& b) {
  require(a.ambient_dim() == b.ambient_dim(), ErrorCode::DimensionMismatch, "ambient dimensions differ");
  if (a.size() != b.size()) return 1.0;
  if (a.size() == 0) return 0.0;
  const Matrix resid = a.matrix() - b.matrix() * (b.matrix().adjoint() * a.matrix());
  return std::min(1.0, op_norm(resid));
}

// ---------------------------------------------------------------------------

struct EigenDecomposition {
  RealVector eigenvalues;  // ascending
  OrthonormalBasis eigenvectors;
};

inline EigenDecomposition eigh(const HermitianMatrix& h) {
  const Index n = h.dim();
  if (n == 0) return {RealVector(0), OrthonormalBasis(0)};
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix());
  require(es.info() == Eigen::Success, ErrorCode::NumericalBreakdown, "eigensolver failed");
  Matrix v = es.eigenvectors();
  for (Index j = 0; j < n; ++j) detail::normalize_phase(v.col(j));
  return {es.eigenvalues(), OrthonormalBasis(v)};
}

/// Eigen-decomposition of X*X computed directly from X by one-sided
/// (Hestenes) Jacobi. For X = C * diag(d) with C well conditioned the
/// eigenvalues come out with relative accuracy ~ eps * cond(C), however
/// widely the entries of d are spread.
struct GramEigen {
  RealVector values;  // ascending squared column norms
  Matrix vectors;     // unitary; X*X = vectors * diag(values) * vectors^*
};

namespace detail {

/// |v|^2 evaluated on a rescaled copy so that tiny columns do not pass
/// through subnormal intermediates.
inline double scaled_sqnorm(const Eigen::Ref<const Vector>& v, double scale) {
  if (scale == 0.0) return 0.0;
  return scale * scale * (v / scale).squaredNorm();
}

}  // namespace detail

inline GramEigen gram_eigen(Matrix x) {
  const Index k = x.cols();
  Matrix w = Matrix::Identity(k, k);
  const double tol = std::sqrt(static_cast<double>(std::max<Index>(x.rows(), 1))) * kEps;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p + 1 < k; ++p) {
      for (Index q = p + 1; q < k; ++q) {
        const double sp = x.col(p).cwiseAbs().maxCoeff();
        const double sq = x.col(q).cwiseAbs().maxCoeff();
        const double a = detail::scaled_sqnorm(x.col(p), sp);
        const double b = detail::scaled_sqnorm(x.col(q), sq);
        if (a == 0.0 || b == 0.0) continue;
        const Complex g = (sp * sq) * (x.col(p) / sp).dot(x.col(q) / sq);
        const double ag = std::abs(g);
        if (ag <= tol * std::sqrt(a) * std::sqrt(b)) continue;
        rotated = true;
        const Complex ph = g / ag;
        const double zeta = (b - a) / (2.0 * ag);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const Vector xp = x.col(p);
        x.col(p) = c * xp - (s * std::conj(ph)) * x.col(q);
        x.col(q) = (s * ph) * xp + c * x.col(q);
        const Vector wp = w.col(p);
        w.col(p) = c * wp - (s * std::conj(ph)) * w.col(q);
        w.col(q) = (s * ph) * wp + c * w.col(q);
      }
    }
    if (!rotated) break;
  }
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  RealVector norms(k);
  for (Index j = 0; j < k; ++j) norms(j) = detail::scaled_sqnorm(x.col(j), x.col(j).cwiseAbs().maxCoeff());
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return norms(i) < norms(j); });
  GramEigen out{RealVector(k), Matrix(k, k)};
  for (Index j = 0; j < k; ++j) {
    out.values(j) = norms(order[static_cast<std::size_t>(j)]);
    out.vectors.col(j) = w.col(order[static_cast<std::size_t>(j)]);
  }
  return out;
}

// ---------------------------------------------------------------------------

class PSDMatrix {
 public:
  PSDMatrix() = default;

  /// Throws IndefiniteInput if an eigenvalue is below -rank_tol*max(1, lambda_max).
  /// Negative eigenvalues within tolerance and roundoff-level ones are set to 0.
  static PSDMatrix from_dense(const HermitianMatrix& h, double rank_tol = kDefaultRankTol) {
    PSDMatrix out;
    const Index n = h.dim();
    if (n == 0) return out;
    const EigenDecomposition ed = eigh(h);
    const double lmax = std::max(0.0, ed.eigenvalues(n - 1));
    const double lmin = ed.eigenvalues(0);
    require(lmin >= -rank_tol * std::max(1.0, lmax), ErrorCode::IndefiniteInput,
            "smallest eigenvalue " + std::to_string(lmin));
    out.evals_ = ed.eigenvalues;
    out.evecs_ = ed.eigenvectors.matrix();
    bool modified = false;
    const double floor = kNoiseFloor * lmax;
    for (Index i = 0; i < n; ++i) {
      if (out.evals_(i) <= floor) {
        modified = modified || out.evals_(i) != 0.0;
        out.evals_(i) = 0.0;
      }
    }
    if (modified) {
      out.rebuild_dense();
    } else {
      out.dense_ = h.matrix();
    }
    return out;
  }

  explicit PSDMatrix(const Matrix& m, double rank_tol = kDefaultRankTol)
      : PSDMatrix(from_dense(HermitianMatrix(m), rank_tol)) {}

  /// Builds from a factorization V diag(values) V^*; V must be unitary.
  /// Values below kUnderflowFloor become exact zeros.
  static PSDMatrix from_spectral(const RealVector& values, const Matrix& vectors) {
    require(values.size() == vectors.cols() && vectors.rows() == vectors.cols(),
            ErrorCode::DimensionMismatch, "spectral factors have inconsistent sizes");
    const Index n = values.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return values(i) < values(j); });
    PSDMatrix out;
    out.evals_.resize(n);
    out.evecs_.resize(n, n);
    for (Index j = 0; j < n; ++j) {
      const double v = values(order[static_cast<std::size_t>(j)]);
      require(std::isfinite(v), ErrorCode::NumericalBreakdown, "non-finite eigenvalue");
      out.evals_(j) = v < kUnderflowFloor ? 0.0 : v;
      out.evecs_.col(j) = vectors.col(order[static_cast<std::size_t>(j)]);
    }
    out.rebuild_dense();
    return out;
  }

  static PSDMatrix zero(Index n) { return from_spectral(RealVector::Zero(n), Matrix::Identity(n, n)); }
  static PSDMatrix identity(Index n) { return from_spectral(RealVector::Ones(n), Matrix::Identity(n, n)); }
  static PSDMatrix diagonal(const RealVector& d) {
    return from_spectral(d, Matrix::Identity(d.size(), d.size()));
  }

  Index dim() const { return evals_.size(); }
  const RealVector& eigenvalues() const { return evals_; }
  const Matrix& eigenvectors() const { return evecs_; }
  const Matrix& dense() const { return dense_; }
  HermitianMatrix hermitian() const { return HermitianMatrix(dense_); }

  double norm() const { return dim() == 0 ? 0.0 : evals_(dim() - 1); }
  double lambda_min() const { return dim() == 0 ? 0.0 : evals_(0); }
  double trace() const { return evals_.sum(); }

  /// Number of eigenvalues that are exactly nonzero in the representation.
  Index support_rank() const { return (evals_.array() > 0.0).count(); }
  bool strictly_positive() const { return support_rank() == dim(); }

  double det() const { return evals_.prod(); }
  /// Product of the nonzero eigenvalues (1 when there are none).
  double pseudo_det() const {
    double p = 1.0;
    for (Index i = 0; i < dim(); ++i)
      if (evals_(i) > 0.0) p *= evals_(i);
    return p;
  }
  double log_pseudo_det() const {
    double s = 0.0;
    for (Index i = 0; i < dim(); ++i)
      if (evals_(i) > 0.0) s += std::log(evals_(i));
    return s;
  }

  /// <v, S v> as a sum of nonnegative terms.
  double quadratic_form(const Vector& v) const {
    const Vector c = evecs_.adjoint() * v;
    double s = 0.0;
    for (Index i = 0; i < dim(); ++i) s += evals_(i) * std::norm(c(i));
    return s;
  }

  Vector apply(const Vector& v) const { return evecs_ * (evals_.cast<Complex>().asDiagonal() * (evecs_.adjoint() * v)); }

  /// S^p on the support (p may be negative only for strictly positive S).
  Matrix power(double p) const {
    if (p < 0.0)
      require(strictly_positive(), ErrorCode::NotStrictlyPositive, "negative power of a singular matrix");
    RealVector d(dim());
    for (Index i = 0; i < dim(); ++i) d(i) = evals_(i) > 0.0 ? std::pow(evals_(i), p) : 0.0;
    return detail::hermitian_part(evecs_ * d.cast<Complex>().asDiagonal() * evecs_.adjoint());
  }

  PSDMatrix sqrt() const { return from_spectral(evals_.cwiseSqrt(), evecs_); }
  Matrix inverse() const { return power(-1.0); }
  Matrix inverse_sqrt() const { return power(-0.5); }

 private:
  void rebuild_dense() {
    dense_ = detail::hermitian_part(evecs_ * evals_.cast<Complex>().asDiagonal() * evecs_.adjoint());
  }

  RealVector evals_;
  Matrix evecs_;
  Matrix dense_;
};

// ---------------------------------------------------------------------------

inline PSDMatrix psd_sqrt(const PSDMatrix& s) { return s.sqrt(); }

/// Closed-form square root of a 2x2 PSD matrix,
/// (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)). Returns 0 for M = 0.
inline PSDMatrix sqrt2x2(const PSDMatrix& m) {
  require(m.dim() == 2, ErrorCode::DimensionMismatch, "sqrt2x2 needs a 2x2 matrix");
  const Matrix& a = m.dense();
  const double det = std::max(0.0, (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)).real());
  const double rdet = std::sqrt(det);
  const double denom = a.trace().real() + 2.0 * rdet;
  if (!(denom > 0.0)) return PSDMatrix::zero(2);
  Matrix r = (a + rdet * Matrix::Identity(2, 2)) / std::sqrt(denom);
  return PSDMatrix::from_dense(HermitianMatrix(r));
}

inline Index numerical_rank(const PSDMatrix& s, double rank_tol = kDefaultRankTol) {
  const double thresh = rank_tol * std::max(1.0, s.norm());
  return (s.eigenvalues().array() > thresh).count();
}

inline OrthonormalBasis range_basis(const PSDMatrix& s, double rank_tol = kDefaultRankTol) {
  const Index n = s.dim();
  const Index r = numerical_rank(s, rank_tol);
  Matrix cols = s.eigenvectors().rightCols(r);
  for (Index j = 0; j < r; ++j) detail::normalize_phase(cols.col(j));
  if (r == 0) return OrthonormalBasis(n);
  return OrthonormalBasis(cols);
}

/// B^* S B.
inline HermitianMatrix compress(const HermitianMatrix& s, const OrthonormalBasis& b) {
  require(b.ambient_dim() == s.dim(), ErrorCode::DimensionMismatch, "basis lives in a different space");
  return HermitianMatrix(detail::hermitian_part(b.matrix().adjoint() * s.matrix() * b.matrix()));
}

inline PSDMatrix compress(const PSDMatrix& s, const OrthonormalBasis& b) {
  return PSDMatrix::from_dense(compress(s.hermitian(), b));
}

/// True iff lambda_min(B - A) >= -tol * max(1, |B|).
inline bool loewner_leq(const HermitianMatrix& a, const HermitianMatrix& b, double tol) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch, "loewner_leq: dimensions differ");
  if (a.dim() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::hermitian_part(b.matrix() - a.matrix()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) >= -tol * std::max(1.0, b.norm());
}

/// |S B - B (B^* S B)|, zero iff span(B) is S-invariant.
inline double invariance_residual(const HermitianMatrix& s, const OrthonormalBasis& b) {
  if (b.empty()) return 0.0;
  const Matrix& q = b.matrix();
  return op_norm(s.matrix() * q - q * (q.adjoint() * s.matrix() * q));
}

/// Orthonormal basis of span{v, Sv, S^2 v, ...}: Arnoldi with two passes of
/// classical Gram-Schmidt, stopping once the new direction has norm
/// <= rank_tol * max(1, |S|).
inline OrthonormalBasis krylov_span(const HermitianMatrix& s, const Vector& v, double rank_tol = kDefaultRankTol) {
  const Index n = s.dim();
  require(v.size() == n, ErrorCode::DimensionMismatch, "krylov_span: vector size");
  const double vn = v.norm();
  require(vn > 0.0, ErrorCode::ZeroVector, "krylov_span: zero seed");
  const double thresh = rank_tol * std::max(1.0, s.norm());
  Matrix q(n, n);
  q.col(0) = v / vn;
  Index k = 1;
  while (k < n) {
    Vector w = s.matrix() * q.col(k - 1);
    for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(k) * (q.leftCols(k).adjoint() * w);
    const double h = w.norm();
    if (h <= thresh) break;
    q.col(k) = w / h;
    ++k;
  }
  return OrthonormalBasis(Matrix(q.leftCols(k)));
}

}  // namespace wrdyn
