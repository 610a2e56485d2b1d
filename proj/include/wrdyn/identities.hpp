#pragma once

// Certificate checkers for the weighted recursion T -> T^{1/2}(I - tau|e><e|)T^{1/2}.
//
// Every checker returns a scaled, nonnegative residual: equalities report
// |lhs - rhs| / max(1, natural scale), inequalities report the amount of
// violation / max(1, |bound|). A faithful run keeps all of them near
// machine precision.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wrdyn/matcore.hpp"

namespace wrdyn {

/// Stable residual names shared by StepRecord, reports and the CLI.
namespace residual {
inline constexpr const char* kDetDecay = "det_decay";
inline constexpr const char* kARecursion = "a_recursion";
inline constexpr const char* kBDecrement = "B_decrement";
inline constexpr const char* kSummability = "summability";
inline constexpr const char* kOffdiagCS = "offdiag_cs";
inline constexpr const char* kInvUpdate = "inv_update";
inline constexpr const char* kBetaBound = "beta_bound";
inline constexpr const char* kSBound = "s_bound";
inline constexpr const char* kLambdaMinBound = "lambda_min_bound";
inline constexpr const char* kTransversePersistence = "transverse_persistence";

inline const std::vector<std::string>& all_names() {
  static const std::vector<std::string> names{kDetDecay,   kARecursion, kBDecrement, kSummability,
                                              kOffdiagCS,  kInvUpdate,  kBetaBound,  kSBound,
                                              kLambdaMinBound, kTransversePersistence};
  return names;
}
}  // namespace residual

/// Orthonormal basis of the complement of e; deterministic in e so that
/// coordinates of consecutive steps are comparable.
inline OrthonormalBasis transverse_frame(const UnitVector& e) {
  return OrthonormalBasis(Matrix(e.vector())).complement();
}

/// T split along C e (+) e-perp, with e-perp in transverse_frame(e) coordinates.
struct BlockCoordinates {
  double a = 0.0;  // <e, T e>
  Vector b;        // Q T e
  Matrix B;        // Q T Q
  Vector y;        // Q T^{1/2} e

  double y_norm2() const { return y.squaredNorm(); }

  Matrix reassemble(const UnitVector& e, const OrthonormalBasis& frame) const {
    const Index k = e.dim();
    Matrix basis(k, k);
    basis.col(0) = e.vector();
    basis.rightCols(k - 1) = frame.matrix();
    Matrix blocks(k, k);
    blocks(0, 0) = a;
    blocks.block(1, 0, k - 1, 1) = b;
    blocks.block(0, 1, 1, k - 1) = b.adjoint();
    blocks.bottomRightCorner(k - 1, k - 1) = B;
    return basis * blocks * basis.adjoint();
  }
};

inline BlockCoordinates block_coordinates(const PSDMatrix& t, const UnitVector& e, const OrthonormalBasis& frame) {
  require(t.dim() == e.dim() && frame.ambient_dim() == e.dim(), ErrorCode::DimensionMismatch,
          "block_coordinates: dimensions differ");
  const Matrix& f = frame.matrix();
  BlockCoordinates bc;
  bc.a = t.quadratic_form(e.vector());
  bc.b = f.adjoint() * t.apply(e.vector());
  bc.B = detail::hermitian_part(f.adjoint() * t.dense() * f);
  const PSDMatrix root = t.sqrt();
  bc.y = f.adjoint() * root.apply(e.vector());
  return bc;
}

inline BlockCoordinates block_coordinates(const PSDMatrix& t, const UnitVector& e) {
  return block_coordinates(t, e, transverse_frame(e));
}

/// a_{n+1} = (1 - tau) a_n + tau |y_n|^2.
inline double check_a_recursion(const BlockCoordinates& cur, const BlockCoordinates& next, double tau) {
  const double predicted = (1.0 - tau) * cur.a + tau * cur.y_norm2();
  return std::abs(next.a - predicted) / std::max(1.0, cur.a);
}

/// B_{n+1} = B_n - tau |y_n><y_n|.
inline double check_B_decrement(const BlockCoordinates& cur, const BlockCoordinates& next, double tau) {
  if (cur.B.size() == 0) return 0.0;
  const Matrix diff = next.B - cur.B + tau * cur.y * cur.y.adjoint();
  return op_norm(diff) / std::max(1.0, hermitian_norm(cur.B));
}

/// tr B_n - tr B_{n+1} = tau |y_n|^2.
inline double check_B_trace_decrement(const BlockCoordinates& cur, const BlockCoordinates& next, double tau) {
  if (cur.B.size() == 0) return 0.0;
  const double drop = cur.B.trace().real() - next.B.trace().real();
  return std::abs(drop - tau * cur.y_norm2()) / std::max(1.0, cur.B.trace().real());
}

/// |tau * sum_{n<last} |y_n|^2 - tr(B_0 - B_last)| / max(1, tr B_0).
inline double summability_residual(std::span<const BlockCoordinates> seq, double tau) {
  if (seq.size() < 2 || seq.front().B.size() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t n = 0; n + 1 < seq.size(); ++n) sum += seq[n].y_norm2();
  const double tr0 = seq.front().B.trace().real();
  const double drop = tr0 - seq.back().B.trace().real();
  return std::abs(tau * sum - drop) / std::max(1.0, tr0);
}

struct SummabilityReport {
  double residual = 0.0;
  double final_y = 0.0;
};

/// Telescoped trace identity over a converged run. Throws NotConverged when
/// the last |y_n| exceeds 1e-6.
inline SummabilityReport check_summability(std::span<const BlockCoordinates> seq, double tau) {
  SummabilityReport rep;
  if (seq.empty()) return rep;
  rep.residual = summability_residual(seq, tau);
  rep.final_y = std::sqrt(seq.back().y_norm2());
  require(rep.final_y <= 1e-6, ErrorCode::NotConverged,
          "final |y_n| = " + std::to_string(rep.final_y) + " exceeds 1e-6");
  return rep;
}

struct OffdiagReport {
  double max_excess = 0.0;  // max_n (|b_n|^2 - |T_0| a_n) / max(1, |T_0|^2)
  double final_b = 0.0;
};

/// Cauchy-Schwarz bound |b_n|^2 <= |T_0| a_n along a run.
inline OffdiagReport check_offdiag_collapse(std::span<const BlockCoordinates> seq, double norm_t0) {
  OffdiagReport rep;
  if (seq.empty()) return rep;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  const double scale = std::max(1.0, norm_t0 * norm_t0);
  for (const auto& bc : seq) rep.max_excess = std::max(rep.max_excess, (bc.b.squaredNorm() - norm_t0 * bc.a) / scale);
  rep.final_b = seq.back().b.norm();
  return rep;
}

/// |det T_{n+1} / det T_n / (1 - tau) - 1|, with determinants taken as
/// products of eigenvalues.
inline double check_det_decay(const PSDMatrix& cur, const PSDMatrix& next, double tau) {
  require(cur.dim() == next.dim(), ErrorCode::DimensionMismatch, "check_det_decay: dimensions differ");
  require(cur.strictly_positive() && next.strictly_positive(), ErrorCode::NotStrictlyPositive,
          "check_det_decay needs strictly positive blocks");
  const double log_ratio = next.log_pseudo_det() - cur.log_pseudo_det() - std::log1p(-tau);
  return std::abs(std::expm1(log_ratio));
}

struct InverseStats {
  double beta = 0.0;  // <e, T^{-1} e>
  double s = 0.0;     // tr T^{-1}
  double lambda_min = 0.0;
};

inline InverseStats inverse_stats(const PSDMatrix& t, const UnitVector& e) {
  require(t.strictly_positive(), ErrorCode::NotStrictlyPositive, "inverse_stats: singular block");
  const Vector c = t.eigenvectors().adjoint() * e.vector();
  InverseStats st;
  for (Index i = 0; i < t.dim(); ++i) {
    st.beta += std::norm(c(i)) / t.eigenvalues()(i);
    st.s += 1.0 / t.eigenvalues()(i);
  }
  st.lambda_min = t.lambda_min();
  return st;
}

struct InverseUpdateReport {
  double residual = 0.0;
  Index diff_rank = 0;
};

/// T_{n+1}^{-1} = T_n^{-1} + (tau/rho) |T_n^{-1/2} e><T_n^{-1/2} e|.
inline InverseUpdateReport check_inverse_update(const PSDMatrix& cur, const PSDMatrix& next, const UnitVector& e,
                                                double tau, double rho) {
  require(cur.dim() == next.dim() && cur.dim() == e.dim(), ErrorCode::DimensionMismatch,
          "check_inverse_update: dimensions differ");
  require(cur.strictly_positive() && next.strictly_positive(), ErrorCode::NotStrictlyPositive,
          "check_inverse_update needs strictly positive blocks");
  const Matrix inv_cur = cur.inverse();
  const Matrix diff = detail::hermitian_part(next.inverse() - inv_cur);
  const Vector q = cur.inverse_sqrt() * e.vector();
  const double scale = std::max(1.0, 1.0 / cur.lambda_min());
  InverseUpdateReport rep;
  rep.residual = op_norm(diff - (tau / rho) * q * q.adjoint()) / scale;
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
  rep.diff_rank = (es.eigenvalues().array().abs() > 1e-8 * scale).count();
  return rep;
}

struct GrowthReport {
  bool beta_ok = true;
  bool s_ok = true;
  bool lambda_ok = true;
  double beta_violation = 0.0;    // max scaled shortfall below the linear bound
  double s_violation = 0.0;       // max scaled shortfall below the quadratic bound
  double lambda_violation = 0.0;  // max scaled excess of lambda_min over dim/s
  double empirical_c = 0.0;       // max_{n>=1} n^2 lambda_min(T_n)
  double bound_c = 0.0;           // max_{n>=1} n^2 dim / (quadratic lower bound for s_n)
  std::optional<Index> first_violation;
};

/// beta_n >= beta_0 + n tau/(rho |T_0|),
/// s_n >= s_0 + (tau/rho) n beta_0 + tau^2/(2 rho^2 |T_0|) n(n-1),
/// lambda_min(T_n) <= dim/s_n. Slack 1e-9 * max(1, |bound|).
inline GrowthReport check_growth_bounds(std::span<const InverseStats> stats, double tau, double rho, double norm_t0,
                                        Index dim_e) {
  GrowthReport rep;
  if (stats.empty()) return rep;
  const double beta0 = stats.front().beta;
  const double s0 = stats.front().s;
  const double lin = tau / (rho * norm_t0);
  const double quad = tau * tau / (2.0 * rho * rho * norm_t0);
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const double n = static_cast<double>(i);
    const auto& st = stats[i];
    const double beta_bound = beta0 + n * lin;
    const double s_bound = s0 + (tau / rho) * n * beta0 + quad * n * (n - 1.0);
    const double lam_bound = static_cast<double>(dim_e) / st.s;
    const double bv = (beta_bound - st.beta) / std::max(1.0, std::abs(beta_bound));
    const double sv = (s_bound - st.s) / std::max(1.0, std::abs(s_bound));
    const double lv = (st.lambda_min - lam_bound) / std::max(1.0, std::abs(lam_bound));
    rep.beta_violation = std::max(rep.beta_violation, bv);
    rep.s_violation = std::max(rep.s_violation, sv);
    rep.lambda_violation = std::max(rep.lambda_violation, lv);
    const bool bad = bv > 1e-9 || sv > 1e-9 || lv > 1e-9;
    if (bv > 1e-9) rep.beta_ok = false;
    if (sv > 1e-9) rep.s_ok = false;
    if (lv > 1e-9) rep.lambda_ok = false;
    if (bad && !rep.first_violation) rep.first_violation = static_cast<Index>(i);
    if (i >= 1) {
      rep.empirical_c = std::max(rep.empirical_c, n * n * st.lambda_min);
      if (s_bound > 0.0) rep.bound_c = std::max(rep.bound_c, n * n * static_cast<double>(dim_e) / s_bound);
    }
  }
  return rep;
}

/// Coupling |<e, T f>| of e to its complement, i.e. |Q T e|.
inline double transverse_coupling(const PSDMatrix& t, const UnitVector& e) {
  const Vector te = t.apply(e.vector());
  return (te - e.vector() * e.vector().dot(te)).norm();
}

/// max_n |T_n - ((1-tau)^n lambda_0 |e><e| (+) B_0)| / max(1, |T_0|), for a
/// run whose first block is decoupled (e-perp reducing). B_0 is given in
/// transverse_frame(e) coordinates. Throws NotDecoupled otherwise.
inline double check_transverse_persistence(std::span<const PSDMatrix> seq, const UnitVector& e, double lambda0,
                                           double tau, const Matrix& B0, double coupling_tol = 1e-10) {
  if (seq.empty()) return 0.0;
  const double norm_t0 = seq.front().norm();
  require(transverse_coupling(seq.front(), e) <= coupling_tol * std::max(norm_t0, std::numeric_limits<double>::min()),
          ErrorCode::NotDecoupled, "e-perp does not reduce the initial block");
  const OrthonormalBasis frame = transverse_frame(e);
  const Matrix& f = frame.matrix();
  const Matrix frozen = f * B0 * f.adjoint();
  const Matrix ee = e.vector() * e.vector().adjoint();
  double worst = 0.0;
  double lambda = lambda0;
  for (const auto& t : seq) {
    worst = std::max(worst, op_norm(t.dense() - lambda * ee - frozen));
    lambda *= (1.0 - tau);
  }
  return worst / std::max(1.0, norm_t0);
}

}  // namespace wrdyn
