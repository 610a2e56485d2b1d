#pragma once

// Reducing splits, the planar classifications, the stationary-point test and
// the combined limit predictor.

#include <map>
#include <optional>
#include <string>

#include "wrdyn/dynamics.hpp"
#include "wrdyn/identities.hpp"
#include "wrdyn/matcore.hpp"

namespace wrdyn {

struct ReducingSplit {
  OrthonormalBasis M;      // largest R-reducing subspace inside u-perp
  OrthonormalBasis Mperp;  // its complement, the cyclic subspace of u
  HermitianMatrix frozen;  // R on M
  PSDMatrix active_seed;   // R on Mperp
  Vector u_active;         // u in Mperp coordinates (unit)
};

/// M is the complement of span{u, Ru, R^2u, ...}.
inline ReducingSplit maximal_reducing_in_uperp(const HermitianMatrix& r, const UnitVector& u,
                                               double rank_tol = kDefaultRankTol) {
  require(r.dim() == u.dim(), ErrorCode::DimensionMismatch, "maximal_reducing_in_uperp: dimensions differ");
  ReducingSplit s;
  s.Mperp = krylov_span(r, u.vector(), rank_tol);
  s.M = s.Mperp.complement();
  s.frozen = compress(r, s.M);
  s.active_seed = PSDMatrix::from_dense(compress(r, s.Mperp), rank_tol);
  s.u_active = s.Mperp.matrix().adjoint() * u.vector();
  s.u_active /= s.u_active.norm();
  return s;
}

enum class LimitKind { CommutingCompression, Dim2Collapse, TransversePersistence, ActiveDim2, Unknown };

inline std::string_view to_string(LimitKind k) {
  switch (k) {
    case LimitKind::CommutingCompression: return "CommutingCompression";
    case LimitKind::Dim2Collapse: return "Dim2Collapse";
    case LimitKind::TransversePersistence: return "TransversePersistence";
    case LimitKind::ActiveDim2: return "ActiveDim2";
    case LimitKind::Unknown: return "Unknown";
  }
  return "Unknown";
}

/// Rule tags naming the argument that produced a prediction.
namespace rule {
inline constexpr const char* kCommuting = "commuting-compression";
inline constexpr const char* kPlaneDichotomy = "plane-dichotomy";
inline constexpr const char* kWeightedPlane = "weighted-plane-dichotomy";
inline constexpr const char* kDecoupled = "transverse-reducing";
inline constexpr const char* kPlanarRemainder = "planar-remainder";
inline constexpr const char* kExhausted = "support-exhausted";
inline constexpr const char* kOpen = "open-coupled-regime";
}  // namespace rule

struct ClassificationResult {
  LimitKind kind = LimitKind::Unknown;
  std::optional<PSDMatrix> predicted_limit;
  std::string rule;
  std::map<std::string, double> certificate;
  /// Numerical limit of the iteration, attached when kind == Unknown.
  std::optional<PSDMatrix> numerical_limit;
};

/// Planar full-space case: the limit is (I-P)R(I-P) if P and R commute and
/// 0 otherwise.
inline ClassificationResult classify_dim2_fullspace(const PSDMatrix& r, const UnitVector& u) {
  require(r.dim() == 2 && u.dim() == 2, ErrorCode::DimensionMismatch, "classify_dim2_fullspace needs dimension 2");
  const Matrix p = u.vector() * u.vector().adjoint();
  const double comm = op_norm(p * r.dense() - r.dense() * p);
  ClassificationResult out;
  out.rule = rule::kPlaneDichotomy;
  out.certificate["commutator"] = comm;
  if (comm <= 1e-10 * r.norm()) {
    const Matrix q = Matrix::Identity(2, 2) - p;
    out.kind = LimitKind::CommutingCompression;
    out.predicted_limit = PSDMatrix::from_dense(HermitianMatrix(q * r.dense() * q));
  } else {
    out.kind = LimitKind::Dim2Collapse;
    out.predicted_limit = PSDMatrix::zero(2);
  }
  return out;
}

/// Weighted planar case. In the frame {e, f} with b_0 = <f, T0 e> >= 0 the
/// limit is 0 (+) d_0 when b_0 vanishes and 0 otherwise.
inline ClassificationResult classify_active_dim2(const PSDMatrix& t0, const Vector& u_e,
                                                 double rank_tol = kDefaultRankTol, double coupling_tol = 1e-10) {
  require(t0.dim() == 2 && u_e.size() == 2, ErrorCode::DimensionMismatch, "classify_active_dim2 needs dimension 2");
  const double w = u_e.norm();
  require(w > 0.0 && w < 1.0, ErrorCode::WeightOutOfRange, "classify_active_dim2 needs 0 < |u_E| < 1");
  require(t0.lambda_min() > rank_tol * std::max(1.0, t0.norm()), ErrorCode::NotStrictlyPositive,
          "classify_active_dim2 needs a strictly positive block");
  const Vector e = u_e / w;
  Vector f = transverse_frame(UnitVector(e)).column(0);
  Complex b0 = f.dot(t0.apply(e));
  if (std::abs(b0) > 0.0) {
    f *= b0 / std::abs(b0);  // makes <f, T0 e> real nonnegative
    b0 = f.dot(t0.apply(e));
  }
  ClassificationResult out;
  out.rule = rule::kWeightedPlane;
  out.certificate["b0"] = std::abs(b0);
  out.certificate["tau"] = w * w;
  out.certificate["a0"] = t0.quadratic_form(e);
  out.certificate["d0"] = t0.quadratic_form(f);
  if (std::abs(b0) <= coupling_tol * t0.norm()) {
    out.kind = LimitKind::TransversePersistence;
    out.predicted_limit = PSDMatrix::from_spectral((RealVector(2) << 0.0, t0.quadratic_form(f)).finished(),
                                                   (Matrix(2, 2) << e, f).finished());
  } else {
    out.kind = LimitKind::ActiveDim2;
    out.predicted_limit = PSDMatrix::zero(2);
  }
  return out;
}

struct PredictOptions {
  double rank_tol = kDefaultRankTol;
  double conv_tol = 1e-11;
  double coupling_tol = 1e-10;
  int stab_window = 3;
  int max_iter = 10000;
  /// Reused as the numerical limit in the open regime instead of iterating
  /// again (must come from iterating the same R and u).
  const WRTrace* full_trace = nullptr;
};

namespace detail {

inline PSDMatrix embed(const OrthonormalBasis& basis, const Matrix& block, Index n) {
  if (basis.empty()) return PSDMatrix::zero(n);
  return PSDMatrix::from_dense(HermitianMatrix(basis.matrix() * block * basis.matrix().adjoint()));
}

/// Classifies the weighted recursion on a stabilized active block: the
/// cyclic subspace of e under T_N carries the dynamics, its complement
/// inside e-perp is stationary.
inline ClassificationResult classify_active_block(const ActiveBlock& blk, double rank_tol, double coupling_tol) {
  const Index m = blk.T_N.dim();
  ClassificationResult out;
  out.certificate["tau"] = blk.tau;
  out.certificate["active_dim"] = static_cast<double>(m);
  if (!blk.e) {
    out.kind = LimitKind::CommutingCompression;
    out.rule = rule::kCommuting;
    out.certificate["coupled_dim"] = 0.0;
    out.predicted_limit = blk.T_N;
    return out;
  }
  const HermitianMatrix t = blk.T_N.hermitian();
  const OrthonormalBasis cyc = krylov_span(t, blk.e->vector(), rank_tol);
  const OrthonormalBasis rest = cyc.complement();
  const Index c = cyc.size();
  out.certificate["coupled_dim"] = static_cast<double>(c);
  const Matrix stationary = rest.empty() ? Matrix::Zero(m, m)
                                         : Matrix(rest.matrix() * compress(t, rest).matrix() * rest.matrix().adjoint());
  if (c == 1) {
    out.kind = LimitKind::TransversePersistence;
    out.rule = rule::kDecoupled;
    out.certificate["b0"] = transverse_coupling(blk.T_N, *blk.e);
    out.predicted_limit = PSDMatrix::from_dense(HermitianMatrix(stationary));
    return out;
  }
  if (c == 2) {
    const PSDMatrix plane = PSDMatrix::from_dense(compress(t, cyc));
    const Vector w = cyc.matrix().adjoint() * blk.u_E;
    ClassificationResult inner = classify_active_dim2(plane, w, rank_tol, coupling_tol);
    out.kind = inner.kind;
    out.rule = m == 2 ? rule::kWeightedPlane : rule::kPlanarRemainder;
    for (const auto& [k, v] : inner.certificate) out.certificate.emplace(k, v);
    out.predicted_limit = PSDMatrix::from_dense(
        HermitianMatrix(Matrix(stationary + cyc.matrix() * inner.predicted_limit->dense() * cyc.matrix().adjoint())));
    return out;
  }
  out.kind = LimitKind::Unknown;
  out.rule = rule::kOpen;
  return out;
}

}  // namespace detail

/// Predicts lim R_n. The frozen reducing part inside u-perp is split off; on
/// the cyclic remainder the planar dichotomies apply directly, otherwise the
/// iteration is run to support stabilization and the active block is
/// classified. Coupled active dimension >= 3 yields Unknown together with
/// the numerical limit.
inline ClassificationResult predict_limit(const PSDMatrix& r, const UnitVector& u, const PredictOptions& opt) {
  require(r.dim() == u.dim(), ErrorCode::DimensionMismatch, "predict_limit: dimensions differ");
  const Index n = r.dim();
  const Matrix p = u.vector() * u.vector().adjoint();
  const double comm = op_norm(p * r.dense() - r.dense() * p);
  if (comm <= 1e-10 * r.norm() || r.norm() == 0.0) {
    const Matrix q = Matrix::Identity(n, n) - p;
    ClassificationResult out;
    out.kind = LimitKind::CommutingCompression;
    out.rule = rule::kCommuting;
    out.certificate["commutator"] = comm;
    out.predicted_limit = PSDMatrix::from_dense(HermitianMatrix(q * r.dense() * q));
    return out;
  }

  const ReducingSplit split = maximal_reducing_in_uperp(r.hermitian(), u, opt.rank_tol);
  const Index ka = split.Mperp.size();
  const Matrix frozen_part = split.M.empty() ? Matrix::Zero(n, n)
                                             : Matrix(split.M.matrix() * split.frozen.matrix() * split.M.matrix().adjoint());
  const UnitVector ua(split.u_active);

  ClassificationResult out;
  std::optional<Matrix> active_limit;  // in Mperp coordinates
  if (ka <= 2) {
    out = ka == 2 ? classify_dim2_fullspace(split.active_seed, ua)
                  : ClassificationResult{LimitKind::CommutingCompression, PSDMatrix::zero(1), rule::kCommuting, {}, {}};
    active_limit = out.predicted_limit->dense();
    out.certificate["active_dim"] = static_cast<double>(ka);
  } else {
    WRConfig cfg;
    cfg.R0 = split.active_seed;
    cfg.u = ua;
    cfg.rank_tol = opt.rank_tol;
    cfg.conv_tol = opt.conv_tol;
    cfg.coupling_tol = opt.coupling_tol;
    cfg.stab_window = opt.stab_window;
    cfg.max_iter = opt.max_iter;
    cfg.stop_when_stable = true;
    cfg.annotate = false;
    const WRTrace tr = iterate(cfg);
    if (tr.stabilized_at) out.certificate["stabilized_at"] = static_cast<double>(*tr.stabilized_at);
    if (tr.stabilized_at && !tr.active) {
      out.kind = LimitKind::Dim2Collapse;
      out.rule = rule::kExhausted;
      active_limit = Matrix::Zero(ka, ka);
    } else if (tr.active) {
      const ActiveBlock& blk = *tr.active;
      out = detail::classify_active_block(blk, opt.rank_tol, opt.coupling_tol);
      out.certificate["stabilized_at"] = static_cast<double>(blk.N);
      if (out.predicted_limit) active_limit = blk.E.matrix() * out.predicted_limit->dense() * blk.E.matrix().adjoint();
    } else {
      out.kind = LimitKind::Unknown;
      out.rule = rule::kOpen;
    }
  }
  out.certificate["frozen_dim"] = static_cast<double>(split.M.size());
  out.certificate["commutator"] = comm;

  if (active_limit) {
    const Matrix& k = split.Mperp.matrix();
    out.predicted_limit = PSDMatrix::from_dense(HermitianMatrix(Matrix(frozen_part + k * *active_limit * k.adjoint())));
    out.numerical_limit.reset();
  } else {
    out.predicted_limit.reset();
    if (opt.full_trace) {
      out.numerical_limit = opt.full_trace->limit_estimate;
    } else {
      WRConfig cfg;
      cfg.R0 = r;
      cfg.u = u;
      cfg.rank_tol = opt.rank_tol;
      cfg.conv_tol = opt.conv_tol;
      cfg.coupling_tol = opt.coupling_tol;
      cfg.stab_window = opt.stab_window;
      cfg.max_iter = opt.max_iter;
      cfg.annotate = false;
      out.numerical_limit = iterate(cfg).limit_estimate;
    }
  }
  return out;
}

inline ClassificationResult predict_limit(const PSDMatrix& r, const UnitVector& u, double rank_tol = kDefaultRankTol) {
  PredictOptions opt;
  opt.rank_tol = rank_tol;
  return predict_limit(r, u, opt);
}

struct StationarityReport {
  bool stationary = false;
  double step_residual = 0.0;  // |Phi(S) - S|
  double sqrt_residual = 0.0;  // |S^{1/2} e|
  double apply_residual = 0.0; // |S e|
  double range_residual = 0.0; // |(I - Q) S|, Q the projection onto e-perp
};

/// Evaluates the four equivalent stationarity conditions. |S^{1/2} e| is
/// compared in squared form since it is the square root of a quantity of
/// the same order as the other three.
inline StationarityReport is_stationary(const PSDMatrix& s, const Vector& u_e, double tol) {
  require(s.dim() == u_e.size(), ErrorCode::DimensionMismatch, "is_stationary: dimensions differ");
  require(u_e.norm() <= 1.0 + 1e-12, ErrorCode::WeightTooLarge, "is_stationary: |u_E| exceeds 1");
  StationarityReport rep;
  const double w = u_e.norm();
  if (w == 0.0) {
    rep.stationary = true;
    return rep;
  }
  const Vector e = u_e / w;
  rep.step_residual = hermitian_norm(weighted_step(s, u_e).dense() - s.dense());
  rep.sqrt_residual = std::sqrt(s.quadratic_form(e));
  rep.apply_residual = s.apply(e).norm();
  rep.range_residual = op_norm(e * (e.adjoint() * s.dense()));
  const double bound = tol * std::max(1.0, s.norm());
  rep.stationary = rep.step_residual <= bound && rep.sqrt_residual * rep.sqrt_residual <= bound &&
                   rep.apply_residual <= bound && rep.range_residual <= bound;
  return rep;
}

}  // namespace wrdyn
