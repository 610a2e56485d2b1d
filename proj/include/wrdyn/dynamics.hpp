#pragma once

// The iteration R_{n+1} = R_n^{1/2} (I - |u><u|) R_n^{1/2}, its trace, support
// stabilization, and the induced weighted recursion on the active block.

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wrdyn/identities.hpp"
#include "wrdyn/matcore.hpp"

namespace wrdyn {

struct WRConfig {
  PSDMatrix R0;
  UnitVector u;
  double rank_tol = kDefaultRankTol;
  double conv_tol = 1e-11;
  int stab_window = 3;
  int max_iter = 10000;
  /// Decides whether e-perp reduces the active block when annotating.
  double coupling_tol = 1e-10;
  /// Stop as soon as the support has stabilized (used by predict_limit).
  bool stop_when_stable = false;
  /// Compute block coordinates and identity residuals after stabilization.
  bool annotate = true;

  void validate() const {
    require(R0.dim() > 0, ErrorCode::InvalidConfig, "empty initial matrix");
    require(R0.dim() == u.dim(), ErrorCode::DimensionMismatch, "R0 and u have different dimensions");
    require(rank_tol > 0.0 && conv_tol > 0.0 && coupling_tol > 0.0, ErrorCode::InvalidConfig,
            "tolerances must be positive");
    require(stab_window >= 1 && max_iter >= 1, ErrorCode::InvalidConfig, "stab_window and max_iter must be >= 1");
  }
};

/// Traces keep full spectra only up to this dimension.
inline constexpr Index kMaxRecordedSpectrum = 32;

struct StepRecord {
  Index n = 0;
  std::vector<double> eigenvalues;  // ascending; empty when dim > kMaxRecordedSpectrum
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double det = 0.0;  // product of the nonzero eigenvalues
  Index rank = 0;    // exact support rank of the iterate
  Index numerical_rank = 0;
  double trace = 0.0;
  double gap = 0.0;  // <u, R_n u>
  std::optional<BlockCoordinates> block_coords;
  std::optional<double> block_det;  // det T_n on the active block
  std::map<std::string, double> residuals;
};

struct ActiveBlock {
  OrthonormalBasis E;
  Index N = 0;
  PSDMatrix T_N;  // in E coordinates
  Vector u_E;     // E^* u
  double tau = 0.0;
  double rho = 1.0;
  std::optional<UnitVector> e;  // u_E / |u_E| when u_E != 0
  /// 1 - tau <= rank_tol: u numerically lies in E and the next step drops rank.
  bool imminent_drop = false;
};

struct WRTrace {
  std::vector<StepRecord> records;
  PSDMatrix limit_estimate;
  bool converged = false;
  std::optional<Index> converged_at;
  bool max_iter_exceeded = false;
  std::optional<Index> stabilized_at;
  std::optional<ActiveBlock> active;
  /// First step from which inverse-side checks were skipped.
  std::optional<Index> inverse_skip_from;

  std::map<std::string, double> max_residuals() const {
    std::map<std::string, double> out;
    for (const auto& r : records)
      for (const auto& [k, v] : r.residuals) {
        auto it = out.find(k);
        if (it == out.end() || v > it->second) out[k] = v;
      }
    return out;
  }
};

namespace detail {

/// One application of S -> S^{1/2}(I - |w><w|)S^{1/2}, carried out in the
/// spectral representation of S. With S = V diag(l) V^* restricted to the
/// support eigenpairs that overlap w, the result there is V X^*X V^* where
/// X = C diag(sqrt l) and C is the Hermitian square root of
/// I - |V^*w><V^*w|; the Gram eigenproblem of X is solved by one-sided
/// Jacobi, which keeps small eigenvalues accurate. Eigenpairs orthogonal to
/// w are invariant and are carried over bit for bit.
inline PSDMatrix spectral_step(const PSDMatrix& s, const Vector& w, double rank_tol) {
  const Index n = s.dim();
  const Index k = s.support_rank();
  if (k == 0) return s;
  const Vector c_all = s.eigenvectors().adjoint() * w;
  std::vector<Index> moving;
  for (Index j = n - k; j < n; ++j)
    if (c_all(j) != Complex(0.0, 0.0)) moving.push_back(j);
  const Index m = static_cast<Index>(moving.size());
  if (m == 0) return s;
  Matrix vs(n, m);
  RealVector ls(m);
  Vector c(m);
  for (Index i = 0; i < m; ++i) {
    const Index j = moving[static_cast<std::size_t>(i)];
    vs.col(i) = s.eigenvectors().col(j);
    ls(i) = s.eigenvalues()(j);
    c(i) = c_all(j);
  }
  const double t = c.squaredNorm();
  if (t == 0.0) return s;
  const double rho = 1.0 - t;
  const Vector chat = c / std::sqrt(t);
  const bool projection = rho <= rank_tol;
  const double shrink = projection ? 1.0 : 1.0 - std::sqrt(rho);
  Matrix x = Matrix::Identity(m, m) - shrink * (chat * chat.adjoint());
  for (Index j = 0; j < m; ++j) x.col(j) *= std::sqrt(ls(j));
  GramEigen g = gram_eigen(std::move(x));
  if (projection) g.values(0) = 0.0;

  RealVector vals = s.eigenvalues();
  Matrix vecs = s.eigenvectors();
  const Matrix moved = vs * g.vectors;
  for (Index i = 0; i < m; ++i) {
    const Index j = moving[static_cast<std::size_t>(i)];
    vals(j) = g.values(i);
    vecs.col(j) = moved.col(i);
  }
  return PSDMatrix::from_spectral(vals, vecs);
}

inline double unitarity_defect(const Matrix& v) {
  if (v.size() == 0) return 0.0;
  return (v.adjoint() * v - Matrix::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
}

inline void check_breakdown(const PSDMatrix& r, Index n) {
  bool ok = true;
  for (Index i = 0; i < r.dim(); ++i) ok = ok && std::isfinite(r.eigenvalues()(i)) && r.eigenvalues()(i) >= 0.0;
  ok = ok && all_finite(r.eigenvectors()) && unitarity_defect(r.eigenvectors()) <= 1e-8;
  require(ok, ErrorCode::NumericalBreakdown, "iterate lost positivity or orthogonality at step " + std::to_string(n));
}

inline OrthonormalBasis support_basis(const PSDMatrix& r) {
  const Index k = r.support_rank();
  if (k == 0) return OrthonormalBasis(r.dim());
  return OrthonormalBasis(Matrix(r.eigenvectors().rightCols(k)));
}

}  // namespace detail

/// Phi_P(R) for P = |u><u|.
inline PSDMatrix wr_step(const PSDMatrix& r, const UnitVector& u, double rank_tol = kDefaultRankTol) {
  require(r.dim() == u.dim(), ErrorCode::DimensionMismatch, "wr_step: dimensions differ");
  return detail::spectral_step(r, u.vector(), rank_tol);
}

/// T^{1/2}(I - |u_E><u_E|)T^{1/2} with |u_E| <= 1.
inline PSDMatrix weighted_step(const PSDMatrix& t, const Vector& u_e, double rank_tol = kDefaultRankTol) {
  require(t.dim() == u_e.size(), ErrorCode::DimensionMismatch, "weighted_step: dimensions differ");
  require(u_e.norm() <= 1.0 + 1e-12, ErrorCode::WeightTooLarge, "weighted_step: |u_E| exceeds 1");
  return detail::spectral_step(t, u_e, rank_tol);
}

/// <u, R u> = tr R - tr Phi_P(R).
inline double step_gap(const PSDMatrix& r, const UnitVector& u) {
  require(r.dim() == u.dim(), ErrorCode::DimensionMismatch, "step_gap: dimensions differ");
  return r.quadratic_form(u.vector());
}

/// Iterate restricted to the active subspace E, in E coordinates. Stays in
/// spectral form whenever the support of r lies inside E.
inline PSDMatrix restrict_to(const PSDMatrix& r, const OrthonormalBasis& E) {
  require(E.ambient_dim() == r.dim(), ErrorCode::DimensionMismatch, "restrict_to: basis lives elsewhere");
  const Index k = E.size();
  const Index s = r.support_rank();
  if (s == 0) return PSDMatrix::zero(k);
  if (s <= k) {
    const Matrix u = E.matrix().adjoint() * r.eigenvectors().rightCols(s);
    if (detail::unitarity_defect(u) <= 1e-9) {
      Matrix vecs(k, k);
      vecs.leftCols(k - s) = OrthonormalBasis(u).complement().matrix();
      vecs.rightCols(s) = u;
      RealVector vals = RealVector::Zero(k);
      vals.tail(s) = r.eigenvalues().tail(s);
      return PSDMatrix::from_spectral(vals, vecs);
    }
  }
  return PSDMatrix::from_dense(compress(r.hermitian(), E));
}

struct SupportSnapshot {
  Index n = 0;
  Index rank = 0;
  OrthonormalBasis range;
};

inline SupportSnapshot support_snapshot(Index n, const PSDMatrix& r) {
  return {n, r.support_rank(), detail::support_basis(r)};
}

/// Smallest N such that from N to the end of the history the rank is
/// constant and every range is within principal angle sqrt(rank_tol) of
/// ran(R_N), provided at least stab_window steps follow N.
inline std::optional<Index> detect_stabilization(std::span<const SupportSnapshot> history, double rank_tol,
                                                 int stab_window) {
  if (history.empty()) return std::nullopt;
  const double angle_tol = std::sqrt(rank_tol);
  const Index last = history.back().n;
  for (std::size_t i = 0; i < history.size(); ++i) {
    bool ok = true;
    for (std::size_t j = i + 1; j < history.size() && ok; ++j)
      ok = history[j].rank == history[i].rank && principal_angle_sin(history[j].range, history[i].range) <= angle_tol;
    if (!ok) continue;
    if (last - history[i].n >= stab_window) return history[i].n;
    return std::nullopt;
  }
  return std::nullopt;
}

/// Convenience overload over a sequence of iterates R_0, R_1, ...
inline std::optional<Index> detect_stabilization(std::span<const PSDMatrix> iterates, double rank_tol,
                                                 int stab_window) {
  std::vector<SupportSnapshot> h;
  h.reserve(iterates.size());
  for (std::size_t i = 0; i < iterates.size(); ++i) h.push_back(support_snapshot(static_cast<Index>(i), iterates[i]));
  return detect_stabilization(std::span<const SupportSnapshot>(h), rank_tol, stab_window);
}

/// Active block of a stabilized iterate. E is the numerical range of R_N and
/// T_N is diagonal in the eigenbasis chosen for E.
inline ActiveBlock extract_active_block(const PSDMatrix& r_n, const UnitVector& u, double rank_tol = kDefaultRankTol,
                                        Index n = 0) {
  require(r_n.dim() == u.dim(), ErrorCode::DimensionMismatch, "extract_active_block: dimensions differ");
  const Index k = numerical_rank(r_n, rank_tol);
  require(k > 0, ErrorCode::EmptySupport, "iterate has rank 0; the active block is trivial");
  ActiveBlock blk;
  blk.N = n;
  blk.E = range_basis(r_n, rank_tol);
  blk.T_N = PSDMatrix::from_spectral(r_n.eigenvalues().tail(k), Matrix::Identity(k, k));
  blk.u_E = blk.E.matrix().adjoint() * u.vector();
  if (blk.u_E.norm() <= kNoiseFloor) blk.u_E.setZero();
  blk.tau = blk.u_E.squaredNorm();
  blk.rho = 1.0 - blk.tau;
  if (blk.tau > 0.0) blk.e = UnitVector::normalize(blk.u_E);
  blk.imminent_drop = blk.rho <= rank_tol;
  return blk;
}

namespace detail {

/// Online evaluation of the block identities along T_N, T_{N+1}, ...
class Annotator {
 public:
  Annotator(const ActiveBlock& blk, double coupling_tol) : blk_(blk) {
    active_ = blk.e.has_value() && !blk.imminent_drop;
    if (!active_) return;
    e_ = *blk.e;
    frame_ = transverse_frame(e_);
    norm_t0_ = blk.T_N.norm();
    decoupled_ = transverse_coupling(blk.T_N, e_) <= coupling_tol * norm_t0_;
  }

  bool active() const { return active_; }
  std::optional<Index> inverse_skip_from;

  void begin(const PSDMatrix& r_n, StepRecord& rec) {
    if (!active_) return;
    t_ = restrict_to(r_n, blk_.E);
    bc_ = block_coordinates(t_, e_, frame_);
    tr_b0_ = bc_.B.size() ? bc_.B.trace().real() : 0.0;
    lambda0_ = bc_.a;
    b0_ = bc_.B;
    inverse_on_ = t_.strictly_positive() && t_.lambda_min() >= kInverseFloor * norm_t0_;
    if (inverse_on_) st0_ = inverse_stats(t_, e_);
    rec.block_coords = bc_;
    rec.block_det = t_.det();
    rec.residuals[residual::kOffdiagCS] = offdiag(bc_);
  }

  void advance(const PSDMatrix& r_next, StepRecord& rec) {
    if (!active_) return;
    const PSDMatrix t_next = restrict_to(r_next, blk_.E);
    const BlockCoordinates bc_next = block_coordinates(t_next, e_, frame_);
    const double tau = blk_.tau;
    auto& res = rec.residuals;
    if (t_.strictly_positive() && t_next.strictly_positive())
      res[residual::kDetDecay] = check_det_decay(t_, t_next, tau);
    res[residual::kARecursion] = check_a_recursion(bc_, bc_next, tau);
    res[residual::kBDecrement] =
        std::max(check_B_decrement(bc_, bc_next, tau), check_B_trace_decrement(bc_, bc_next, tau));
    ysum_ += bc_.y_norm2();
    if (bc_.B.size()) {
      const double drop = tr_b0_ - bc_next.B.trace().real();
      res[residual::kSummability] = std::abs(tau * ysum_ - drop) / std::max(1.0, tr_b0_);
    }
    res[residual::kOffdiagCS] = offdiag(bc_next);
    ++k_;
    if (decoupled_) {
      const Matrix& f = frame_.matrix();
      const Matrix model = std::pow(blk_.rho, static_cast<double>(k_)) * lambda0_ * (e_.vector() * e_.vector().adjoint()) +
                           f * b0_ * f.adjoint();
      res[residual::kTransversePersistence] = op_norm(t_next.dense() - model) / std::max(1.0, norm_t0_);
    }
    if (inverse_on_) {
      const bool usable = t_next.strictly_positive() && t_next.lambda_min() >= kInverseFloor * norm_t0_;
      if (!usable) {
        inverse_on_ = false;
        inverse_skip_from = rec.n;
      } else {
        res[residual::kInvUpdate] = check_inverse_update(t_, t_next, e_, tau, blk_.rho).residual;
        const InverseStats st = inverse_stats(t_next, e_);
        const double n = static_cast<double>(k_);
        const double beta_bound = st0_.beta + n * tau / (blk_.rho * norm_t0_);
        const double s_bound = st0_.s + (tau / blk_.rho) * n * st0_.beta +
                               tau * tau / (2.0 * blk_.rho * blk_.rho * norm_t0_) * n * (n - 1.0);
        const double lam_bound = static_cast<double>(t_next.dim()) / st.s;
        res[residual::kBetaBound] = std::max(0.0, beta_bound - st.beta) / std::max(1.0, beta_bound);
        res[residual::kSBound] = std::max(0.0, s_bound - st.s) / std::max(1.0, s_bound);
        res[residual::kLambdaMinBound] = std::max(0.0, st.lambda_min - lam_bound) / std::max(1.0, lam_bound);
      }
    }
    rec.block_coords = bc_next;
    rec.block_det = t_next.det();
    t_ = t_next;
    bc_ = bc_next;
  }

 private:
  static constexpr double kInverseFloor = 1e3 * kEps;

  double offdiag(const BlockCoordinates& bc) const {
    return std::max(0.0, bc.b.squaredNorm() - norm_t0_ * bc.a) / std::max(1.0, norm_t0_ * norm_t0_);
  }

  ActiveBlock blk_;
  bool active_ = false;
  UnitVector e_;
  OrthonormalBasis frame_;
  double norm_t0_ = 0.0;
  bool decoupled_ = false;
  PSDMatrix t_;
  BlockCoordinates bc_;
  double tr_b0_ = 0.0;
  double lambda0_ = 0.0;
  Matrix b0_;
  double ysum_ = 0.0;
  Index k_ = 0;
  bool inverse_on_ = false;
  InverseStats st0_;
};

inline StepRecord make_record(Index n, const PSDMatrix& r, const UnitVector& u, double rank_tol) {
  StepRecord rec;
  rec.n = n;
  const RealVector& ev = r.eigenvalues();
  if (r.dim() <= kMaxRecordedSpectrum) rec.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  rec.lambda_min = r.lambda_min();
  rec.lambda_max = r.norm();
  rec.det = r.pseudo_det();
  rec.rank = r.support_rank();
  rec.numerical_rank = numerical_rank(r, rank_tol);
  rec.trace = r.trace();
  rec.gap = r.quadratic_form(u.vector());
  return rec;
}

}  // namespace detail

/// Runs the iteration. Convergence at step n requires gap_n <= conv_tol,
/// |R_{n+1} - R_n| <= conv_tol * max(1, |R_0|), and a geometric tail
/// estimate of the remaining movement below the same bound; records then
/// cover R_0 .. R_{n+1}.
inline WRTrace iterate(const WRConfig& cfg) {
  cfg.validate();
  WRTrace tr;
  const double scale = std::max(1.0, cfg.R0.norm());
  PSDMatrix r = cfg.R0;
  detail::check_breakdown(r, 0);
  tr.records.push_back(detail::make_record(0, r, cfg.u, cfg.rank_tol));

  // Iterates since the last rank change, for stabilization and backfill.
  std::vector<SupportSnapshot> history{support_snapshot(0, r)};
  std::vector<PSDMatrix> window_iterates{r};
  std::optional<detail::Annotator> annot;

  auto stabilize = [&](Index n_stab) {
    const std::size_t offset = static_cast<std::size_t>(n_stab - history.front().n);
    const PSDMatrix& r_n = window_iterates[offset];
    ActiveBlock blk;
    try {
      blk = extract_active_block(r_n, cfg.u, cfg.rank_tol, n_stab);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::EmptySupport) throw;
      tr.stabilized_at = n_stab;
      return true;
    }
    if (blk.imminent_drop) return false;
    tr.stabilized_at = n_stab;
    tr.active = blk;
    if (cfg.annotate) {
      annot.emplace(blk, cfg.coupling_tol);
      annot->begin(r_n, tr.records[static_cast<std::size_t>(n_stab)]);
      for (std::size_t i = offset + 1; i < window_iterates.size(); ++i)
        annot->advance(window_iterates[i], tr.records[static_cast<std::size_t>(history[i].n)]);
    }
    window_iterates.clear();
    return true;
  };

  for (Index n = 0; n < cfg.max_iter; ++n) {
    PSDMatrix next = wr_step(r, cfg.u, cfg.rank_tol);
    detail::check_breakdown(next, n + 1);
    tr.records.push_back(detail::make_record(n + 1, next, cfg.u, cfg.rank_tol));

    if (!tr.stabilized_at) {
      SupportSnapshot snap = support_snapshot(n + 1, next);
      if (snap.rank != history.back().rank) {
        history.clear();
        window_iterates.clear();
      }
      history.push_back(std::move(snap));
      window_iterates.push_back(next);
      // A range that has rotated away can never be the stabilization point.
      while (history.size() > 1 &&
             principal_angle_sin(history.front().range, history.back().range) > std::sqrt(cfg.rank_tol)) {
        history.erase(history.begin());
        window_iterates.erase(window_iterates.begin());
      }
      if (auto found = detect_stabilization(std::span<const SupportSnapshot>(history), cfg.rank_tol, cfg.stab_window))
        stabilize(*found);
    } else if (annot) {
      annot->advance(next, tr.records.back());
    }

    if (cfg.stop_when_stable && tr.stabilized_at) {
      r = std::move(next);
      break;
    }

    const double gap_n = tr.records[static_cast<std::size_t>(n)].gap;
    const double gap_next = tr.records.back().gap;
    const double diff = hermitian_norm(next.dense() - r.dense());
    const double q = gap_n > 0.0 ? gap_next / gap_n : 0.0;
    const double tail = q < 1.0 ? gap_next / (1.0 - q) : std::numeric_limits<double>::infinity();
    r = std::move(next);
    if (gap_n <= cfg.conv_tol && diff <= cfg.conv_tol * scale && tail <= cfg.conv_tol * scale) {
      tr.converged = true;
      tr.converged_at = n;
      break;
    }
  }
  tr.max_iter_exceeded = !tr.converged && !(cfg.stop_when_stable && tr.stabilized_at);
  tr.limit_estimate = r;

  // A run can settle before the window fills; at a fixed point the support
  // is final, so a single confirming step suffices.
  if (!tr.stabilized_at && tr.converged && !history.empty()) {
    if (auto found = detect_stabilization(std::span<const SupportSnapshot>(history), cfg.rank_tol, 1))
      stabilize(*found);
  }
  if (annot) tr.inverse_skip_from = annot->inverse_skip_from;
  return tr;
}

}  // namespace wrdyn
