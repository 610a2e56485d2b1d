// Acceptance checks. One PASS/FAIL line per criterion; exits nonzero if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "wrdyn/wrdyn.hpp"

using namespace wrdyn;

namespace {

constexpr double kTaus[3] = {0.1, 0.5, 0.9};

// Pinned tolerances.
constexpr double kDetTol = 1e-8;
constexpr double kC1Seconds = 10.0;
constexpr double kExampleNormTol = 1e-8;
constexpr int kExampleSteps = 200;
constexpr double kContractionSlack = 1e-12;
constexpr double kExampleFinalY = 0.1;
constexpr double kCrossRel = 1e-10;
constexpr int kCrossStepCount = 50;
constexpr double kCoupledNormTol = 1e-7;
constexpr long kCoupledStepCap = 2'000'000;
constexpr double kDecoupledLimitTol = 1e-9;
constexpr double kC4Seconds = 30.0;
constexpr double kIdentityTol = 1e-8;
constexpr double kFinalBTol = 1e-6;
constexpr double kLimitETol = 1e-7;
constexpr double kInverseTol = 1e-8;
constexpr double kInverseFloorRel = 1e-10;
constexpr double kPredictRel = 1e-6;
constexpr double kStationaryFactor = 10.0;
constexpr double kFixedPointTol = 1e-10;
constexpr double kSweepResidual = 1e-7;
constexpr double kC9Seconds = 120.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& body) {
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& ex) {
    v = {false, std::string("exception: ") + ex.what()};
  }
  if (!v.pass) ++failures;
  std::printf("%s  C%d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

WRConfig example_config() {
  Matrix r0 = Matrix::Zero(3, 3);
  r0(1, 1) = 1.0;
  r0(1, 2) = 1.0;
  r0(2, 1) = 1.0;
  r0(2, 2) = 2.0;
  Vector u = Vector::Zero(3);
  u(0) = 1.0;
  u(1) = 1.0;
  WRConfig cfg;
  cfg.R0 = PSDMatrix(r0);
  cfg.u = UnitVector::normalize(u);
  cfg.max_iter = kExampleSteps;
  return cfg;
}

WRConfig config_of(const Instance& inst, int max_iter) {
  WRConfig cfg;
  cfg.R0 = inst.R0;
  cfg.u = inst.u;
  cfg.max_iter = max_iter;
  return cfg;
}

// Instances and converged limits shared by criteria 5 and 8.
struct StationaryCase {
  PSDMatrix limit;
  Vector u_e;
  double conv_tol = 0.0;
};
std::vector<StationaryCase> converged_limits;

Verdict c1() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t short_runs = 0;
  for (int i = 0; i < 50; ++i) {
    Rng rng = make_rng(static_cast<std::uint64_t>(i), 1);
    const Index dim = 2 + i % 5;
    const Instance inst = make_instance(Ensemble::Wishart, dim, kTaus[i % 3], rng);
    const WRTrace tr = iterate(config_of(inst, 100));
    std::size_t count = 0;
    for (const auto& rec : tr.records) {
      auto it = rec.residuals.find(residual::kDetDecay);
      if (it == rec.residuals.end()) continue;
      worst = std::max(worst, it->second);
      ++count;
    }
    if (count < 100) ++short_runs;
  }
  const double secs = seconds_since(t0);
  const bool ok = worst <= kDetTol && short_runs == 0 && secs < kC1Seconds;
  return {ok, fmt("max det-ratio error %.3g (tol %.0e), runs short of 100 steps %zu, %.2fs", worst, kDetTol,
                  short_runs, secs)};
}

Verdict c2() {
  const auto t0 = Clock::now();
  const WRTrace tr = iterate(example_config());
  std::optional<Index> reached;
  for (const auto& rec : tr.records)
    if (rec.lambda_max <= kExampleNormTol && !reached) reached = rec.n;
  const double ratio_bound = 5.0 * std::sqrt(2.0) / 9.0 + kContractionSlack;
  double worst_ratio = 0.0;
  double final_y = 0.0;
  const std::size_t start = static_cast<std::size_t>(tr.stabilized_at.value_or(0));
  for (std::size_t k = start; k < tr.records.size(); ++k) {
    const auto& rec = tr.records[k];
    const double d = rec.block_coords->B(0, 0).real();
    final_y = rec.block_coords->b.norm() / d;
    if (k + 1 >= tr.records.size()) break;
    const auto& nx = tr.records[k + 1];
    const double y = rec.block_coords->b.norm() / d;
    const double z = std::sqrt(*rec.block_det) / d;
    const double z1 = std::sqrt(*nx.block_det) / nx.block_coords->B(0, 0).real();
    if (y > 0.0 && y <= 0.5 && z > 0.0 && z <= 0.5) worst_ratio = std::max(worst_ratio, z1 / z);
  }
  const double final_norm = tr.records.back().lambda_max;
  const bool ok = reached.has_value() && worst_ratio <= ratio_bound && final_y >= kExampleFinalY;
  return {ok, fmt("|T_n| <= %.0e first at %s (|T_%d| = %.3g), max z ratio %.6f (bound %.6f), final y %.4f, %.2fs",
                  kExampleNormTol, reached ? std::to_string(*reached).c_str() : "never", kExampleSteps, final_norm,
                  worst_ratio, ratio_bound, final_y, seconds_since(t0))};
}

Verdict c3() {
  WRConfig cfg = example_config();
  const WRTrace tr = iterate(cfg);
  const PlanarStart ps = planar_start(tr.active->T_N, *tr.active->e);
  const CrossReport a = cross_validate(tr, example24_recursion(ps.ratio, ps.defect, ps.d, kCrossStepCount), kCrossRel);
  const CrossReport b =
      cross_validate(tr, thm41_recursion(ps.ratio, ps.defect, ps.d, tr.active->rho, kCrossStepCount), kCrossRel);
  const bool ok = a.pass && b.pass && a.steps_compared == kCrossStepCount + 1 && b.steps_compared == kCrossStepCount + 1;
  return {ok, fmt("half-weight recursion max rel %.3g over %ld steps, general recursion max rel %.3g over %ld steps",
                  a.max_rel, static_cast<long>(a.steps_compared), b.max_rel, static_cast<long>(b.steps_compared))};
}

Verdict c4() {
  const auto t0 = Clock::now();
  // Coupled planes: T0 Wishart, e random with |b0| >= 1e-3.
  std::size_t coupled_fail = 0;
  long worst_steps = 0;
  for (int i = 0; i < 100; ++i) {
    Rng rng = make_rng(static_cast<std::uint64_t>(i), 4);
    PSDMatrix t;
    UnitVector e;
    for (;;) {
      t = wishart(2, rng);
      e = random_unit(2, rng);
      if (transverse_coupling(t, e) >= 1e-3) break;
    }
    const double tau = kTaus[i % 3];
    const Vector u_e = std::sqrt(tau) * e.vector();
    if (classify_active_dim2(t, u_e).kind != LimitKind::ActiveDim2) ++coupled_fail;
    long n = 0;
    while (t.norm() > kCoupledNormTol && n < kCoupledStepCap) {
      t = weighted_step(t, u_e);
      ++n;
    }
    worst_steps = std::max(worst_steps, n);
    if (t.norm() > kCoupledNormTol) ++coupled_fail;
  }
  // Decoupled planes in the frame {e, f}: T0 = diag(a0, d0), e = e1.
  std::size_t decoupled_fail = 0;
  double worst_limit = 0.0;
  for (int i = 0; i < 100; ++i) {
    Rng rng = make_rng(static_cast<std::uint64_t>(i), 40);
    std::uniform_real_distribution<double> ud(0.1, 10.0);
    const double a0 = ud(rng);
    const double d0 = ud(rng);
    RealVector vals(2);
    vals << a0, d0;
    PSDMatrix t = PSDMatrix::from_spectral(vals, Matrix::Identity(2, 2));
    const Complex b0 = t.dense()(1, 1);
    Vector u_e = Vector::Zero(2);
    u_e(0) = std::sqrt(kTaus[i % 3]);
    const ClassificationResult c = classify_active_dim2(t, u_e);
    bool exact = c.kind == LimitKind::TransversePersistence;
    Matrix target = Matrix::Zero(2, 2);
    target(1, 1) = d0;
    for (int n = 0; n < 10000 && hermitian_norm(t.dense() - target) > kDecoupledLimitTol; ++n) {
      t = weighted_step(t, u_e);
      const Matrix d = t.dense();
      exact = exact && d(1, 1) == b0 && d(0, 1) == Complex(0.0) && d(1, 0) == Complex(0.0);
    }
    const double err = hermitian_norm(t.dense() - target);
    const double pred_err = hermitian_norm(c.predicted_limit->dense() - target);
    worst_limit = std::max({worst_limit, err, pred_err});
    if (!exact || err > kDecoupledLimitTol || pred_err > kDecoupledLimitTol) ++decoupled_fail;
  }
  const double secs = seconds_since(t0);
  const bool ok = coupled_fail == 0 && decoupled_fail == 0 && secs < kC4Seconds;
  return {ok, fmt("coupled failures %zu/100 (longest run %ld steps), decoupled failures %zu/100 (max limit error "
                  "%.3g), %.2fs",
                  coupled_fail, worst_steps, decoupled_fail, worst_limit, secs)};
}

Verdict c5() {
  double worst = 0.0;
  std::size_t converged = 0;
  std::size_t final_fail = 0;
  double worst_b = 0.0;
  double worst_le = 0.0;
  const char* names[] = {residual::kARecursion, residual::kBDecrement, residual::kSummability};
  for (int i = 0; i < 50; ++i) {
    Rng rng = make_rng(static_cast<std::uint64_t>(i), 5);
    const Ensemble ens = i % 2 == 0 ? Ensemble::CoupledBlock : Ensemble::Decoupled;
    const Index dim = 2 + (i / 2) % 5;
    const Instance inst = make_instance(ens, dim, kTaus[i % 3], rng);
    const WRConfig cfg = config_of(inst, 10000);
    const WRTrace tr = iterate(cfg);
    for (const auto& [k, v] : tr.max_residuals())
      for (const char* n : names)
        if (k == n) worst = std::max(worst, v);
    if (!tr.converged || !tr.active || !tr.active->e) continue;
    ++converged;
    const double scale = std::max(1.0, cfg.R0.norm());
    const double b = tr.records.back().block_coords->b.norm();
    const PSDMatrix s = restrict_to(tr.limit_estimate, tr.active->E);
    const double le = s.apply(tr.active->e->vector()).norm();
    worst_b = std::max(worst_b, b / scale);
    worst_le = std::max(worst_le, le / scale);
    if (b > kFinalBTol * scale || le > kLimitETol * scale) ++final_fail;
    converged_limits.push_back({s, tr.active->u_E, cfg.conv_tol});
  }
  const bool ok = worst <= kIdentityTol && final_fail == 0 && converged > 0;
  return {ok, fmt("max identity residual %.3g (tol %.0e); %zu/50 converged, final |b| %.3g, |S e| %.3g, failures %zu",
                  worst, kIdentityTol, converged, worst_b, worst_le, final_fail)};
}

Verdict c6() {
  double worst_update = 0.0;
  double worst_bound = 0.0;
  std::size_t checked = 0;
  bool bounds_ok = true;
  for (int i = 0; i < 50; ++i) {
    Rng rng = make_rng(static_cast<std::uint64_t>(i), 6);
    const Index dim = 2 + i % 5;
    const double tau = kTaus[i % 3];
    const Instance inst = make_instance(Ensemble::Wishart, dim, tau, rng);
    const UnitVector e = UnitVector::normalize(inst.e);
    const Vector u_e = std::sqrt(tau) * e.vector();
    PSDMatrix t(inst.T0);
    const double norm_t0 = t.norm();
    std::vector<InverseStats> stats{inverse_stats(t, e)};
    for (int n = 0; n < 300; ++n) {
      PSDMatrix next = weighted_step(t, u_e);
      if (!next.strictly_positive() || next.lambda_min() < kInverseFloorRel * norm_t0) break;
      worst_update = std::max(worst_update, check_inverse_update(t, next, e, tau, 1.0 - tau).residual);
      stats.push_back(inverse_stats(next, e));
      ++checked;
      t = std::move(next);
    }
    const GrowthReport g = check_growth_bounds(stats, tau, 1.0 - tau, norm_t0, dim);
    bounds_ok = bounds_ok && g.beta_ok && g.s_ok && g.lambda_ok;
    worst_bound = std::max({worst_bound, g.beta_violation, g.s_violation, g.lambda_violation});
  }
  const bool ok = worst_update <= kInverseTol && bounds_ok;
  return {ok, fmt("max rank-one update residual %.3g (tol %.0e) over %zu steps; growth bounds %s (max scaled "
                  "violation %.3g)",
                  worst_update, kInverseTol, checked, bounds_ok ? "hold" : "violated", worst_bound)};
}

Verdict c7() {
  double worst = 0.0;
  std::size_t fails = 0;
  std::size_t not_converged = 0;
  for (int i = 0; i < 50; ++i) {
    Rng rng = make_rng(static_cast<std::uint64_t>(i), 7);
    const Index n = 4 + i % 3;
    const Matrix q = random_unitary(n, rng);
    Matrix d = Matrix::Zero(n, n);
    d.topLeftCorner(n - 2, n - 2) = wishart(n - 2, rng).dense();
    d.bottomRightCorner(2, 2) = wishart(2, rng).dense();
    Vector u0 = Vector::Zero(n);
    u0.tail(2) = random_unit(2, rng).vector();
    WRConfig cfg;
    cfg.R0 = PSDMatrix(Matrix(q * d * q.adjoint()));
    cfg.u = UnitVector::normalize(q * u0);
    cfg.max_iter = 100000;
    cfg.annotate = false;
    const WRTrace tr = iterate(cfg);
    if (!tr.converged) ++not_converged;
    const ClassificationResult c = predict_limit(cfg.R0, cfg.u);
    const double scale = std::max(1.0, cfg.R0.norm());
    const double err = c.predicted_limit ? hermitian_norm(c.predicted_limit->dense() - tr.limit_estimate.dense())
                                         : std::numeric_limits<double>::infinity();
    worst = std::max(worst, err / scale);
    if (err > kPredictRel * scale) ++fails;
  }
  return {fails == 0, fmt("max scaled prediction error %.3g (tol %.0e), mismatches %zu/50, unconverged runs %zu",
                          worst, kPredictRel, fails, not_converged)};
}

Verdict c8() {
  std::size_t fails = 0;
  double worst[4] = {0.0, 0.0, 0.0, 0.0};
  for (const auto& c : converged_limits) {
    const StationarityReport r = is_stationary(c.limit, c.u_e, kStationaryFactor * c.conv_tol);
    const double scale = std::max(1.0, c.limit.norm());
    const double bound = kStationaryFactor * c.conv_tol * scale;
    const double vals[4] = {r.step_residual, r.sqrt_residual, r.apply_residual, r.range_residual};
    bool ok = true;
    for (int k = 0; k < 4; ++k) {
      worst[k] = std::max(worst[k], vals[k] / scale);
      ok = ok && vals[k] <= bound;
    }
    if (!ok) ++fails;
  }
  // Fixed points: PSD matrices with range inside e-perp.
  double worst_fixed = 0.0;
  for (int i = 0; i < 50; ++i) {
    Rng rng = make_rng(static_cast<std::uint64_t>(i), 8);
    const Index dim = 2 + i % 5;
    const UnitVector e = random_unit(dim, rng);
    const Matrix f = transverse_frame(e).matrix();
    const Matrix b = wishart(dim - 1, rng).dense();
    const PSDMatrix s(Matrix(f * b * f.adjoint()));
    const Vector u_e = std::sqrt(kTaus[i % 3]) * e.vector();
    worst_fixed = std::max(worst_fixed, hermitian_norm(weighted_step(s, u_e).dense() - s.dense()) /
                                            std::max(1.0, s.norm()));
  }
  const bool ok = fails == 0 && !converged_limits.empty() && worst_fixed <= kFixedPointTol;
  return {ok, fmt("%zu/%zu converged limits fail at 10*conv_tol (max scaled |Phi(S)-S| %.3g, |S^1/2 e| %.3g, "
                  "|S e| %.3g, |(I-Q)S| %.3g); fixed-point error %.3g (tol %.0e)",
                  fails, converged_limits.size(), worst[0], worst[1], worst[2], worst[3], worst_fixed,
                  kFixedPointTol)};
}

Verdict c9() {
  io::SweepSpec s;
  s.dims = {3, 4};
  s.seed_begin = 0;
  s.seed_end = 200;
  s.ensemble = Ensemble::Wishart;
  const auto t0 = Clock::now();
  const cli::SweepOutcome o = cli::run_sweep(s, cli::default_workers());
  const double secs = seconds_since(t0);
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "wrdyn_acceptance_sweep";
  cli::write_sweep_outputs(dir, s, o);
  const bool emitted = std::filesystem::exists(dir / "histogram.csv");
  const auto hist = cli::limit_rank_histogram(o.rows);
  std::size_t total = 0;
  for (const auto& [k, v] : hist) total += v;
  const bool ok = o.rows.size() == s.runs() && o.breakdowns == 0 && o.max_residual <= kSweepResidual &&
                  total == o.rows.size() && emitted && secs < kC9Seconds;
  return {ok, fmt("%zu/%zu runs, %zu breakdowns, max residual %.3g (tol %.0e), histogram covers %zu runs in %zu "
                  "bins, %.1fs",
                  o.rows.size(), s.runs(), o.breakdowns, o.max_residual, kSweepResidual, total, hist.size(), secs)};
}

}  // namespace

int main() {
  report(1, "determinant decay", c1);
  report(2, "half-weight example", c2);
  report(3, "scalar recursions match engine", c3);
  report(4, "planar dichotomy", c4);
  report(5, "block decoupling identities", c5);
  report(6, "inverse dynamics", c6);
  report(7, "planted predictions", c7);
  report(8, "stationarity", c8);
  report(9, "sweep", c9);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
