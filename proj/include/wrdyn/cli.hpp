#pragma once

// Command implementations behind the wrdyn executable. Everything here is
// callable in-process; the executable only parses flags and wires logging.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "wrdyn/dynamics.hpp"
#include "wrdyn/ensemble.hpp"
#include "wrdyn/identities.hpp"
#include "wrdyn/io.hpp"
#include "wrdyn/oracle.hpp"
#include "wrdyn/structure.hpp"

namespace wrdyn::cli {

using json = nlohmann::json;

enum ExitCode : int {
  kExitOk = 0,
  kExitSpecError = 1,
  kExitMaxIter = 2,
  kExitBreakdown = 3,
  kExitCheckFailed = 4,
  kExitInterrupted = 130,
};

enum class LogLevel { Debug, Info, Warn, Error };
using LogFn = std::function<void(LogLevel, const std::string&)>;

inline void log_none(LogLevel, const std::string&) {}

/// Command-line values that take precedence over the spec file.
struct CliOverrides {
  std::optional<double> rank_tol;
  std::optional<double> conv_tol;
  std::optional<int> max_iter;

  template <class Spec>
  void apply(Spec& s) const {
    if (rank_tol) s.rank_tol = *rank_tol;
    if (conv_tol) s.conv_tol = *conv_tol;
    if (max_iter) s.max_iter = *max_iter;
  }
};

/// Pass/fail thresholds for the per-step residuals.
inline const std::map<std::string, double>& residual_tolerances() {
  static const std::map<std::string, double> tol{
      {residual::kDetDecay, 1e-8},   {residual::kARecursion, 1e-10},     {residual::kBDecrement, 1e-10},
      {residual::kSummability, 1e-8}, {residual::kOffdiagCS, 1e-10},      {residual::kInvUpdate, 1e-8},
      {residual::kBetaBound, 1e-9},  {residual::kSBound, 1e-9},          {residual::kLambdaMinBound, 1e-9},
      {residual::kTransversePersistence, 1e-9}};
  return tol;
}

inline constexpr double kFinalYTol = 1e-6;
inline constexpr double kLimitKernelTol = 1e-7;
inline constexpr double kPredictionTol = 1e-6;
inline constexpr double kCrossTol = 1e-8;
inline constexpr Index kCrossSteps = 50;
/// Relative threshold for counting the rank of a numerical limit.
inline constexpr double kLimitRankTol = 1e-6;

// ---------------------------------------------------------------------------
// Single instances

struct Analysis {
  WRConfig cfg;
  WRTrace trace;
  ClassificationResult classification;
  std::optional<double> prediction_error;
};

inline Analysis analyze(const WRConfig& cfg) {
  Analysis a;
  a.cfg = cfg;
  a.trace = iterate(cfg);
  PredictOptions opt;
  opt.rank_tol = cfg.rank_tol;
  opt.conv_tol = cfg.conv_tol;
  opt.coupling_tol = cfg.coupling_tol;
  opt.stab_window = cfg.stab_window;
  opt.max_iter = cfg.max_iter;
  opt.full_trace = &a.trace;
  a.classification = predict_limit(cfg.R0, cfg.u, opt);
  if (a.classification.predicted_limit)
    a.prediction_error = hermitian_norm(a.classification.predicted_limit->dense() - a.trace.limit_estimate.dense());
  return a;
}

inline json build_report(const Analysis& a) {
  const WRTrace& t = a.trace;
  json j;
  j["dim"] = a.cfg.R0.dim();
  j["steps"] = t.records.empty() ? 0 : t.records.back().n;
  j["converged"] = t.converged;
  j["max_iter_exceeded"] = t.max_iter_exceeded;
  j["N"] = t.stabilized_at ? json(*t.stabilized_at) : json(nullptr);
  if (t.active) {
    j["active"] = {{"dim_E", t.active->E.size()},
                   {"tau", t.active->tau},
                   {"rho", t.active->rho},
                   {"weighted", t.active->e.has_value()}};
  } else {
    j["active"] = nullptr;
  }
  j["classification"] = io::classification_to_json(a.classification);
  j["limit"] = {{"matrix", io::matrix_to_json(t.limit_estimate.dense())},
                {"eigenvalues", io::real_vector_to_json(t.limit_estimate.eigenvalues())},
                {"norm", t.limit_estimate.norm()},
                {"rank", numerical_rank(t.limit_estimate, kLimitRankTol)}};
  j["max_residuals"] = t.max_residuals();
  j["inverse_skip_from"] = t.inverse_skip_from ? json(*t.inverse_skip_from) : json(nullptr);
  j["prediction_error"] = a.prediction_error ? json(*a.prediction_error) : json(nullptr);
  return j;
}

inline WRConfig config_from(const io::RunSpec& spec) { return spec.config(); }

/// Runs one instance, writes the trace and report named in the spec and
/// prints the report to out.
inline int cmd_run(io::RunSpec spec, const CliOverrides& ov, std::ostream& out, const LogFn& log = log_none) {
  ov.apply(spec);
  Analysis a;
  try {
    const WRConfig cfg = config_from(spec);
    log(LogLevel::Info, "run: dim " + std::to_string(cfg.R0.dim()) + ", max_iter " + std::to_string(cfg.max_iter));
    a = analyze(cfg);
  } catch (const Error& err) {
    log(LogLevel::Error, err.what());
    return err.code() == ErrorCode::NumericalBreakdown ? kExitBreakdown : kExitSpecError;
  }
  const json report = build_report(a);
  if (spec.trace_path) {
    io::write_trace(*spec.trace_path, a.trace, spec.format);
    log(LogLevel::Info, "trace written to " + spec.trace_path->string());
  }
  if (spec.report_path) {
    io::write_text(*spec.report_path, report.dump(2) + "\n");
    log(LogLevel::Info, "report written to " + spec.report_path->string());
  }
  out << report.dump(2) << "\n";
  if (a.trace.max_iter_exceeded) {
    log(LogLevel::Warn, "max_iter reached before convergence");
    return kExitMaxIter;
  }
  return kExitOk;
}

inline int cmd_run(const std::filesystem::path& path, const CliOverrides& ov, std::ostream& out,
                   const LogFn& log = log_none) {
  io::RunSpec spec;
  try {
    spec = io::load_run_spec(path);
  } catch (const Error& err) {
    log(LogLevel::Error, err.what());
    return kExitSpecError;
  }
  return cmd_run(std::move(spec), ov, out, log);
}

// ---------------------------------------------------------------------------
// Identity suite

struct CheckRow {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = true;
  std::string note;
};

struct CheckResult {
  std::vector<CheckRow> rows;
  bool pass = true;
  int exit_code = kExitOk;
};

/// Recomputes the block identities from the stored records alone, so a
/// record altered after the run is caught even though its online residuals
/// were computed from the true iterates.
inline std::map<std::string, double> recheck_records(const WRTrace& t) {
  std::map<std::string, double> worst;
  if (!t.active || !t.active->e || !t.stabilized_at) return worst;
  const double tau = t.active->tau;
  auto bump = [&](const char* name, double v) { worst[name] = std::max(worst[name], v); };
  double ysum = 0.0;
  std::optional<double> tr_b0;
  for (std::size_t i = static_cast<std::size_t>(*t.stabilized_at); i + 1 < t.records.size(); ++i) {
    const StepRecord& cur = t.records[i];
    const StepRecord& next = t.records[i + 1];
    if (!cur.block_coords || !next.block_coords) break;
    const BlockCoordinates& a = *cur.block_coords;
    const BlockCoordinates& b = *next.block_coords;
    bump(residual::kARecursion, check_a_recursion(a, b, tau));
    if (a.B.size()) {
      bump(residual::kBDecrement, std::max(check_B_decrement(a, b, tau), check_B_trace_decrement(a, b, tau)));
      if (!tr_b0) tr_b0 = a.B.trace().real();
      ysum += a.y_norm2();
      bump(residual::kSummability, std::abs(tau * ysum - (*tr_b0 - b.B.trace().real())) / std::max(1.0, *tr_b0));
    }
    if (cur.block_det && next.block_det && *cur.block_det > 0.0 && *next.block_det > 0.0)
      bump(residual::kDetDecay, std::abs(std::expm1(std::log(*next.block_det / *cur.block_det) - std::log1p(-tau))));
  }
  return worst;
}

/// Perturbs the block data of one annotated record (test hook for the
/// checker itself).
inline bool inject_fault(WRTrace& t) {
  if (!t.stabilized_at) return false;
  const std::size_t k = static_cast<std::size_t>(*t.stabilized_at) + 1;
  if (k >= t.records.size() || !t.records[k].block_coords) return false;
  StepRecord& r = t.records[k];
  r.block_coords->a *= 1.0 + 1e-3;
  if (r.block_coords->B.size()) r.block_coords->B(0, 0) += 1e-3;
  if (r.block_det) *r.block_det *= 1.0 + 1e-3;
  return true;
}

inline CheckResult run_checks(const Analysis& a, bool corrupt = false) {
  CheckResult res;
  WRTrace t = a.trace;
  auto add = [&](std::string name, double value, double tol, std::string note = {}) {
    CheckRow row{std::move(name), value, tol, value <= tol, std::move(note)};
    res.pass = res.pass && row.pass;
    res.rows.push_back(std::move(row));
  };

  bool injected = false;
  if (corrupt) injected = inject_fault(t);

  const auto online = t.max_residuals();
  const auto offline = recheck_records(t);
  for (const auto& [name, tol] : residual_tolerances()) {
    double v = 0.0;
    bool seen = false;
    if (auto it = online.find(name); it != online.end()) v = it->second, seen = true;
    if (auto it = offline.find(name); it != offline.end()) v = std::max(v, it->second), seen = true;
    add(name, v, tol, seen ? "" : "vacuous");
  }
  if (corrupt && !injected) add("inject_fault", 1.0, 0.0, "no annotated record to corrupt");

  const bool weighted = t.active && t.active->e.has_value();
  if (t.converged && weighted) {
    const ActiveBlock& blk = *t.active;
    const PSDMatrix s = restrict_to(t.limit_estimate, blk.E);
    const BlockCoordinates bc = block_coordinates(s, *blk.e);
    // y scales like T^{1/2} and is bounded by sqrt(a), so its tolerance
    // carries the square root of the block norm.
    add("final_y", bc.y.norm(), kFinalYTol * std::max(1.0, std::sqrt(blk.T_N.norm())));
    add("final_b", bc.b.norm(), kFinalYTol);
    add("limit_kernel", s.apply(blk.e->vector()).norm(), kLimitKernelTol);
    const StationarityReport st = is_stationary(s, blk.u_E, 10.0 * a.cfg.conv_tol);
    const double scale = std::max(1.0, s.norm());
    const double stol = 10.0 * a.cfg.conv_tol * scale;
    add("stationary_step", st.step_residual, stol);
    add("stationary_sqrt", st.sqrt_residual * st.sqrt_residual, stol, "squared");
    add("stationary_apply", st.apply_residual, stol);
    add("stationary_range", st.range_residual, stol);
  }
  if (weighted && t.active->E.size() == 2 && t.active->rho > 0.0) {
    const ActiveBlock& blk = *t.active;
    const PlanarStart ps = planar_start(blk.T_N, *blk.e);
    const Index avail = static_cast<Index>(t.records.size()) - blk.N - 1;
    const Index steps = std::min(kCrossSteps, avail);
    if (steps > 0 && ps.d > 0.0) {
      const ScalarTrace st = thm41_recursion(ps.ratio, ps.defect, ps.d, blk.rho, static_cast<int>(steps));
      const CrossReport cr = cross_validate(t, st, kCrossTol);
      add("oracle_cross", cr.max_rel, kCrossTol, std::to_string(cr.steps_compared) + " steps");
    }
  }
  if (a.classification.predicted_limit && t.converged) {
    add("prediction", *a.prediction_error, kPredictionTol * std::max(1.0, a.cfg.R0.norm()),
        std::string(to_string(a.classification.kind)));
  }
  res.exit_code = res.pass ? kExitOk : kExitCheckFailed;
  return res;
}

inline void print_table(std::ostream& out, const CheckResult& r) {
  out << std::left << std::setw(24) << "check" << std::setw(14) << "value" << std::setw(10) << "tol"
      << "status\n";
  for (const auto& row : r.rows) {
    std::ostringstream v, tl;
    v << std::scientific << std::setprecision(3) << row.value;
    tl << std::scientific << std::setprecision(0) << row.tol;
    out << std::left << std::setw(24) << row.name << std::setw(14) << v.str() << std::setw(10) << tl.str()
        << (row.pass ? "ok" : "FAIL");
    if (!row.note.empty()) out << "  (" << row.note << ")";
    out << "\n";
  }
  out << (r.pass ? "all checks passed" : "some checks failed") << "\n";
}

inline int cmd_check(io::RunSpec spec, const CliOverrides& ov, bool corrupt, std::ostream& out,
                     const LogFn& log = log_none) {
  ov.apply(spec);
  Analysis a;
  try {
    a = analyze(config_from(spec));
  } catch (const Error& err) {
    log(LogLevel::Error, err.what());
    return err.code() == ErrorCode::NumericalBreakdown ? kExitBreakdown : kExitSpecError;
  }
  if (a.trace.max_iter_exceeded) log(LogLevel::Warn, "max_iter reached; checks cover the recorded steps");
  CheckResult r;
  try {
    r = run_checks(a, corrupt);
  } catch (const Error& err) {
    log(LogLevel::Error, err.what());
    return err.code() == ErrorCode::NumericalBreakdown ? kExitBreakdown : kExitCheckFailed;
  }
  print_table(out, r);
  return r.exit_code;
}

inline int cmd_check(const std::filesystem::path& path, const CliOverrides& ov, bool corrupt, std::ostream& out,
                     const LogFn& log = log_none) {
  io::RunSpec spec;
  try {
    spec = io::load_run_spec(path);
  } catch (const Error& err) {
    log(LogLevel::Error, err.what());
    return kExitSpecError;
  }
  return cmd_check(std::move(spec), ov, corrupt, out, log);
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  std::uint64_t seed = 0;
  int dim = 0;
  double tau_target = 0.0;
  Index active_dim = 0;
  double tau = 0.0;
  Index limit_rank = 0;
  double max_residual = 0.0;
  Index steps = 0;
  double wall_time = 0.0;
  std::string kind;
  bool converged = false;
  bool breakdown = false;
  std::optional<Index> planted_rank;
};

inline std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

extern "C" inline void wrdyn_on_sigint(int) { interrupt_flag().store(true); }

/// One sweep run. The RNG stream encodes dim and the tau index, so every
/// (dim, tau, seed) triple draws an independent instance.
inline SweepRow sweep_one(const io::SweepSpec& s, int dim, std::size_t tau_idx, std::uint64_t seed) {
  SweepRow row;
  row.seed = seed;
  row.dim = dim;
  row.tau_target = s.tau_targets[tau_idx];
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Rng rng = make_rng(seed, (static_cast<std::uint64_t>(dim) << 32) | tau_idx);
    const Instance inst = make_instance(s.ensemble, dim, row.tau_target, rng);
    if (inst.planted_rank >= 0) row.planted_rank = inst.planted_rank;
    WRConfig cfg;
    cfg.R0 = inst.R0;
    cfg.u = inst.u;
    cfg.rank_tol = s.rank_tol;
    cfg.conv_tol = s.conv_tol;
    cfg.coupling_tol = s.coupling_tol;
    cfg.max_iter = s.max_iter;
    const Analysis a = analyze(cfg);
    const WRTrace& t = a.trace;
    row.active_dim = t.active ? t.active->E.size() : 0;
    row.tau = t.active ? t.active->tau : 0.0;
    const PSDMatrix& lim = a.classification.predicted_limit ? *a.classification.predicted_limit : t.limit_estimate;
    row.limit_rank = numerical_rank(lim, kLimitRankTol);
    for (const auto& [k, v] : t.max_residuals()) row.max_residual = std::max(row.max_residual, v);
    row.steps = t.records.empty() ? 0 : t.records.back().n;
    row.kind = std::string(to_string(a.classification.kind));
    row.converged = t.converged;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NumericalBreakdown) throw;
    row.breakdown = true;
    row.kind = "breakdown";
  }
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!s.record_wall_time) row.wall_time = 0.0;
  return row;
}

struct SweepOutcome {
  std::vector<SweepRow> rows;
  std::size_t planned = 0;
  bool interrupted = false;
  std::size_t breakdowns = 0;
  double max_residual = 0.0;
};

inline SweepOutcome run_sweep(const io::SweepSpec& s, unsigned workers, const LogFn& log = log_none) {
  struct Job {
    int dim;
    std::size_t tau_idx;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int d : s.dims)
    for (std::size_t ti = 0; ti < s.tau_targets.size(); ++ti)
      for (std::uint64_t seed = s.seed_begin; seed < s.seed_end; ++seed) jobs.push_back({d, ti, seed});

  SweepOutcome out;
  out.planned = jobs.size();
  std::vector<std::optional<SweepRow>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  const std::size_t report_every = std::max<std::size_t>(1, jobs.size() / 10);

  auto worker = [&] {
    for (;;) {
      if (interrupt_flag().load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        slots[i] = sweep_one(s, jobs[i].dim, jobs[i].tau_idx, jobs[i].seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
      const std::size_t k = done.fetch_add(1) + 1;
      if (k % report_every == 0) log(LogLevel::Info, "sweep: " + std::to_string(k) + "/" + std::to_string(jobs.size()));
    }
  };
  workers = std::max(1u, workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  for (auto& slot : slots)
    if (slot) out.rows.push_back(std::move(*slot));
  out.interrupted = out.rows.size() < jobs.size();
  std::sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.seed, a.dim, a.tau_target) < std::tie(b.seed, b.dim, b.tau_target);
  });
  for (const auto& r : out.rows) {
    out.breakdowns += r.breakdown ? 1 : 0;
    out.max_residual = std::max(out.max_residual, r.max_residual);
  }
  return out;
}

inline std::string fmt17(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "seed,dim,active_dim,tau,limit_rank,max_residual,steps,wall_time,kind,converged\n";
  for (const auto& r : rows)
    os << r.seed << ',' << r.dim << ',' << r.active_dim << ',' << fmt17(r.tau) << ',' << r.limit_rank << ','
       << fmt17(r.max_residual) << ',' << r.steps << ',' << fmt17(r.wall_time) << ',' << r.kind << ','
       << (r.converged ? 1 : 0) << '\n';
}

/// Counts per (dim, active_dim, limit_rank).
inline std::map<std::tuple<int, Index, Index>, std::size_t> limit_rank_histogram(const std::vector<SweepRow>& rows) {
  std::map<std::tuple<int, Index, Index>, std::size_t> h;
  for (const auto& r : rows)
    if (!r.breakdown) ++h[{r.dim, r.active_dim, r.limit_rank}];
  return h;
}

inline json sweep_summary(const io::SweepSpec& s, const SweepOutcome& o) {
  json j;
  j["ensemble"] = std::string(to_string(s.ensemble));
  j["dims"] = s.dims;
  j["tau_targets"] = s.tau_targets;
  j["seeds"] = {s.seed_begin, s.seed_end};
  j["planned_runs"] = o.planned;
  j["completed_runs"] = o.rows.size();
  j["interrupted"] = o.interrupted;
  j["breakdowns"] = o.breakdowns;
  if (s.residual_max) j["max_residual"] = o.max_residual;
  std::map<std::string, std::size_t> kinds;
  std::size_t converged = 0;
  std::size_t planted_mismatch = 0;
  for (const auto& r : o.rows) {
    ++kinds[r.kind];
    converged += r.converged ? 1 : 0;
    if (r.planted_rank && !r.breakdown && *r.planted_rank != r.limit_rank) ++planted_mismatch;
  }
  j["kinds"] = kinds;
  j["converged_runs"] = converged;
  j["planted_rank_mismatches"] = planted_mismatch;
  if (s.limit_rank_histogram) {
    json h = json::array();
    for (const auto& [key, count] : limit_rank_histogram(o.rows))
      h.push_back({{"dim", std::get<0>(key)}, {"active_dim", std::get<1>(key)}, {"limit_rank", std::get<2>(key)},
                   {"count", count}});
    j["limit_rank_histogram"] = std::move(h);
  }
  return j;
}

inline void write_sweep_outputs(const std::filesystem::path& dir, const io::SweepSpec& s, const SweepOutcome& o) {
  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  write_sweep_csv(csv, o.rows);
  io::write_text(dir / "sweep.csv", csv.str());
  if (s.limit_rank_histogram) {
    std::ostringstream h;
    h << "dim,active_dim,limit_rank,count\n";
    for (const auto& [key, count] : limit_rank_histogram(o.rows))
      h << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << count << '\n';
    io::write_text(dir / "histogram.csv", h.str());
  }
  io::write_text(dir / "summary.json", sweep_summary(s, o).dump(2) + "\n");
}

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

inline int cmd_sweep(io::SweepSpec spec, const CliOverrides& ov, const std::filesystem::path& out_dir, unsigned workers,
                     bool deterministic, std::ostream& out, const LogFn& log = log_none) {
  ov.apply(spec);
  if (deterministic) spec.record_wall_time = false;
  interrupt_flag().store(false);
  auto prev = std::signal(SIGINT, wrdyn_on_sigint);
  SweepOutcome o;
  try {
    log(LogLevel::Info, "sweep: " + std::to_string(spec.runs()) + " runs on " + std::to_string(workers) + " workers");
    o = run_sweep(spec, workers, log);
  } catch (const Error& err) {
    std::signal(SIGINT, prev);
    log(LogLevel::Error, err.what());
    return kExitSpecError;
  }
  std::signal(SIGINT, prev);
  write_sweep_outputs(out_dir, spec, o);
  out << "runs " << o.rows.size() << "/" << o.planned << ", breakdowns " << o.breakdowns << ", max residual "
      << fmt17(o.max_residual) << "\n";
  if (spec.limit_rank_histogram) {
    out << "dim active_dim limit_rank count\n";
    for (const auto& [key, count] : limit_rank_histogram(o.rows))
      out << std::get<0>(key) << ' ' << std::get<1>(key) << ' ' << std::get<2>(key) << ' ' << count << "\n";
  }
  if (o.interrupted) {
    log(LogLevel::Warn, "interrupted; partial results written to " + out_dir.string());
    return kExitInterrupted;
  }
  return o.breakdowns > 0 ? kExitBreakdown : kExitOk;
}

inline int cmd_sweep(const std::filesystem::path& path, const CliOverrides& ov, const std::filesystem::path& out_dir,
                     unsigned workers, bool deterministic, std::ostream& out, const LogFn& log = log_none) {
  io::SweepSpec spec;
  try {
    spec = io::load_sweep_spec(path);
  } catch (const Error& err) {
    log(LogLevel::Error, err.what());
    return kExitSpecError;
  }
  return cmd_sweep(std::move(spec), ov, out_dir, workers, deterministic, out, log);
}

}  // namespace wrdyn::cli
