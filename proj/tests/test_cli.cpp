#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "wrdyn/cli.hpp"

using namespace wrdyn;
namespace fs = std::filesystem;

namespace {

const char* kExample = R"({
  "matrix": [[0, 0, 0], [0, 1, 1], [0, 1, 2]],
  "u": [[0.7071067811865476, 0], [0.7071067811865476, 0], [0, 0]],
  "normalize_u": true
})";

const char* kCommuting = R"({
  "matrix": [[3, 0, 0], [0, 2, 0], [0, 0, 1]],
  "u": [1, 0, 0]
})";

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wrdyn_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string spec_error(const std::string& text) {
  try {
    io::parse_run_spec(text, "spec.json");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecError);
    return e.what();
  }
  return "";
}

}  // namespace

TEST(RunSpec, ParsesComplexAndRealEntries) {
  const io::RunSpec s = io::parse_run_spec(kExample);
  EXPECT_EQ(s.matrix.rows(), 3);
  EXPECT_EQ(s.matrix(2, 2), Complex(2, 0));
  EXPECT_TRUE(s.normalize_u);
  const WRConfig cfg = s.config();
  EXPECT_NEAR(cfg.u.vector().norm(), 1.0, 1e-15);
}

TEST(RunSpec, LineNumberedDiagnostics) {
  const std::string syntax = "{\n  \"matrix\": [[1, 0],\n  [0, 1]],\n  \"u\": [1, 0,]\n}";
  const std::string msg = spec_error(syntax);
  EXPECT_NE(msg.find("spec.json:4:"), std::string::npos) << msg;

  const std::string nonsquare = "{\n  \"matrix\": [[1, 0, 0],\n [0, 1, 0]],\n  \"u\": [1, 0]\n}";
  EXPECT_NE(spec_error(nonsquare).find("spec.json:2: 'matrix' must be square"), std::string::npos);

  const std::string mismatch = "{\n  \"matrix\": [[1, 0], [0, 1]],\n\n  \"u\": [1, 0, 0]\n}";
  EXPECT_NE(spec_error(mismatch).find("spec.json:4:"), std::string::npos);

  const std::string bad_tol = "{\"matrix\": [[1]],\n \"u\": [1],\n \"tolerances\": {\n  \"conv_tol\": -1}}";
  EXPECT_NE(spec_error(bad_tol).find("spec.json:4:"), std::string::npos);

  EXPECT_NE(spec_error("{\"matrix\": [[1]], \"u\": [1], \"bogus\": 1}").find("unknown field"), std::string::npos);
  EXPECT_NE(spec_error("{\"u\": [1]}").find("missing field 'matrix'"), std::string::npos);
}

TEST(RunSpec, SemanticErrorsSurfaceFromConfig) {
  const io::RunSpec s = io::parse_run_spec(R"({"matrix": [[1, 0], [0, 1]], "u": [1, 1]})");
  try {
    s.config();
    FAIL() << "expected NotUnitVector";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotUnitVector);
  }
}

TEST(RunSpec, OutputPathsResolveAgainstSpecDir) {
  const io::RunSpec s = io::parse_run_spec(
      R"({"matrix": [[1]], "u": [1], "outputs": {"trace_path": "t.csv", "format": "csv"}})", "x", "/some/dir");
  ASSERT_TRUE(s.trace_path);
  EXPECT_EQ(*s.trace_path, fs::path("/some/dir/t.csv"));
  EXPECT_EQ(s.format, io::TraceFormat::Csv);
}

TEST(SweepSpec, ParsesAndValidates) {
  const io::SweepSpec s = io::parse_sweep_spec(
      R"({"dims": [3, 4], "tau_targets": [0.1, 0.9], "seeds": {"from": 5, "to": 8}, "ensemble": "coupled-block",
          "collect": ["limit_rank_histogram"]})");
  EXPECT_EQ(s.runs(), 2u * 2u * 3u);
  EXPECT_EQ(s.ensemble, Ensemble::CoupledBlock);
  EXPECT_FALSE(s.residual_max);
  auto err = [](const std::string& t) {
    try {
      io::parse_sweep_spec(t, "sw");
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(err(R"({"dims": [1], "seeds": 3})").find("dims"), std::string::npos);
  EXPECT_NE(err(R"({"dims": [3], "seeds": [4, 4]})").find("empty"), std::string::npos);
  EXPECT_NE(err(R"({"dims": [3], "seeds": 2, "tau_targets": [1.0]})").find("(0, 1)"), std::string::npos);
  EXPECT_NE(err("{\"dims\": [3],\n \"seeds\": 2,\n \"ensemble\": \"x\"}").find("sw:3:"), std::string::npos);
}

TEST(TraceIo, JsonRoundTripIsExact) {
  WRConfig cfg = io::parse_run_spec(kExample).config();
  cfg.max_iter = 120;
  const WRTrace t = iterate(cfg);
  const std::string text = io::trace_to_json(t).dump();
  const WRTrace back = io::trace_from_json(nlohmann::json::parse(text));
  ASSERT_EQ(back.records.size(), t.records.size());
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto& a = t.records[i];
    const auto& b = back.records[i];
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
    EXPECT_EQ(a.det, b.det);
    EXPECT_EQ(a.gap, b.gap);
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_EQ(a.residuals, b.residuals);
    ASSERT_EQ(a.block_coords.has_value(), b.block_coords.has_value());
    if (a.block_coords) {
      EXPECT_EQ(a.block_coords->a, b.block_coords->a);
      EXPECT_TRUE(a.block_coords->B == b.block_coords->B);
      EXPECT_TRUE(a.block_coords->y == b.block_coords->y);
    }
  }
  EXPECT_TRUE(back.limit_estimate.eigenvalues() == t.limit_estimate.eigenvalues());
  EXPECT_EQ(back.stabilized_at, t.stabilized_at);
  ASSERT_TRUE(back.active);
  EXPECT_EQ(back.active->tau, t.active->tau);
  EXPECT_EQ(io::trace_to_json(back).dump(), text);
}

TEST(TraceIo, CsvRoundTripIsExact) {
  WRConfig cfg = io::parse_run_spec(kExample).config();
  cfg.max_iter = 40;
  const WRTrace t = iterate(cfg);
  std::ostringstream ss;
  io::write_trace_csv(ss, t);
  std::istringstream in(ss.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("n,lambda_min,lambda_max,det", 0), 0u);
  std::size_t i = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    EXPECT_EQ(std::stoll(cell), t.records[i].n);
    std::getline(row, cell, ',');
    EXPECT_EQ(std::strtod(cell.c_str(), nullptr), t.records[i].lambda_min);
    std::getline(row, cell, ',');
    EXPECT_EQ(std::strtod(cell.c_str(), nullptr), t.records[i].lambda_max);
    std::getline(row, cell, ',');
    EXPECT_EQ(std::strtod(cell.c_str(), nullptr), t.records[i].det);
    ++i;
  }
  EXPECT_EQ(i, t.records.size());
}

TEST(CmdRun, ExampleReport) {
  const fs::path dir = scratch_dir("run");
  io::RunSpec spec = io::parse_run_spec(kExample, "ex", dir);
  spec.trace_path = dir / "trace.json";
  spec.report_path = dir / "report.json";
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_run(spec, {}, out), cli::kExitOk);
  const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(rep["N"], 0);
  EXPECT_EQ(rep["active"]["dim_E"], 2);
  EXPECT_NEAR(rep["active"]["tau"].get<double>(), 0.5, 1e-15);
  EXPECT_EQ(rep["classification"]["kind"], "ActiveDim2");
  EXPECT_LE(rep["limit"]["norm"].get<double>(), 1e-8);
  for (const auto& [name, tol] : cli::residual_tolerances())
    if (rep["max_residuals"].contains(name)) EXPECT_LE(rep["max_residuals"][name].get<double>(), tol) << name;
  EXPECT_LE(rep["prediction_error"].get<double>(), 1e-8);
  const WRTrace back = io::read_trace_json(dir / "trace.json");
  EXPECT_EQ(back.records.size(), rep["steps"].get<std::size_t>() + 1);
}

TEST(CmdRun, CommutingAndTruncated) {
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_run(io::parse_run_spec(kCommuting), {}, out), cli::kExitOk);
  EXPECT_EQ(nlohmann::json::parse(out.str())["classification"]["kind"], "CommutingCompression");

  const fs::path dir = scratch_dir("trunc");
  io::RunSpec spec = io::parse_run_spec(kExample);
  spec.trace_path = dir / "t.csv";
  spec.format = io::TraceFormat::Csv;
  cli::CliOverrides ov;
  ov.max_iter = 1;
  std::ostringstream o2;
  EXPECT_EQ(cli::cmd_run(spec, ov, o2), cli::kExitMaxIter);
  const std::string csv = slurp(dir / "t.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);  // header + steps 0, 1
}

TEST(CmdRun, SpecErrorsExitOne) {
  const fs::path dir = scratch_dir("bad");
  std::ofstream(dir / "bad.json") << "{\n \"matrix\": [[1, 0], [0, 1]],\n \"u\": [1, 0\n";
  std::ostringstream out;
  std::string logged;
  auto log = [&](cli::LogLevel, const std::string& m) { logged += m; };
  EXPECT_EQ(cli::cmd_run(dir / "bad.json", {}, out, log), cli::kExitSpecError);
  EXPECT_NE(logged.find("bad.json:4:"), std::string::npos) << logged;
  EXPECT_EQ(cli::cmd_run(dir / "missing.json", {}, out), cli::kExitSpecError);
  // Indefinite matrix.
  EXPECT_EQ(cli::cmd_run(io::parse_run_spec(R"({"matrix": [[1, 0], [0, -1]], "u": [1, 0]})"), {}, out),
            cli::kExitSpecError);
}

TEST(CmdCheck, ExamplePassesAndFaultFails) {
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_check(io::parse_run_spec(kExample), {}, false, out), cli::kExitOk) << out.str();
  EXPECT_NE(out.str().find("oracle_cross"), std::string::npos);
  EXPECT_NE(out.str().find("all checks passed"), std::string::npos);
  std::ostringstream bad;
  EXPECT_EQ(cli::cmd_check(io::parse_run_spec(kExample), {}, true, bad), cli::kExitCheckFailed);
  EXPECT_NE(bad.str().find("FAIL"), std::string::npos);
}

TEST(CmdCheck, ZeroWeightIsVacuous) {
  std::ostringstream out;
  const auto spec = io::parse_run_spec(R"({"matrix": [[0, 0, 0], [0, 2, 1], [0, 1, 3]], "u": [1, 0, 0]})");
  EXPECT_EQ(cli::cmd_check(spec, {}, false, out), cli::kExitOk) << out.str();
  EXPECT_NE(out.str().find("vacuous"), std::string::npos);
}

TEST(CmdSweep, CoupledPlanesCollapse) {
  io::SweepSpec s = io::parse_sweep_spec(R"({"dims": [2], "seeds": 12, "ensemble": "coupled-block"})");
  const cli::SweepOutcome o = cli::run_sweep(s, 2);
  ASSERT_EQ(o.rows.size(), 12u);
  for (const auto& r : o.rows) {
    EXPECT_EQ(r.limit_rank, 0) << r.seed;
    EXPECT_EQ(r.active_dim, 2);
    EXPECT_TRUE(r.converged);
  }
}

TEST(CmdSweep, DecoupledKeepsTransverseRank) {
  io::SweepSpec s = io::parse_sweep_spec(R"({"dims": [3], "seeds": 10, "ensemble": "decoupled"})");
  const cli::SweepOutcome o = cli::run_sweep(s, 2);
  for (const auto& r : o.rows) EXPECT_EQ(r.limit_rank, 2) << r.seed;
  EXPECT_EQ(o.breakdowns, 0u);
}

TEST(CmdSweep, DeterministicOutputs) {
  const io::SweepSpec s = io::parse_sweep_spec(R"({"dims": [3], "seeds": 6, "max_iter": 400})");
  const fs::path a = scratch_dir("sweep_a"), b = scratch_dir("sweep_b");
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_sweep(s, {}, a, 3, true, out), cli::kExitOk);
  EXPECT_EQ(cli::cmd_sweep(s, {}, b, 1, true, out), cli::kExitOk);
  for (const char* f : {"sweep.csv", "histogram.csv", "summary.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const std::string csv = slurp(a / "sweep.csv");
  EXPECT_EQ(csv.rfind("seed,dim,active_dim,tau,limit_rank,max_residual,steps,wall_time", 0), 0u);
  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_EQ(summary["completed_runs"], 6);
  EXPECT_TRUE(summary.contains("limit_rank_histogram"));
}

TEST(CmdSweep, InterruptFlushesPartialResults) {
  const io::SweepSpec s = io::parse_sweep_spec(R"({"dims": [3], "seeds": 4, "max_iter": 50})");
  cli::interrupt_flag().store(true);
  const cli::SweepOutcome o = cli::run_sweep(s, 1);
  cli::interrupt_flag().store(false);
  EXPECT_TRUE(o.interrupted);
  EXPECT_EQ(o.rows.size(), 0u);
}

TEST(Samples, AllSpecsLoadAndRunSpecsCheck) {
  const char* env = std::getenv("WRDYN_SAMPLES");
  if (!env) GTEST_SKIP() << "WRDYN_SAMPLES not set";
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(env)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    const std::string name = entry.path().filename().string();
    if (name.rfind("sweep", 0) == 0) {
      EXPECT_GT(io::load_sweep_spec(entry.path()).runs(), 0u) << name;
    } else {
      std::ostringstream out;
      EXPECT_EQ(cli::cmd_check(entry.path(), {}, false, out), cli::kExitOk) << name << "\n" << out.str();
    }
  }
  EXPECT_GE(seen, 4u);
}

#ifdef WRDYN_EXE
TEST(Executable, ExitCodes) {
  const fs::path dir = scratch_dir("exe");
  std::ofstream(dir / "ex.json") << kExample;
  std::ofstream(dir / "bad.json") << "{ \"matrix\": 1 }";
  auto run = [](const std::string& args) {
    const int rc = std::system((std::string("WRDYN_LOG=quiet \"") + WRDYN_EXE + "\" " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
  };
  EXPECT_EQ(run("run " + (dir / "ex.json").string()), 0);
  EXPECT_EQ(run("run " + (dir / "ex.json").string() + " --max-iter 3"), 2);
  EXPECT_EQ(run("run " + (dir / "bad.json").string()), 1);
  EXPECT_EQ(run("check " + (dir / "ex.json").string()), 0);
  EXPECT_EQ(run("check " + (dir / "ex.json").string() + " --inject-fault"), 4);
  EXPECT_EQ(run("frobnicate"), 1);
}
#endif
