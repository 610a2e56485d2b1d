#pragma once

// JSON run/sweep specifications and trace serialization. Complex numbers
// are [re, im] pairs; a bare number is accepted as a real entry. Doubles are
// written so that reading them back reproduces the same bits.

#include <algorithm>
#include <cstdint>
#include <map>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wrdyn/dynamics.hpp"
#include "wrdyn/ensemble.hpp"
#include "wrdyn/structure.hpp"

namespace wrdyn::io {

using json = nlohmann::json;

namespace detail {

/// 1-based line of the first occurrence of "key" in the source, or 0.
inline std::size_t line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

/// Throws SpecError located at the line where key appears.
[[noreturn]] inline void fail(const std::string& origin, const std::string& text, const std::string& key,
                              const std::string& what) {
  const std::size_t line = line_of_key(text, key);
  std::string loc = origin;
  if (line > 0) loc += ":" + std::to_string(line);
  throw Error(ErrorCode::SpecError, loc + ": " + what);
}

inline json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
    const std::size_t upto = std::min(byte, text.size());
    const auto begin = text.begin();
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(begin, begin + static_cast<std::ptrdiff_t>(upto), '\n'));
    const auto last_nl = text.rfind('\n', upto == 0 ? 0 : upto - 1);
    const std::size_t col = last_nl == std::string::npos || upto == 0 ? upto + 1 : upto - last_nl;
    std::string msg = e.what();
    const auto cut = msg.find("parse error");
    if (cut != std::string::npos) msg = msg.substr(cut);
    throw Error(ErrorCode::SpecError,
                origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::SpecError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline std::optional<Complex> complex_from_json(const json& j) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  return std::nullopt;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

inline json real_vector_to_json(const RealVector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline std::optional<Matrix> matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) return std::nullopt;
  const auto rows = static_cast<Index>(j.size());
  if (!j[0].is_array()) return std::nullopt;
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) return std::nullopt;
    for (Index k = 0; k < cols; ++k) {
      auto z = complex_from_json(row[static_cast<std::size_t>(k)]);
      if (!z) return std::nullopt;
      m(i, k) = *z;
    }
  }
  return m;
}

inline std::optional<Vector> vector_from_json(const json& j) {
  if (!j.is_array() || j.empty()) return std::nullopt;
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto z = complex_from_json(j[i]);
    if (!z) return std::nullopt;
    v(static_cast<Index>(i)) = *z;
  }
  return v;
}

inline std::optional<RealVector> real_vector_from_json(const json& j) {
  if (!j.is_array()) return std::nullopt;
  RealVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) return std::nullopt;
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

// ---------------------------------------------------------------------------
// Run specification

enum class TraceFormat { Json, Csv };

struct RunSpec {
  Matrix matrix;
  Vector u;
  bool normalize_u = false;
  double rank_tol = kDefaultRankTol;
  double conv_tol = 1e-11;
  double coupling_tol = 1e-10;
  int max_iter = 10000;
  int stab_window = 3;
  std::optional<std::filesystem::path> trace_path;
  std::optional<std::filesystem::path> report_path;
  TraceFormat format = TraceFormat::Json;

  WRConfig config() const {
    WRConfig cfg;
    cfg.R0 = PSDMatrix::from_dense(HermitianMatrix(matrix), rank_tol);
    cfg.u = normalize_u ? UnitVector::normalize(u) : UnitVector(u);
    cfg.rank_tol = rank_tol;
    cfg.conv_tol = conv_tol;
    cfg.coupling_tol = coupling_tol;
    cfg.max_iter = max_iter;
    cfg.stab_window = stab_window;
    cfg.validate();
    return cfg;
  }
};

/// Parses a run specification; relative output paths are resolved against
/// base_dir. Errors carry "origin:line[:col]: message".
inline RunSpec parse_run_spec(const std::string& text, const std::string& origin = "<spec>",
                              const std::filesystem::path& base_dir = {}) {
  const json j = detail::parse_text(text, origin);
  auto fail = [&](const std::string& key, const std::string& what) { detail::fail(origin, text, key, what); };
  if (!j.is_object()) fail("", "top level must be an object");
  RunSpec s;
  for (const auto& [key, _] : j.items()) {
    static const std::vector<std::string> known{"matrix", "u", "normalize_u", "tolerances", "max_iter",
                                                "stab_window", "outputs", "comment"};
    if (std::find(known.begin(), known.end(), key) == known.end()) fail(key, "unknown field '" + key + "'");
  }
  if (!j.contains("matrix")) fail("", "missing field 'matrix'");
  if (!j.contains("u")) fail("", "missing field 'u'");
  auto m = matrix_from_json(j["matrix"]);
  if (!m) fail("matrix", "'matrix' must be a non-empty list of equal-length rows of numbers or [re, im] pairs");
  if (m->rows() != m->cols()) fail("matrix", "'matrix' must be square");
  auto u = vector_from_json(j["u"]);
  if (!u) fail("u", "'u' must be a non-empty list of numbers or [re, im] pairs");
  if (u->size() != m->rows()) fail("u", "'u' has " + std::to_string(u->size()) + " entries, matrix is " +
                                            std::to_string(m->rows()) + "x" + std::to_string(m->rows()));
  s.matrix = *m;
  s.u = *u;
  if (j.contains("normalize_u")) {
    if (!j["normalize_u"].is_boolean()) fail("normalize_u", "'normalize_u' must be a boolean");
    s.normalize_u = j["normalize_u"].get<bool>();
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) fail("tolerances", "'tolerances' must be an object");
    for (const auto& [key, val] : t.items()) {
      if (!val.is_number() || !(val.get<double>() > 0.0)) fail(key, "tolerance '" + key + "' must be a positive number");
      if (key == "rank_tol") s.rank_tol = val.get<double>();
      else if (key == "conv_tol") s.conv_tol = val.get<double>();
      else if (key == "coupling_tol") s.coupling_tol = val.get<double>();
      else fail(key, "unknown tolerance '" + key + "'");
    }
  }
  auto positive_int = [&](const char* key, int& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer() || j[key].get<long long>() < 1 || j[key].get<long long>() > 1'000'000'000)
      fail(key, std::string("'") + key + "' must be a positive integer");
    dst = j[key].get<int>();
  };
  positive_int("max_iter", s.max_iter);
  positive_int("stab_window", s.stab_window);
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    if (!o.is_object()) fail("outputs", "'outputs' must be an object");
    for (const auto& [key, val] : o.items()) {
      if (key == "trace_path" || key == "report_path") {
        if (!val.is_string()) fail(key, "'" + key + "' must be a string");
        std::filesystem::path p = val.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        (key == "trace_path" ? s.trace_path : s.report_path) = p;
      } else if (key == "format") {
        const std::string f = val.is_string() ? val.get<std::string>() : "";
        if (f == "json") s.format = TraceFormat::Json;
        else if (f == "csv") s.format = TraceFormat::Csv;
        else fail(key, "'format' must be \"json\" or \"csv\"");
      } else {
        fail(key, "unknown output field '" + key + "'");
      }
    }
  }
  return s;
}

inline RunSpec load_run_spec(const std::filesystem::path& p) {
  return parse_run_spec(detail::read_file(p), p.string(), p.parent_path());
}

// ---------------------------------------------------------------------------
// Sweep specification

struct SweepSpec {
  std::vector<int> dims;
  std::vector<double> tau_targets{0.5};
  std::uint64_t seed_begin = 0;
  std::uint64_t seed_end = 0;  // exclusive
  Ensemble ensemble = Ensemble::Wishart;
  bool limit_rank_histogram = true;
  bool residual_max = true;
  double rank_tol = kDefaultRankTol;
  double conv_tol = 1e-11;
  double coupling_tol = 1e-10;
  int max_iter = 10000;
  bool record_wall_time = true;

  std::size_t runs() const { return dims.size() * tau_targets.size() * static_cast<std::size_t>(seed_end - seed_begin); }
};

/// seeds: N (meaning 0..N-1), [first, end) as a two-element list, or
/// {"from": first, "to": end}.
inline SweepSpec parse_sweep_spec(const std::string& text, const std::string& origin = "<sweep>") {
  const json j = detail::parse_text(text, origin);
  auto fail = [&](const std::string& key, const std::string& what) { detail::fail(origin, text, key, what); };
  if (!j.is_object()) fail("", "top level must be an object");
  SweepSpec s;
  for (const auto& [key, _] : j.items()) {
    static const std::vector<std::string> known{"dims",     "tau_targets", "seeds",   "ensemble", "collect",
                                                "tolerances", "max_iter",  "record_wall_time", "comment"};
    if (std::find(known.begin(), known.end(), key) == known.end()) fail(key, "unknown field '" + key + "'");
  }
  if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].empty()) fail("dims", "'dims' must be a non-empty list");
  for (const auto& d : j["dims"]) {
    if (!d.is_number_integer() || d.get<long long>() < 2 || d.get<long long>() > 64)
      fail("dims", "every entry of 'dims' must be an integer in [2, 64]");
    s.dims.push_back(d.get<int>());
  }
  if (j.contains("tau_targets")) {
    const json& t = j["tau_targets"];
    if (!t.is_array() || t.empty()) fail("tau_targets", "'tau_targets' must be a non-empty list");
    s.tau_targets.clear();
    for (const auto& v : t) {
      if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < 1.0))
        fail("tau_targets", "every tau target must lie in (0, 1)");
      s.tau_targets.push_back(v.get<double>());
    }
  }
  if (!j.contains("seeds")) fail("", "missing field 'seeds'");
  const json& sd = j["seeds"];
  auto as_seed = [&](const json& v) -> std::uint64_t {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail("seeds", "seeds must be nonnegative integers");
    return v.get<std::uint64_t>();
  };
  if (sd.is_number_integer()) {
    s.seed_end = as_seed(sd);
  } else if (sd.is_array() && sd.size() == 2) {
    s.seed_begin = as_seed(sd[0]);
    s.seed_end = as_seed(sd[1]);
  } else if (sd.is_object() && sd.contains("from") && sd.contains("to")) {
    s.seed_begin = as_seed(sd["from"]);
    s.seed_end = as_seed(sd["to"]);
  } else {
    fail("seeds", "'seeds' must be a count, a [first, end) pair or {\"from\", \"to\"}");
  }
  if (s.seed_end <= s.seed_begin) fail("seeds", "seed range is empty");
  if (j.contains("ensemble")) {
    if (!j["ensemble"].is_string()) fail("ensemble", "'ensemble' must be a string");
    try {
      s.ensemble = parse_ensemble(j["ensemble"].get<std::string>());
    } catch (const Error&) {
      fail("ensemble", "'ensemble' must be one of wishart, coupled-block, decoupled");
    }
  }
  if (j.contains("collect")) {
    const json& c = j["collect"];
    if (!c.is_array()) fail("collect", "'collect' must be a list");
    s.limit_rank_histogram = s.residual_max = false;
    for (const auto& v : c) {
      const std::string name = v.is_string() ? v.get<std::string>() : "";
      if (name == "limit_rank_histogram") s.limit_rank_histogram = true;
      else if (name == "residual_max") s.residual_max = true;
      else fail("collect", "unknown collect item (expected limit_rank_histogram or residual_max)");
    }
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) fail("tolerances", "'tolerances' must be an object");
    for (const auto& [key, val] : t.items()) {
      if (!val.is_number() || !(val.get<double>() > 0.0)) fail(key, "tolerance '" + key + "' must be a positive number");
      if (key == "rank_tol") s.rank_tol = val.get<double>();
      else if (key == "conv_tol") s.conv_tol = val.get<double>();
      else if (key == "coupling_tol") s.coupling_tol = val.get<double>();
      else fail(key, "unknown tolerance '" + key + "'");
    }
  }
  if (j.contains("max_iter")) {
    if (!j["max_iter"].is_number_integer() || j["max_iter"].get<long long>() < 1)
      fail("max_iter", "'max_iter' must be a positive integer");
    s.max_iter = j["max_iter"].get<int>();
  }
  if (j.contains("record_wall_time")) {
    if (!j["record_wall_time"].is_boolean()) fail("record_wall_time", "'record_wall_time' must be a boolean");
    s.record_wall_time = j["record_wall_time"].get<bool>();
  }
  return s;
}

inline SweepSpec load_sweep_spec(const std::filesystem::path& p) {
  return parse_sweep_spec(detail::read_file(p), p.string());
}

// ---------------------------------------------------------------------------
// Traces

inline json block_to_json(const BlockCoordinates& bc) {
  return json{{"a", bc.a}, {"b", vector_to_json(bc.b)}, {"B", matrix_to_json(bc.B)}, {"y", vector_to_json(bc.y)}};
}

inline BlockCoordinates block_from_json(const json& j) {
  BlockCoordinates bc;
  bc.a = j.at("a").get<double>();
  const json& b = j.at("b");
  bc.b = b.empty() ? Vector(0) : *vector_from_json(b);
  const json& bm = j.at("B");
  bc.B = bm.empty() ? Matrix(0, 0) : *matrix_from_json(bm);
  const json& y = j.at("y");
  bc.y = y.empty() ? Vector(0) : *vector_from_json(y);
  return bc;
}

inline json record_to_json(const StepRecord& r) {
  json j{{"n", r.n},       {"eigenvalues", r.eigenvalues},     {"lambda_min", r.lambda_min},
         {"lambda_max", r.lambda_max}, {"det", r.det},        {"rank", r.rank},
         {"numerical_rank", r.numerical_rank}, {"trace", r.trace}, {"gap", r.gap}};
  if (r.block_coords) j["block"] = block_to_json(*r.block_coords);
  if (r.block_det) j["block_det"] = *r.block_det;
  j["residuals"] = r.residuals;
  return j;
}

inline StepRecord record_from_json(const json& j) {
  StepRecord r;
  r.n = j.at("n").get<Index>();
  r.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  r.lambda_min = j.at("lambda_min").get<double>();
  r.lambda_max = j.at("lambda_max").get<double>();
  r.det = j.at("det").get<double>();
  r.rank = j.at("rank").get<Index>();
  r.numerical_rank = j.at("numerical_rank").get<Index>();
  r.trace = j.at("trace").get<double>();
  r.gap = j.at("gap").get<double>();
  if (j.contains("block")) r.block_coords = block_from_json(j["block"]);
  if (j.contains("block_det")) r.block_det = j["block_det"].get<double>();
  r.residuals = j.at("residuals").get<std::map<std::string, double>>();
  return r;
}

inline json psd_to_json(const PSDMatrix& s) {
  return json{{"eigenvalues", real_vector_to_json(s.eigenvalues())}, {"eigenvectors", matrix_to_json(s.eigenvectors())}};
}

inline PSDMatrix psd_from_json(const json& j) {
  return PSDMatrix::from_spectral(*real_vector_from_json(j.at("eigenvalues")), *matrix_from_json(j.at("eigenvectors")));
}

inline json active_to_json(const ActiveBlock& a) {
  json j{{"N", a.N},
         {"dim_E", a.E.size()},
         {"E", matrix_to_json(a.E.matrix())},
         {"T_N", psd_to_json(a.T_N)},
         {"u_E", vector_to_json(a.u_E)},
         {"tau", a.tau},
         {"rho", a.rho},
         {"imminent_drop", a.imminent_drop}};
  return j;
}

inline ActiveBlock active_from_json(const json& j) {
  ActiveBlock a;
  a.N = j.at("N").get<Index>();
  const json& e = j.at("E");
  a.E = e.empty() ? OrthonormalBasis(0) : OrthonormalBasis(*matrix_from_json(e));
  a.T_N = psd_from_json(j.at("T_N"));
  a.u_E = *vector_from_json(j.at("u_E"));
  a.tau = j.at("tau").get<double>();
  a.rho = j.at("rho").get<double>();
  a.imminent_drop = j.at("imminent_drop").get<bool>();
  if (a.tau > 0.0) a.e = UnitVector::normalize(a.u_E);
  return a;
}

inline json trace_to_json(const WRTrace& t) {
  json j;
  j["converged"] = t.converged;
  j["max_iter_exceeded"] = t.max_iter_exceeded;
  j["converged_at"] = t.converged_at ? json(*t.converged_at) : json(nullptr);
  j["stabilized_at"] = t.stabilized_at ? json(*t.stabilized_at) : json(nullptr);
  j["inverse_skip_from"] = t.inverse_skip_from ? json(*t.inverse_skip_from) : json(nullptr);
  j["active"] = t.active ? active_to_json(*t.active) : json(nullptr);
  j["limit_estimate"] = psd_to_json(t.limit_estimate);
  json recs = json::array();
  for (const auto& r : t.records) recs.push_back(record_to_json(r));
  j["records"] = std::move(recs);
  return j;
}

inline WRTrace trace_from_json(const json& j) {
  WRTrace t;
  t.converged = j.at("converged").get<bool>();
  t.max_iter_exceeded = j.at("max_iter_exceeded").get<bool>();
  if (!j.at("converged_at").is_null()) t.converged_at = j["converged_at"].get<Index>();
  if (!j.at("stabilized_at").is_null()) t.stabilized_at = j["stabilized_at"].get<Index>();
  if (!j.at("inverse_skip_from").is_null()) t.inverse_skip_from = j["inverse_skip_from"].get<Index>();
  if (!j.at("active").is_null()) t.active = active_from_json(j["active"]);
  t.limit_estimate = psd_from_json(j.at("limit_estimate"));
  for (const auto& r : j.at("records")) t.records.push_back(record_from_json(r));
  return t;
}

/// One row per record; spectra and block vectors are summarized.
inline void write_trace_csv(std::ostream& os, const WRTrace& t) {
  const auto& names = residual::all_names();
  os << "n,lambda_min,lambda_max,det,rank,numerical_rank,trace,gap,block_det,a,b_norm,B_trace,y_norm";
  for (const auto& nm : names) os << ',' << nm;
  os << '\n';
  std::ostringstream cell;
  cell << std::setprecision(17);
  auto num = [&](double v) {
    cell.str("");
    cell << v;
    return cell.str();
  };
  for (const auto& r : t.records) {
    os << r.n << ',' << num(r.lambda_min) << ',' << num(r.lambda_max) << ',' << num(r.det) << ',' << r.rank << ','
       << r.numerical_rank << ',' << num(r.trace) << ',' << num(r.gap) << ',';
    if (r.block_det) os << num(*r.block_det);
    if (r.block_coords) {
      const auto& bc = *r.block_coords;
      os << ',' << num(bc.a) << ',' << num(bc.b.norm()) << ',' << num(bc.B.size() ? bc.B.trace().real() : 0.0) << ','
         << num(bc.y.norm());
    } else {
      os << ",,,,";
    }
    for (const auto& nm : names) {
      os << ',';
      auto it = r.residuals.find(nm);
      if (it != r.residuals.end()) os << num(it->second);
    }
    os << '\n';
  }
}

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::SpecError, "cannot write " + p.string());
  out << content;
}

inline void write_trace(const std::filesystem::path& p, const WRTrace& t, TraceFormat fmt) {
  if (fmt == TraceFormat::Json) {
    write_text(p, trace_to_json(t).dump() + "\n");
  } else {
    std::ostringstream ss;
    write_trace_csv(ss, t);
    write_text(p, ss.str());
  }
}

inline WRTrace read_trace_json(const std::filesystem::path& p) {
  return trace_from_json(detail::parse_text(detail::read_file(p), p.string()));
}

inline json classification_to_json(const ClassificationResult& c) {
  json j{{"kind", std::string(to_string(c.kind))}, {"rule", c.rule}, {"certificate", c.certificate}};
  j["predicted_limit"] = c.predicted_limit ? matrix_to_json(c.predicted_limit->dense()) : json(nullptr);
  j["numerical_limit"] = c.numerical_limit ? matrix_to_json(c.numerical_limit->dense()) : json(nullptr);
  return j;
}

}  // namespace wrdyn::io
