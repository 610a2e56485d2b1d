#pragma once

// Scalar recursions for 2x2 weighted blocks, written out independently of
// the matrix engine and used to cross-check it.
//
// For T = [[a, b], [b, d]] in a frame {e, f} with weight diag(rho, 1):
//   ratio  y = b / d,   defect  z = sqrt(det T) / d.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wrdyn/dynamics.hpp"

namespace wrdyn {

enum class ScalarKind { Example24, Thm41 };

struct ScalarTrace {
  ScalarKind kind = ScalarKind::Example24;
  std::map<std::string, std::vector<double>> sequences;
  double rho = 0.5;

  const std::vector<double>& at(const std::string& name) const {
    auto it = sequences.find(name);
    require(it != sequences.end(), ErrorCode::IncompatibleTraces, "scalar trace has no sequence " + name);
    return it->second;
  }
  std::size_t size() const { return sequences.empty() ? 0 : sequences.begin()->second.size(); }
};

namespace detail {
inline void require_start(bool ok, const std::string& what) { require(ok, ErrorCode::InvalidStart, what); }
}  // namespace detail

/// Weight 1/2 on e: y, z and d after each step, n = 0 .. steps.
inline ScalarTrace example24_recursion(double y0, double z0, double d0, int steps) {
  detail::require_start(std::isfinite(y0) && std::isfinite(z0) && std::isfinite(d0), "non-finite start");
  detail::require_start(y0 >= 0.0 && z0 >= 0.0, "y0 and z0 must be nonnegative");
  detail::require_start(d0 > 0.0, "d0 must be positive");
  detail::require_start(steps >= 0, "negative step count");
  ScalarTrace tr;
  tr.kind = ScalarKind::Example24;
  tr.rho = 0.5;
  auto& ys = tr.sequences["y"];
  auto& zs = tr.sequences["z"];
  auto& ds = tr.sequences["d"];
  double y = y0, z = z0, d = d0;
  const double r2 = std::sqrt(2.0);
  for (int n = 0;; ++n) {
    ys.push_back(y);
    zs.push_back(z);
    ds.push_back(d);
    if (n == steps) break;
    const double y2 = y * y, z2 = z * z;
    const double den = y2 + 2.0 * z2 + 4.0 * z + 2.0;
    const double mid = y2 + z2 + 2.0 * z + 1.0;
    const double ny = y * (y2 + z2 + 3.0 * z + 2.0) / den;
    const double nz = r2 * z * mid / den;
    const double nd = d * den / (2.0 * mid);
    y = ny;
    z = nz;
    d = nd;
  }
  return tr;
}

/// General weight rho on e: xi = b/d, d updated recursively and
/// zeta_n = rho^{n/2} zeta_0 d_0 / d_n from det T_n = rho^n det T_0.
inline ScalarTrace thm41_recursion(double xi0, double zeta0, double d0, double rho, int steps) {
  detail::require_start(std::isfinite(xi0) && std::isfinite(zeta0) && std::isfinite(d0), "non-finite start");
  detail::require_start(xi0 >= 0.0 && zeta0 >= 0.0, "xi0 and zeta0 must be nonnegative");
  detail::require_start(d0 > 0.0, "d0 must be positive");
  detail::require_start(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  detail::require_start(steps >= 0, "negative step count");
  ScalarTrace tr;
  tr.kind = ScalarKind::Thm41;
  tr.rho = rho;
  const double tau = 1.0 - rho;
  auto& xs = tr.sequences["xi"];
  auto& zs = tr.sequences["zeta"];
  auto& ds = tr.sequences["d"];
  double xi = xi0, d = d0;
  const double root_det0 = zeta0 * d0;
  for (int n = 0;; ++n) {
    const double zeta = std::pow(rho, 0.5 * n) * root_det0 / d;
    xs.push_back(xi);
    zs.push_back(zeta);
    ds.push_back(d);
    if (n == steps) break;
    const double zp = zeta + 1.0;
    const double nxi = xi * (1.0 - tau * zeta * zp / (rho * xi * xi + zp * zp));
    const double nd = d * (rho * xi * xi + zp * zp) / (xi * xi + zp * zp);
    xi = nxi;
    d = nd;
  }
  return tr;
}

/// Frame quantities (b/d, sqrt(det)/d, d) of a 2x2 block T with defect
/// direction e; b is taken as |<f, T e>|.
struct PlanarStart {
  double ratio = 0.0;
  double defect = 0.0;
  double d = 0.0;
};

inline PlanarStart planar_start(const PSDMatrix& t, const UnitVector& e) {
  require(t.dim() == 2 && e.dim() == 2, ErrorCode::DimensionMismatch, "planar_start needs a 2x2 block");
  const Vector f = transverse_frame(e).column(0);
  const double b = std::abs(f.dot(t.apply(e.vector())));
  const double d = t.quadratic_form(f);
  return {b / d, std::sqrt(t.det()) / d, d};
}

struct CrossReport {
  bool pass = true;
  double max_rel = 0.0;
  Index steps_compared = 0;
  std::optional<Index> first_failure;  // block step index
  std::string message;
};

/// Compares ratio, defect and d along the active block of a matrix trace
/// with a scalar trace started from the same block.
inline CrossReport cross_validate(const WRTrace& mt, const ScalarTrace& st, double tol) {
  CrossReport rep;
  if (mt.records.empty() || st.size() == 0) {
    rep.message = "empty trace; nothing to compare";
    return rep;
  }
  require(mt.stabilized_at && mt.active && mt.active->e && mt.active->T_N.dim() == 2, ErrorCode::IncompatibleTraces,
          "matrix trace has no 2x2 weighted active block");
  require(std::abs(mt.active->rho - st.rho) <= 1e-12, ErrorCode::IncompatibleTraces,
          "weights differ: matrix rho " + std::to_string(mt.active->rho) + ", scalar rho " + std::to_string(st.rho));
  const bool ex = st.kind == ScalarKind::Example24;
  const auto& s_ratio = st.at(ex ? "y" : "xi");
  const auto& s_defect = st.at(ex ? "z" : "zeta");
  const auto& s_d = st.at("d");
  const std::size_t start = static_cast<std::size_t>(*mt.stabilized_at);
  auto rel = [](double m, double s) { return s != 0.0 ? std::abs(m - s) / std::abs(s) : std::abs(m); };
  for (std::size_t k = 0; k < st.size() && start + k < mt.records.size(); ++k) {
    const StepRecord& rec = mt.records[start + k];
    require(rec.block_coords.has_value() && rec.block_det.has_value(), ErrorCode::IncompatibleTraces,
            "matrix record " + std::to_string(rec.n) + " lacks block coordinates");
    const BlockCoordinates& bc = *rec.block_coords;
    const double d = bc.B(0, 0).real();
    const double m_ratio = bc.b.norm() / d;
    const double m_defect = std::sqrt(*rec.block_det) / d;
    const double worst = std::max({rel(m_ratio, s_ratio[k]), rel(m_defect, s_defect[k]), rel(d, s_d[k])});
    rep.max_rel = std::max(rep.max_rel, worst);
    ++rep.steps_compared;
    if (worst > tol && !rep.first_failure) {
      rep.pass = false;
      rep.first_failure = static_cast<Index>(k);
      rep.message = "scalar and matrix paths diverge at block step " + std::to_string(k) + " (relative " +
                    std::to_string(worst) + ")";
    }
  }
  return rep;
}

}  // namespace wrdyn
