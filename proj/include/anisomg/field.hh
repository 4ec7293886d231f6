#pragma once

/** @file field.hh
    @brief Magnetic field presets, the unit direction b = B/|B| and the conductivity pair.

    The analytic families are defined through a stream function psi with
    B = (d psi/dy, -d psi/dx), so field lines are level sets of psi:

      single_island  psi = sin(pi x) sin(pi y)                      closed nested lines
      double_island  psi = sin(2 pi x) sin(pi y)                    two islands
      mixed          psi = y - t x + a sin(2 pi x) sin(2 pi y)      mostly open lines plus islands
      circular       psi = (x - cx)^2 + (y - cy)^2                  concentric circles
      constant       B = (bx, by)
      table          B bilinearly interpolated from nodal values on a uniform grid

    These presets are qualitative stand-ins for closed/double-island/open field-line
    topologies; they are not reconstructions of any published field.
*/

#include "anisomg/types.hh"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace anisomg {

enum class FieldKind { SingleIsland, DoubleIsland, Mixed, Circular, Constant, Table };

inline std::string to_string(FieldKind k)
{
  switch (k) {
  case FieldKind::SingleIsland: return "single_island";
  case FieldKind::DoubleIsland: return "double_island";
  case FieldKind::Mixed: return "mixed";
  case FieldKind::Circular: return "circular";
  case FieldKind::Constant: return "constant";
  case FieldKind::Table: return "table";
  }
  return "?";
}

inline FieldKind field_kind_from_string(const std::string& s)
{
  for (auto k : {FieldKind::SingleIsland, FieldKind::DoubleIsland, FieldKind::Mixed, FieldKind::Circular, FieldKind::Constant, FieldKind::Table})
    if (to_string(k) == s) return k;
  // Aliases matching the numbering of the three benchmark cases.
  if (s == "test1") return FieldKind::SingleIsland;
  if (s == "test2") return FieldKind::DoubleIsland;
  if (s == "test3") return FieldKind::Mixed;
  throw ConfigError("unknown field kind '" + s + "'");
}

struct FieldSpec {
  FieldKind kind = FieldKind::SingleIsland;
  std::vector<double> params;
  double k_perp = 1.0;
  double k_par = 1.0;
  double null_tolerance = 1e-12;

  double k_delta() const { return k_par - k_perp; }
  double ratio() const { return k_par / k_perp; }

  FieldSpec with_ratio(double r) const
  {
    FieldSpec s = *this;
    s.k_par = r * k_perp;
    return s;
  }

  void validate() const
  {
    if (!(k_perp > 0.0)) throw ConfigError("field: k_perp must be > 0");
    if (!(k_par >= k_perp)) throw ConfigError("field: k_par must be >= k_perp");
    if (!(null_tolerance >= 0.0)) throw ConfigError("field: null tolerance must be >= 0");
    if (kind == FieldKind::Constant && params.size() != 2) throw ConfigError("field: constant kind needs params bx,by");
    if (kind == FieldKind::Table) {
      if (params.size() < 2) throw ConfigError("field: table kind needs params nx,ny,bx...,by...");
      const int nx = int(params[0]), ny = int(params[1]);
      if (nx < 1 || ny < 1 || double(nx) != params[0] || double(ny) != params[1]) throw ConfigError("field: table nx, ny must be positive integers");
      if (params.size() != std::size_t(2 + 2 * (nx + 1) * (ny + 1))) throw ConfigError("field: table needs 2*(nx+1)*(ny+1) nodal values");
    }
  }
};

struct AnisotropySweep {
  std::vector<double> ratios;

  void validate() const
  {
    if (ratios.empty()) throw ConfigError("anisotropy sweep: empty ratio list");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
      if (!(ratios[i] > 0.0)) throw ConfigError("anisotropy sweep: ratios must be positive");
      if (i > 0 && !(ratios[i] > ratios[i - 1])) throw ConfigError("anisotropy sweep: ratios must be increasing");
    }
  }
};

namespace detail {

inline double param(const FieldSpec& s, std::size_t i, double fallback) { return i < s.params.size() ? s.params[i] : fallback; }

inline Vec2 table_field(const FieldSpec& s, Point x)
{
  const int nx = int(s.params[0]), ny = int(s.params[1]);
  const std::size_t nn = std::size_t(nx + 1) * (ny + 1);
  const double* bx = s.params.data() + 2;
  const double* by = bx + nn;
  const double fx = std::clamp(x.x, 0.0, 1.0) * nx, fy = std::clamp(x.y, 0.0, 1.0) * ny;
  const int i = std::min(int(fx), nx - 1), j = std::min(int(fy), ny - 1);
  const double u = fx - i, v = fy - j;
  const auto at = [nx](const double* a, int ii, int jj) { return a[std::size_t(jj) * (nx + 1) + ii]; };
  const auto lerp = [&](const double* a) {
    return (1 - u) * (1 - v) * at(a, i, j) + u * (1 - v) * at(a, i + 1, j) + u * v * at(a, i + 1, j + 1) + (1 - u) * v * at(a, i, j + 1);
  };
  return {lerp(bx), lerp(by)};
}

} // namespace detail

/// The unnormalized field B at x.
inline Vec2 magnetic_field(const FieldSpec& s, Point x)
{
  using std::cos;
  using std::sin;
  constexpr double pi = std::numbers::pi;
  // B = (psi_y, -psi_x)
  switch (s.kind) {
  case FieldKind::SingleIsland: {
    const double px = pi * cos(pi * x.x) * sin(pi * x.y);
    const double py = pi * sin(pi * x.x) * cos(pi * x.y);
    return {py, -px};
  }
  case FieldKind::DoubleIsland: {
    const double px = 2 * pi * cos(2 * pi * x.x) * sin(pi * x.y);
    const double py = pi * sin(2 * pi * x.x) * cos(pi * x.y);
    return {py, -px};
  }
  case FieldKind::Mixed: {
    const double tilt = detail::param(s, 0, 0.3), a = detail::param(s, 1, 0.3);
    const double px = -tilt + 2 * pi * a * cos(2 * pi * x.x) * sin(2 * pi * x.y);
    const double py = 1.0 + 2 * pi * a * sin(2 * pi * x.x) * cos(2 * pi * x.y);
    return {py, -px};
  }
  case FieldKind::Circular: {
    const double cx = detail::param(s, 0, 0.5), cy = detail::param(s, 1, 0.5);
    return {2 * (x.y - cy), -2 * (x.x - cx)};
  }
  case FieldKind::Constant: return {s.params[0], s.params[1]};
  case FieldKind::Table: return detail::table_field(s, x);
  }
  return {};
}

/// b = B/|B|, or the zero vector within null_tolerance of a field null.
inline Vec2 eval_b(const FieldSpec& s, Point x)
{
  const Vec2 B = magnetic_field(s, x);
  const double n = B.norm();
  if (n <= s.null_tolerance) return {};
  return {B.x / n, B.y / n};
}

/// The three benchmark presets: closed single island, closed double island, mixed open/closed.
inline std::array<FieldSpec, 3> builtin_tests(double k_perp = 1.0, double ratio = 1.0)
{
  std::array<FieldSpec, 3> out;
  out[0].kind = FieldKind::SingleIsland;
  out[1].kind = FieldKind::DoubleIsland;
  out[2].kind = FieldKind::Mixed;
  out[2].params = {0.3, 0.3};
  for (auto& s : out) {
    s.k_perp = k_perp;
    s.k_par = ratio * k_perp;
  }
  return out;
}

} // namespace anisomg
