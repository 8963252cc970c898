#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rdlab/errors.hpp"
#include "rdlab/grid.hpp"
#include "rdlab/kinetics.hpp"
#include "rdlab/simulate.hpp"

namespace rdlab {

using json = nlohmann::json;

/// 17 significant digits, enough for an exact double round trip.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

/// Header `x,u,v` (1D) or `x,y,u,v` (2D), one row per cell in index order.
inline void write_field_csv(const std::filesystem::path& path, const Grid& grid, const std::vector<double>& u,
                            const std::vector<double>& v) {
  auto out = open_output(path);
  out << (grid.dim() == 2 ? "x,y,u,v\n" : "x,u,v\n");
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    out << fmt17(grid.x(c)) << ',';
    if (grid.dim() == 2) out << fmt17(grid.y(c)) << ',';
    out << fmt17(u[c]) << ',' << fmt17(v[c]) << '\n';
  }
}

inline void write_norms_csv(const std::filesystem::path& path, const std::vector<NormSample>& norms) {
  auto out = open_output(path);
  out << "t,du_inf,dv_inf\n";
  for (const auto& s : norms) out << fmt17(s.t) << ',' << fmt17(s.du_inf) << ',' << fmt17(s.dv_inf) << '\n';
}

/// 8-bit PGM of one 2D grid function, min-max scaled; the scaling goes to
/// `<path>.json`. Image row 0 is the top (largest y).
inline void write_pgm_field(const std::filesystem::path& path, const Grid& grid, const std::vector<double>& values,
                            const std::string& name) {
  if (grid.dim() != 2) throw InputError("PGM snapshots need a 2D grid");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double span = hi - lo;
  auto out = open_output(path);
  out << "P2\n" << grid.nx() << ' ' << grid.ny() << "\n255\n";
  for (int row = 0; row < grid.ny(); ++row) {
    const int j = grid.ny() - 1 - row;
    for (int i = 0; i < grid.nx(); ++i) {
      const double x = values[grid.index(i, j)];
      const long level = span > 0.0 ? std::lround(255.0 * (x - lo) / span) : 0;
      out << level << (i + 1 < grid.nx() ? ' ' : '\n');
    }
  }
  write_json(path.string() + ".json", json{{"field", name}, {"min", lo}, {"max", hi}, {"levels", 255}, {"scaling", "linear"}});
}

/// Nullcline samples for plotting: rows `curve,label,v,u` with curve "f" for
/// branch k_label and "g" for the g = 0 nullcline (label = root index).
inline void write_branch_csv(const std::filesystem::path& path, const KineticModel& m, double v_lo, double v_hi,
                             int samples) {
  if (!(v_lo < v_hi)) throw InputError("branch sampling window must satisfy v_lo < v_hi");
  if (samples < 2) throw InputError("branch sampling needs at least 2 samples");
  auto out = open_output(path);
  out << "curve,label,v,u\n";
  for (const auto& br : branch_catalog(m)) {
    for (int s = 0; s < samples; ++s) {
      const double v = v_lo + (v_hi - v_lo) * (s + 0.5) / samples;
      if (!br.contains(v) || std::find(br.punctures.begin(), br.punctures.end(), v) != br.punctures.end()) continue;
      out << "f," << br.label << ',' << fmt17(v) << ',' << fmt17(branch_value(m, br, v)) << '\n';
    }
  }
  for (int s = 0; s < samples; ++s) {
    const double v = v_lo + (v_hi - v_lo) * (s + 0.5) / samples;
    const auto us = g_nullcline(m, v);
    for (std::size_t k = 0; k < us.size(); ++k) out << "g," << k + 1 << ',' << fmt17(v) << ',' << fmt17(us[k]) << '\n';
  }
}

inline json complex_pair(double re, double im) { return json::array({re, im}); }

}  // namespace rdlab
