#pragma once

// Region masks: PBM (P1/P4) for two-region partitions, PGM (P2) with gray level
// = region index for more, and the rasterised "EY" block-letter mask.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rdlab/errors.hpp"
#include "rdlab/grid.hpp"

namespace rdlab {

namespace detail {

// Next whitespace-delimited token, skipping '#' comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

inline int pnm_int(std::istream& in, const std::string& what) {
  const std::string tok = pnm_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw InputError("malformed mask file: bad " + what + " '" + tok + "'");
  }
}

// Image row r (top first) maps to grid row ny-1-r so that y points up.
inline std::size_t image_to_cell(const Grid& grid, int col, int row) {
  return grid.index(col, grid.ny() - 1 - row);
}

}  // namespace detail

/// Reads a PBM/PGM mask whose pixel grid matches the cell grid.
///
/// PBM: 1-bits are region 2, 0-bits region 1. PGM (P2): gray level is the
/// region index in 1..J; `max_regions` = 0 infers J from the data.
inline DomainPartition load_mask(const Grid& grid, const std::string& path, int max_regions = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open mask file '" + path + "'");
  const std::string magic = detail::pnm_token(in);
  if (magic != "P1" && magic != "P4" && magic != "P2") {
    throw InputError("mask '" + path + "' is not a P1/P4 PBM or P2 PGM file");
  }
  const int width = detail::pnm_int(in, "width");
  const int height = detail::pnm_int(in, "height");
  if (width != grid.nx() || height != grid.ny()) {
    throw InputError("mask is " + std::to_string(width) + "x" + std::to_string(height) + " but the grid is " +
                     std::to_string(grid.nx()) + "x" + std::to_string(grid.ny()));
  }
  std::vector<int> assignment(grid.cell_count(), 1);
  int regions = 2;
  if (magic == "P1") {
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        int ch;
        do {
          ch = in.get();
          if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
          }
        } while (ch != EOF && ch != '0' && ch != '1');
        if (ch == EOF) throw InputError("mask '" + path + "' ends early");
        assignment[detail::image_to_cell(grid, c, r)] = (ch == '1') ? 2 : 1;
      }
    }
  } else if (magic == "P4") {
    const std::size_t row_bytes = (static_cast<std::size_t>(width) + 7) / 8;
    std::vector<unsigned char> row(row_bytes);
    for (int r = 0; r < height; ++r) {
      in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row_bytes));
      if (!in) throw InputError("mask '" + path + "' ends early");
      for (int c = 0; c < width; ++c) {
        const bool bit = (row[c / 8] >> (7 - c % 8)) & 1u;
        assignment[detail::image_to_cell(grid, c, r)] = bit ? 2 : 1;
      }
    }
  } else {
    const int maxval = detail::pnm_int(in, "maxval");
    if (maxval < 1 || maxval > 65535) throw InputError("mask '" + path + "' has invalid maxval");
    int seen = 1;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const int g = detail::pnm_int(in, "pixel");
        if (g < 1) throw InputError("mask '" + path + "' uses region index " + std::to_string(g) + " (regions start at 1)");
        if (g > maxval) throw InputError("mask '" + path + "' has a pixel above maxval");
        seen = std::max(seen, g);
        assignment[detail::image_to_cell(grid, c, r)] = g;
      }
    }
    if (max_regions > 0 && seen > max_regions) {
      throw InputError("mask '" + path + "' uses region " + std::to_string(seen) + " but only " +
                       std::to_string(max_regions) + " branches are available");
    }
    regions = max_regions > 0 ? max_regions : seen;
  }
  return DomainPartition(grid, std::move(assignment), regions);
}

/// Writes a two-region partition as PBM (P4 when binary, else P1).
inline void write_pbm(const std::string& path, const DomainPartition& part, bool binary = true) {
  const Grid& g = part.grid();
  if (part.regions() > 2) throw InputError("PBM masks hold at most two regions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write mask '" + path + "'");
  out << (binary ? "P4\n" : "P1\n") << g.nx() << ' ' << g.ny() << '\n';
  for (int r = 0; r < g.ny(); ++r) {
    if (binary) {
      std::vector<unsigned char> row((static_cast<std::size_t>(g.nx()) + 7) / 8, 0);
      for (int c = 0; c < g.nx(); ++c) {
        if (part.region(detail::image_to_cell(g, c, r)) == 2) row[c / 8] |= static_cast<unsigned char>(1u << (7 - c % 8));
      }
      out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    } else {
      for (int c = 0; c < g.nx(); ++c) {
        out << (part.region(detail::image_to_cell(g, c, r)) == 2 ? '1' : '0') << (c + 1 < g.nx() ? " " : "");
      }
      out << '\n';
    }
  }
}

/// Writes a partition as P2 PGM with gray level = region index.
inline void write_pgm_regions(const std::string& path, const DomainPartition& part) {
  const Grid& g = part.grid();
  std::ofstream out(path);
  if (!out) throw Error("cannot write mask '" + path + "'");
  out << "P2\n" << g.nx() << ' ' << g.ny() << '\n' << part.regions() << '\n';
  for (int r = 0; r < g.ny(); ++r) {
    for (int c = 0; c < g.nx(); ++c) {
      out << part.region(detail::image_to_cell(g, c, r)) << (c + 1 < g.nx() ? " " : "");
    }
    out << '\n';
  }
}

/// Axis-aligned rectangle [x0,x1) x [y0,y1) in glyph units.
struct GlyphRect {
  double x0, y0, x1, y1;
};

/// Block letters "E" and "Y" in a 7 x 5 unit box (total area 19 units^2).
inline constexpr std::array<GlyphRect, 8> kEyGlyph{{
    {0.0, 0.0, 1.0, 5.0},  // E stem
    {1.0, 0.0, 3.0, 1.0},  // E bottom bar
    {1.0, 2.0, 2.5, 3.0},  // E middle bar
    {1.0, 4.0, 3.0, 5.0},  // E top bar
    {5.0, 0.0, 6.0, 2.5},  // Y stem
    {4.0, 2.5, 7.0, 3.5},  // Y yoke
    {4.0, 3.5, 5.0, 5.0},  // Y left arm
    {6.0, 3.5, 7.0, 5.0},  // Y right arm
}};
inline constexpr double kEyGlyphArea = 19.0;
inline constexpr double kEyGlyphWidth = 7.0;
inline constexpr double kEyGlyphHeight = 5.0;

/// Region 2 = "EY" centred in the unit square covering `fraction` of it.
///
/// The glyph is scaled so its exact area equals `fraction`, rasterised by cell
/// centres, then boundary cells are added or removed (nearest the centre
/// first) until the cell count is round(fraction * cells).
inline DomainPartition generate_ey_mask(const Grid& grid, double fraction) {
  if (grid.dim() != 2) throw InputError("the EY mask needs a 2D grid");
  const double max_fraction = kEyGlyphArea / (kEyGlyphWidth * kEyGlyphWidth);
  if (!(fraction >= 0.0 && fraction < max_fraction)) {
    throw InputError("EY area fraction must lie in [0, " + std::to_string(max_fraction) + ")");
  }
  const std::size_t n = grid.cell_count();
  std::vector<int> assignment(n, 1);
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (target == 0) return DomainPartition(grid, std::move(assignment), 2);

  const double unit = std::sqrt(fraction / kEyGlyphArea);
  std::size_t count = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const double gx = (grid.x(c) - 0.5) / unit + 0.5 * kEyGlyphWidth;
    const double gy = (grid.y(c) - 0.5) / unit + 0.5 * kEyGlyphHeight;
    for (const auto& r : kEyGlyph) {
      if (gx >= r.x0 && gx < r.x1 && gy >= r.y0 && gy < r.y1) {
        assignment[c] = 2;
        ++count;
        break;
      }
    }
  }

  auto dist2 = [&](std::size_t c) {
    const double dx = grid.x(c) - 0.5, dy = grid.y(c) - 0.5;
    return dx * dx + dy * dy;
  };
  auto touches = [&](std::size_t c, int other) {
    const int i = grid.ix(c), j = grid.iy(c);
    const std::array<std::array<int, 2>, 4> nb{{{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
    for (const auto& [a, b] : nb) {
      if (a >= 0 && b >= 0 && a < grid.nx() && b < grid.ny() && assignment[grid.index(a, b)] == other) return true;
    }
    return false;
  };
  while (count != target) {
    const bool grow = count < target;
    std::vector<std::size_t> candidates;
    for (std::size_t c = 0; c < n; ++c) {
      if (grow && assignment[c] == 1 && touches(c, 2)) candidates.push_back(c);
      if (!grow && assignment[c] == 2 && touches(c, 1)) candidates.push_back(c);
    }
    if (candidates.empty()) throw Error("EY mask trimming stalled");
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      const double da = dist2(a), db = dist2(b);
      if (da != db) return grow ? da < db : da > db;
      return a < b;
    });
    for (std::size_t c : candidates) {
      if (count == target) break;
      assignment[c] = grow ? 2 : 1;
      count = grow ? count + 1 : count - 1;
    }
  }
  return DomainPartition(grid, std::move(assignment), 2);
}

}  // namespace rdlab
