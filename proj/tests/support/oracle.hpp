#pragma once

// Brute-force references used by the tests. They work on a plain 2-D grid of
// bools and exact rationals and never call into the library's mask algebra.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "maskboost/mask.hpp"

namespace oracle {

using Grid = std::vector<std::vector<bool>>;  // [y][x]

/// Exact non-negative rational; compare by cross-multiplication.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  friend bool operator==(const Rational& a, const Rational& b) {
    return static_cast<unsigned __int128>(a.num) * b.den ==
           static_cast<unsigned __int128>(b.num) * a.den;
  }
};

inline Grid to_grid(const maskboost::BinaryMask& m) {
  Grid g(m.height(), std::vector<bool>(m.width()));
  for (std::uint32_t y = 0; y < m.height(); ++y)
    for (std::uint32_t x = 0; x < m.width(); ++x) g[y][x] = m.get(x, y);
  return g;
}

inline Grid random_grid(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h, double density) {
  std::bernoulli_distribution fg(density);
  Grid g(h, std::vector<bool>(w));
  for (auto& row : g)
    for (std::size_t x = 0; x < row.size(); ++x) row[x] = fg(rng);
  return g;
}

inline maskboost::BinaryMask from_grid(const Grid& g) {
  maskboost::BinaryMask m(static_cast<std::uint32_t>(g.at(0).size()), static_cast<std::uint32_t>(g.size()));
  for (std::size_t y = 0; y < g.size(); ++y)
    for (std::size_t x = 0; x < g[y].size(); ++x)
      if (g[y][x]) m.set(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
  return m;
}

struct Moments {
  std::uint64_t m00 = 0, m10 = 0, m01 = 0;
};

inline Moments moments(const Grid& g) {
  Moments m;
  for (std::size_t y = 0; y < g.size(); ++y)
    for (std::size_t x = 0; x < g[y].size(); ++x)
      if (g[y][x]) {
        m.m00 += 1;
        m.m10 += x;
        m.m01 += y;
      }
  return m;
}

/// Centroid by direct averaging of pixel coordinates in long double.
inline std::pair<long double, long double> centroid(const Grid& g) {
  long double sx = 0, sy = 0, n = 0;
  for (std::size_t y = 0; y < g.size(); ++y)
    for (std::size_t x = 0; x < g[y].size(); ++x)
      if (g[y][x]) {
        sx += x;
        sy += y;
        n += 1;
      }
  return {sx / n, sy / n};
}

struct Box {
  std::uint32_t x1, y1, x2, y2;
};

/// Per-axis extremes by scanning rows and columns for any foreground.
inline Box bbox(const Grid& g) {
  const std::uint32_t h = static_cast<std::uint32_t>(g.size());
  const std::uint32_t w = static_cast<std::uint32_t>(g[0].size());
  auto row_has = [&](std::uint32_t y) {
    for (std::uint32_t x = 0; x < w; ++x)
      if (g[y][x]) return true;
    return false;
  };
  auto col_has = [&](std::uint32_t x) {
    for (std::uint32_t y = 0; y < h; ++y)
      if (g[y][x]) return true;
    return false;
  };
  Box b{0, 0, w - 1, h - 1};
  while (!col_has(b.x1)) ++b.x1;
  while (!col_has(b.x2)) --b.x2;
  while (!row_has(b.y1)) ++b.y1;
  while (!row_has(b.y2)) --b.y2;
  return b;
}

struct Counts {
  std::uint64_t fi = 0, fu = 0, bi = 0, bu = 0;
};

inline Counts counts(const Grid& pred, const Grid& gt) {
  Counts c;
  for (std::size_t y = 0; y < pred.size(); ++y)
    for (std::size_t x = 0; x < pred[y].size(); ++x) {
      const bool p = pred[y][x], t = gt[y][x];
      c.fi += p && t;
      c.fu += p || t;
      c.bi += !p && !t;
      c.bu += !p || !t;
    }
  return c;
}

inline Rational iou(const Grid& a, const Grid& b) {
  const Counts c = counts(a, b);
  return c.fu == 0 ? Rational{1, 1} : Rational{c.fi, c.fu};
}

}  // namespace oracle
