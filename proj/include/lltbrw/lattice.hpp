#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

namespace lltbrw {

/// A point of Z^d. Ordered lexicographically, which fixes site iteration order.
using Point = std::vector<std::int64_t>;

inline Point origin(int d) { return Point(static_cast<std::size_t>(d), 0); }

inline std::int64_t coordinate_sum(const Point& z) {
  std::int64_t s = 0;
  for (auto v : z) s += v;
  return s;
}

inline std::int64_t sup_norm(const Point& z) {
  std::int64_t m = 0;
  for (auto v : z) m = std::max<std::int64_t>(m, v < 0 ? -v : v);
  return m;
}

inline double euclidean_norm(const Point& z) {
  double s = 0.0;
  for (auto v : z) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

/// n == z_1 + ... + z_d (mod 2).
inline bool parity_matched(std::int64_t n, const Point& z) {
  return ((n - coordinate_sum(z)) % 2) == 0;
}

/// "1;-2;0" form used in CSV cells.
inline std::string format_point(const Point& z) {
  std::string out;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(z[i]);
  }
  return out;
}

/// All points with Euclidean norm <= radius, in lexicographic order.
inline std::vector<Point> points_in_ball(int d, double radius) {
  std::vector<Point> out;
  const auto r = static_cast<std::int64_t>(std::floor(radius));
  Point p(static_cast<std::size_t>(d), -r);
  while (true) {
    if (euclidean_norm(p) <= radius + 1e-12) out.push_back(p);
    int axis = d - 1;
    while (axis >= 0 && p[static_cast<std::size_t>(axis)] == r) {
      p[static_cast<std::size_t>(axis)] = -r;
      --axis;
    }
    if (axis < 0) break;
    ++p[static_cast<std::size_t>(axis)];
  }
  return out;
}

}  // namespace lltbrw
