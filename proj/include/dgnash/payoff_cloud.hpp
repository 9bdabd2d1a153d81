#pragma once

// Payoff pairs (J1, J2), l1 distances between them, and quantized clouds.
// Clouds snap points to the absolute lattice (quantum * integers), so equal
// payoffs stay bitwise equal across nodes and slices.

#include <cstdint>

#include "dgnash/common.hpp"

namespace dgnash {

struct PayoffPoint {
  double j1 = 0.0;
  double j2 = 0.0;
  bool operator==(const PayoffPoint&) const = default;
};

inline double dist_l1(const PayoffPoint& a, const PayoffPoint& b) {
  return std::abs(a.j1 - b.j1) + std::abs(a.j2 - b.j2);
}

inline double dist_l1(const PayoffPoint& p, std::span<const PayoffPoint> cloud) {
  require(!cloud.empty(), ErrorKind::numeric,
          "dist_l1: cloud is empty (no payoff points to measure against)");
  double best = std::numeric_limits<double>::infinity();
  for (const PayoffPoint& q : cloud) {
    double d = dist_l1(p, q);
    if (d < best) {
      best = d;
      if (best == 0.0) break;
    }
  }
  return best;
}

// Max over both directions of the point-to-cloud distance.
inline double hausdorff_l1(std::span<const PayoffPoint> a, std::span<const PayoffPoint> b) {
  require(!a.empty() && !b.empty(), ErrorKind::numeric,
          "hausdorff_l1: cannot compare with an empty cloud");
  double h = 0.0;
  for (const PayoffPoint& p : a) h = std::max(h, dist_l1(p, b));
  for (const PayoffPoint& p : b) h = std::max(h, dist_l1(p, a));
  return h;
}

inline int64_t lattice_key(double v, double quantum) {
  return static_cast<int64_t>(std::llround(v / quantum));
}

inline PayoffPoint snap_to_lattice(const PayoffPoint& p, double quantum) {
  if (quantum <= 0.0) return p;
  return {lattice_key(p.j1, quantum) * quantum, lattice_key(p.j2, quantum) * quantum};
}

// Set of payoff pairs at one node; quantum > 0 enforces the minimum spacing
// invariant by construction (points live on the lattice, duplicates merge).
struct PayoffCloud {
  double quantum = 0.0;
  std::vector<PayoffPoint> points;  // kept sorted by (j1, j2)

  bool add(PayoffPoint p) {  // returns true when the point is new
    if (quantum > 0.0) p = snap_to_lattice(p, quantum);
    auto it = std::lower_bound(points.begin(), points.end(), p, [](auto& a, auto& b) {
      return a.j1 < b.j1 || (a.j1 == b.j1 && a.j2 < b.j2);
    });
    if (it != points.end() && it->j1 == p.j1 && it->j2 == p.j2) return false;
    points.insert(it, p);
    return true;
  }

  bool empty() const { return points.empty(); }
  size_t size() const { return points.size(); }

  // Smallest pairwise l1 gap; the cloud invariant demands >= quantum / 2.
  double min_gap() const {
    double m = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < points.size(); ++i)
      for (size_t j = i + 1; j < points.size(); ++j)
        m = std::min(m, dist_l1(points[i], points[j]));
    return m;
  }
};

inline double dist_l1(const PayoffPoint& p, const PayoffCloud& c) {
  return dist_l1(p, std::span<const PayoffPoint>(c.points));
}

}  // namespace dgnash
