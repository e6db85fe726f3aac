#pragma once

#include <vector>

#include "fwm/model.hpp"

namespace fwm::test {

// Two ground, three a, two b, two c levels.
inline MolecularSystem small_system(double ground_gap = 0.3) {
  const std::vector<double> g{0.0, ground_gap}, a{2.0, 2.1, 2.25}, b{0.1, 0.35}, c{3.55, 3.75};
  DipoleTables d;
  d.a_ground.resize(3, 2);
  d.a_ground << 0.5, 0.3, 0.4, 0.6, 0.6, 0.35;
  d.a_b.resize(3, 2);
  d.a_b << 0.7, 0.2, 0.5, 0.5, 0.4, 0.3;
  d.b_c.resize(2, 2);
  d.b_c << 0.8, 0.3, 0.4, 0.7;
  d.c_ground.resize(2, 2);
  d.c_ground << 0.6, 0.5, 0.3, 0.7;
  return MolecularSystem({make_levels(g), make_levels(a), make_levels(b, 0.02), make_levels(c, 0.025)}, d);
}

inline double sq(double x) { return x * x; }

}  // namespace fwm::test
