#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace congrob {

// Sparse placement perturbation: per-cell (dx, dy) offsets. At most eps0
// rows may be nonzero; moved[i] marks them. Rows with moved[i] == false are
// exactly zero.
struct Perturbation {
  std::vector<std::array<double, 2>> delta;
  std::vector<bool> moved;
  int eps0 = 0;

  explicit Perturbation(std::size_t n = 0)
      : delta(n, {0.0, 0.0}), moved(n, false) {}

  int moved_count() const {
    int k = 0;
    for (bool m : moved) k += m ? 1 : 0;
    return k;
  }
};

}  // namespace congrob
