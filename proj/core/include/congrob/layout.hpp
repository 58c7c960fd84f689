#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "congrob/perturbation.hpp"

namespace congrob {

struct Pin {
  int cell = 0;
  double ox = 0.0;  // offset from the cell origin, normalized units
  double oy = 0.0;
};

using Net = std::vector<Pin>;

struct CellShape {
  double width = 0.0;
  double height = 0.0;
  bool is_macro = false;
};

struct Netlist {
  std::vector<CellShape> cells;
  std::vector<Net> nets;

  int n_cells() const { return static_cast<int>(cells.size()); }
};

// Uniform routing-tile grid over [0,1]^2. Tiles are half-open
// [gx/W, (gx+1)/W) x [gy/H, (gy+1)/H); the last tile in each axis is closed.
struct GCellGrid {
  int w = 0;
  int h = 0;

  double pitch_x() const { return 1.0 / w; }
  double pitch_y() const { return 1.0 / h; }
};

struct Layout {
  std::shared_ptr<const Netlist> netlist;
  std::vector<std::array<double, 2>> coords;  // row i = (x_i, y_i) in [0,1]^2
  GCellGrid grid;

  int n_cells() const { return static_cast<int>(coords.size()); }
};

// Per-cell per-axis offset bounds keeping each cell inside its G-Cell and
// inside [0,1]. lo <= 0 <= hi; macros get lo = hi = 0.
struct FeasibleBox {
  std::vector<std::array<double, 2>> lo;
  std::vector<std::array<double, 2>> hi;

  std::size_t size() const { return lo.size(); }
};

struct MacroSpec {
  int count = 0;
  double min_size = 0.08;
  double max_size = 0.18;
};

// tile index of coordinate v on an n-tile axis: min(floor(v*n), n-1)
inline int gcell_axis(double v, int n) {
  int g = static_cast<int>(v * n);
  return g >= n ? n - 1 : g;
}

inline std::array<double, 2> pin_position(const Layout& l, const Pin& p) {
  return {l.coords[p.cell][0] + p.ox, l.coords[p.cell][1] + p.oy};
}

std::pair<int, int> gcell_of(const Layout& l, int cell);

// Offset bounds per cell. Upper offsets at interior tile boundaries are
// backed off by ulps so that any offset in [lo, hi] lands, after the actual
// floating-point addition, in the same tile gcell_of reports today.
FeasibleBox feasible_box(const Layout& l);

// New layout with coords + delta. strict mode rejects deltas outside the
// feasible box or exceeding the eps0 row budget, naming the offending cells.
Layout apply_perturbation(const Layout& l, const Perturbation& delta, bool strict = true);

Layout synth_layout(std::uint64_t seed, int n_cells, int n_nets, int grid_w,
                    int grid_h, const MacroSpec& macros);

void validate_netlist(const Netlist& nl);
void validate_layout(const Layout& l);

std::uint64_t layout_hash(const Layout& l);

}  // namespace congrob
