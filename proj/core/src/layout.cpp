#include "congrob/layout.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "congrob/hash.hpp"
#include "congrob/rng.hpp"

namespace congrob {

namespace {

// Largest offset d <= raw such that coord + d still lands in tile g under
// the actual floating-point addition. Rounding in coord + (bound - coord)
// can overshoot the half-open tile boundary by an ulp; walk back until the
// real predicate holds.
double safe_upper(double coord, double raw, int g, int n) {
  double d = raw;
  while (gcell_axis(coord + d, n) != g) d = std::nextafter(d, -2.0);
  return d;
}

double safe_lower(double coord, double raw, int g, int n) {
  double d = raw;
  while (gcell_axis(coord + d, n) != g || coord + d < 0.0) d = std::nextafter(d, 2.0);
  return d;
}

std::string cell_list(const std::vector<int>& cells) {
  std::ostringstream os;
  std::size_t shown = std::min<std::size_t>(cells.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) os << ", ";
    os << cells[i];
  }
  if (cells.size() > shown) os << " (+" << cells.size() - shown << " more)";
  return os.str();
}

}  // namespace

std::pair<int, int> gcell_of(const Layout& l, int cell) {
  if (cell < 0 || cell >= l.n_cells())
    throw std::out_of_range("gcell_of: cell index " + std::to_string(cell));
  return {gcell_axis(l.coords[cell][0], l.grid.w),
          gcell_axis(l.coords[cell][1], l.grid.h)};
}

FeasibleBox feasible_box(const Layout& l) {
  const int n = l.n_cells();
  FeasibleBox box;
  box.lo.assign(n, {0.0, 0.0});
  box.hi.assign(n, {0.0, 0.0});
  const int dims[2] = {l.grid.w, l.grid.h};
  for (int i = 0; i < n; ++i) {
    if (l.netlist->cells[i].is_macro) continue;
    for (int a = 0; a < 2; ++a) {
      const double c = l.coords[i][a];
      const int g = gcell_axis(c, dims[a]);
      const double tile_lo = static_cast<double>(g) / dims[a];
      const double tile_hi = static_cast<double>(g + 1) / dims[a];
      // [0,1] domain bounds coincide with the outermost tile edges; the top
      // edge needs no backoff (gcell_axis clamps at 1.0).
      double hi_raw = tile_hi - c;
      double lo_raw = tile_lo - c;
      box.hi[i][a] = (g == dims[a] - 1) ? std::min(hi_raw, 1.0 - c)
                                        : safe_upper(c, hi_raw, g, dims[a]);
      box.lo[i][a] = safe_lower(c, lo_raw, g, dims[a]);
    }
  }
  return box;
}

Layout apply_perturbation(const Layout& l, const Perturbation& delta, bool strict) {
  const int n = l.n_cells();
  if (static_cast<int>(delta.delta.size()) != n)
    throw std::invalid_argument("apply_perturbation: delta has " +
                                std::to_string(delta.delta.size()) +
                                " rows, layout has " + std::to_string(n));
  if (strict) {
    const FeasibleBox box = feasible_box(l);
    std::vector<int> out_of_box;
    std::vector<int> moved_macros;
    int nonzero = 0;
    for (int i = 0; i < n; ++i) {
      const double dx = delta.delta[i][0];
      const double dy = delta.delta[i][1];
      if (dx == 0.0 && dy == 0.0) continue;
      ++nonzero;
      if (l.netlist->cells[i].is_macro) moved_macros.push_back(i);
      if (dx < box.lo[i][0] || dx > box.hi[i][0] || dy < box.lo[i][1] ||
          dy > box.hi[i][1])
        out_of_box.push_back(i);
    }
    if (!moved_macros.empty())
      throw std::invalid_argument("apply_perturbation: macros moved: " +
                                  cell_list(moved_macros));
    if (!out_of_box.empty())
      throw std::invalid_argument("apply_perturbation: offsets outside feasible box: " +
                                  cell_list(out_of_box));
    if (nonzero > delta.eps0)
      throw std::invalid_argument(
          "apply_perturbation: " + std::to_string(nonzero) +
          " cells moved, budget eps0=" + std::to_string(delta.eps0));
  }
  Layout out;
  out.netlist = l.netlist;
  out.grid = l.grid;
  out.coords.resize(n);
  for (int i = 0; i < n; ++i) {
    out.coords[i] = {l.coords[i][0] + delta.delta[i][0],
                     l.coords[i][1] + delta.delta[i][1]};
  }
  return out;
}

void validate_netlist(const Netlist& nl) {
  const int n = nl.n_cells();
  for (std::size_t e = 0; e < nl.nets.size(); ++e) {
    const Net& net = nl.nets[e];
    if (net.size() < 2)
      throw std::invalid_argument("net " + std::to_string(e) + " has fewer than 2 pins");
    std::set<std::tuple<int, double, double>> seen;
    for (const Pin& p : net) {
      if (p.cell < 0 || p.cell >= n)
        throw std::invalid_argument("net " + std::to_string(e) +
                                    ": pin cell index " + std::to_string(p.cell) +
                                    " out of range");
      if (!seen.insert({p.cell, p.ox, p.oy}).second)
        throw std::invalid_argument("net " + std::to_string(e) +
                                    ": duplicate pin on cell " + std::to_string(p.cell));
    }
  }
}

void validate_layout(const Layout& l) {
  if (!l.netlist) throw std::invalid_argument("layout has no netlist");
  if (l.grid.w < 1 || l.grid.h < 1)
    throw std::invalid_argument("grid must be at least 1x1");
  if (l.coords.size() != l.netlist->cells.size())
    throw std::invalid_argument("coords rows != cell count");
  validate_netlist(*l.netlist);
  for (int i = 0; i < l.n_cells(); ++i) {
    for (int a = 0; a < 2; ++a) {
      const double c = l.coords[i][a];
      if (!(c >= 0.0 && c <= 1.0))
        throw std::invalid_argument("cell " + std::to_string(i) +
                                    " coordinate outside [0,1]");
    }
  }
  for (const Net& net : l.netlist->nets) {
    for (const Pin& p : net) {
      const auto q = pin_position(l, p);
      if (!(q[0] >= 0.0 && q[0] <= 1.0 && q[1] >= 0.0 && q[1] <= 1.0))
        throw std::invalid_argument("pin position outside [0,1] on cell " +
                                    std::to_string(p.cell));
    }
  }
}

std::uint64_t layout_hash(const Layout& l) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a64(h, static_cast<std::uint64_t>(l.grid.w));
  h = fnv1a64(h, static_cast<std::uint64_t>(l.grid.h));
  for (const auto& c : l.coords) {
    h = fnv1a64(h, c[0]);
    h = fnv1a64(h, c[1]);
  }
  for (const auto& cell : l.netlist->cells) {
    h = fnv1a64(h, cell.width);
    h = fnv1a64(h, cell.height);
    h = fnv1a64(h, static_cast<std::uint64_t>(cell.is_macro ? 1 : 0));
  }
  for (const auto& net : l.netlist->nets) {
    h = fnv1a64(h, static_cast<std::uint64_t>(net.size()));
    for (const Pin& p : net) {
      h = fnv1a64(h, static_cast<std::uint64_t>(p.cell));
      h = fnv1a64(h, p.ox);
      h = fnv1a64(h, p.oy);
    }
  }
  return h;
}

namespace {

struct MacroRect {
  double x0, y0, x1, y1;
};

bool rects_overlap(const MacroRect& a, const MacroRect& b) {
  return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

bool hits_macro(const std::vector<MacroRect>& macros, double x, double y,
                double w, double h) {
  MacroRect r{x, y, x + w, y + h};
  for (const auto& m : macros)
    if (rects_overlap(m, r)) return true;
  return false;
}

}  // namespace

Layout synth_layout(std::uint64_t seed, int n_cells, int n_nets, int grid_w,
                    int grid_h, const MacroSpec& macros) {
  if (n_cells < 2) throw std::invalid_argument("synth_layout: need at least 2 cells");
  if (macros.count < 0 || macros.count >= n_cells)
    throw std::invalid_argument("synth_layout: bad macro count");
  if (grid_w < 1 || grid_h < 1) throw std::invalid_argument("synth_layout: bad grid");

  auto netlist = std::make_shared<Netlist>();
  Layout l;
  l.grid = {grid_w, grid_h};
  netlist->cells.resize(n_cells);
  l.coords.resize(n_cells);

  // macros first; standard cells must not overlap them
  Rng mrng = Rng::stream(seed, rng_purpose::synth_macros);
  std::vector<MacroRect> placed;
  for (int i = 0; i < macros.count; ++i) {
    const double mw = mrng.uniform(macros.min_size, macros.max_size);
    const double mh = mrng.uniform(macros.min_size, macros.max_size);
    bool ok = false;
    for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
      const double x = mrng.uniform(0.0, 1.0 - mw);
      const double y = mrng.uniform(0.0, 1.0 - mh);
      if (!hits_macro(placed, x, y, mw, mh)) {
        placed.push_back({x, y, x + mw, y + mh});
        netlist->cells[i] = {mw, mh, true};
        l.coords[i] = {x, y};
        ok = true;
      }
    }
    if (!ok)
      throw std::runtime_error("synth_layout: infeasible macro packing after 200 retries");
  }

  // clustered standard cells: mixture of uniform background and Gaussian
  // clusters so the demand map has genuine hotspots
  Rng crng = Rng::stream(seed, rng_purpose::synth_cells);
  const int n_clusters = 3 + static_cast<int>(crng.below(4));  // 3..6
  std::vector<std::array<double, 3>> clusters;  // cx, cy, sigma
  for (int k = 0; k < n_clusters; ++k) {
    clusters.push_back({crng.uniform(0.15, 0.85), crng.uniform(0.15, 0.85),
                        crng.uniform(0.03, 0.06)});
  }
  const double p_cluster = 0.65;
  for (int i = macros.count; i < n_cells; ++i) {
    const double w = crng.uniform(0.002, 0.005);
    const double h = crng.uniform(0.002, 0.005);
    double x = 0.0, y = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      if (crng.u01() < p_cluster) {
        const auto& cl = clusters[crng.below(clusters.size())];
        x = cl[0] + cl[2] * crng.normal();
        y = cl[1] + cl[2] * crng.normal();
      } else {
        x = crng.u01();
        y = crng.u01();
      }
      if (x < 0.0 || y < 0.0 || x > 1.0 - w || y > 1.0 - h) continue;
      if (hits_macro(placed, x, y, w, h)) continue;
      ok = true;
    }
    if (!ok)
      throw std::runtime_error("synth_layout: could not place standard cell " +
                               std::to_string(i));
    netlist->cells[i] = {w, h, false};
    l.coords[i] = {x, y};
  }

  // spatial hash over cell positions for local net selection
  const int bucket_n = 16;
  std::vector<std::vector<int>> buckets(bucket_n * bucket_n);
  for (int i = 0; i < n_cells; ++i) {
    const int bx = gcell_axis(l.coords[i][0], bucket_n);
    const int by = gcell_axis(l.coords[i][1], bucket_n);
    buckets[bx * bucket_n + by].push_back(i);
  }
  auto nearby = [&](double x, double y, double radius, std::vector<int>& out) {
    out.clear();
    const int bx0 = std::max(0, gcell_axis(std::max(0.0, x - radius), bucket_n));
    const int bx1 = std::min(bucket_n - 1, gcell_axis(std::min(1.0, x + radius), bucket_n));
    const int by0 = std::max(0, gcell_axis(std::max(0.0, y - radius), bucket_n));
    const int by1 = std::min(bucket_n - 1, gcell_axis(std::min(1.0, y + radius), bucket_n));
    for (int bx = bx0; bx <= bx1; ++bx)
      for (int by = by0; by <= by1; ++by)
        for (int i : buckets[bx * bucket_n + by]) {
          const double dx = l.coords[i][0] - x;
          const double dy = l.coords[i][1] - y;
          if (dx * dx + dy * dy <= radius * radius) out.push_back(i);
        }
  };

  // degrees 2..6, skewed toward 2-3
  Rng nrng = Rng::stream(seed, rng_purpose::synth_nets);
  const int degree_table[] = {2, 2, 2, 2, 2, 3, 3, 3, 4, 4, 5, 6};
  const int table_n = 12;
  netlist->nets.reserve(n_nets);
  std::vector<int> cand;
  for (int e = 0; e < n_nets; ++e) {
    const int degree = degree_table[nrng.below(table_n)];
    const int anchor = static_cast<int>(nrng.below(n_cells));
    std::vector<int> members{anchor};
    double radius = 0.12;
    while (static_cast<int>(members.size()) < degree && radius < 4.0) {
      nearby(l.coords[anchor][0], l.coords[anchor][1], radius, cand);
      for (int guard = 0; guard < 64 && static_cast<int>(members.size()) < degree &&
                          cand.size() > members.size();
           ++guard) {
        const int c = cand[nrng.below(cand.size())];
        if (std::find(members.begin(), members.end(), c) == members.end())
          members.push_back(c);
      }
      radius *= 2.0;
    }
    Net net;
    for (int c : members) {
      const auto& shape = netlist->cells[c];
      net.push_back({c, nrng.uniform(0.0, shape.width), nrng.uniform(0.0, shape.height)});
    }
    netlist->nets.push_back(std::move(net));
  }

  l.netlist = netlist;
  validate_layout(l);
  return l;
}

}  // namespace congrob
