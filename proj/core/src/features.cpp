#include "congrob/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace congrob {

namespace {

// tile containing v under the half-open [lo, hi) convention (lower edges)
inline int tile_from_below(double v, int n) { return gcell_axis(v, n); }

// tile containing v under the (lo, hi] convention (upper edges)
inline int tile_from_above(double v, int n) {
  int t = static_cast<int>(std::ceil(v * n)) - 1;
  if (t < 0) t = 0;
  if (t > n - 1) t = n - 1;
  return t;
}

inline double overlap_len(double lo, double hi, double a, double b) {
  const double v = std::min(b, hi) - std::max(a, lo);
  return v > 0.0 ? v : 0.0;
}

double net_density(const NetBbox& bb, const GCellGrid& grid) {
  const double sx = std::max(bb.span_x(), grid.pitch_x());
  const double sy = std::max(bb.span_y(), grid.pitch_y());
  return 1.0 / sx + 1.0 / sy;
}

// exact area of a union of axis-aligned rectangles, by x-slab sweep
struct Rect {
  double x0, y0, x1, y1;
};

double union_area(std::vector<Rect>& rects) {
  if (rects.empty()) return 0.0;
  std::vector<double> xs;
  for (const auto& r : rects) {
    xs.push_back(r.x0);
    xs.push_back(r.x1);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double area = 0.0;
  std::vector<std::array<double, 2>> spans;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double xm = 0.5 * (xs[i] + xs[i + 1]);
    spans.clear();
    for (const auto& r : rects)
      if (r.x0 <= xm && xm < r.x1) spans.push_back({r.y0, r.y1});
    if (spans.empty()) continue;
    std::sort(spans.begin(), spans.end());
    double covered = 0.0, cur_lo = spans[0][0], cur_hi = spans[0][1];
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (spans[k][0] > cur_hi) {
        covered += cur_hi - cur_lo;
        cur_lo = spans[k][0];
        cur_hi = spans[k][1];
      } else {
        cur_hi = std::max(cur_hi, spans[k][1]);
      }
    }
    covered += cur_hi - cur_lo;
    area += covered * (xs[i + 1] - xs[i]);
  }
  return area;
}

}  // namespace

NetBbox net_bbox(const Layout& l, int net) {
  if (net < 0 || net >= static_cast<int>(l.netlist->nets.size()))
    throw std::out_of_range("net_bbox: net index " + std::to_string(net));
  const Net& pins = l.netlist->nets[net];
  NetBbox bb;
  const auto q0 = pin_position(l, pins[0]);
  bb.x_min = bb.x_max = q0[0];
  bb.y_min = bb.y_max = q0[1];
  for (int p = 1; p < static_cast<int>(pins.size()); ++p) {
    const auto q = pin_position(l, pins[p]);
    if (q[0] < bb.x_min) { bb.x_min = q[0]; bb.arg_x_min = p; }
    if (q[0] > bb.x_max) { bb.x_max = q[0]; bb.arg_x_max = p; }
    if (q[1] < bb.y_min) { bb.y_min = q[1]; bb.arg_y_min = p; }
    if (q[1] > bb.y_max) { bb.y_max = q[1]; bb.arg_y_max = p; }
  }
  return bb;
}

Grid rudy_map(const Layout& l) {
  const int W = l.grid.w, H = l.grid.h;
  const double wx = l.grid.pitch_x(), wy = l.grid.pitch_y();
  Grid out(W, H);
  for (std::size_t e = 0; e < l.netlist->nets.size(); ++e) {
    const NetBbox bb = net_bbox(l, static_cast<int>(e));
    const double d = net_density(bb, l.grid);
    const int gx0 = tile_from_below(bb.x_min, W), gx1 = tile_from_below(bb.x_max, W);
    const int gy0 = tile_from_below(bb.y_min, H), gy1 = tile_from_below(bb.y_max, H);
    for (int gx = gx0; gx <= gx1; ++gx) {
      const double ox = overlap_len(gx * wx, (gx + 1) * wx, bb.x_min, bb.x_max);
      if (ox == 0.0) continue;
      for (int gy = gy0; gy <= gy1; ++gy) {
        const double oy = overlap_len(gy * wy, (gy + 1) * wy, bb.y_min, bb.y_max);
        if (oy == 0.0) continue;
        out.at(gx, gy) += d * (ox * oy) / (wx * wy);
      }
    }
  }
  return out;
}

Grid pinrudy_map(const Layout& l) {
  const int W = l.grid.w, H = l.grid.h;
  Grid out(W, H);
  for (std::size_t e = 0; e < l.netlist->nets.size(); ++e) {
    const NetBbox bb = net_bbox(l, static_cast<int>(e));
    const double d = net_density(bb, l.grid);
    for (const Pin& p : l.netlist->nets[e]) {
      const auto q = pin_position(l, p);
      out.at(gcell_axis(q[0], W), gcell_axis(q[1], H)) += d;
    }
  }
  return out;
}

Grid macro_map(const Layout& l) {
  const int W = l.grid.w, H = l.grid.h;
  const double wx = l.grid.pitch_x(), wy = l.grid.pitch_y();
  Grid out(W, H);
  std::vector<Rect> macros;
  for (int i = 0; i < l.n_cells(); ++i) {
    const auto& c = l.netlist->cells[i];
    if (!c.is_macro) continue;
    macros.push_back({l.coords[i][0], l.coords[i][1], l.coords[i][0] + c.width,
                      l.coords[i][1] + c.height});
  }
  if (macros.empty()) return out;
  std::vector<Rect> clipped;
  for (int gx = 0; gx < W; ++gx) {
    for (int gy = 0; gy < H; ++gy) {
      const double tx0 = gx * wx, tx1 = (gx + 1) * wx;
      const double ty0 = gy * wy, ty1 = (gy + 1) * wy;
      clipped.clear();
      for (const auto& m : macros) {
        const double x0 = std::max(m.x0, tx0), x1 = std::min(m.x1, tx1);
        const double y0 = std::max(m.y0, ty0), y1 = std::min(m.y1, ty1);
        if (x0 < x1 && y0 < y1) clipped.push_back({x0, y0, x1, y1});
      }
      if (!clipped.empty())
        out.at(gx, gy) = std::min(1.0, union_area(clipped) / (wx * wy));
    }
  }
  return out;
}

FeatureMap feature_map(const Layout& l, const FeatureScales& scales) {
  FeatureMap m;
  m.w = l.grid.w;
  m.h = l.grid.h;
  m.scales = scales;
  m.provenance = layout_hash(l);
  m.rudy = rudy_map(l);
  m.pin_rudy = pinrudy_map(l);
  m.macro_region = macro_map(l);
  for (double& v : m.rudy.v) v /= scales.rudy;
  for (double& v : m.pin_rudy.v) v /= scales.pin_rudy;
  for (double& v : m.macro_region.v) v /= scales.macro;
  return m;
}

std::vector<double> FeatureMap::stacked() const {
  std::vector<double> out(static_cast<std::size_t>(w) * h * 3);
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y) {
      const std::size_t b = (static_cast<std::size_t>(x) * h + y) * 3;
      out[b + 0] = rudy.at(x, y);
      out[b + 1] = pin_rudy.at(x, y);
      out[b + 2] = macro_region.at(x, y);
    }
  return out;
}

Tensor FeatureMap::to_tensor() const {
  Tensor t(w, h, 3);
  t.data = stacked();
  return t;
}

std::vector<std::array<double, 2>> feature_vjp(const Layout& l,
                                               const std::vector<double>& gbar,
                                               const FeatureScales& scales) {
  const int W = l.grid.w, H = l.grid.h;
  if (gbar.size() != static_cast<std::size_t>(W) * H * 3)
    throw std::invalid_argument("feature_vjp: gbar must be W*H*3");
  const double wx = l.grid.pitch_x(), wy = l.grid.pitch_y();
  const double inv_tile = 1.0 / (wx * wy);
  auto g_rudy = [&](int gx, int gy) {
    return gbar[(static_cast<std::size_t>(gx) * H + gy) * 3 + 0] / scales.rudy;
  };
  auto g_pin = [&](int gx, int gy) {
    return gbar[(static_cast<std::size_t>(gx) * H + gy) * 3 + 1] / scales.pin_rudy;
  };

  std::vector<std::array<double, 2>> grad(l.n_cells(), {0.0, 0.0});
  for (std::size_t e = 0; e < l.netlist->nets.size(); ++e) {
    const Net& pins = l.netlist->nets[e];
    const NetBbox bb = net_bbox(l, static_cast<int>(e));
    const double d = net_density(bb, l.grid);

    const int gx0 = tile_from_below(bb.x_min, W), gx1 = tile_from_below(bb.x_max, W);
    const int gy0 = tile_from_below(bb.y_min, H), gy1 = tile_from_below(bb.y_max, H);

    // weighted overlap sums for the density coefficient and the edge tiles
    double r0 = 0.0;
    for (int gx = gx0; gx <= gx1; ++gx) {
      const double ox = overlap_len(gx * wx, (gx + 1) * wx, bb.x_min, bb.x_max);
      if (ox == 0.0) continue;
      for (int gy = gy0; gy <= gy1; ++gy) {
        const double oy = overlap_len(gy * wy, (gy + 1) * wy, bb.y_min, bb.y_max);
        if (oy == 0.0) continue;
        r0 += g_rudy(gx, gy) * ox * oy;
      }
    }
    r0 *= inv_tile;

    double p0 = 0.0;
    for (const Pin& p : pins) {
      const auto q = pin_position(l, p);
      p0 += g_pin(gcell_axis(q[0], W), gcell_axis(q[1], H));
    }

    const double coeff = r0 + p0;
    double d_xmin = 0.0, d_xmax = 0.0, d_ymin = 0.0, d_ymax = 0.0;
    // density term: 1/span only out of the clamped region
    if (bb.span_x() > wx) {
      const double s = 1.0 / (bb.span_x() * bb.span_x());
      d_xmin += coeff * s;
      d_xmax -= coeff * s;
    }
    if (bb.span_y() > wy) {
      const double s = 1.0 / (bb.span_y() * bb.span_y());
      d_ymin += coeff * s;
      d_ymax -= coeff * s;
    }

    // rasterization edges: each bbox edge sweeps exactly one tile column/row.
    // One-sided convention: lower edges live in their [lo,hi) tile, upper
    // edges in their (lo,hi] tile.
    {
      const int gx = tile_from_below(bb.x_min, W);
      const double ox = overlap_len(gx * wx, (gx + 1) * wx, bb.x_min, bb.x_max);
      if (ox > 0.0) {
        double s = 0.0;
        for (int gy = gy0; gy <= gy1; ++gy)
          s += g_rudy(gx, gy) * overlap_len(gy * wy, (gy + 1) * wy, bb.y_min, bb.y_max);
        d_xmin -= d * s * inv_tile;
      }
    }
    {
      const int gx = tile_from_above(bb.x_max, W);
      const double ox = overlap_len(gx * wx, (gx + 1) * wx, bb.x_min, bb.x_max);
      if (ox > 0.0) {
        double s = 0.0;
        for (int gy = gy0; gy <= gy1; ++gy)
          s += g_rudy(gx, gy) * overlap_len(gy * wy, (gy + 1) * wy, bb.y_min, bb.y_max);
        d_xmax += d * s * inv_tile;
      }
    }
    {
      const int gy = tile_from_below(bb.y_min, H);
      const double oy = overlap_len(gy * wy, (gy + 1) * wy, bb.y_min, bb.y_max);
      if (oy > 0.0) {
        double s = 0.0;
        for (int gx = gx0; gx <= gx1; ++gx)
          s += g_rudy(gx, gy) * overlap_len(gx * wx, (gx + 1) * wx, bb.x_min, bb.x_max);
        d_ymin -= d * s * inv_tile;
      }
    }
    {
      const int gy = tile_from_above(bb.y_max, H);
      const double oy = overlap_len(gy * wy, (gy + 1) * wy, bb.y_min, bb.y_max);
      if (oy > 0.0) {
        double s = 0.0;
        for (int gx = gx0; gx <= gx1; ++gx)
          s += g_rudy(gx, gy) * overlap_len(gx * wx, (gx + 1) * wx, bb.x_min, bb.x_max);
        d_ymax += d * s * inv_tile;
      }
    }

    grad[pins[bb.arg_x_min].cell][0] += d_xmin;
    grad[pins[bb.arg_x_max].cell][0] += d_xmax;
    grad[pins[bb.arg_y_min].cell][1] += d_ymin;
    grad[pins[bb.arg_y_max].cell][1] += d_ymax;
  }
  return grad;
}

}  // namespace congrob
