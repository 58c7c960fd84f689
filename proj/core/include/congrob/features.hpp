#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "congrob/grid.hpp"
#include "congrob/layout.hpp"

namespace congrob {

// Bounding box over a net's pin positions. Arg indices are pin positions
// within the net; ties resolve to the lowest pin index, and that pin is the
// one carrying the subgradient.
struct NetBbox {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  int arg_x_min = 0, arg_x_max = 0, arg_y_min = 0, arg_y_max = 0;

  double span_x() const { return x_max - x_min; }
  double span_y() const { return y_max - y_min; }
};

// Fixed per-channel divisors bringing raw map values near [0,1].
struct FeatureScales {
  double rudy = 8.0;
  double pin_rudy = 16.0;
  double macro = 1.0;
};

// The W x H x 3 predictor input. Channels are stored already scaled.
struct FeatureMap {
  int w = 0;
  int h = 0;
  Grid rudy;
  Grid pin_rudy;
  Grid macro_region;
  FeatureScales scales;
  std::uint64_t provenance = 0;

  // channel-last buffer, index ((x*h)+y)*3 + c
  std::vector<double> stacked() const;
  Tensor to_tensor() const;
};

NetBbox net_bbox(const Layout& l, int net);

// Raw (unscaled) channels. RUDY spreads each net's density over its bbox by
// fractional tile overlap; PinRUDY deposits the net density at each pin's
// tile; MacroRegion is the fraction of each tile covered by the macro union.
Grid rudy_map(const Layout& l);
Grid pinrudy_map(const Layout& l);
Grid macro_map(const Layout& l);

FeatureMap feature_map(const Layout& l, const FeatureScales& scales = {});

// Adjoint of the linearization of feature_map at the layout's coordinates:
// given gbar on the scaled channels (channel-last W*H*3), returns
// sum_b gbar(b) * dM(b)/dX as an n x 2 array. The macro channel carries no
// gradient; bbox-edge gradients go to the recorded arg pins.
std::vector<std::array<double, 2>> feature_vjp(const Layout& l,
                                               const std::vector<double>& gbar,
                                               const FeatureScales& scales = {});

}  // namespace congrob
