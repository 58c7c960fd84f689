#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "congrob/features.hpp"
#include "congrob/grid.hpp"
#include "congrob/layout.hpp"

namespace congrob {

// Pre-activations at the sigmoid head are clamped to this band; outside it
// the implemented function is flat and the gradient is exactly zero.
inline constexpr double kPreactClamp = 30.0;

struct ConvLayer {
  enum class Kind { conv, tconv };
  Kind kind = Kind::conv;
  int in_ch = 0, out_ch = 0, k = 0, stride = 1, pad = 0;
  bool relu = true;
  // conv weights: [oc][ky][kx][ic]; tconv weights: [ic][ky][kx][oc]
  std::vector<double> w;
  std::vector<double> b;
};

// conv(3->8,3x3) / conv(8->16,3x3,s2) / conv(16->16,3x3) /
// tconv(16->8,4x4,s2) / conv(8->1,3x3), ReLU between, sigmoid head.
// Maps W x H x 3 to W x H for even W, H >= 8.
struct FcnParams {
  std::vector<ConvLayer> layers;
};

FcnParams make_fcn_params(std::uint64_t seed);

struct FcnForward {
  std::vector<std::vector<double>> act;            // act[0] = input; last = pre-sigmoid
  std::vector<std::array<int, 3>> shape;           // (w, h, c) per stage
  Grid output;                                     // sigmoid(clamp(z))
};

Grid fcn_forward(const FeatureMap& m, const FcnParams& p);
FcnForward fcn_forward_cached(const std::vector<double>& input, int w, int h,
                              const FcnParams& p);

struct FcnBackwardResult {
  FcnParams param_grads;
  std::vector<double> input_grad;  // W*H*3 channel-last
};

// exact reverse-mode gradients of <out_grad, fcn_forward(m)>
FcnBackwardResult fcn_backward(const FeatureMap& m, const FcnParams& p,
                               const Grid& out_grad);

struct Objective {
  enum class Kind { score, bce } kind = Kind::score;
  const Grid* label = nullptr;  // required for bce
};

// objective value and d(objective)/dM; param gradients skipped (attack path)
struct FcnInputGrad {
  double value = 0.0;
  std::vector<double> input_grad;
};
FcnInputGrad fcn_input_gradient(const FeatureMap& m, const FcnParams& p,
                                const Objective& obj);

// mean pixel BCE and parameter gradients (training path)
struct FcnTrainGrad {
  double loss = 0.0;
  FcnParams param_grads;
};
FcnTrainGrad fcn_bce_param_gradients(const FeatureMap& m, const FcnParams& p,
                                     const Grid& label);

// --- single-layer graph convolution over the star-expanded netlist ---

struct GcnParams {
  std::vector<double> w1;  // 4 x 16 row-major [feature][hidden]
  std::vector<double> b1;  // 16
  std::vector<double> w2;  // 16
  double b2 = 0.0;
};

GcnParams make_gcn_params(std::uint64_t seed);

inline constexpr int kGcnIn = 4;
inline constexpr int kGcnHidden = 16;

Grid gcn_forward(const Layout& l, const GcnParams& p);

struct GcnInputGrad {
  double value = 0.0;
  std::vector<std::array<double, 2>> coord_grad;  // n x 2, direct d/dX
};
GcnInputGrad gcn_input_gradient(const Layout& l, const GcnParams& p,
                                const Objective& obj);

struct GcnTrainGrad {
  double loss = 0.0;
  GcnParams param_grads;
};
GcnTrainGrad gcn_bce_param_gradients(const Layout& l, const GcnParams& p,
                                     const Grid& label);

// --- model wrapper + checkpoints ---

struct Model {
  enum class Kind { fcn, gcn } kind = Kind::fcn;
  FcnParams fcn;
  GcnParams gcn;
  FeatureScales scales;
};

Grid model_predict(const Model& m, const Layout& l);

void save_model(const std::string& dir, const Model& m);
Model load_model(const std::string& dir);

// numerically stable helpers shared by both models
double stable_sigmoid(double z);
double stable_softplus(double z);

}  // namespace congrob
