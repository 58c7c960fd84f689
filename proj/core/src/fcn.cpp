#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "congrob/predictor.hpp"
#include "congrob/rng.hpp"

namespace congrob {

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double stable_softplus(double z) {
  return std::log1p(std::exp(-std::fabs(z))) + std::max(z, 0.0);
}

namespace {

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

inline int tconv_out_dim(int in, int k, int stride, int pad) {
  return (in - 1) * stride - 2 * pad + k;
}

void conv_forward(const std::vector<double>& in, int wi, int hi,
                  const ConvLayer& L, std::vector<double>& out, int& wo, int& ho) {
  wo = conv_out_dim(wi, L.k, L.stride, L.pad);
  ho = conv_out_dim(hi, L.k, L.stride, L.pad);
  out.assign(static_cast<std::size_t>(wo) * ho * L.out_ch, 0.0);
  const int C = L.in_ch, OC = L.out_ch, K = L.k;
  for (int xo = 0; xo < wo; ++xo) {
    for (int yo = 0; yo < ho; ++yo) {
      double* op = &out[(static_cast<std::size_t>(xo) * ho + yo) * OC];
      for (int oc = 0; oc < OC; ++oc) op[oc] = L.b[oc];
      for (int kx = 0; kx < K; ++kx) {
        const int xi = xo * L.stride + kx - L.pad;
        if (xi < 0 || xi >= wi) continue;
        for (int ky = 0; ky < K; ++ky) {
          const int yi = yo * L.stride + ky - L.pad;
          if (yi < 0 || yi >= hi) continue;
          const double* ip = &in[(static_cast<std::size_t>(xi) * hi + yi) * C];
          for (int oc = 0; oc < OC; ++oc) {
            const double* wp = &L.w[((static_cast<std::size_t>(oc) * K + ky) * K + kx) * C];
            double acc = 0.0;
            for (int ic = 0; ic < C; ++ic) acc += ip[ic] * wp[ic];
            op[oc] += acc;
          }
        }
      }
    }
  }
}

void tconv_forward(const std::vector<double>& in, int wi, int hi,
                   const ConvLayer& L, std::vector<double>& out, int& wo, int& ho) {
  wo = tconv_out_dim(wi, L.k, L.stride, L.pad);
  ho = tconv_out_dim(hi, L.k, L.stride, L.pad);
  const int C = L.in_ch, OC = L.out_ch, K = L.k;
  out.assign(static_cast<std::size_t>(wo) * ho * OC, 0.0);
  for (int xo = 0; xo < wo; ++xo)
    for (int yo = 0; yo < ho; ++yo) {
      double* op = &out[(static_cast<std::size_t>(xo) * ho + yo) * OC];
      for (int oc = 0; oc < OC; ++oc) op[oc] = L.b[oc];
    }
  for (int xi = 0; xi < wi; ++xi) {
    for (int yi = 0; yi < hi; ++yi) {
      const double* ip = &in[(static_cast<std::size_t>(xi) * hi + yi) * C];
      for (int kx = 0; kx < K; ++kx) {
        const int xo = xi * L.stride + kx - L.pad;
        if (xo < 0 || xo >= wo) continue;
        for (int ky = 0; ky < K; ++ky) {
          const int yo = yi * L.stride + ky - L.pad;
          if (yo < 0 || yo >= ho) continue;
          double* op = &out[(static_cast<std::size_t>(xo) * ho + yo) * OC];
          for (int ic = 0; ic < C; ++ic) {
            const double v = ip[ic];
            if (v == 0.0) continue;
            const double* wp = &L.w[((static_cast<std::size_t>(ic) * K + ky) * K + kx) * OC];
            for (int oc = 0; oc < OC; ++oc) op[oc] += v * wp[oc];
          }
        }
      }
    }
  }
}

// dIn for conv; also accumulates param grads when pg is non-null
void conv_backward(const std::vector<double>& in, int wi, int hi,
                   const std::vector<double>& dout, int wo, int ho,
                   const ConvLayer& L, std::vector<double>& din, ConvLayer* pg) {
  const int C = L.in_ch, OC = L.out_ch, K = L.k;
  din.assign(static_cast<std::size_t>(wi) * hi * C, 0.0);
  for (int xo = 0; xo < wo; ++xo) {
    for (int yo = 0; yo < ho; ++yo) {
      const double* gp = &dout[(static_cast<std::size_t>(xo) * ho + yo) * OC];
      if (pg)
        for (int oc = 0; oc < OC; ++oc) pg->b[oc] += gp[oc];
      for (int kx = 0; kx < K; ++kx) {
        const int xi = xo * L.stride + kx - L.pad;
        if (xi < 0 || xi >= wi) continue;
        for (int ky = 0; ky < K; ++ky) {
          const int yi = yo * L.stride + ky - L.pad;
          if (yi < 0 || yi >= hi) continue;
          double* dp = &din[(static_cast<std::size_t>(xi) * hi + yi) * C];
          const double* ip = &in[(static_cast<std::size_t>(xi) * hi + yi) * C];
          for (int oc = 0; oc < OC; ++oc) {
            const double g = gp[oc];
            if (g == 0.0) continue;
            const std::size_t wbase = ((static_cast<std::size_t>(oc) * K + ky) * K + kx) * C;
            const double* wp = &L.w[wbase];
            for (int ic = 0; ic < C; ++ic) dp[ic] += g * wp[ic];
            if (pg) {
              double* pw = &pg->w[wbase];
              for (int ic = 0; ic < C; ++ic) pw[ic] += g * ip[ic];
            }
          }
        }
      }
    }
  }
}

void tconv_backward(const std::vector<double>& in, int wi, int hi,
                    const std::vector<double>& dout, int wo, int ho,
                    const ConvLayer& L, std::vector<double>& din, ConvLayer* pg) {
  const int C = L.in_ch, OC = L.out_ch, K = L.k;
  din.assign(static_cast<std::size_t>(wi) * hi * C, 0.0);
  if (pg) {
    for (int xo = 0; xo < wo; ++xo)
      for (int yo = 0; yo < ho; ++yo) {
        const double* gp = &dout[(static_cast<std::size_t>(xo) * ho + yo) * OC];
        for (int oc = 0; oc < OC; ++oc) pg->b[oc] += gp[oc];
      }
  }
  for (int xi = 0; xi < wi; ++xi) {
    for (int yi = 0; yi < hi; ++yi) {
      double* dp = &din[(static_cast<std::size_t>(xi) * hi + yi) * C];
      const double* ip = &in[(static_cast<std::size_t>(xi) * hi + yi) * C];
      for (int kx = 0; kx < K; ++kx) {
        const int xo = xi * L.stride + kx - L.pad;
        if (xo < 0 || xo >= wo) continue;
        for (int ky = 0; ky < K; ++ky) {
          const int yo = yi * L.stride + ky - L.pad;
          if (yo < 0 || yo >= ho) continue;
          const double* gp = &dout[(static_cast<std::size_t>(xo) * ho + yo) * OC];
          for (int ic = 0; ic < C; ++ic) {
            const std::size_t wbase = ((static_cast<std::size_t>(ic) * K + ky) * K + kx) * OC;
            const double* wp = &L.w[wbase];
            double acc = 0.0;
            for (int oc = 0; oc < OC; ++oc) acc += gp[oc] * wp[oc];
            dp[ic] += acc;
            if (pg) {
              double* pw = &pg->w[wbase];
              const double v = ip[ic];
              for (int oc = 0; oc < OC; ++oc) pw[oc] += v * gp[oc];
            }
          }
        }
      }
    }
  }
}

ConvLayer make_layer(ConvLayer::Kind kind, int in_ch, int out_ch, int k,
                     int stride, int pad, bool relu, Rng& rng) {
  ConvLayer L;
  L.kind = kind;
  L.in_ch = in_ch;
  L.out_ch = out_ch;
  L.k = k;
  L.stride = stride;
  L.pad = pad;
  L.relu = relu;
  L.w.resize(static_cast<std::size_t>(in_ch) * out_ch * k * k);
  L.b.assign(out_ch, 0.0);
  const double limit = std::sqrt(6.0 / (in_ch * k * k));
  for (double& v : L.w) v = rng.uniform(-limit, limit);
  return L;
}

ConvLayer zeros_like(const ConvLayer& L) {
  ConvLayer g = L;
  std::fill(g.w.begin(), g.w.end(), 0.0);
  std::fill(g.b.begin(), g.b.end(), 0.0);
  return g;
}

// backward from d/d(pre-sigmoid z); shared by all objectives
FcnBackwardResult backward_from_dz(const FcnForward& f, const FcnParams& p,
                                   std::vector<double> dz, bool want_params) {
  FcnBackwardResult r;
  if (want_params) {
    r.param_grads.layers.reserve(p.layers.size());
    for (const auto& L : p.layers) r.param_grads.layers.push_back(zeros_like(L));
  }
  std::vector<double> grad = std::move(dz);
  std::vector<double> next;
  for (int li = static_cast<int>(p.layers.size()) - 1; li >= 0; --li) {
    const ConvLayer& L = p.layers[li];
    const auto [wi, hi, ci] = f.shape[li];
    const auto [wo, ho, co] = f.shape[li + 1];
    if (L.relu) {
      const std::vector<double>& a = f.act[li + 1];
      for (std::size_t i = 0; i < grad.size(); ++i)
        if (a[i] <= 0.0) grad[i] = 0.0;
    }
    ConvLayer* pg = want_params ? &r.param_grads.layers[li] : nullptr;
    if (L.kind == ConvLayer::Kind::conv)
      conv_backward(f.act[li], wi, hi, grad, wo, ho, L, next, pg);
    else
      tconv_backward(f.act[li], wi, hi, grad, wo, ho, L, next, pg);
    grad.swap(next);
  }
  r.input_grad = std::move(grad);
  return r;
}

}  // namespace

FcnParams make_fcn_params(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, rng_purpose::init_fcn);
  FcnParams p;
  p.layers.push_back(make_layer(ConvLayer::Kind::conv, 3, 8, 3, 1, 1, true, rng));
  p.layers.push_back(make_layer(ConvLayer::Kind::conv, 8, 16, 3, 2, 1, true, rng));
  p.layers.push_back(make_layer(ConvLayer::Kind::conv, 16, 16, 3, 1, 1, true, rng));
  p.layers.push_back(make_layer(ConvLayer::Kind::tconv, 16, 8, 4, 2, 1, true, rng));
  p.layers.push_back(make_layer(ConvLayer::Kind::conv, 8, 1, 3, 1, 1, false, rng));
  return p;
}

FcnForward fcn_forward_cached(const std::vector<double>& input, int w, int h,
                              const FcnParams& p) {
  if (w < 8 || h < 8 || w % 2 != 0 || h % 2 != 0)
    throw std::invalid_argument("fcn: W and H must be even and >= 8");
  if (input.size() != static_cast<std::size_t>(w) * h * 3)
    throw std::invalid_argument("fcn: input must be W*H*3");
  FcnForward f;
  f.act.push_back(input);
  f.shape.push_back({w, h, 3});
  int wi = w, hi = h;
  for (const ConvLayer& L : p.layers) {
    if (f.shape.back()[2] != L.in_ch)
      throw std::invalid_argument("fcn: channel mismatch at layer");
    std::vector<double> out;
    int wo = 0, ho = 0;
    if (L.kind == ConvLayer::Kind::conv)
      conv_forward(f.act.back(), wi, hi, L, out, wo, ho);
    else
      tconv_forward(f.act.back(), wi, hi, L, out, wo, ho);
    if (L.relu)
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    f.act.push_back(std::move(out));
    f.shape.push_back({wo, ho, L.out_ch});
    wi = wo;
    hi = ho;
  }
  if (wi != w || hi != h || f.shape.back()[2] != 1)
    throw std::logic_error("fcn: architecture does not map back to W x H");
  f.output = Grid(w, h);
  const std::vector<double>& z = f.act.back();
  for (std::size_t i = 0; i < z.size(); ++i)
    f.output.v[i] = stable_sigmoid(std::clamp(z[i], -kPreactClamp, kPreactClamp));
  return f;
}

Grid fcn_forward(const FeatureMap& m, const FcnParams& p) {
  return fcn_forward_cached(m.stacked(), m.w, m.h, p).output;
}

FcnBackwardResult fcn_backward(const FeatureMap& m, const FcnParams& p,
                               const Grid& out_grad) {
  if (out_grad.w != m.w || out_grad.h != m.h)
    throw std::invalid_argument("fcn_backward: out_grad shape mismatch");
  FcnForward f = fcn_forward_cached(m.stacked(), m.w, m.h, p);
  const std::vector<double>& z = f.act.back();
  std::vector<double> dz(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = f.output.v[i];
    const bool live = std::fabs(z[i]) < kPreactClamp;
    dz[i] = live ? out_grad.v[i] * s * (1.0 - s) : 0.0;
  }
  return backward_from_dz(f, p, std::move(dz), /*want_params=*/true);
}

FcnInputGrad fcn_input_gradient(const FeatureMap& m, const FcnParams& p,
                                const Objective& obj) {
  FcnForward f = fcn_forward_cached(m.stacked(), m.w, m.h, p);
  const std::vector<double>& z = f.act.back();
  const double inv_hw = 1.0 / (static_cast<double>(m.w) * m.h);
  std::vector<double> dz(z.size());
  FcnInputGrad r;
  if (obj.kind == Objective::Kind::score) {
    double s2 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double s = f.output.v[i];
      s2 += s * s;
      const bool live = std::fabs(z[i]) < kPreactClamp;
      dz[i] = live ? 2.0 * inv_hw * s * s * (1.0 - s) : 0.0;
    }
    r.value = s2 * inv_hw;
  } else {
    if (!obj.label || obj.label->w != m.w || obj.label->h != m.h)
      throw std::invalid_argument("bce objective needs a label of matching shape");
    double loss = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double zc = std::clamp(z[i], -kPreactClamp, kPreactClamp);
      const double y = obj.label->v[i];
      loss += stable_softplus(zc) - y * zc;
      const bool live = std::fabs(z[i]) < kPreactClamp;
      dz[i] = live ? inv_hw * (f.output.v[i] - y) : 0.0;
    }
    r.value = loss * inv_hw;
  }
  r.input_grad = backward_from_dz(f, p, std::move(dz), /*want_params=*/false).input_grad;
  return r;
}

FcnTrainGrad fcn_bce_param_gradients(const FeatureMap& m, const FcnParams& p,
                                     const Grid& label) {
  if (label.w != m.w || label.h != m.h)
    throw std::invalid_argument("fcn_bce_param_gradients: label shape mismatch");
  FcnForward f = fcn_forward_cached(m.stacked(), m.w, m.h, p);
  const std::vector<double>& z = f.act.back();
  const double inv_hw = 1.0 / (static_cast<double>(m.w) * m.h);
  std::vector<double> dz(z.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zc = std::clamp(z[i], -kPreactClamp, kPreactClamp);
    const double y = label.v[i];
    loss += stable_softplus(zc) - y * zc;
    const bool live = std::fabs(z[i]) < kPreactClamp;
    dz[i] = live ? inv_hw * (f.output.v[i] - y) : 0.0;
  }
  FcnTrainGrad r;
  r.loss = loss * inv_hw;
  r.param_grads = backward_from_dz(f, p, std::move(dz), /*want_params=*/true).param_grads;
  return r;
}

Grid model_predict(const Model& m, const Layout& l) {
  if (m.kind == Model::Kind::fcn) return fcn_forward(feature_map(l, m.scales), m.fcn);
  return gcn_forward(l, m.gcn);
}

}  // namespace congrob
