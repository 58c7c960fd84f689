#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "congrob/features.hpp"
#include "congrob/predictor.hpp"
#include "congrob/rng.hpp"

namespace congrob {

namespace {

constexpr double kProbClamp = 1e-7;  // bin probabilities entering BCE

// Star expansion: one extra node per net, adjacent to every distinct cell
// holding one of its pins. Normalization D^{-1/2}(A+I)D^{-1/2}.
struct StarGraph {
  int n_cells = 0;
  int n_nets = 0;
  std::vector<std::vector<int>> nbr;    // dedup neighbor lists, no self loops
  std::vector<double> inv_sqrt_deg;     // deg includes the self loop
  std::vector<std::array<double, 4>> feat;
  std::vector<NetBbox> bboxes;          // per net, for the star coordinate grads

  int nodes() const { return n_cells + n_nets; }
};

StarGraph build_graph(const Layout& l) {
  StarGraph g;
  g.n_cells = l.n_cells();
  g.n_nets = static_cast<int>(l.netlist->nets.size());
  const int N = g.nodes();
  g.nbr.resize(N);
  std::vector<int> cell_degree(g.n_cells, 0);  // distinct nets per cell
  std::vector<int> cell_pins(g.n_cells, 0);
  std::vector<int> members;
  for (int e = 0; e < g.n_nets; ++e) {
    const Net& net = l.netlist->nets[e];
    members.clear();
    for (const Pin& p : net) {
      ++cell_pins[p.cell];
      members.push_back(p.cell);
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    const int star = g.n_cells + e;
    for (int c : members) {
      ++cell_degree[c];
      g.nbr[star].push_back(c);
      g.nbr[c].push_back(star);
    }
  }
  g.inv_sqrt_deg.resize(N);
  for (int i = 0; i < N; ++i)
    g.inv_sqrt_deg[i] = 1.0 / std::sqrt(1.0 + static_cast<double>(g.nbr[i].size()));

  g.feat.resize(N);
  for (int i = 0; i < g.n_cells; ++i)
    g.feat[i] = {l.coords[i][0], l.coords[i][1], cell_degree[i] / 16.0,
                 cell_pins[i] / 16.0};

  g.bboxes.reserve(g.n_nets);
  for (int e = 0; e < g.n_nets; ++e) {
    const NetBbox bb = net_bbox(l, e);
    g.bboxes.push_back(bb);
    const double np = static_cast<double>(l.netlist->nets[e].size());
    g.feat[g.n_cells + e] = {0.5 * (bb.x_min + bb.x_max), 0.5 * (bb.y_min + bb.y_max),
                             np / 16.0, np / 16.0};
  }
  return g;
}

struct GcnWork {
  StarGraph graph;
  std::vector<double> pre_agg;   // X W1, N x 16
  std::vector<double> hidden;    // relu(A_hat pre_agg + b1)
  std::vector<double> z;         // per-node pre-sigmoid
  std::vector<double> node_out;  // sigmoid(clamp(z))
  Grid bins;
  std::vector<int> bin_count;
  std::vector<int> cell_bin;
};

GcnWork gcn_run(const Layout& l, const GcnParams& p) {
  GcnWork w;
  w.graph = build_graph(l);
  const StarGraph& g = w.graph;
  const int N = g.nodes();
  w.pre_agg.assign(static_cast<std::size_t>(N) * kGcnHidden, 0.0);
  for (int i = 0; i < N; ++i) {
    double* row = &w.pre_agg[static_cast<std::size_t>(i) * kGcnHidden];
    for (int f = 0; f < kGcnIn; ++f) {
      const double x = g.feat[i][f];
      if (x == 0.0) continue;
      const double* wr = &p.w1[static_cast<std::size_t>(f) * kGcnHidden];
      for (int k = 0; k < kGcnHidden; ++k) row[k] += x * wr[k];
    }
  }
  w.hidden.assign(static_cast<std::size_t>(N) * kGcnHidden, 0.0);
  for (int i = 0; i < N; ++i) {
    double* out = &w.hidden[static_cast<std::size_t>(i) * kGcnHidden];
    const double self = g.inv_sqrt_deg[i] * g.inv_sqrt_deg[i];
    const double* pi = &w.pre_agg[static_cast<std::size_t>(i) * kGcnHidden];
    for (int k = 0; k < kGcnHidden; ++k) out[k] = self * pi[k];
    for (int j : g.nbr[i]) {
      const double c = g.inv_sqrt_deg[i] * g.inv_sqrt_deg[j];
      const double* pj = &w.pre_agg[static_cast<std::size_t>(j) * kGcnHidden];
      for (int k = 0; k < kGcnHidden; ++k) out[k] += c * pj[k];
    }
    for (int k = 0; k < kGcnHidden; ++k) {
      out[k] += p.b1[k];
      if (out[k] < 0.0) out[k] = 0.0;
    }
  }
  w.z.resize(N);
  w.node_out.resize(N);
  for (int i = 0; i < N; ++i) {
    const double* hi = &w.hidden[static_cast<std::size_t>(i) * kGcnHidden];
    double z = p.b2;
    for (int k = 0; k < kGcnHidden; ++k) z += hi[k] * p.w2[k];
    w.z[i] = z;
    w.node_out[i] = stable_sigmoid(std::clamp(z, -kPreactClamp, kPreactClamp));
  }
  // mean scatter of cell nodes into their G-Cells
  w.bins = Grid(l.grid.w, l.grid.h);
  w.bin_count.assign(w.bins.size(), 0);
  w.cell_bin.resize(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i) {
    const auto [gx, gy] = gcell_of(l, i);
    const int b = gx * l.grid.h + gy;
    w.cell_bin[i] = b;
    w.bins.v[b] += w.node_out[i];
    ++w.bin_count[b];
  }
  for (std::size_t b = 0; b < w.bins.size(); ++b)
    if (w.bin_count[b] > 0) w.bins.v[b] /= w.bin_count[b];
  return w;
}

struct BinObjective {
  double value = 0.0;
  std::vector<double> dbin;  // d value / d bin
};

BinObjective bin_objective(const Grid& bins, const Objective& obj) {
  BinObjective r;
  const double inv_hw = 1.0 / static_cast<double>(bins.size());
  r.dbin.assign(bins.size(), 0.0);
  if (obj.kind == Objective::Kind::score) {
    double s2 = 0.0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      s2 += bins.v[b] * bins.v[b];
      r.dbin[b] = 2.0 * inv_hw * bins.v[b];
    }
    r.value = s2 * inv_hw;
  } else {
    if (!obj.label || obj.label->w != bins.w || obj.label->h != bins.h)
      throw std::invalid_argument("bce objective needs a label of matching shape");
    double loss = 0.0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const double y = obj.label->v[b];
      const double pc = std::clamp(bins.v[b], kProbClamp, 1.0 - kProbClamp);
      loss += -y * std::log(pc) - (1.0 - y) * std::log(1.0 - pc);
      const bool live = bins.v[b] > kProbClamp && bins.v[b] < 1.0 - kProbClamp;
      r.dbin[b] = live ? inv_hw * (bins.v[b] - y) / (pc * (1.0 - pc)) : 0.0;
    }
    r.value = loss * inv_hw;
  }
  return r;
}

struct GcnBackward {
  GcnParams param_grads;
  std::vector<std::array<double, 4>> dfeat;
};

GcnBackward gcn_backward(const GcnWork& w, const GcnParams& p,
                         const std::vector<double>& dbin, bool want_params) {
  const StarGraph& g = w.graph;
  const int N = g.nodes();
  GcnBackward r;
  if (want_params) {
    r.param_grads.w1.assign(p.w1.size(), 0.0);
    r.param_grads.b1.assign(p.b1.size(), 0.0);
    r.param_grads.w2.assign(p.w2.size(), 0.0);
    r.param_grads.b2 = 0.0;
  }
  std::vector<double> dz(N, 0.0);
  for (int i = 0; i < g.n_cells; ++i) {
    const int b = w.cell_bin[i];
    const double s = w.node_out[i];
    const bool live = std::fabs(w.z[i]) < kPreactClamp;
    dz[i] = live ? dbin[b] / w.bin_count[b] * s * (1.0 - s) : 0.0;
  }
  // dHidden and readout grads
  std::vector<double> dh(static_cast<std::size_t>(N) * kGcnHidden, 0.0);
  for (int i = 0; i < N; ++i) {
    if (dz[i] == 0.0) continue;
    const double* hi = &w.hidden[static_cast<std::size_t>(i) * kGcnHidden];
    double* dhi = &dh[static_cast<std::size_t>(i) * kGcnHidden];
    for (int k = 0; k < kGcnHidden; ++k) dhi[k] = dz[i] * p.w2[k];
    if (want_params) {
      for (int k = 0; k < kGcnHidden; ++k) r.param_grads.w2[k] += dz[i] * hi[k];
      r.param_grads.b2 += dz[i];
    }
  }
  // relu mask, then dA (pre-aggregation grad through A_hat, symmetric)
  for (int i = 0; i < N; ++i) {
    const double* hi = &w.hidden[static_cast<std::size_t>(i) * kGcnHidden];
    double* dhi = &dh[static_cast<std::size_t>(i) * kGcnHidden];
    for (int k = 0; k < kGcnHidden; ++k)
      if (hi[k] <= 0.0) dhi[k] = 0.0;
  }
  if (want_params) {
    for (int i = 0; i < N; ++i) {
      const double* dhi = &dh[static_cast<std::size_t>(i) * kGcnHidden];
      for (int k = 0; k < kGcnHidden; ++k) r.param_grads.b1[k] += dhi[k];
    }
  }
  std::vector<double> dp(static_cast<std::size_t>(N) * kGcnHidden, 0.0);
  for (int i = 0; i < N; ++i) {
    const double* dhi = &dh[static_cast<std::size_t>(i) * kGcnHidden];
    double* dpi = &dp[static_cast<std::size_t>(i) * kGcnHidden];
    const double self = g.inv_sqrt_deg[i] * g.inv_sqrt_deg[i];
    for (int k = 0; k < kGcnHidden; ++k) dpi[k] += self * dhi[k];
    for (int j : g.nbr[i]) {
      const double c = g.inv_sqrt_deg[i] * g.inv_sqrt_deg[j];
      double* dpj = &dp[static_cast<std::size_t>(j) * kGcnHidden];
      for (int k = 0; k < kGcnHidden; ++k) dpj[k] += c * dhi[k];
    }
  }
  r.dfeat.assign(N, {0.0, 0.0, 0.0, 0.0});
  for (int i = 0; i < N; ++i) {
    const double* dpi = &dp[static_cast<std::size_t>(i) * kGcnHidden];
    for (int f = 0; f < kGcnIn; ++f) {
      const double* wr = &p.w1[static_cast<std::size_t>(f) * kGcnHidden];
      double acc = 0.0;
      for (int k = 0; k < kGcnHidden; ++k) acc += dpi[k] * wr[k];
      r.dfeat[i][f] = acc;
      if (want_params) {
        const double x = g.feat[i][f];
        if (x != 0.0) {
          double* pw = &r.param_grads.w1[static_cast<std::size_t>(f) * kGcnHidden];
          for (int k = 0; k < kGcnHidden; ++k) pw[k] += x * dpi[k];
        }
      }
    }
  }
  return r;
}

std::vector<std::array<double, 2>> feat_to_coord_grad(const Layout& l,
                                                      const StarGraph& g,
                                                      const GcnBackward& bw) {
  std::vector<std::array<double, 2>> grad(l.n_cells(), {0.0, 0.0});
  for (int i = 0; i < g.n_cells; ++i) {
    grad[i][0] += bw.dfeat[i][0];
    grad[i][1] += bw.dfeat[i][1];
  }
  // star centers: (min+max)/2 per axis, gradient split onto the arg pins
  for (int e = 0; e < g.n_nets; ++e) {
    const Net& net = l.netlist->nets[e];
    const NetBbox& bb = g.bboxes[e];
    const auto& df = bw.dfeat[g.n_cells + e];
    grad[net[bb.arg_x_min].cell][0] += 0.5 * df[0];
    grad[net[bb.arg_x_max].cell][0] += 0.5 * df[0];
    grad[net[bb.arg_y_min].cell][1] += 0.5 * df[1];
    grad[net[bb.arg_y_max].cell][1] += 0.5 * df[1];
  }
  return grad;
}

}  // namespace

GcnParams make_gcn_params(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, rng_purpose::init_gcn);
  GcnParams p;
  p.w1.resize(static_cast<std::size_t>(kGcnIn) * kGcnHidden);
  p.b1.assign(kGcnHidden, 0.0);
  p.w2.resize(kGcnHidden);
  const double l1 = std::sqrt(6.0 / kGcnIn);
  for (double& v : p.w1) v = rng.uniform(-l1, l1);
  const double l2 = std::sqrt(6.0 / kGcnHidden);
  for (double& v : p.w2) v = rng.uniform(-l2, l2);
  p.b2 = 0.0;
  return p;
}

Grid gcn_forward(const Layout& l, const GcnParams& p) {
  return gcn_run(l, p).bins;
}

GcnInputGrad gcn_input_gradient(const Layout& l, const GcnParams& p,
                                const Objective& obj) {
  const GcnWork w = gcn_run(l, p);
  const BinObjective bo = bin_objective(w.bins, obj);
  const GcnBackward bw = gcn_backward(w, p, bo.dbin, /*want_params=*/false);
  GcnInputGrad r;
  r.value = bo.value;
  r.coord_grad = feat_to_coord_grad(l, w.graph, bw);
  return r;
}

GcnTrainGrad gcn_bce_param_gradients(const Layout& l, const GcnParams& p,
                                     const Grid& label) {
  Objective obj;
  obj.kind = Objective::Kind::bce;
  obj.label = &label;
  const GcnWork w = gcn_run(l, p);
  const BinObjective bo = bin_objective(w.bins, obj);
  const GcnBackward bw = gcn_backward(w, p, bo.dbin, /*want_params=*/true);
  GcnTrainGrad r;
  r.loss = bo.value;
  r.param_grads = bw.param_grads;
  return r;
}

}  // namespace congrob
