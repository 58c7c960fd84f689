#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace congrob {

// W x H scalar field. Storage matches the TEN container with C=1:
// row-major over (x, y), i.e. v[x * h + y].
struct Grid {
  int w = 0;
  int h = 0;
  std::vector<double> v;

  Grid() = default;
  Grid(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}

  double& at(int x, int y) { return v[static_cast<std::size_t>(x) * h + y]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(x) * h + y]; }
  std::size_t size() const { return v.size(); }

  bool same_shape(const Grid& o) const { return w == o.w && h == o.h; }
};

// General dense tensor for the TEN file container (shape W x H x C,
// row-major, 64-bit little-endian payload).
struct Tensor {
  int w = 0;
  int h = 0;
  int c = 0;
  std::vector<double> data;  // index ((x * h) + y) * c + ch

  Tensor() = default;
  Tensor(int w_, int h_, int c_)
      : w(w_), h(h_), c(c_), data(static_cast<std::size_t>(w_) * h_ * c_, 0.0) {}

  double& at(int x, int y, int ch) {
    return data[(static_cast<std::size_t>(x) * h + y) * c + ch];
  }
  double at(int x, int y, int ch) const {
    return data[(static_cast<std::size_t>(x) * h + y) * c + ch];
  }
};

void write_ten(const std::string& path, const Tensor& t);
Tensor read_ten(const std::string& path);

Tensor to_tensor(const Grid& g);
Grid to_grid(const Tensor& t);  // requires t.c == 1

// Flat helpers used by checkpoint IO: arbitrary payload as a (n,1,1) tensor.
Tensor flat_tensor(const std::vector<double>& data);

}  // namespace congrob
