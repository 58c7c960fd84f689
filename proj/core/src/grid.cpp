#include "congrob/grid.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "congrob/hash.hpp"

namespace congrob {

namespace {

void put_le64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_le64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void write_ten(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "TEN " << t.w << " " << t.h << " " << t.c << "\n";
  for (double v : t.data) put_le64(os, v);
  if (!os) throw std::runtime_error("short write: " + path);
}

Tensor read_ten(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  is >> magic;
  if (magic != "TEN") throw std::runtime_error(path + ": bad magic, expected TEN");
  int w = 0, h = 0, c = 0;
  is >> w >> h >> c;
  if (!is || w < 1 || h < 1 || c < 1)
    throw std::runtime_error(path + ": bad TEN header");
  is.get();  // the single newline after the header
  Tensor t(w, h, c);
  for (double& v : t.data) v = get_le64(is);
  if (!is) throw std::runtime_error(path + ": truncated TEN payload");
  return t;
}

Tensor to_tensor(const Grid& g) {
  Tensor t(g.w, g.h, 1);
  t.data = g.v;
  return t;
}

Grid to_grid(const Tensor& t) {
  if (t.c != 1) throw std::runtime_error("to_grid: tensor has more than one channel");
  Grid g(t.w, t.h);
  g.v = t.data;
  return g;
}

Tensor flat_tensor(const std::vector<double>& data) {
  Tensor t(static_cast<int>(data.size()), 1, 1);
  t.data = data;
  return t;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  static const char* d = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = d[h & 0xf];
    h >>= 4;
  }
  return s;
}

}  // namespace congrob
