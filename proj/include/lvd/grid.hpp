#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lvd {

// Dense row-major H×W matrix of doubles.
struct Mat {
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int h_, int w_, double fill = 0.0) : h(h_), w(w_), v(h_ * w_, fill) {}

  double& at(int i, int j) { return v[i * w + j]; }
  double at(int i, int j) const { return v[i * w + j]; }
  int size() const { return h * w; }

  double sum() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }

  double max() const {
    double m = v.empty() ? 0.0 : v[0];
    for (double x : v)
      if (x > m) m = x;
    return m;
  }

  bool same_shape(const Mat& o) const { return h == o.h && w == o.w; }
};

inline bool operator==(const Mat& a, const Mat& b) {
  return a.h == b.h && a.w == b.w && a.v == b.v;
}

// Row-major binary layout: int64 h, int64 w, then h*w little-endian float64.
inline void write_mat(const std::string& path, const Mat& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  int64_t h = m.h, w = m.w;
  os.write(reinterpret_cast<const char*>(&h), sizeof h);
  os.write(reinterpret_cast<const char*>(&w), sizeof w);
  os.write(reinterpret_cast<const char*>(m.v.data()),
           static_cast<std::streamsize>(m.v.size() * sizeof(double)));
}

inline Mat read_mat(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  int64_t h = 0, w = 0;
  is.read(reinterpret_cast<char*>(&h), sizeof h);
  is.read(reinterpret_cast<char*>(&w), sizeof w);
  if (!is || h <= 0 || w <= 0) throw std::runtime_error("bad matrix header: " + path);
  Mat m(static_cast<int>(h), static_cast<int>(w));
  is.read(reinterpret_cast<char*>(m.v.data()),
          static_cast<std::streamsize>(m.v.size() * sizeof(double)));
  if (!is) throw std::runtime_error("truncated matrix: " + path);
  return m;
}

}  // namespace lvd
