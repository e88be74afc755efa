#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lvd/dsl.hpp"
#include "lvd/geometry.hpp"
#include "lvd/grid.hpp"

namespace lvd::energy {

struct EnergyConfig {
  double w_fg = 1.0;
  double w_bg = 4.0;
  double topk_fraction = 0.75;
  double com_weight = 0.03;
  double guidance_scale = 5.0;
};

struct EnergyBreakdown {
  double e_topk = 0.0;
  double e_com = 0.0;
  double e_total = 0.0;  // e_topk + com_weight * e_com
};

class EnergyError : public std::runtime_error {
 public:
  enum Kind { ShapeMismatch, ZeroMass };
  EnergyError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline void require_same_shape(const Mat& a, const Mat& b) {
  if (!a.same_shape(b))
    throw EnergyError(EnergyError::ShapeMismatch,
                      "ShapeMismatch: " + std::to_string(a.h) + "x" +
                          std::to_string(a.w) + " vs " + std::to_string(b.h) +
                          "x" + std::to_string(b.w));
}

// Binary mask: cell (i,j) is 1 iff its center lies inside the box
// (clipped to the canvas first).
inline Mat rasterize_mask(const BoundingBox& box, const Canvas& canvas, int H, int W) {
  if (H < 2 || W < 2)
    throw EnergyError(EnergyError::ShapeMismatch, "latent grid must be at least 2x2");
  double x0 = std::max(0, box.x);
  double y0 = std::max(0, box.y);
  double x1 = std::min(canvas.width, box.x + box.w);
  double y1 = std::min(canvas.height, box.y + box.h);
  Mat m(H, W, 0.0);
  if (x1 <= x0 || y1 <= y0) return m;
  double cw = static_cast<double>(canvas.width) / W;
  double ch = static_cast<double>(canvas.height) / H;
  for (int i = 0; i < H; ++i) {
    double cy = (i + 0.5) * ch;
    if (cy < y0 || cy >= y1) continue;
    for (int j = 0; j < W; ++j) {
      double cx = (j + 0.5) * cw;
      if (cx >= x0 && cx < x1) m.at(i, j) = 1.0;
    }
  }
  return m;
}

// k = max(1, ceil(fraction*count)); the epsilon guards against the product
// landing a hair above an exact integer.
inline int topk_count(double fraction, int count) {
  return std::max(1, static_cast<int>(std::ceil(fraction * count - 1e-9)));
}

namespace detail {

// Indices of the top-k cells of A within the region (mask==target), ranked by
// value descending with row-major order breaking ties.
inline std::vector<int> topk_region(const Mat& A, const Mat& M, double target,
                                    double fraction, int* region_count) {
  std::vector<int> idx;
  for (int i = 0; i < A.size(); ++i)
    if (M.v[i] == target) idx.push_back(i);
  *region_count = static_cast<int>(idx.size());
  if (idx.empty()) return {};
  int k = topk_count(fraction, *region_count);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return A.v[a] > A.v[b]; });
  idx.resize(std::min<size_t>(k, idx.size()));
  return idx;
}

}  // namespace detail

// E_topk = -w_fg*mean(top-k_fg of A inside M) + w_bg*mean(top-k_bg of A outside M).
// An empty region contributes 0.
inline double e_topk(const Mat& A, const Mat& M, const EnergyConfig& cfg = {}) {
  require_same_shape(A, M);
  int n_fg = 0, n_bg = 0;
  auto fg = detail::topk_region(A, M, 1.0, cfg.topk_fraction, &n_fg);
  auto bg = detail::topk_region(A, M, 0.0, cfg.topk_fraction, &n_bg);
  double e = 0.0;
  if (!fg.empty()) {
    double s = 0.0;
    for (int i : fg) s += A.v[i];
    e -= cfg.w_fg * s / fg.size();
  }
  if (!bg.empty()) {
    double s = 0.0;
    for (int i : bg) s += A.v[i];
    e += cfg.w_bg * s / bg.size();
  }
  return e;
}

// Subgradient: -w_fg/k_fg on selected foreground cells, +w_bg/k_bg on
// selected background cells, 0 elsewhere.
inline Mat grad_e_topk(const Mat& A, const Mat& M, const EnergyConfig& cfg = {}) {
  require_same_shape(A, M);
  int n_fg = 0, n_bg = 0;
  auto fg = detail::topk_region(A, M, 1.0, cfg.topk_fraction, &n_fg);
  auto bg = detail::topk_region(A, M, 0.0, cfg.topk_fraction, &n_bg);
  Mat g(A.h, A.w, 0.0);
  for (int i : fg) g.v[i] = -cfg.w_fg / fg.size();
  for (int i : bg) g.v[i] = cfg.w_bg / bg.size();
  return g;
}

// Center of mass in cell units; cell (i,j) sits at (j+0.5, i+0.5).
inline Point com_of_map(const Mat& A) {
  double s = A.sum();
  if (s <= 0.0) throw EnergyError(EnergyError::ZeroMass, "ZeroMass: map sums to zero");
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < A.h; ++i)
    for (int j = 0; j < A.w; ++j) {
      double a = A.at(i, j);
      sx += a * (j + 0.5);
      sy += a * (i + 0.5);
    }
  return {sx / s, sy / s};
}

// Single-frame-pair CoM energy:
// ||p^A_t - p^M_t||^2 + ||(p^A_{t+1}-p^A_t) - (p^M_{t+1}-p^M_t)||^2.
inline double e_com(const Point& pa, const Point& pa1, const Point& pm,
                    const Point& pm1) {
  double dpx = pa.x - pm.x, dpy = pa.y - pm.y;
  double dvx = (pa1.x - pa.x) - (pm1.x - pm.x);
  double dvy = (pa1.y - pa.y) - (pm1.y - pm.y);
  return dpx * dpx + dpy * dpy + dvx * dvx + dvy * dvy;
}

inline double e_com(const Mat& A_t, const Mat& A_t1, const Mat& M_t, const Mat& M_t1) {
  Point pa = com_of_map(A_t), pa1 = com_of_map(A_t1);
  Point pm = com_of_map(M_t), pm1 = com_of_map(M_t1);
  double dpx = pa.x - pm.x, dpy = pa.y - pm.y;
  double dvx = (pa1.x - pa.x) - (pm1.x - pm.x);
  double dvy = (pa1.y - pa.y) - (pm1.y - pm.y);
  return dpx * dpx + dpy * dpy + dvx * dvx + dvy * dvy;
}

// Analytic gradient of the pair form with respect to both attention maps,
// through the CoM quotient: d p / d A_ij = (c_ij - p) / sum(A).
inline std::pair<Mat, Mat> grad_e_com(const Mat& A_t, const Mat& A_t1,
                                      const Mat& M_t, const Mat& M_t1) {
  require_same_shape(A_t, A_t1);
  Point pa = com_of_map(A_t), pa1 = com_of_map(A_t1);
  Point pm = com_of_map(M_t), pm1 = com_of_map(M_t1);
  double sa = A_t.sum(), sa1 = A_t1.sum();
  double dpx = pa.x - pm.x, dpy = pa.y - pm.y;
  double dvx = (pa1.x - pa.x) - (pm1.x - pm.x);
  double dvy = (pa1.y - pa.y) - (pm1.y - pm.y);
  // dE/dp^A_t = 2*dpos - 2*dvel ; dE/dp^A_{t+1} = 2*dvel
  double gx_t = 2.0 * dpx - 2.0 * dvx, gy_t = 2.0 * dpy - 2.0 * dvy;
  double gx_t1 = 2.0 * dvx, gy_t1 = 2.0 * dvy;
  Mat g_t(A_t.h, A_t.w), g_t1(A_t.h, A_t.w);
  for (int i = 0; i < A_t.h; ++i)
    for (int j = 0; j < A_t.w; ++j) {
      double cx = j + 0.5, cy = i + 0.5;
      g_t.at(i, j) = (gx_t * (cx - pa.x) + gy_t * (cy - pa.y)) / sa;
      g_t1.at(i, j) = (gx_t1 * (cx - pa1.x) + gy_t1 * (cy - pa1.y)) / sa1;
    }
  return {std::move(g_t), std::move(g_t1)};
}

// One object's attention maps and masks over the frames where it has a box.
struct ObjectTrack {
  int id = 0;
  std::vector<int> frames;  // ascending, 1-based
  std::vector<Mat> maps;
  std::vector<Mat> masks;
};

// e_topk averaged over all (object, frame) slices; e_com averaged over all
// per-frame contributions (position+velocity per frame, position only for an
// object's last frame or before a presence gap).
inline EnergyBreakdown total_energy(const std::vector<ObjectTrack>& tracks,
                                    const EnergyConfig& cfg = {}) {
  double topk_sum = 0.0;
  int slices = 0;
  double com_sum = 0.0;
  int com_n = 0;
  for (const ObjectTrack& tr : tracks) {
    if (tr.maps.size() != tr.masks.size() || tr.maps.size() != tr.frames.size())
      throw EnergyError(EnergyError::ShapeMismatch,
                        "ShapeMismatch: track arrays disagree for id " +
                            std::to_string(tr.id));
    for (size_t i = 0; i < tr.maps.size(); ++i) {
      require_same_shape(tr.maps[i], tr.masks[i]);
      topk_sum += e_topk(tr.maps[i], tr.masks[i], cfg);
      ++slices;

      Point pa = com_of_map(tr.maps[i]);
      Point pm = com_of_map(tr.masks[i]);
      double dpx = pa.x - pm.x, dpy = pa.y - pm.y;
      double c = dpx * dpx + dpy * dpy;
      bool consecutive =
          i + 1 < tr.frames.size() && tr.frames[i + 1] == tr.frames[i] + 1;
      if (consecutive) {
        Point qa = com_of_map(tr.maps[i + 1]);
        Point qm = com_of_map(tr.masks[i + 1]);
        double dvx = (qa.x - pa.x) - (qm.x - pm.x);
        double dvy = (qa.y - pa.y) - (qm.y - pm.y);
        c += dvx * dvx + dvy * dvy;
      }
      com_sum += c;
      ++com_n;
    }
  }
  EnergyBreakdown out;
  out.e_topk = slices ? topk_sum / slices : 0.0;
  out.e_com = com_n ? com_sum / com_n : 0.0;
  out.e_total = out.e_topk + cfg.com_weight * out.e_com;
  return out;
}

// Central finite differences against an arbitrary scalar function of one map.
// Returns the max relative error vs the supplied analytic gradient. The
// denominator is floored at 1% of the instance's gradient scale: at cells
// where both gradients are orders of magnitude below that scale, the FD
// roundoff noise (|f|*eps/2h) exceeds any honest relative comparison, while a
// genuinely wrong gradient (sign, missing term, bad normalization) shows up
// at O(scale) and still fails loudly.
template <typename F>
double fd_max_rel_error(F&& f, Mat x, const Mat& grad, double h = 1e-5) {
  std::vector<double> fds(x.size());
  double scale = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double keep = x.v[i];
    x.v[i] = keep + h;
    double ep = f(x);
    x.v[i] = keep - h;
    double em = f(x);
    x.v[i] = keep;
    fds[i] = (ep - em) / (2.0 * h);
    scale = std::max({scale, std::abs(fds[i]), std::abs(grad.v[i])});
  }
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double fd = fds[i];
    double g = grad.v[i];
    double denom = std::max({std::abs(fd), std::abs(g), 0.01 * scale, 1e-8});
    worst = std::max(worst, std::abs(fd - g) / denom);
  }
  return worst;
}

inline double fd_check_topk(const Mat& A, const Mat& M, const EnergyConfig& cfg = {},
                            double h = 1e-5) {
  Mat g = grad_e_topk(A, M, cfg);
  return fd_max_rel_error([&](const Mat& x) { return e_topk(x, M, cfg); }, A, g, h);
}

inline double fd_check_com(const Mat& A_t, const Mat& A_t1, const Mat& M_t,
                           const Mat& M_t1, double h = 1e-5) {
  auto [g_t, g_t1] = grad_e_com(A_t, A_t1, M_t, M_t1);
  double e1 = fd_max_rel_error(
      [&](const Mat& x) { return e_com(x, A_t1, M_t, M_t1); }, A_t, g_t, h);
  double e2 = fd_max_rel_error(
      [&](const Mat& x) { return e_com(A_t, x, M_t, M_t1); }, A_t1, g_t1, h);
  return std::max(e1, e2);
}

}  // namespace lvd::energy
