#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvd/dsl.hpp"
#include "lvd/energy.hpp"
#include "lvd/grid.hpp"
#include "lvd/rng.hpp"

namespace lvd::guidance {

using energy::EnergyConfig;

class GuidanceError : public std::runtime_error {
 public:
  enum Kind { EmptyDsl, ShapeMismatch };
  GuidanceError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct GuidanceSchedule {
  int total_steps = 40;
  int guided_steps = 10;
  int repeats_per_step = 5;
  std::vector<double> alpha_bar;  // filled from make_alpha_bar when empty
  double scale = 5.0;
};

// Cumulative product of (1-beta) with beta linear from 0.00085 to 0.012 over
// 1000 indices; step t maps to index round(999*(T-1-t)/(T-1)), so t=0 is the
// noisiest step (smallest alpha_bar, largest sqrt(1-alpha_bar)).
inline std::vector<double> make_alpha_bar(int total_steps) {
  if (total_steps < 1) throw GuidanceError(GuidanceError::ShapeMismatch,
                                           "total_steps must be >= 1");
  std::vector<double> abar_full(1000);
  double prod = 1.0;
  for (int m = 0; m < 1000; ++m) {
    double beta = 0.00085 + (0.012 - 0.00085) * m / 999.0;
    prod *= 1.0 - beta;
    abar_full[m] = prod;
  }
  std::vector<double> out(total_steps);
  for (int t = 0; t < total_steps; ++t) {
    int idx = total_steps == 1
                  ? 999
                  : static_cast<int>(std::floor(
                        999.0 * (total_steps - 1 - t) / (total_steps - 1) + 0.5));
    out[t] = abar_full[idx];
  }
  return out;
}

// Per-(frame, object) logit field; attention(f,o) = softmax of the slice.
struct SubstrateState {
  int frames = 0;
  int H = 0;
  int W = 0;
  std::vector<int> ids;       // object ids, first-appearance order
  std::vector<Mat> logits;    // frames x objects slices, frame-major
  uint64_t seed = 0;

  int object_count() const { return static_cast<int>(ids.size()); }

  Mat& slice(int frame_idx0, int obj_idx) {
    return logits[frame_idx0 * object_count() + obj_idx];
  }
  const Mat& slice(int frame_idx0, int obj_idx) const {
    return logits[frame_idx0 * object_count() + obj_idx];
  }

  Mat attention(int frame_idx0, int obj_idx) const {
    const Mat& z = slice(frame_idx0, obj_idx);
    Mat a(z.h, z.w);
    double zmax = z.v[0];
    for (double x : z.v) zmax = std::max(zmax, x);
    double s = 0.0;
    for (int i = 0; i < z.size(); ++i) {
      a.v[i] = std::exp(z.v[i] - zmax);
      s += a.v[i];
    }
    for (double& x : a.v) x /= s;
    return a;
  }
};

struct MetricsEntry {
  int frame = 0;  // 1-based
  int id = 0;
  double mass = 0.0;      // in-box attention fraction
  double com_err = 0.0;   // cells
  bool has_vel = false;
  double vel_err = 0.0;   // cells/frame vs the mask CoM velocity
};

struct GroundingMetrics {
  std::vector<MetricsEntry> entries;
  double min_mass = 0.0;
  double mean_mass = 0.0;
  double max_com_err = 0.0;
  double mean_com_err = 0.0;
  double max_vel_err = 0.0;
  double mean_vel_err = 0.0;
};

struct TraceRow {
  int step = 0;
  int repeat = 0;
  double e_topk = 0.0;
  double e_com = 0.0;
  double e_total = 0.0;
};

struct GuidanceResult {
  SubstrateState state;
  GroundingMetrics metrics;
  std::vector<TraceRow> trace;
};

// Called after each applied update with the substrate as it then stands.
using StepObserver = std::function<void(int step, int repeat, const SubstrateState&)>;

inline std::vector<std::pair<int, Mat>> objects_in_frame(const DynamicSceneLayout& dsl,
                                                         int frame, int H, int W) {
  std::vector<std::pair<int, Mat>> out;
  for (const Frame& f : dsl.frames) {
    if (f.index != frame) continue;
    for (const BoundingBox& b : f.boxes)
      out.emplace_back(b.id, energy::rasterize_mask(b, dsl.canvas, H, W));
  }
  return out;
}

namespace detail {

// Per-cell step clamp, in natural log-odds units. Unclamped steps diverge on
// diffuse maps because the CoM force grows with grid radius; the clamp keeps
// the multiplicative-weights update inside its stable region.
constexpr double kLogitStepClamp = 1.0;

struct SliceRef {
  int frame_idx0;
  int obj_idx;
  Mat mask;
  Point mask_com;
};

inline GroundingMetrics compute_metrics(const SubstrateState& state,
                                        const std::vector<SliceRef>& slices) {
  GroundingMetrics m;
  std::map<std::pair<int, int>, Point> coms;  // (frame0, obj) -> attention CoM
  for (const SliceRef& s : slices) {
    Mat a = state.attention(s.frame_idx0, s.obj_idx);
    double mass = 0.0;
    for (int i = 0; i < a.size(); ++i) mass += a.v[i] * s.mask.v[i];
    Point pc = energy::com_of_map(a);
    coms[{s.frame_idx0, s.obj_idx}] = pc;
    MetricsEntry e;
    e.frame = s.frame_idx0 + 1;
    e.id = state.ids[s.obj_idx];
    e.mass = mass;
    e.com_err = std::hypot(pc.x - s.mask_com.x, pc.y - s.mask_com.y);
    m.entries.push_back(e);
  }
  // velocity error per consecutive-frame pair of the same object
  std::map<std::pair<int, int>, const SliceRef*> by_key;
  for (const SliceRef& s : slices) by_key[{s.frame_idx0, s.obj_idx}] = &s;
  for (MetricsEntry& e : m.entries) {
    auto key = std::make_pair(e.frame - 1, 0);
    // find obj_idx back from id
    int obj_idx = -1;
    for (int oi = 0; oi < state.object_count(); ++oi)
      if (state.ids[oi] == e.id) obj_idx = oi;
    key.second = obj_idx;
    auto next = by_key.find({e.frame, obj_idx});
    auto cur = by_key.find(key);
    if (next == by_key.end() || cur == by_key.end()) continue;
    Point va{coms[{e.frame, obj_idx}].x - coms[key].x,
             coms[{e.frame, obj_idx}].y - coms[key].y};
    Point vm{next->second->mask_com.x - cur->second->mask_com.x,
             next->second->mask_com.y - cur->second->mask_com.y};
    e.has_vel = true;
    e.vel_err = std::hypot(va.x - vm.x, va.y - vm.y);
  }

  if (!m.entries.empty()) {
    m.min_mass = 1.0;
    double mass_sum = 0.0, com_sum = 0.0, vel_sum = 0.0;
    int vel_n = 0;
    for (const MetricsEntry& e : m.entries) {
      m.min_mass = std::min(m.min_mass, e.mass);
      m.max_com_err = std::max(m.max_com_err, e.com_err);
      mass_sum += e.mass;
      com_sum += e.com_err;
      if (e.has_vel) {
        m.max_vel_err = std::max(m.max_vel_err, e.vel_err);
        vel_sum += e.vel_err;
        ++vel_n;
      }
    }
    m.mean_mass = mass_sum / m.entries.size();
    m.mean_com_err = com_sum / m.entries.size();
    m.mean_vel_err = vel_n ? vel_sum / vel_n : 0.0;
  }
  return m;
}

}  // namespace detail

// Runs the guidance schedule against the softmax substrate. Gradient steps
// are multiplicative-weights updates on each attention simplex:
//   z <- z - clamp(sqrt(1-alpha_bar_t)*scale * dE/dA, +-1)
// with dE/dA evaluated on the unit-sum softmax maps. Energies are reported on
// mean-one rescaled maps (HW*A) so a perfectly box-confined map scores
// e_topk = -w_fg at any resolution. Steps >= guided_steps apply no update.
inline GuidanceResult run_guidance(const DynamicSceneLayout& dsl,
                                   const GuidanceSchedule& schedule,
                                   const EnergyConfig& cfg, int H, int W,
                                   uint64_t seed, const StepObserver& observer = {}) {
  if (dsl.frame_count() < 2)
    throw GuidanceError(GuidanceError::EmptyDsl, "EmptyDsl: need at least 2 frames");
  if (H < 2 || W < 2)
    throw GuidanceError(GuidanceError::ShapeMismatch, "latent grid must be at least 2x2");
  if (schedule.guided_steps > schedule.total_steps ||
      schedule.repeats_per_step < 1)
    throw GuidanceError(GuidanceError::ShapeMismatch, "invalid schedule");

  std::vector<double> abar =
      schedule.alpha_bar.empty() ? make_alpha_bar(schedule.total_steps)
                                 : schedule.alpha_bar;
  if (static_cast<int>(abar.size()) != schedule.total_steps)
    throw GuidanceError(GuidanceError::ShapeMismatch,
                        "alpha_bar length != total_steps");

  GuidanceResult res;
  SubstrateState& st = res.state;
  st.frames = dsl.frame_count();
  st.H = H;
  st.W = W;
  st.ids = object_ids(dsl);
  st.seed = seed;
  if (st.ids.empty())
    throw GuidanceError(GuidanceError::EmptyDsl, "EmptyDsl: no boxes in any frame");

  Rng rng(seed);
  st.logits.reserve(static_cast<size_t>(st.frames) * st.ids.size());
  for (int f = 0; f < st.frames; ++f)
    for (size_t o = 0; o < st.ids.size(); ++o) {
      Mat z(H, W);
      for (double& x : z.v) x = rng.normal();
      st.logits.push_back(std::move(z));
    }

  std::vector<detail::SliceRef> slices;
  for (int f = 0; f < st.frames; ++f) {
    for (const BoundingBox& b : dsl.frames[f].boxes) {
      int oi = static_cast<int>(
          std::find(st.ids.begin(), st.ids.end(), b.id) - st.ids.begin());
      Mat mask = energy::rasterize_mask(b, dsl.canvas, H, W);
      if (mask.sum() <= 0.0)
        throw GuidanceError(GuidanceError::ShapeMismatch,
                            "box grounds no cells at " + std::to_string(H) + "x" +
                                std::to_string(W) + " for id " + std::to_string(b.id) +
                                " frame " + std::to_string(f + 1));
      Point mc = energy::com_of_map(mask);
      slices.push_back({f, oi, std::move(mask), mc});
    }
  }

  int n_slices = static_cast<int>(slices.size());
  int hw = H * W;
  for (int t = 0; t < schedule.total_steps; ++t) {
    if (t >= schedule.guided_steps) continue;  // no-op denoiser afterwards
    double lr = std::sqrt(1.0 - abar[t]) * schedule.scale;
    for (int r = 0; r < schedule.repeats_per_step; ++r) {
      std::vector<Mat> atts(n_slices);
      std::vector<Point> att_coms(n_slices);
      for (int s = 0; s < n_slices; ++s) {
        atts[s] = st.attention(slices[s].frame_idx0, slices[s].obj_idx);
        att_coms[s] = energy::com_of_map(atts[s]);
      }

      // energy trace on mean-one maps
      double topk_sum = 0.0;
      std::vector<Mat> grads(n_slices);
      for (int s = 0; s < n_slices; ++s) {
        Mat ahat = atts[s];
        for (double& x : ahat.v) x *= hw;
        topk_sum += energy::e_topk(ahat, slices[s].mask, cfg);
        grads[s] = energy::grad_e_topk(ahat, slices[s].mask, cfg);
      }

      // CoM term: accumulate dE/d(com) per slice, then push through the
      // quotient on the unit-sum maps
      std::map<std::pair<int, int>, int> index_of;
      for (int s = 0; s < n_slices; ++s)
        index_of[{slices[s].frame_idx0, slices[s].obj_idx}] = s;
      std::vector<Point> dEdp(n_slices, Point{0.0, 0.0});
      double com_sum = 0.0;
      int com_n = 0;
      for (int s = 0; s < n_slices; ++s) {
        double dpx = att_coms[s].x - slices[s].mask_com.x;
        double dpy = att_coms[s].y - slices[s].mask_com.y;
        com_sum += dpx * dpx + dpy * dpy;
        ++com_n;
        dEdp[s].x += 2.0 * dpx;
        dEdp[s].y += 2.0 * dpy;
        auto nxt = index_of.find({slices[s].frame_idx0 + 1, slices[s].obj_idx});
        if (nxt == index_of.end()) continue;
        int s2 = nxt->second;
        double dvx = (att_coms[s2].x - att_coms[s].x) -
                     (slices[s2].mask_com.x - slices[s].mask_com.x);
        double dvy = (att_coms[s2].y - att_coms[s].y) -
                     (slices[s2].mask_com.y - slices[s].mask_com.y);
        com_sum += dvx * dvx + dvy * dvy;
        dEdp[s].x -= 2.0 * dvx;
        dEdp[s].y -= 2.0 * dvy;
        dEdp[s2].x += 2.0 * dvx;
        dEdp[s2].y += 2.0 * dvy;
      }

      TraceRow row;
      row.step = t;
      row.repeat = r;
      row.e_topk = topk_sum / n_slices;
      row.e_com = com_n ? com_sum / com_n : 0.0;
      row.e_total = row.e_topk + cfg.com_weight * row.e_com;
      res.trace.push_back(row);

      for (int s = 0; s < n_slices; ++s) {
        const Mat& a = atts[s];
        double sa = a.sum();
        Mat& z = st.slice(slices[s].frame_idx0, slices[s].obj_idx);
        for (int i = 0; i < a.h; ++i)
          for (int j = 0; j < a.w; ++j) {
            double cx = j + 0.5, cy = i + 0.5;
            double gc = (dEdp[s].x * (cx - att_coms[s].x) +
                         dEdp[s].y * (cy - att_coms[s].y)) /
                        sa / com_n;
            double g = grads[s].at(i, j) + cfg.com_weight * gc;
            double step = lr * g;
            step = std::clamp(step, -detail::kLogitStepClamp,
                              detail::kLogitStepClamp);
            z.at(i, j) -= step;
          }
      }
      if (observer) observer(t, r, st);
    }
  }

  res.metrics = detail::compute_metrics(st, slices);
  return res;
}

inline std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  os << "step,repeat,e_topk,e_com,e_total\n";
  os.precision(17);
  for (const TraceRow& r : trace)
    os << r.step << "," << r.repeat << "," << r.e_topk << "," << r.e_com << ","
       << r.e_total << "\n";
  return os.str();
}

inline nlohmann::json metrics_to_json(const GroundingMetrics& m) {
  nlohmann::json j;
  j["per_slice"] = nlohmann::json::array();
  for (const MetricsEntry& e : m.entries) {
    nlohmann::json je{{"frame", e.frame},
                      {"id", e.id},
                      {"mass", e.mass},
                      {"com_err", e.com_err}};
    if (e.has_vel) je["vel_err"] = e.vel_err;
    j["per_slice"].push_back(je);
  }
  j["aggregates"] = {{"min_mass", m.min_mass},
                     {"mean_mass", m.mean_mass},
                     {"max_com_err", m.max_com_err},
                     {"mean_com_err", m.mean_com_err},
                     {"max_vel_err", m.max_vel_err},
                     {"mean_vel_err", m.mean_vel_err}};
  return j;
}

}  // namespace lvd::guidance
