#pragma once

// Property checks over object trajectories: gravity (accelerating fall),
// elastic/inelastic ground contact, and perspective size change. Each verdict
// carries the per-frame evidence needed to recompute it.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvd/dsl.hpp"

namespace lvd::physics {

class PhysicsError : public std::runtime_error {
 public:
  explicit PhysicsError(const std::string& what) : std::runtime_error(what) {}
};

struct PhysicsVerdict {
  std::string property;
  bool holds = false;
  std::vector<double> dy;        // per-step CoM delta y (gravity, bounce)
  std::vector<double> areas;     // per-frame areas (perspective)
  std::optional<int> bounce_frame;  // frame index where an upward rebound lands
  std::string note;
};

// Ground line default: canvas height minus the object's final box height, so
// a box resting on the frame bottom has its CoM one half-height above it.
inline double default_ground_y(const DynamicSceneLayout& dsl, const Trajectory& traj) {
  if (traj.samples.empty()) throw PhysicsError("TooFewFrames: empty trajectory");
  // Recover the final box height from the layout.
  for (auto it = dsl.frames.rbegin(); it != dsl.frames.rend(); ++it)
    for (const auto& b : it->boxes)
      if (b.id == traj.id) return static_cast<double>(dsl.canvas.height - b.h);
  throw PhysicsError("TooFewFrames: id not present in layout");
}

namespace detail {

inline std::vector<double> com_ys(const Trajectory& traj) {
  std::vector<double> ys;
  ys.reserve(traj.samples.size());
  for (const auto& s : traj.samples) ys.push_back(s.com.y);
  return ys;
}

// Box height proxy from the sampled area (trajectories carry CoM + area only).
inline double height_proxy(const Trajectory& traj) {
  double a = traj.samples.back().area;
  return a > 0 ? std::sqrt(a) : 0.0;
}

}  // namespace detail

// Holds iff within every maximal falling run (dy > 0) that starts before the
// object reaches ground_y, the fall speed never decreases.
inline PhysicsVerdict check_gravity(const Trajectory& traj, double ground_y) {
  if (traj.samples.size() < 3) throw PhysicsError("TooFewFrames: need >= 3 samples");
  PhysicsVerdict v;
  v.property = "gravity";
  auto ys = detail::com_ys(traj);

  // Index of the first sample at or below the ground line; pairs beyond it
  // describe post-contact motion, not free fall.
  std::size_t grounded = ys.size();
  for (std::size_t i = 0; i < ys.size(); ++i)
    if (ys[i] >= ground_y) {
      grounded = i;
      break;
    }

  for (std::size_t i = 0; i + 1 < ys.size(); ++i) v.dy.push_back(ys[i + 1] - ys[i]);

  v.holds = true;
  double prev = 0.0;
  bool in_fall = false;
  for (std::size_t i = 0; i < v.dy.size() && i + 1 <= grounded; ++i) {
    double d = v.dy[i];
    if (d > 0) {
      if (in_fall && d < prev) {
        v.holds = false;
        v.note = "fall decelerates at step " + std::to_string(i + 1);
        break;
      }
      in_fall = true;
      prev = d;
    } else {
      in_fall = false;
    }
  }
  return v;
}

// Elastic: after first coming within one box height of the ground line, the
// vertical delta flips from + (down) to - (up) at least once. Inelastic: no
// such rebound anywhere after contact.
inline PhysicsVerdict check_bounce(const Trajectory& traj, double ground_y,
                                   bool elastic) {
  if (traj.samples.size() < 3) throw PhysicsError("TooFewFrames: need >= 3 samples");
  PhysicsVerdict v;
  v.property = elastic ? "bounce_elastic" : "bounce_inelastic";
  auto ys = detail::com_ys(traj);
  double h = detail::height_proxy(traj);

  std::size_t contact = ys.size();
  for (std::size_t i = 0; i < ys.size(); ++i)
    if (std::abs(ys[i] - ground_y) <= h) {
      contact = i;
      break;
    }

  for (std::size_t i = 0; i + 1 < ys.size(); ++i) v.dy.push_back(ys[i + 1] - ys[i]);

  bool rebound = false;
  if (contact < ys.size()) {
    for (std::size_t i = 0; i + 1 < v.dy.size(); ++i) {
      // Rebound pair: downward step then upward step with the apex sample at
      // or after the contact sample.
      if (v.dy[i] > 0 && v.dy[i + 1] < 0 && i + 1 >= contact) {
        rebound = true;
        v.bounce_frame = traj.samples[i + 2].frame;
        break;
      }
    }
  }
  v.holds = elastic ? rebound : !rebound;
  if (elastic && !rebound) v.note = "no upward rebound after ground contact";
  if (!elastic && rebound)
    v.note = "rebound at frame " + std::to_string(*v.bounce_frame);
  return v;
}

// Receding camera: strictly decreasing areas (within tolerance eps);
// approaching: strictly increasing.
inline PhysicsVerdict check_perspective(const Trajectory& traj, bool receding,
                                        double eps = 0.0) {
  if (traj.samples.size() < 2) throw PhysicsError("TooFewFrames: need >= 2 samples");
  PhysicsVerdict v;
  v.property = receding ? "perspective_receding" : "perspective_approaching";
  for (const auto& s : traj.samples) v.areas.push_back(s.area);
  v.holds = true;
  for (std::size_t i = 0; i + 1 < v.areas.size(); ++i) {
    double d = v.areas[i + 1] - v.areas[i];
    bool ok = receding ? d < eps : d > -eps;
    if (!ok) {
      v.holds = false;
      v.note = "area not strictly " +
               std::string(receding ? "decreasing" : "increasing") + " at step " +
               std::to_string(i + 1);
      break;
    }
  }
  return v;
}

inline nlohmann::json verdict_to_json(const PhysicsVerdict& v) {
  nlohmann::json j{{"property", v.property}, {"holds", v.holds}};
  if (!v.dy.empty()) j["dy"] = v.dy;
  if (!v.areas.empty()) j["areas"] = v.areas;
  if (v.bounce_frame) j["bounce_frame"] = *v.bounce_frame;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

}  // namespace lvd::physics
