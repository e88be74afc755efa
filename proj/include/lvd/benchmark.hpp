#pragma once

// Five-task prompt benchmark: suite generation from templated pools, rule
// based verification of scene layouts, oracle/mutant self-test constructions,
// and report aggregation with deterministic parallel execution.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvd/dsl.hpp"
#include "lvd/rng.hpp"

namespace lvd::bench {

enum class TaskKind {
  Numeracy,
  AttributeBinding,
  Visibility,
  SpatialDynamics,
  SequentialActions,
};

inline constexpr int kTaskCount = 5;

inline const char* task_name(TaskKind k) {
  switch (k) {
    case TaskKind::Numeracy: return "numeracy";
    case TaskKind::AttributeBinding: return "attribute_binding";
    case TaskKind::Visibility: return "visibility";
    case TaskKind::SpatialDynamics: return "spatial_dynamics";
    case TaskKind::SequentialActions: return "sequential_actions";
  }
  return "?";
}

inline std::optional<TaskKind> task_from_name(const std::string& s) {
  for (int i = 0; i < kTaskCount; ++i) {
    auto k = static_cast<TaskKind>(i);
    if (s == task_name(k)) return k;
  }
  return std::nullopt;
}

class BenchError : public std::runtime_error {
 public:
  explicit BenchError(const std::string& what) : std::runtime_error(what) {}
};

// Sample pools.
inline const std::vector<std::string>& object_pool() {
  static const std::vector<std::string> v{"car", "cat", "bird", "ball", "dog"};
  return v;
}

inline const std::vector<std::string>& color_pool() {
  static const std::vector<std::string> v{"red",   "orange", "yellow", "green",
                                          "blue",  "purple", "pink",   "brown",
                                          "black", "white",  "gray"};
  return v;
}

struct LocationTriple {
  std::string loc1, loc2, loc3;
};

inline const std::vector<LocationTriple>& sequential_triples() {
  static const std::vector<LocationTriple> v{
      {"lower left", "lower right", "upper right"},
      {"lower left", "upper left", "upper right"},
      {"lower right", "lower left", "upper left"},
      {"lower right", "upper right", "upper left"},
  };
  return v;
}

// One benchmark prompt. Unused truth fields stay empty; `text` is always
// regenerable from the truth fields via render_text().
struct BenchmarkPrompt {
  TaskKind task = TaskKind::Numeracy;
  std::string text;
  std::uint64_t seed = 0;  // suite seed the prompt was drawn with
  int index = 0;           // position in the suite

  // Truth record.
  int number = 0;           // numeracy
  std::string object1;      // primary object (all tasks)
  std::string object2;      // attribute binding / relative spatial
  std::string color1;       // attribute binding
  std::string color2;
  std::string half;         // visibility: "first" | "second"
  std::string direction;    // spatial: "left_to_right" | "right_to_left"
  bool relative = false;    // spatial: two-object template
  std::string loc1, loc2, loc3;  // sequential
};

namespace detail {

inline std::string pluralize(const std::string& noun, int n) {
  return n > 1 ? noun + "s" : noun;
}

}  // namespace detail

// Rebuild the caption from the truth record through its task template.
inline std::string render_text(const BenchmarkPrompt& p) {
  switch (p.task) {
    case TaskKind::Numeracy:
      return "A realistic lively video of a scene with " + std::to_string(p.number) +
             " " + detail::pluralize(p.object1, p.number);
    case TaskKind::AttributeBinding:
      return "A realistic lively video of a scene with a " + p.color1 + " " +
             p.object1 + " and a " + p.color2 + " " + p.object2;
    case TaskKind::Visibility:
      return "A realistic lively video of a scene in which a " + p.object1 +
             " appears only in the " + p.half + " half of the video";
    case TaskKind::SpatialDynamics: {
      std::string from = p.direction == "left_to_right" ? "left" : "right";
      std::string to = p.direction == "left_to_right" ? "right" : "left";
      if (!p.relative)
        return "A realistic lively video of a scene with a " + p.object1 +
               " moving from the " + from + " to the " + to;
      return "A realistic lively video of a scene with a " + p.object1 +
             " moving from the " + from + " of a " + p.object2 + " to its " + to;
    }
    case TaskKind::SequentialActions:
      return "A realistic lively video of a scene in which a " + p.object1 +
             " initially on the " + p.loc1 + " of the scene. It first moves to the " +
             p.loc2 + " of the scene and then moves to the " + p.loc3 +
             " of the scene.";
  }
  throw BenchError("UnknownTask");
}

// 500 prompts: 100 per task, sampled uniformly from the pools with one shared
// generator so the whole suite is a function of the seed alone.
inline std::vector<BenchmarkPrompt> generate_suite(std::uint64_t seed,
                                                   int per_task = 100) {
  Rng rng(seed);
  const auto& objects = object_pool();
  const auto& colors = color_pool();
  std::vector<BenchmarkPrompt> suite;
  suite.reserve(static_cast<std::size_t>(per_task) * kTaskCount);

  auto base = [&](TaskKind k) {
    BenchmarkPrompt p;
    p.task = k;
    p.seed = seed;
    p.index = static_cast<int>(suite.size());
    return p;
  };

  for (int i = 0; i < per_task; ++i) {
    auto p = base(TaskKind::Numeracy);
    p.number = 1 + static_cast<int>(rng.below(5));
    p.object1 = objects[rng.pick(objects.size())];
    p.text = render_text(p);
    suite.push_back(std::move(p));
  }
  for (int i = 0; i < per_task; ++i) {
    auto p = base(TaskKind::AttributeBinding);
    p.object1 = objects[rng.pick(objects.size())];
    do p.object2 = objects[rng.pick(objects.size())];
    while (p.object2 == p.object1);
    p.color1 = colors[rng.pick(colors.size())];
    do p.color2 = colors[rng.pick(colors.size())];
    while (p.color2 == p.color1);
    p.text = render_text(p);
    suite.push_back(std::move(p));
  }
  for (int i = 0; i < per_task; ++i) {
    auto p = base(TaskKind::Visibility);
    p.object1 = objects[rng.pick(objects.size())];
    p.half = rng.below(2) == 0 ? "first" : "second";
    p.text = render_text(p);
    suite.push_back(std::move(p));
  }
  for (int i = 0; i < per_task; ++i) {
    auto p = base(TaskKind::SpatialDynamics);
    p.object1 = objects[rng.pick(objects.size())];
    p.relative = rng.below(2) == 1;
    if (p.relative) {
      do p.object2 = objects[rng.pick(objects.size())];
      while (p.object2 == p.object1);
    }
    p.direction = rng.below(2) == 0 ? "left_to_right" : "right_to_left";
    p.text = render_text(p);
    suite.push_back(std::move(p));
  }
  for (int i = 0; i < per_task; ++i) {
    auto p = base(TaskKind::SequentialActions);
    p.object1 = objects[rng.pick(objects.size())];
    const auto& t = sequential_triples()[rng.pick(sequential_triples().size())];
    p.loc1 = t.loc1;
    p.loc2 = t.loc2;
    p.loc3 = t.loc3;
    p.text = render_text(p);
    suite.push_back(std::move(p));
  }
  return suite;
}

// ---------------------------------------------------------------------------
// Verification.

struct Verdict {
  bool pass = false;
  std::string reason;  // empty on pass

  static Verdict ok() { return {true, ""}; }
  static Verdict fail(std::string why) { return {false, std::move(why)}; }
};

namespace detail {

inline std::vector<std::string> name_tokens(const std::string& name) {
  std::vector<std::string> toks;
  std::string cur;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      toks.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) toks.push_back(std::move(cur));
  return toks;
}

// Singular/plural tolerant noun equality on lowercase tokens.
inline bool noun_token_match(const std::string& token, const std::string& noun) {
  return token == noun || token == noun + "s" || token + "s" == noun;
}

inline bool name_has_noun(const std::string& name, const std::string& noun) {
  for (const auto& t : name_tokens(name))
    if (noun_token_match(t, noun)) return true;
  return false;
}

// Ordered adjacent (color, noun) token pair inside a box name.
inline bool name_has_pair(const std::string& name, const std::string& color,
                          const std::string& noun) {
  auto toks = name_tokens(name);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i)
    if (toks[i] == color && noun_token_match(toks[i + 1], noun)) return true;
  return false;
}

// First id whose name mentions the noun, in first-appearance order.
inline std::optional<int> find_object_id(const DynamicSceneLayout& dsl,
                                         const std::string& noun) {
  for (const auto& f : dsl.frames)
    for (const auto& b : f.boxes)
      if (name_has_noun(b.name, noun)) return b.id;
  return std::nullopt;
}

inline std::optional<Point> com_in_frame(const DynamicSceneLayout& dsl, int frame,
                                         int id) {
  for (const auto& f : dsl.frames) {
    if (f.index != frame) continue;
    for (const auto& b : f.boxes)
      if (b.id == id) return box_com(b);
  }
  return std::nullopt;
}

inline bool in_quadrant(const Point& p, const std::string& loc, const Canvas& cv) {
  double hx = cv.width / 2.0, hy = cv.height / 2.0;
  bool upper = loc.find("upper") != std::string::npos;
  bool left = loc.find("left") != std::string::npos;
  bool row_ok = upper ? p.y < hy : p.y >= hy;
  bool col_ok = left ? p.x < hx : p.x >= hx;
  return row_ok && col_ok;
}

inline Verdict verify_numeracy(const BenchmarkPrompt& p,
                               const DynamicSceneLayout& dsl) {
  for (const auto& f : dsl.frames) {
    int count = 0;
    for (const auto& b : f.boxes)
      if (name_has_noun(b.name, p.object1)) ++count;
    if (count != p.number)
      return Verdict::fail("frame " + std::to_string(f.index) + " has " +
                           std::to_string(count) + " " + p.object1 +
                           " boxes, expected " + std::to_string(p.number));
  }
  return Verdict::ok();
}

inline Verdict verify_attribute(const BenchmarkPrompt& p,
                                const DynamicSceneLayout& dsl) {
  std::optional<int> id1, id2;
  for (const auto& f : dsl.frames) {
    for (const auto& b : f.boxes) {
      if (name_has_pair(b.name, p.color1, p.object1) && !id1) id1 = b.id;
      if (name_has_pair(b.name, p.color2, p.object2) && !id2) id2 = b.id;
      // A target color glued to the other target object is a miscoloring even
      // if the correctly colored pair also exists somewhere.
      if (name_has_pair(b.name, p.color1, p.object2))
        return Verdict::fail("box '" + b.name + "' pairs " + p.color1 + " with " +
                             p.object2);
      if (name_has_pair(b.name, p.color2, p.object1))
        return Verdict::fail("box '" + b.name + "' pairs " + p.color2 + " with " +
                             p.object1);
    }
  }
  if (!id1) return Verdict::fail("no box named '" + p.color1 + " " + p.object1 + "'");
  if (!id2) return Verdict::fail("no box named '" + p.color2 + " " + p.object2 + "'");
  if (*id1 == *id2)
    return Verdict::fail("both attribute pairs resolve to id " +
                         std::to_string(*id1));
  return Verdict::ok();
}

inline Verdict verify_visibility(const BenchmarkPrompt& p,
                                 const DynamicSceneLayout& dsl) {
  int n = static_cast<int>(dsl.frame_count());
  int split = (n + 1) / 2;  // first half is frames 1..ceil(n/2)
  bool want_first = p.half == "first";
  bool seen_designated = false;
  for (const auto& f : dsl.frames) {
    bool present = false;
    for (const auto& b : f.boxes)
      if (name_has_noun(b.name, p.object1)) present = true;
    bool in_first = f.index <= split;
    if (present && in_first == want_first) seen_designated = true;
    if (present && in_first != want_first)
      return Verdict::fail(p.object1 + " present in frame " +
                           std::to_string(f.index) + ", outside the " + p.half +
                           " half");
  }
  if (!seen_designated)
    return Verdict::fail(p.object1 + " never appears in the " + p.half + " half");
  return Verdict::ok();
}

inline Verdict verify_spatial(const BenchmarkPrompt& p,
                              const DynamicSceneLayout& dsl) {
  auto id1 = find_object_id(dsl, p.object1);
  if (!id1) return Verdict::fail("no box mentions " + p.object1);
  bool ltr = p.direction == "left_to_right";

  if (!p.relative) {
    auto traj = trajectory_of(dsl, *id1);
    if (traj.samples.size() < 2)
      return Verdict::fail(p.object1 + " present in fewer than 2 frames");
    double x0 = traj.samples.front().com.x;
    double x1 = traj.samples.back().com.x;
    double mid = dsl.canvas.width / 2.0;
    double min_disp = 0.25 * dsl.canvas.width;
    if (ltr) {
      if (!(x0 < mid && mid < x1))
        return Verdict::fail("CoM x does not cross the midline left to right");
      if (x1 - x0 < min_disp) return Verdict::fail("x displacement below quarter width");
    } else {
      if (!(x0 > mid && mid > x1))
        return Verdict::fail("CoM x does not cross the midline right to left");
      if (x0 - x1 < min_disp) return Verdict::fail("x displacement below quarter width");
    }
    return Verdict::ok();
  }

  auto id2 = find_object_id(dsl, p.object2);
  if (!id2) return Verdict::fail("no box mentions " + p.object2);
  int first = dsl.frames.front().index;
  int last = dsl.frames.back().index;
  auto a0 = com_in_frame(dsl, first, *id1), b0 = com_in_frame(dsl, first, *id2);
  auto a1 = com_in_frame(dsl, last, *id1), b1 = com_in_frame(dsl, last, *id2);
  if (!a0 || !b0 || !a1 || !b1)
    return Verdict::fail("objects not both present in first and last frames");
  double d0 = a0->x - b0->x, d1 = a1->x - b1->x;
  if (ltr) {
    if (!(d0 < 0 && d1 > 0))
      return Verdict::fail(p.object1 + " does not move from left of " + p.object2 +
                           " to its right");
  } else {
    if (!(d0 > 0 && d1 < 0))
      return Verdict::fail(p.object1 + " does not move from right of " + p.object2 +
                           " to its left");
  }
  return Verdict::ok();
}

inline Verdict verify_sequential(const BenchmarkPrompt& p,
                                 const DynamicSceneLayout& dsl) {
  auto id = find_object_id(dsl, p.object1);
  if (!id) return Verdict::fail("no box mentions " + p.object1);
  int first = dsl.frames.front().index;
  int last = dsl.frames.back().index;
  auto c0 = com_in_frame(dsl, first, *id);
  auto c1 = com_in_frame(dsl, last, *id);
  if (!c0) return Verdict::fail(p.object1 + " missing from the first frame");
  if (!c1) return Verdict::fail(p.object1 + " missing from the last frame");
  if (!in_quadrant(*c0, p.loc1, dsl.canvas))
    return Verdict::fail("first frame CoM not in the " + p.loc1);
  if (!in_quadrant(*c1, p.loc3, dsl.canvas))
    return Verdict::fail("last frame CoM not in the " + p.loc3);
  for (int j = first + 1; j < last; ++j) {
    auto c = com_in_frame(dsl, j, *id);
    if (c && in_quadrant(*c, p.loc2, dsl.canvas)) return Verdict::ok();
  }
  return Verdict::fail("no intermediate frame CoM in the " + p.loc2);
}

}  // namespace detail

inline Verdict verify(const BenchmarkPrompt& p, const DynamicSceneLayout& dsl) {
  switch (p.task) {
    case TaskKind::Numeracy: return detail::verify_numeracy(p, dsl);
    case TaskKind::AttributeBinding: return detail::verify_attribute(p, dsl);
    case TaskKind::Visibility: return detail::verify_visibility(p, dsl);
    case TaskKind::SpatialDynamics: return detail::verify_spatial(p, dsl);
    case TaskKind::SequentialActions: return detail::verify_sequential(p, dsl);
  }
  throw BenchError("UnknownTask");
}

// ---------------------------------------------------------------------------
// Oracle and mutant constructions (verifier self-test).

namespace detail {

inline DynamicSceneLayout blank_dsl(int frames = 6) {
  DynamicSceneLayout dsl;
  dsl.canvas = Canvas{};
  dsl.fps = 2.0;
  dsl.background = "room";
  for (int i = 1; i <= frames; ++i) dsl.frames.push_back(Frame{i, {}});
  return dsl;
}

inline void put_every_frame(DynamicSceneLayout& dsl, int id, const std::string& name,
                            int x, int y, int w, int h) {
  for (auto& f : dsl.frames) f.boxes.push_back(BoundingBox{id, name, x, y, w, h});
}

// Horizontal sweep with CoM x 80 -> 432 on a 512 canvas (or mirrored).
inline std::vector<int> sweep_xs(bool ltr) {
  std::vector<int> xs{30, 100, 171, 241, 311, 382};
  if (!ltr) std::reverse(xs.begin(), xs.end());
  return xs;
}

inline Point quadrant_center(const std::string& loc, const Canvas& cv) {
  double x = loc.find("left") != std::string::npos ? cv.width * 0.25 : cv.width * 0.75;
  double y = loc.find("upper") != std::string::npos ? cv.height * 0.25
                                                    : cv.height * 0.75;
  return {x, y};
}

}  // namespace detail

// Minimal layout guaranteed to satisfy verify(prompt, ·).
inline DynamicSceneLayout synthesize_oracle_dsl(const BenchmarkPrompt& p) {
  using namespace detail;
  auto dsl = blank_dsl();
  switch (p.task) {
    case TaskKind::Numeracy:
      for (int i = 0; i < p.number; ++i)
        put_every_frame(dsl, i, p.object1, 10 + 100 * i, 200, 80, 80);
      return dsl;
    case TaskKind::AttributeBinding:
      put_every_frame(dsl, 0, p.color1 + " " + p.object1, 50, 200, 120, 120);
      put_every_frame(dsl, 1, p.color2 + " " + p.object2, 320, 200, 120, 120);
      return dsl;
    case TaskKind::Visibility: {
      int n = static_cast<int>(dsl.frame_count());
      int split = (n + 1) / 2;
      for (auto& f : dsl.frames) {
        bool in_first = f.index <= split;
        if (in_first == (p.half == "first"))
          f.boxes.push_back(BoundingBox{0, p.object1, 200, 200, 100, 100});
      }
      return dsl;
    }
    case TaskKind::SpatialDynamics: {
      auto xs = sweep_xs(p.direction == "left_to_right");
      for (std::size_t i = 0; i < dsl.frames.size(); ++i)
        dsl.frames[i].boxes.push_back(
            BoundingBox{0, p.object1, xs[i], 200, 100, 100});
      if (p.relative)
        put_every_frame(dsl, 1, p.object2, 206, 360, 100, 100);
      return dsl;
    }
    case TaskKind::SequentialActions: {
      auto c1 = quadrant_center(p.loc1, dsl.canvas);
      auto c2 = quadrant_center(p.loc2, dsl.canvas);
      auto c3 = quadrant_center(p.loc3, dsl.canvas);
      std::vector<Point> centers{
          c1, {(c1.x + c2.x) / 2, (c1.y + c2.y) / 2}, c2,
          c2, {(c2.x + c3.x) / 2, (c2.y + c3.y) / 2}, c3};
      for (std::size_t i = 0; i < dsl.frames.size(); ++i) {
        int x = static_cast<int>(centers[i].x) - 50;
        int y = static_cast<int>(centers[i].y) - 50;
        dsl.frames[i].boxes.push_back(BoundingBox{0, p.object1, x, y, 100, 100});
      }
      return dsl;
    }
  }
  throw BenchError("UnknownTask");
}

// One targeted violation guaranteed to flip a passing layout to fail.
inline DynamicSceneLayout mutate_to_fail(const BenchmarkPrompt& p,
                                         const DynamicSceneLayout& input,
                                         std::uint64_t seed) {
  using namespace detail;
  auto dsl = input;
  Rng rng(seed);
  switch (p.task) {
    case TaskKind::Numeracy: {
      if (p.number > 1) {
        // Remove one randomly chosen matching box from every frame.
        for (auto& f : dsl.frames) {
          std::vector<std::size_t> matching;
          for (std::size_t i = 0; i < f.boxes.size(); ++i)
            if (name_has_noun(f.boxes[i].name, p.object1)) matching.push_back(i);
          if (!matching.empty())
            f.boxes.erase(f.boxes.begin() +
                          static_cast<std::ptrdiff_t>(matching[rng.pick(matching.size())]));
        }
      } else {
        // Count 1 cannot go to 0 by box removal of "one of"; clamp to +1.
        int next_id = 0;
        for (const auto& f : dsl.frames)
          for (const auto& b : f.boxes) next_id = std::max(next_id, b.id + 1);
        put_every_frame(dsl, next_id, p.object1, 10 + 100 * p.number, 200, 80, 80);
      }
      return dsl;
    }
    case TaskKind::AttributeBinding: {
      // Swap the colors between the two target names.
      std::string n1 = p.color1 + " " + p.object1, n2 = p.color2 + " " + p.object2;
      std::string m1 = p.color2 + " " + p.object1, m2 = p.color1 + " " + p.object2;
      for (auto& f : dsl.frames)
        for (auto& b : f.boxes) {
          if (b.name == n1) b.name = m1;
          else if (b.name == n2) b.name = m2;
        }
      return dsl;
    }
    case TaskKind::Visibility: {
      // Swap box lists between frame i and its mirror in the other half.
      int n = static_cast<int>(dsl.frame_count());
      int split = (n + 1) / 2;
      for (int i = 0; i < n - split; ++i)
        std::swap(dsl.frames[static_cast<std::size_t>(i)].boxes,
                  dsl.frames[static_cast<std::size_t>(i + split)].boxes);
      return dsl;
    }
    case TaskKind::SpatialDynamics:
    case TaskKind::SequentialActions: {
      // Reverse the target object's motion: frame k takes its box from the
      // mirror frame. Direction/endpoint checks then fail.
      auto id = find_object_id(dsl, p.object1);
      if (!id) return dsl;
      std::map<int, BoundingBox> by_frame;
      for (const auto& f : dsl.frames)
        for (const auto& b : f.boxes)
          if (b.id == *id) by_frame[f.index] = b;
      std::vector<int> order;
      for (const auto& [fr, _] : by_frame) order.push_back(fr);
      for (auto& f : dsl.frames)
        for (auto& b : f.boxes)
          if (b.id == *id) {
            auto it = std::find(order.begin(), order.end(), f.index);
            int mirror = order[order.size() - 1 -
                               static_cast<std::size_t>(it - order.begin())];
            auto src = by_frame[mirror];
            b.x = src.x;
            b.y = src.y;
            b.w = src.w;
            b.h = src.h;
          }
      return dsl;
    }
  }
  throw BenchError("UnknownTask");
}

// ---------------------------------------------------------------------------
// Reports.

struct PromptVerdict {
  int prompt_index = 0;
  TaskKind task = TaskKind::Numeracy;
  int generation = 0;  // 0-based generation index
  bool pass = false;
  std::string reason;
};

struct VerdictReport {
  std::vector<PromptVerdict> verdicts;  // prompt-major, generation-minor order
  int attempted[kTaskCount] = {0, 0, 0, 0, 0};
  int passed[kTaskCount] = {0, 0, 0, 0, 0};

  double rate(TaskKind k) const {
    int i = static_cast<int>(k);
    return attempted[i] == 0 ? 0.0 : static_cast<double>(passed[i]) / attempted[i];
  }

  // Unweighted mean of the five per-task rates.
  double macro_average() const {
    double s = 0.0;
    for (int i = 0; i < kTaskCount; ++i) s += rate(static_cast<TaskKind>(i));
    return s / kTaskCount;
  }
};

// Generator: produce one layout for (prompt, generation). Throwing marks that
// generation failed; the exception text becomes the verdict reason.
using DslGenerator =
    std::function<DynamicSceneLayout(const BenchmarkPrompt&, int generation)>;

inline VerdictReport run_benchmark(const std::vector<BenchmarkPrompt>& suite,
                                   const DslGenerator& generator,
                                   int generations_per_prompt = 2, int jobs = 1) {
  if (generations_per_prompt < 1) throw BenchError("generations_per_prompt < 1");
  VerdictReport report;
  report.verdicts.resize(suite.size() * static_cast<std::size_t>(generations_per_prompt));

  auto eval_prompt = [&](std::size_t pi) {
    const auto& prompt = suite[pi];
    for (int g = 0; g < generations_per_prompt; ++g) {
      PromptVerdict v;
      v.prompt_index = prompt.index;
      v.task = prompt.task;
      v.generation = g;
      try {
        auto dsl = generator(prompt, g);
        auto verdict = verify(prompt, dsl);
        v.pass = verdict.pass;
        v.reason = verdict.reason;
      } catch (const std::exception& e) {
        v.pass = false;
        v.reason = e.what();
      }
      report.verdicts[pi * static_cast<std::size_t>(generations_per_prompt) +
                      static_cast<std::size_t>(g)] = std::move(v);
    }
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < suite.size(); ++i) eval_prompt(i);
  } else {
    // Static stride partition; verdicts land at fixed indices, so the merged
    // report is identical regardless of thread count.
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < suite.size();
             i += static_cast<std::size_t>(jobs))
          eval_prompt(i);
      });
    for (auto& t : workers) t.join();
  }

  for (const auto& v : report.verdicts) {
    int t = static_cast<int>(v.task);
    ++report.attempted[t];
    if (v.pass) ++report.passed[t];
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization.

inline nlohmann::json prompt_to_json(const BenchmarkPrompt& p) {
  nlohmann::json truth;
  switch (p.task) {
    case TaskKind::Numeracy:
      truth = {{"number", p.number}, {"object", p.object1}};
      break;
    case TaskKind::AttributeBinding:
      truth = {{"color1", p.color1},
               {"object1", p.object1},
               {"color2", p.color2},
               {"object2", p.object2}};
      break;
    case TaskKind::Visibility:
      truth = {{"object", p.object1}, {"half", p.half}};
      break;
    case TaskKind::SpatialDynamics:
      truth = {{"object1", p.object1}, {"direction", p.direction},
               {"relative", p.relative}};
      if (p.relative) truth["object2"] = p.object2;
      break;
    case TaskKind::SequentialActions:
      truth = {{"object", p.object1},
               {"loc1", p.loc1},
               {"loc2", p.loc2},
               {"loc3", p.loc3}};
      break;
  }
  return {{"task", task_name(p.task)},
          {"index", p.index},
          {"seed", p.seed},
          {"text", p.text},
          {"truth", truth}};
}

inline BenchmarkPrompt prompt_from_json(const nlohmann::json& j) {
  BenchmarkPrompt p;
  auto kind = task_from_name(j.at("task").get<std::string>());
  if (!kind) throw BenchError("UnknownTask: " + j.at("task").get<std::string>());
  p.task = *kind;
  p.index = j.at("index").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.text = j.at("text").get<std::string>();
  const auto& t = j.at("truth");
  switch (p.task) {
    case TaskKind::Numeracy:
      p.number = t.at("number").get<int>();
      p.object1 = t.at("object").get<std::string>();
      break;
    case TaskKind::AttributeBinding:
      p.color1 = t.at("color1").get<std::string>();
      p.object1 = t.at("object1").get<std::string>();
      p.color2 = t.at("color2").get<std::string>();
      p.object2 = t.at("object2").get<std::string>();
      break;
    case TaskKind::Visibility:
      p.object1 = t.at("object").get<std::string>();
      p.half = t.at("half").get<std::string>();
      break;
    case TaskKind::SpatialDynamics:
      p.object1 = t.at("object1").get<std::string>();
      p.direction = t.at("direction").get<std::string>();
      p.relative = t.at("relative").get<bool>();
      if (p.relative) p.object2 = t.at("object2").get<std::string>();
      break;
    case TaskKind::SequentialActions:
      p.object1 = t.at("object").get<std::string>();
      p.loc1 = t.at("loc1").get<std::string>();
      p.loc2 = t.at("loc2").get<std::string>();
      p.loc3 = t.at("loc3").get<std::string>();
      break;
  }
  return p;
}

inline std::string suite_to_jsonl(const std::vector<BenchmarkPrompt>& suite) {
  std::string out;
  for (const auto& p : suite) {
    out += prompt_to_json(p).dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<BenchmarkPrompt> suite_from_jsonl(const std::string& text) {
  std::vector<BenchmarkPrompt> suite;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    suite.push_back(prompt_from_json(nlohmann::json::parse(line)));
  }
  return suite;
}

inline std::string verdicts_to_jsonl(const VerdictReport& report) {
  std::string out;
  for (const auto& v : report.verdicts) {
    nlohmann::json j{{"prompt_index", v.prompt_index},
                     {"task", task_name(v.task)},
                     {"generation", v.generation},
                     {"pass", v.pass},
                     {"reason", v.reason}};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::string report_to_csv(const VerdictReport& report) {
  std::ostringstream out;
  out << "task,attempted,passed,rate\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (int i = 0; i < kTaskCount; ++i) {
    auto k = static_cast<TaskKind>(i);
    out << task_name(k) << ',' << report.attempted[i] << ',' << report.passed[i]
        << ',' << report.rate(k) << '\n';
  }
  out << "average,,," << report.macro_average() << '\n';
  return out.str();
}

// Single-row summary in the shape of the five-task accuracy table.
inline std::string report_to_table(const VerdictReport& report) {
  std::ostringstream head, row;
  head.setf(std::ios::left);
  row.setf(std::ios::fixed);
  row.precision(1);
  for (int i = 0; i < kTaskCount; ++i) {
    auto k = static_cast<TaskKind>(i);
    std::string name = task_name(k);
    head.width(20);
    head << name;
    std::ostringstream cell;
    cell.setf(std::ios::fixed);
    cell.precision(1);
    cell << 100.0 * report.rate(k) << '%';
    row.width(20);
    row.setf(std::ios::left);
    row << cell.str();
  }
  head << "average";
  std::ostringstream avg;
  avg.setf(std::ios::fixed);
  avg.precision(1);
  avg << 100.0 * report.macro_average() << '%';
  row << avg.str();
  return head.str() + "\n" + row.str() + "\n";
}

}  // namespace lvd::bench
