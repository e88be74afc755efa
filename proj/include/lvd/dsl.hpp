#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvd/geometry.hpp"

namespace lvd {

struct Frame {
  int index = 0;  // 1-based
  std::vector<BoundingBox> boxes;
};

// A video's spatiotemporal layout: per-frame ID-linked boxes plus a
// background keyword. Frame indices run 1..N consecutively.
struct DynamicSceneLayout {
  std::vector<Frame> frames;
  std::string background;
  Canvas canvas;
  double fps = 2.0;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

inline bool operator==(const Frame& a, const Frame& b) {
  return a.index == b.index && a.boxes == b.boxes;
}

inline bool operator==(const DynamicSceneLayout& a, const DynamicSceneLayout& b) {
  return a.frames == b.frames && a.background == b.background &&
         a.canvas.width == b.canvas.width && a.canvas.height == b.canvas.height &&
         a.fps == b.fps;
}

struct TrajectorySample {
  int frame = 0;
  Point com;
  double area = 0.0;
};

struct Trajectory {
  int id = 0;
  std::string name;
  std::vector<TrajectorySample> samples;
  std::vector<bool> present;  // indexed by frame-1
};

enum class ParseErrorKind {
  EmptyCompletion,
  MalformedFrameLine,
  MissingFrames,
  DuplicateIdInFrame,
  InconsistentName,
};

inline const char* to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::EmptyCompletion: return "EmptyCompletion";
    case ParseErrorKind::MalformedFrameLine: return "MalformedFrameLine";
    case ParseErrorKind::MissingFrames: return "MissingFrames";
    case ParseErrorKind::DuplicateIdInFrame: return "DuplicateIdInFrame";
    case ParseErrorKind::InconsistentName: return "InconsistentName";
  }
  return "ParseError";
}

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, const std::string& detail, int line = 0)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail +
                           (line > 0 ? " (line " + std::to_string(line) + ")" : "")),
        kind_(kind),
        line_(line) {}
  ParseErrorKind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  ParseErrorKind kind_;
  int line_;
};

class DslError : public std::runtime_error {
 public:
  explicit DslError(const std::string& what) : std::runtime_error(what) {}
};

struct ParsedDsl {
  DynamicSceneLayout dsl;
  std::string reasoning;
};

namespace detail {

inline std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool starts_with(const std::string& s, const std::string& p) {
  return s.compare(0, p.size(), p) == 0;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() && cur.back() == '\r') cur.pop_back();
  lines.push_back(cur);
  return lines;
}

// Cursor over one frame line's record list.
class RecordScanner {
 public:
  RecordScanner(const std::string& s, int line_no) : s_(s), line_(line_no) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  [[noreturn]] void fail(const std::string& why) {
    throw ParseError(ParseErrorKind::MalformedFrameLine,
                     why + " in \"" + s_ + "\"", line_);
  }

  std::string quoted_string() {
    expect('\'');
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '\'') out.push_back(s_[pos_++]);
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  // Integer or decimal literal; decimals are rounded half-up.
  int number_as_int(bool allow_decimal) {
    skip_ws();
    size_t start = pos_;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
    size_t digits = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
      ++digits;
    }
    bool decimal = false;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      decimal = true;
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
        ++digits;
      }
    }
    if (digits == 0) fail("expected a number");
    if (decimal && !allow_decimal) fail("expected an integer");
    double v = std::stod(s_.substr(start, pos_ - start));
    return round_half_up(v);
  }

  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;
  int line_;
};

inline BoundingBox parse_record(RecordScanner& sc) {
  sc.expect('{');
  BoundingBox box;
  bool has_id = false, has_name = false, has_box = false;
  while (true) {
    std::string key = sc.quoted_string();
    sc.expect(':');
    if (key == "id") {
      if (has_id) sc.fail("duplicate key 'id'");
      box.id = sc.number_as_int(false);
      if (box.id < 0) sc.fail("negative id");
      has_id = true;
    } else if (key == "name") {
      if (has_name) sc.fail("duplicate key 'name'");
      box.name = sc.quoted_string();
      has_name = true;
    } else if (key == "box") {
      if (has_box) sc.fail("duplicate key 'box'");
      sc.expect('[');
      box.x = sc.number_as_int(true);
      sc.expect(',');
      box.y = sc.number_as_int(true);
      sc.expect(',');
      box.w = sc.number_as_int(true);
      sc.expect(',');
      box.h = sc.number_as_int(true);
      sc.expect(']');
      has_box = true;
    } else {
      sc.fail("unknown key '" + key + "'");
    }
    if (sc.eat(',')) continue;
    sc.expect('}');
    break;
  }
  if (!has_id || !has_name || !has_box) sc.fail("record missing id/name/box");
  if (box.w <= 0 || box.h <= 0) sc.fail("non-positive box size");
  return box;
}

inline std::vector<BoundingBox> parse_record_list(const std::string& s, int line_no) {
  RecordScanner sc(s, line_no);
  sc.expect('[');
  std::vector<BoundingBox> boxes;
  if (sc.peek() == ']') {
    sc.expect(']');
  } else {
    while (true) {
      boxes.push_back(parse_record(sc));
      if (sc.eat(',')) continue;
      sc.expect(']');
      break;
    }
  }
  if (!sc.at_end()) sc.fail("trailing content after record list");
  return boxes;
}

// "Frame <k>:" prefix; returns k and the remainder, or nullopt.
inline std::optional<std::pair<int, std::string>> match_frame_line(const std::string& line) {
  const std::string kw = "Frame ";
  if (!starts_with(line, kw)) return std::nullopt;
  size_t p = kw.size(), start = p;
  while (p < line.size() && std::isdigit(static_cast<unsigned char>(line[p]))) ++p;
  if (p == start || p >= line.size() || line[p] != ':') return std::nullopt;
  int k = std::stoi(line.substr(start, p - start));
  return std::make_pair(k, line.substr(p + 1));
}

}  // namespace detail

// Parses the exact LLM completion grammar: optional prose, an optional
// "Reasoning:" block, "Frame k: [...]" lines, and an optional
// "Background keyword:" line. Fails fast on any format drift.
inline ParsedDsl parse_dsl(const std::string& text) {
  using namespace detail;
  if (strip(text).empty())
    throw ParseError(ParseErrorKind::EmptyCompletion, "completion is blank");

  std::vector<std::string> lines = split_lines(text);

  // Locate the start of the structured region; earlier prose is ignored.
  size_t start = lines.size();
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (starts_with(line, "Reasoning:") || match_frame_line(line)) {
      start = i;
      break;
    }
  }
  if (start == lines.size())
    throw ParseError(ParseErrorKind::MalformedFrameLine, "no \"Frame k:\" line found");

  ParsedDsl out;
  size_t i = start;

  if (starts_with(lines[i], "Reasoning:")) {
    std::string reasoning = strip(lines[i].substr(10));
    ++i;
    while (i < lines.size() && !match_frame_line(lines[i])) {
      const std::string& line = lines[i];
      std::string stripped = strip(line);
      if (!stripped.empty() && stripped[0] == '-')
        throw ParseError(ParseErrorKind::MalformedFrameLine,
                         "line starts with '-'", static_cast<int>(i + 1));
      if (!stripped.empty()) {
        if (!reasoning.empty()) reasoning += "\n";
        reasoning += stripped;
      }
      ++i;
    }
    out.reasoning = reasoning;
  }

  std::vector<std::pair<int, std::vector<BoundingBox>>> frames;
  bool saw_background = false;
  for (; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    std::string stripped = strip(line);
    if (stripped.empty()) continue;
    if (stripped[0] == '-')
      throw ParseError(ParseErrorKind::MalformedFrameLine, "line starts with '-'",
                       static_cast<int>(i + 1));
    if (auto fl = match_frame_line(line)) {
      frames.emplace_back(fl->first,
                          parse_record_list(fl->second, static_cast<int>(i + 1)));
      continue;
    }
    if (starts_with(line, "Background keyword:")) {
      out.dsl.background = strip(line.substr(19));
      saw_background = true;
      ++i;
      break;  // anything after the background line is ignored
    }
    throw ParseError(ParseErrorKind::MalformedFrameLine,
                     "unrecognized line \"" + stripped + "\"", static_cast<int>(i + 1));
  }
  (void)saw_background;

  if (frames.empty())
    throw ParseError(ParseErrorKind::MissingFrames, "no frames parsed");
  for (size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].first != static_cast<int>(k + 1))
      throw ParseError(ParseErrorKind::MissingFrames,
                       "frame indices must run 1..N; saw " +
                           std::to_string(frames[k].first) + " at position " +
                           std::to_string(k + 1));
  }

  std::map<int, std::string> names;
  for (auto& [index, boxes] : frames) {
    std::map<int, bool> seen;
    for (const BoundingBox& b : boxes) {
      if (seen.count(b.id))
        throw ParseError(ParseErrorKind::DuplicateIdInFrame,
                         "id " + std::to_string(b.id) + " repeats in frame " +
                             std::to_string(index));
      seen[b.id] = true;
      auto it = names.find(b.id);
      if (it == names.end()) {
        names[b.id] = b.name;
      } else if (it->second != b.name) {
        throw ParseError(ParseErrorKind::InconsistentName,
                         "id " + std::to_string(b.id) + " named '" + it->second +
                             "' and '" + b.name + "'");
      }
    }
    out.dsl.frames.push_back({index, std::move(boxes)});
  }
  return out;
}

// Emits the exact "Frame k: [...]" / "Background keyword:" grammar;
// parse_dsl(serialize_dsl(d)) reproduces d field-for-field.
inline std::string serialize_dsl(const DynamicSceneLayout& dsl) {
  std::ostringstream os;
  for (const Frame& f : dsl.frames) {
    os << "Frame " << f.index << ": [";
    for (size_t i = 0; i < f.boxes.size(); ++i) {
      const BoundingBox& b = f.boxes[i];
      if (i) os << ", ";
      os << "{'id': " << b.id << ", 'name': '" << b.name << "', 'box': [" << b.x
         << ", " << b.y << ", " << b.w << ", " << b.h << "]}";
    }
    os << "]\n";
  }
  os << "Background keyword: " << dsl.background;
  return os.str();
}

struct Violation {
  enum Kind { OutOfBounds, Overlap, NonConsecutiveFrames, InconsistentName } kind;
  int frame = 0;
  int id_a = -1;
  int id_b = -1;
  double iou = 0.0;

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case OutOfBounds:
        os << "OutOfBounds frame " << frame << " id " << id_a;
        break;
      case Overlap:
        os << "Overlap frame " << frame << " ids " << id_a << "/" << id_b
           << " IoU " << iou;
        break;
      case NonConsecutiveFrames:
        os << "NonConsecutiveFrames at position " << frame;
        break;
      case InconsistentName:
        os << "InconsistentName id " << id_a;
        break;
    }
    return os.str();
  }
};

// Reports violations, never fixes them; overlap is a warning by design
// (the pipeline legitimately produces overlapping layouts).
inline std::vector<Violation> validate_dsl(const DynamicSceneLayout& dsl,
                                           const Canvas& canvas) {
  std::vector<Violation> v;
  for (size_t k = 0; k < dsl.frames.size(); ++k) {
    if (dsl.frames[k].index != static_cast<int>(k + 1))
      v.push_back({Violation::NonConsecutiveFrames, static_cast<int>(k + 1)});
  }
  std::map<int, std::string> names;
  std::map<int, bool> flagged;
  for (const Frame& f : dsl.frames) {
    for (const BoundingBox& b : f.boxes) {
      if (!in_bounds(b, canvas))
        v.push_back({Violation::OutOfBounds, f.index, b.id});
      auto it = names.find(b.id);
      if (it == names.end()) {
        names[b.id] = b.name;
      } else if (it->second != b.name && !flagged[b.id]) {
        v.push_back({Violation::InconsistentName, f.index, b.id});
        flagged[b.id] = true;
      }
    }
    for (size_t a = 0; a < f.boxes.size(); ++a) {
      for (size_t b = a + 1; b < f.boxes.size(); ++b) {
        if (intersection_area(f.boxes[a], f.boxes[b]) > 0.0)
          v.push_back({Violation::Overlap, f.index, f.boxes[a].id, f.boxes[b].id,
                       iou(f.boxes[a], f.boxes[b])});
      }
    }
  }
  return v;
}

inline std::vector<Violation> validate_dsl(const DynamicSceneLayout& dsl) {
  return validate_dsl(dsl, dsl.canvas);
}

// Endpoint-aligned piecewise-linear resampling to target_n frames.
// Output frame j samples u = 1 + (j-1)(N-1)/(target_n-1); an object present
// in only one bracketing frame survives iff u rounds to that frame.
inline DynamicSceneLayout interpolate_frames(const DynamicSceneLayout& dsl,
                                             int target_n) {
  int n = dsl.frame_count();
  if (n < 2) throw DslError("TargetTooSmall: need at least 2 source frames");
  if (target_n < n) throw DslError("TargetTooSmall: target " + std::to_string(target_n) +
                                   " below source count " + std::to_string(n));
  if (target_n == n) return dsl;

  DynamicSceneLayout out;
  out.background = dsl.background;
  out.canvas = dsl.canvas;
  out.fps = dsl.fps * (target_n - 1) / static_cast<double>(n - 1);

  for (int j = 1; j <= target_n; ++j) {
    double u = 1.0 + (j - 1) * static_cast<double>(n - 1) / (target_n - 1);
    int lo = static_cast<int>(std::floor(u));
    int hi = static_cast<int>(std::ceil(u));
    lo = std::max(1, std::min(lo, n));
    hi = std::max(1, std::min(hi, n));
    double t = u - lo;

    std::map<int, const BoundingBox*> in_lo, in_hi;
    for (const BoundingBox& b : dsl.frames[lo - 1].boxes) in_lo[b.id] = &b;
    for (const BoundingBox& b : dsl.frames[hi - 1].boxes) in_hi[b.id] = &b;

    Frame frame;
    frame.index = j;
    std::map<int, BoundingBox> merged;
    for (auto& [id, lob] : in_lo) {
      auto hit = in_hi.find(id);
      if (hit != in_hi.end()) {
        const BoundingBox* hib = hit->second;
        BoundingBox b = *lob;
        b.x = round_half_up(lob->x + t * (hib->x - lob->x));
        b.y = round_half_up(lob->y + t * (hib->y - lob->y));
        b.w = round_half_up(lob->w + t * (hib->w - lob->w));
        b.h = round_half_up(lob->h + t * (hib->h - lob->h));
        merged[id] = b;
      } else if (round_half_up(u) == lo) {
        merged[id] = *lob;
      }
    }
    for (auto& [id, hib] : in_hi) {
      if (!in_lo.count(id) && round_half_up(u) == hi) merged[id] = *hib;
    }
    for (auto& [id, b] : merged) frame.boxes.push_back(b);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

inline Trajectory trajectory_of(const DynamicSceneLayout& dsl, int id) {
  Trajectory traj;
  traj.id = id;
  traj.present.assign(dsl.frames.size(), false);
  bool found = false;
  for (const Frame& f : dsl.frames) {
    for (const BoundingBox& b : f.boxes) {
      if (b.id != id) continue;
      if (!found) traj.name = b.name;
      found = true;
      traj.present[f.index - 1] = true;
      traj.samples.push_back({f.index, box_com(b), box_area(b)});
    }
  }
  if (!found) throw DslError("UnknownId: " + std::to_string(id));
  return traj;
}

inline std::vector<int> object_ids(const DynamicSceneLayout& dsl) {
  std::vector<int> ids;
  for (const Frame& f : dsl.frames)
    for (const BoundingBox& b : f.boxes)
      if (std::find(ids.begin(), ids.end(), b.id) == ids.end()) ids.push_back(b.id);
  return ids;
}

inline nlohmann::json dsl_to_json(const DynamicSceneLayout& dsl) {
  nlohmann::json j;
  j["frames"] = nlohmann::json::array();
  for (const Frame& f : dsl.frames) {
    nlohmann::json jf;
    jf["index"] = f.index;
    jf["boxes"] = nlohmann::json::array();
    for (const BoundingBox& b : f.boxes)
      jf["boxes"].push_back({{"id", b.id},
                             {"name", b.name},
                             {"box", {b.x, b.y, b.w, b.h}}});
    j["frames"].push_back(jf);
  }
  j["background"] = dsl.background;
  j["canvas"] = {dsl.canvas.width, dsl.canvas.height};
  j["fps"] = dsl.fps;
  return j;
}

inline DynamicSceneLayout dsl_from_json(const nlohmann::json& j) {
  DynamicSceneLayout dsl;
  for (const auto& jf : j.at("frames")) {
    Frame f;
    f.index = jf.at("index").get<int>();
    for (const auto& jb : jf.at("boxes")) {
      BoundingBox b;
      b.id = jb.at("id").get<int>();
      b.name = jb.at("name").get<std::string>();
      const auto& arr = jb.at("box");
      b.x = arr.at(0).get<int>();
      b.y = arr.at(1).get<int>();
      b.w = arr.at(2).get<int>();
      b.h = arr.at(3).get<int>();
      f.boxes.push_back(std::move(b));
    }
    dsl.frames.push_back(std::move(f));
  }
  dsl.background = j.at("background").get<std::string>();
  if (j.contains("canvas")) {
    dsl.canvas.width = j["canvas"].at(0).get<int>();
    dsl.canvas.height = j["canvas"].at(1).get<int>();
  }
  if (j.contains("fps")) dsl.fps = j["fps"].get<double>();
  return dsl;
}

}  // namespace lvd
