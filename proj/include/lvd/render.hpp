#pragma once

// Deterministic visualization: scene layouts to per-frame SVG documents plus
// one SMIL-animated SVG, and attention maps to binary PGM rasters. Output is
// byte-identical for identical inputs, so files can be pinned as goldens.

#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvd/dsl.hpp"
#include "lvd/grid.hpp"

namespace lvd::render {

struct RenderOptions {
  bool show_ids = true;
  bool show_names = true;
  std::uint64_t palette_seed = 0;
};

namespace detail {

// Stable per-id color: hash the id with the palette seed into an HSL-ish
// palette expressed directly as hex RGB.
inline std::string id_color(int id, std::uint64_t palette_seed) {
  std::uint64_t h = 1469598103934665603ull ^ palette_seed;
  h ^= static_cast<std::uint64_t>(static_cast<std::int64_t>(id));
  h *= 1099511628211ull;
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  // Keep channels in [64, 223] so strokes stay visible on white.
  unsigned r = 64 + static_cast<unsigned>(h & 0xff) * 160 / 256;
  unsigned g = 64 + static_cast<unsigned>((h >> 8) & 0xff) * 160 / 256;
  unsigned b = 64 + static_cast<unsigned>((h >> 16) & 0xff) * 160 / 256;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string box_label(const BoundingBox& b, const RenderOptions& opt) {
  std::string label;
  if (opt.show_ids) label += "#" + std::to_string(b.id);
  if (opt.show_names) {
    if (!label.empty()) label += " ";
    label += b.name;
  }
  return label;
}

inline void open_svg(std::ostringstream& out, const Canvas& cv) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cv.width
      << "\" height=\"" << cv.height << "\" viewBox=\"0 0 " << cv.width << " "
      << cv.height << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << cv.width << "\" height=\""
      << cv.height << "\" fill=\"#ffffff\" stroke=\"#000000\"/>\n";
}

}  // namespace detail

// One standalone SVG document per frame.
inline std::vector<std::string> render_dsl_svg_frames(const DynamicSceneLayout& dsl,
                                                      const RenderOptions& opt = {}) {
  std::vector<std::string> docs;
  docs.reserve(dsl.frames.size());
  for (const auto& f : dsl.frames) {
    std::ostringstream out;
    detail::open_svg(out, dsl.canvas);
    out << "  <text x=\"4\" y=\"14\" font-size=\"12\" fill=\"#000000\">frame "
        << f.index << " / " << detail::xml_escape(dsl.background) << "</text>\n";
    for (const auto& b : f.boxes) {
      std::string color = detail::id_color(b.id, opt.palette_seed);
      out << "  <rect x=\"" << b.x << "\" y=\"" << b.y << "\" width=\"" << b.w
          << "\" height=\"" << b.h << "\" fill=\"" << color
          << "\" fill-opacity=\"0.25\" stroke=\"" << color << "\"/>\n";
      std::string label = detail::box_label(b, opt);
      if (!label.empty())
        out << "  <text x=\"" << b.x + 2 << "\" y=\"" << b.y + 12
            << "\" font-size=\"11\" fill=\"" << color << "\">"
            << detail::xml_escape(label) << "</text>\n";
    }
    out << "</svg>\n";
    docs.push_back(out.str());
  }
  return docs;
}

// One SMIL-animated SVG: each object is a rect whose x/y/size interpolate
// through its per-frame boxes over (frames-1)/fps seconds.
inline std::string render_dsl_svg_animated(const DynamicSceneLayout& dsl,
                                           const RenderOptions& opt = {}) {
  std::ostringstream out;
  detail::open_svg(out, dsl.canvas);
  out << "  <text x=\"4\" y=\"14\" font-size=\"12\" fill=\"#000000\">"
      << detail::xml_escape(dsl.background) << "</text>\n";

  std::size_t n = dsl.frame_count();
  double dur = n > 1 && dsl.fps > 0 ? (static_cast<double>(n) - 1.0) / dsl.fps : 1.0;

  // Gather per-object boxes keyed by frame.
  for (int id : object_ids(dsl)) {
    std::map<int, BoundingBox> by_frame;
    std::string name;
    for (const auto& f : dsl.frames)
      for (const auto& b : f.boxes)
        if (b.id == id) {
          by_frame[f.index] = b;
          name = b.name;
        }
    if (by_frame.empty()) continue;
    std::string color = detail::id_color(id, opt.palette_seed);
    const auto& first = by_frame.begin()->second;
    out << "  <rect x=\"" << first.x << "\" y=\"" << first.y << "\" width=\""
        << first.w << "\" height=\"" << first.h << "\" fill=\"" << color
        << "\" fill-opacity=\"0.25\" stroke=\"" << color << "\">\n";

    auto animate = [&](const char* attr, auto getter) {
      out << "    <animate attributeName=\"" << attr << "\" dur=\"" << dur
          << "s\" repeatCount=\"indefinite\" values=\"";
      bool sep = false;
      // Objects absent from a frame hold their previous box; SMIL has no
      // per-segment visibility, so this renderer shows continuous motion.
      BoundingBox cur = first;
      for (const auto& f : dsl.frames) {
        auto it = by_frame.find(f.index);
        if (it != by_frame.end()) cur = it->second;
        if (sep) out << ';';
        out << getter(cur);
        sep = true;
      }
      out << "\"/>\n";
    };
    animate("x", [](const BoundingBox& b) { return b.x; });
    animate("y", [](const BoundingBox& b) { return b.y; });
    animate("width", [](const BoundingBox& b) { return b.w; });
    animate("height", [](const BoundingBox& b) { return b.h; });
    out << "  </rect>\n";
    std::string label = detail::box_label(first, opt);
    if (!label.empty())
      out << "  <text x=\"" << first.x + 2 << "\" y=\"" << first.y + 12
          << "\" font-size=\"11\" fill=\"" << color << "\">"
          << detail::xml_escape(label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// Binary PGM (P5), max-normalized so the largest cell maps to 255.
inline std::string render_attention_pgm(const Mat& a, int cell_scale = 1) {
  if (cell_scale < 1) cell_scale = 1;
  double mx = a.max();
  if (!(mx > 0.0)) throw std::runtime_error("ZeroMass: attention map has no mass");
  std::ostringstream out;
  int ph = static_cast<int>(a.h) * cell_scale;
  int pw = static_cast<int>(a.w) * cell_scale;
  out << "P5\n" << pw << " " << ph << "\n255\n";
  for (int py = 0; py < ph; ++py) {
    std::size_t i = static_cast<std::size_t>(py / cell_scale);
    for (int px = 0; px < pw; ++px) {
      std::size_t j = static_cast<std::size_t>(px / cell_scale);
      double v = a.at(i, j) / mx;
      if (v < 0) v = 0;
      int byte = static_cast<int>(round_half_up(v * 255.0));
      if (byte > 255) byte = 255;
      out.put(static_cast<char>(static_cast<unsigned char>(byte)));
    }
  }
  return out.str();
}

}  // namespace lvd::render
