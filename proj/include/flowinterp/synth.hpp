#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowinterp/core.hpp"

// Analytic scenes with exactly known flow and occlusion, used as the oracle
// for the interpolation pipeline. Shapes translate linearly between t=0 and
// t=1, are composited in depth order (smaller rank is closer to the camera),
// and must lie fully inside the frame at both endpoints so nothing is ever
// clipped. Rendering supersamples 4x4 per pixel; flow and occlusion are
// evaluated at pixel centers without anti-aliasing.
//
// Scene description files are plain text, one key=value per line, '#' starts a
// comment:
//
//   width = 128
//   height = 128
//   background = constant:0.25        # or gradient:0.1,0.6 (left to right)
//   seed = 0                          # optional; nonzero adds smooth noise
//   shape = kind=disk cx=40 cy=64 size=12 intensity=0.85 dx=32 dy=0 depth=1
//
// Shape fields: kind (disk|rect), center (cx, cy) and half-extent `size` in
// pixels at t=0 (disk radius / half side of an axis-aligned square),
// intensity in [0, 1], displacement (dx, dy) over the full [0, 1] interval,
// and an integer depth rank (optional, defaults to the 1-based shape index;
// ranks must be distinct).

namespace flowinterp {

enum class ShapeKind { disk, rectangle };

struct SceneShape {
  ShapeKind kind = ShapeKind::disk;
  Vec2 center;  // at t = 0
  float size = 0.0f;
  float intensity = 0.5f;
  Vec2 displacement;  // over the full [0, 1] span
  int depth_order = 0;
};

struct Background {
  enum class Kind { constant, gradient } kind = Kind::constant;
  float a = 0.5f;  // constant value, or gradient value at x = 0
  float b = 0.5f;  // gradient value at x = width - 1
};

struct SyntheticScene {
  int width = 0;
  int height = 0;
  Background background;
  std::vector<SceneShape> shapes;
  std::uint32_t seed = 0;  // 0 disables intensity noise
};

inline std::optional<std::string> validate(const SyntheticScene& scene) {
  if (scene.width <= 0 || scene.height <= 0)
    return "scene dimensions must be positive";
  float max_disp = static_cast<float>(std::min(scene.width, scene.height)) / 2.0f;
  for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
    const SceneShape& s = scene.shapes[i];
    std::string tag = "shape " + std::to_string(i + 1);
    if (!(s.size > 0.0f)) return tag + ": size must be positive";
    if (!(s.intensity >= 0.0f && s.intensity <= 1.0f))
      return tag + ": intensity must be in [0, 1]";
    if (std::hypot(s.displacement.x, s.displacement.y) > max_disp)
      return tag + ": displacement exceeds min(width, height) / 2";
    // 1 px margin keeps the supersampled footprint clear of the border.
    for (float t : {0.0f, 1.0f}) {
      float cx = s.center.x + t * s.displacement.x;
      float cy = s.center.y + t * s.displacement.y;
      if (cx - s.size < 1.0f || cx + s.size > static_cast<float>(scene.width) - 2.0f ||
          cy - s.size < 1.0f || cy + s.size > static_cast<float>(scene.height) - 2.0f)
        return tag + ": not fully inside the frame at t=" +
               (t == 0.0f ? std::string("0") : std::string("1"));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (scene.shapes[j].depth_order == s.depth_order)
        return tag + ": depth rank duplicates shape " + std::to_string(j + 1);
    }
  }
  return std::nullopt;
}

namespace detail {

inline bool shape_covers(const SceneShape& s, double t, double x, double y) {
  double cx = static_cast<double>(s.center.x) +
              t * static_cast<double>(s.displacement.x);
  double cy = static_cast<double>(s.center.y) +
              t * static_cast<double>(s.displacement.y);
  double dx = x - cx;
  double dy = y - cy;
  double e = static_cast<double>(s.size);
  if (s.kind == ShapeKind::disk) return dx * dx + dy * dy <= e * e;
  return std::abs(dx) <= e && std::abs(dy) <= e;
}

// Index of the closest (smallest rank) shape covering (x, y) at time t,
// or -1 for background.
inline int topmost_shape(const SyntheticScene& scene, double t, double x,
                         double y) {
  int best = -1;
  int best_rank = INT_MAX;
  for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
    const SceneShape& s = scene.shapes[i];
    if (s.depth_order < best_rank && shape_covers(s, t, x, y)) {
      best = static_cast<int>(i);
      best_rank = s.depth_order;
    }
  }
  return best;
}

inline std::uint32_t hash_u32(std::uint32_t x) {
  x ^= x >> 16;
  x *= 0x7feb352du;
  x ^= x >> 15;
  x *= 0x846ca68bu;
  x ^= x >> 16;
  return x;
}

// Smooth, analytically translatable texture: three sinusoids whose
// frequencies and phases derive from (seed, surface). Surface 0 is the
// background in global coordinates; shapes evaluate it in coordinates local
// to their center so the texture rides along rigidly.
inline double surface_noise(std::uint32_t seed, std::uint32_t surface,
                            double x, double y) {
  if (seed == 0) return 0.0;
  double v = 0.0;
  for (std::uint32_t k = 0; k < 3; ++k) {
    std::uint32_t h = hash_u32(seed * 0x9e3779b9u + surface * 0x85ebca6bu + k);
    double fx = 0.05 + 0.25 * ((h & 0xffu) / 255.0);
    double fy = 0.05 + 0.25 * (((h >> 8) & 0xffu) / 255.0);
    double phase = 6.283185307179586 * (((h >> 16) & 0xffffu) / 65535.0);
    v += std::sin(fx * x + fy * y + phase);
  }
  return 0.02 * v;  // total amplitude within +-0.06
}

inline double background_value(const SyntheticScene& scene, double x) {
  const Background& bg = scene.background;
  if (bg.kind == Background::Kind::constant) return bg.a;
  double w = std::max(1, scene.width - 1);
  double u = std::clamp(x / w, 0.0, 1.0);
  return bg.a + (bg.b - bg.a) * u;
}

inline double sample_scene(const SyntheticScene& scene, double t, double x,
                           double y) {
  int k = topmost_shape(scene, t, x, y);
  double v;
  if (k < 0) {
    v = background_value(scene, x) + surface_noise(scene.seed, 0, x, y);
  } else {
    const SceneShape& s = scene.shapes[static_cast<std::size_t>(k)];
    double cx = static_cast<double>(s.center.x) +
                t * static_cast<double>(s.displacement.x);
    double cy = static_cast<double>(s.center.y) +
                t * static_cast<double>(s.displacement.y);
    v = static_cast<double>(s.intensity) +
        surface_noise(scene.seed, static_cast<std::uint32_t>(k) + 1, x - cx,
                      y - cy);
  }
  return std::clamp(v, 0.0, 1.0);
}

inline void require_valid_scene(const SyntheticScene& scene) {
  if (auto err = validate(scene)) throw ParamError(*err);
}

}  // namespace detail

// Grayscale render at time t, 4x4 supersampled box filter per pixel.
inline ImageBuffer render(const SyntheticScene& scene, float t) {
  detail::require_valid_scene(scene);
  ImageBuffer out(scene.height, scene.width, 1, 0.0f);
  static constexpr double kOffsets[4] = {-0.375, -0.125, 0.125, 0.375};
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      double acc = 0.0;
      for (double oy : kOffsets) {
        for (double ox : kOffsets) {
          acc += detail::sample_scene(scene, t, static_cast<double>(x) + ox,
                                      static_cast<double>(y) + oy);
        }
      }
      out.at(y, x) = static_cast<float>(acc / 16.0);
    }
  }
  return out;
}

// Exact flow at a continuous position: (t_to - t_from) * displacement of the
// topmost surface at t_from, zero on background. Double-valued so the linear
// flow composition identity holds exactly.
struct Vec2d {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2d flow_at(const SyntheticScene& scene, double t_from, double t_to,
                     double x, double y) {
  int k = detail::topmost_shape(scene, t_from, x, y);
  if (k < 0) return {0.0, 0.0};
  const SceneShape& s = scene.shapes[static_cast<std::size_t>(k)];
  double dt = t_to - t_from;
  return {dt * static_cast<double>(s.displacement.x),
          dt * static_cast<double>(s.displacement.y)};
}

inline FlowField ground_truth_flow(const SyntheticScene& scene, float t_from,
                                   float t_to) {
  detail::require_valid_scene(scene);
  FlowField out(scene.height, scene.width);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      Vec2d f = flow_at(scene, t_from, t_to, x, y);
      out.set(y, x, {static_cast<float>(f.x), static_cast<float>(f.y)});
    }
  }
  return out;
}

// 1 where the pixel's correspondence at t_to is covered by a strictly
// closer surface than the pixel's own; brute force over shapes.
inline ScalarMap ground_truth_occlusion(const SyntheticScene& scene,
                                        float t_from, float t_to) {
  detail::require_valid_scene(scene);
  ScalarMap out(scene.height, scene.width, MapKind::occlusion, 0.0f);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      int own = detail::topmost_shape(scene, t_from, x, y);
      int own_rank = own < 0 ? INT_MAX
                             : scene.shapes[static_cast<std::size_t>(own)]
                                   .depth_order;
      Vec2d f = flow_at(scene, t_from, t_to, x, y);
      int there = detail::topmost_shape(scene, t_to,
                                        static_cast<double>(x) + f.x,
                                        static_cast<double>(y) + f.y);
      int there_rank = there < 0 ? INT_MAX
                                 : scene.shapes[static_cast<std::size_t>(there)]
                                       .depth_order;
      out.at(y, x) = there_rank < own_rank ? 1.0f : 0.0f;
    }
  }
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline IoError scene_error(int line, const std::string& what) {
  return IoError("scene line " + std::to_string(line) + ": " + what);
}

inline float parse_float(std::string_view v, int line, const char* what) {
  float out = 0.0f;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw scene_error(line, std::string("expected a number for ") + what +
                                ", got '" + std::string(v) + "'");
  return out;
}

inline long parse_int(std::string_view v, int line, const char* what) {
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw scene_error(line, std::string("expected an integer for ") + what +
                                ", got '" + std::string(v) + "'");
  return out;
}

inline SceneShape parse_shape(std::string_view body, int line,
                              int default_rank) {
  SceneShape shape;
  shape.depth_order = default_rank;
  bool have[5] = {false, false, false, false, false};  // kind cx cy size intensity
  std::size_t pos = 0;
  while (pos < body.size()) {
    while (pos < body.size() &&
           std::isspace(static_cast<unsigned char>(body[pos])))
      ++pos;
    if (pos >= body.size()) break;
    std::size_t end = pos;
    while (end < body.size() &&
           !std::isspace(static_cast<unsigned char>(body[end])))
      ++end;
    std::string_view tok = body.substr(pos, end - pos);
    pos = end;
    std::size_t eq = tok.find('=');
    if (eq == std::string_view::npos)
      throw scene_error(line, "shape field '" + std::string(tok) +
                                  "' is not key=value");
    std::string_view key = tok.substr(0, eq);
    std::string_view val = tok.substr(eq + 1);
    if (key == "kind") {
      if (val == "disk") shape.kind = ShapeKind::disk;
      else if (val == "rect") shape.kind = ShapeKind::rectangle;
      else
        throw scene_error(line, "unknown shape kind '" + std::string(val) +
                                    "' (expected disk or rect)");
      have[0] = true;
    } else if (key == "cx") {
      shape.center.x = parse_float(val, line, "cx");
      have[1] = true;
    } else if (key == "cy") {
      shape.center.y = parse_float(val, line, "cy");
      have[2] = true;
    } else if (key == "size") {
      shape.size = parse_float(val, line, "size");
      have[3] = true;
    } else if (key == "intensity") {
      shape.intensity = parse_float(val, line, "intensity");
      have[4] = true;
    } else if (key == "dx") {
      shape.displacement.x = parse_float(val, line, "dx");
    } else if (key == "dy") {
      shape.displacement.y = parse_float(val, line, "dy");
    } else if (key == "depth") {
      shape.depth_order = static_cast<int>(parse_int(val, line, "depth"));
    } else {
      throw scene_error(line, "unknown shape field '" + std::string(key) + "'");
    }
  }
  static constexpr const char* kNames[5] = {"kind", "cx", "cy", "size",
                                            "intensity"};
  for (int i = 0; i < 5; ++i) {
    if (!have[i])
      throw scene_error(line,
                        std::string("shape is missing field '") + kNames[i] + "'");
  }
  return shape;
}

}  // namespace detail

// Parses the documented key=value grammar. Throws IoError naming the first
// offending line; scene-level invariant violations name the shape's line.
inline SyntheticScene parse_scene(std::string_view text) {
  SyntheticScene scene;
  std::vector<int> shape_lines;
  int line_no = 0;
  std::size_t pos = 0;
  bool have_width = false;
  bool have_height = false;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = eol == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw detail::scene_error(line_no, "expected key = value");
    std::string_view key = detail::trim(line.substr(0, eq));
    std::string_view val = detail::trim(line.substr(eq + 1));
    if (key == "width") {
      scene.width = static_cast<int>(detail::parse_int(val, line_no, "width"));
      have_width = true;
    } else if (key == "height") {
      scene.height =
          static_cast<int>(detail::parse_int(val, line_no, "height"));
      have_height = true;
    } else if (key == "seed") {
      long s = detail::parse_int(val, line_no, "seed");
      if (s < 0) throw detail::scene_error(line_no, "seed must be >= 0");
      scene.seed = static_cast<std::uint32_t>(s);
    } else if (key == "background") {
      std::size_t colon = val.find(':');
      std::string_view kind =
          colon == std::string_view::npos ? val : val.substr(0, colon);
      std::string_view args =
          colon == std::string_view::npos ? std::string_view{}
                                          : val.substr(colon + 1);
      if (kind == "constant") {
        scene.background.kind = Background::Kind::constant;
        scene.background.a = scene.background.b =
            detail::parse_float(args, line_no, "background value");
      } else if (kind == "gradient") {
        std::size_t comma = args.find(',');
        if (comma == std::string_view::npos)
          throw detail::scene_error(line_no,
                                    "gradient background needs two values a,b");
        scene.background.kind = Background::Kind::gradient;
        scene.background.a = detail::parse_float(
            detail::trim(args.substr(0, comma)), line_no, "background a");
        scene.background.b = detail::parse_float(
            detail::trim(args.substr(comma + 1)), line_no, "background b");
      } else {
        throw detail::scene_error(line_no, "unknown background kind '" +
                                               std::string(kind) + "'");
      }
    } else if (key == "shape") {
      scene.shapes.push_back(detail::parse_shape(
          val, line_no, static_cast<int>(scene.shapes.size()) + 1));
      shape_lines.push_back(line_no);
    } else {
      throw detail::scene_error(line_no,
                                "unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_width || !have_height)
    throw IoError("scene line " + std::to_string(line_no) +
                  ": missing required width/height");
  if (auto err = validate(scene)) {
    // Attribute shape-level violations to the shape's own line.
    int line = line_no;
    for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
      if (err->rfind("shape " + std::to_string(i + 1), 0) == 0) {
        line = shape_lines[i];
        break;
      }
    }
    throw detail::scene_error(line, *err);
  }
  return scene;
}

}  // namespace flowinterp
