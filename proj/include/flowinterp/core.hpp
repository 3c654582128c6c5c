#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Core raster types and sampling shared by every other header.
//
// Conventions: origin at the top-left pixel center, x indexes columns, y indexes
// rows, storage is row-major with interleaved channels. Flow vectors are in
// pixels; flow(x) points from a pixel in the source frame toward its
// correspondence in the target frame. Per-pixel arithmetic is float32;
// reductions that need it accumulate in double.

namespace flowinterp {

// Thrown on raster dimension disagreements between operands.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on unreadable/undecodable inputs (files, byte streams, scene specs).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on out-of-domain parameters (bad t, bad config values).
struct ParamError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  float x = 0.0f;
  float y = 0.0f;
};

inline bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

// Intensity raster, values nominally in [0, 1], 1 or 3 channels.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<float> data;

  ImageBuffer() = default;
  ImageBuffer(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  int channel_count() const { return channels; }
  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float at(int y, int x, int c = 0) const { return data[index(y, x, c)]; }
  float& at(int y, int x, int c = 0) { return data[index(y, x, c)]; }
};

// Dense flow field, interleaved (u, v) displacements in pixels.
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  FlowField() = default;
  FlowField(int h, int w, Vec2 fill = {})
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 2) {
    for (std::size_t i = 0; i < data.size(); i += 2) {
      data[i] = fill.x;
      data[i + 1] = fill.y;
    }
  }

  static int channel_count() { return 2; }
  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * 2 + c;
  }
  Vec2 at(int y, int x) const {
    std::size_t i = index(y, x);
    return {data[i], data[i + 1]};
  }
  void set(int y, int x, Vec2 f) {
    std::size_t i = index(y, x);
    data[i] = f.x;
    data[i + 1] = f.y;
  }
  float u(int y, int x) const { return data[index(y, x, 0)]; }
  float v(int y, int x) const { return data[index(y, x, 1)]; }
};

// Role of a single-channel map; constrains the legal value range.
enum class MapKind {
  confidence,  // (0, 1]
  occlusion,   // {0, 1} stored as float, soft values in [0, 1] allowed
  weight,      // [0, inf), in practice [0, alpha]
  mass,        // [0, inf)
};

struct ScalarMap {
  int height = 0;
  int width = 0;
  MapKind kind = MapKind::weight;
  std::vector<float> data;

  ScalarMap() = default;
  ScalarMap(int h, int w, MapKind k, float fill = 0.0f)
      : height(h), width(w), kind(k),
        data(static_cast<std::size_t>(h) * w, fill) {}

  static int channel_count() { return 1; }
  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  float at(int y, int x) const { return data[index(y, x)]; }
  float& at(int y, int x) { return data[index(y, x)]; }
};

// Knobs of the interpolation pipeline. Defaults are the operating point used
// throughout the tests; alpha must stay in (0, 100] for splat stability.
struct PipelineConfig {
  float alpha = 50.0f;        // occlusion weighting strength
  float gamma1 = 0.01f;       // confidence denominator, magnitude term
  float gamma2 = 0.5f;        // confidence denominator, constant term
  float occl_alpha1 = 0.01f;  // occlusion test, magnitude term
  float occl_alpha2 = 0.5f;   // occlusion test, constant term
  float hole_eps = 1e-7f;     // splat mass below this is a hole
  float fusion_eps = 1e-12f;  // fusion denominator guard
  float tau = 0.95f;          // confidence threshold for masked losses
};

namespace detail {

template <typename Raster>
inline float sample_raster(const Raster& r, float x, float y, int c) {
  float fx = std::clamp(x, 0.0f, static_cast<float>(r.width - 1));
  float fy = std::clamp(y, 0.0f, static_cast<float>(r.height - 1));
  int x0 = static_cast<int>(std::floor(fx));
  int y0 = static_cast<int>(std::floor(fy));
  int x1 = std::min(x0 + 1, r.width - 1);
  int y1 = std::min(y0 + 1, r.height - 1);
  float ax = fx - static_cast<float>(x0);
  float ay = fy - static_cast<float>(y0);
  int ch = r.channel_count();
  const float* d = r.data.data();
  auto at = [&](int yy, int xx) {
    return d[(static_cast<std::size_t>(yy) * r.width + xx) * ch + c];
  };
  float top = (1.0f - ax) * at(y0, x0) + ax * at(y0, x1);
  float bot = (1.0f - ax) * at(y1, x0) + ax * at(y1, x1);
  return (1.0f - ay) * top + ay * bot;
}

}  // namespace detail

// Bilinear lookup with clamp-to-edge; total on all finite (x, y).
inline float bilinear_sample(const ImageBuffer& img, float x, float y, int c) {
  return detail::sample_raster(img, x, y, c);
}

inline std::vector<float> bilinear_sample(const ImageBuffer& img, float x,
                                          float y) {
  std::vector<float> out(static_cast<std::size_t>(img.channels));
  for (int c = 0; c < img.channels; ++c)
    out[static_cast<std::size_t>(c)] = detail::sample_raster(img, x, y, c);
  return out;
}

inline Vec2 bilinear_sample(const FlowField& flow, float x, float y) {
  return {detail::sample_raster(flow, x, y, 0),
          detail::sample_raster(flow, x, y, 1)};
}

inline float bilinear_sample(const ScalarMap& map, float x, float y) {
  return detail::sample_raster(map, x, y, 0);
}

namespace detail {

inline std::optional<std::string> check_finite(const std::vector<float>& v,
                                               const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      return std::string(what) + " has non-finite value at flat index " +
             std::to_string(i);
  }
  return std::nullopt;
}

}  // namespace detail

// Each validate() reports the first violated invariant, or nullopt when clean.
inline std::optional<std::string> validate(const ImageBuffer& img) {
  if (img.height <= 0 || img.width <= 0)
    return "image dimensions must be positive";
  if (img.channels != 1 && img.channels != 3)
    return "image channel count must be 1 or 3";
  if (img.data.size() !=
      static_cast<std::size_t>(img.height) * img.width * img.channels)
    return "image data length does not match height*width*channels";
  if (auto err = detail::check_finite(img.data, "image")) return err;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (img.data[i] < 0.0f || img.data[i] > 1.0f)
      return "image value out of [0, 1] at flat index " + std::to_string(i);
  }
  return std::nullopt;
}

inline std::optional<std::string> validate(const FlowField& flow) {
  if (flow.height <= 0 || flow.width <= 0)
    return "flow dimensions must be positive";
  if (flow.data.size() != static_cast<std::size_t>(flow.height) * flow.width * 2)
    return "flow data length does not match height*width*2";
  return detail::check_finite(flow.data, "flow");
}

inline std::optional<std::string> validate(const ScalarMap& map) {
  if (map.height <= 0 || map.width <= 0)
    return "map dimensions must be positive";
  if (map.data.size() != static_cast<std::size_t>(map.height) * map.width)
    return "map data length does not match height*width";
  if (auto err = detail::check_finite(map.data, "map")) return err;
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    float v = map.data[i];
    const char* bad = nullptr;
    switch (map.kind) {
      case MapKind::confidence:
        if (!(v > 0.0f && v <= 1.0f)) bad = "confidence map value out of (0, 1]";
        break;
      case MapKind::occlusion:
        if (!(v >= 0.0f && v <= 1.0f)) bad = "occlusion map value out of [0, 1]";
        break;
      case MapKind::weight:
        if (!(v >= 0.0f)) bad = "weight map value below 0";
        break;
      case MapKind::mass:
        if (!(v >= 0.0f)) bad = "mass map value below 0";
        break;
    }
    if (bad)
      return std::string(bad) + " at flat index " + std::to_string(i);
  }
  return std::nullopt;
}

inline std::optional<std::string> validate(const PipelineConfig& cfg) {
  if (!(cfg.alpha > 0.0f && cfg.alpha <= 100.0f))
    return "alpha must be in (0, 100]";
  if (!(cfg.gamma1 > 0.0f)) return "gamma1 must be positive";
  if (!(cfg.gamma2 > 0.0f)) return "gamma2 must be positive";
  if (!(cfg.occl_alpha1 > 0.0f)) return "occl_alpha1 must be positive";
  if (!(cfg.occl_alpha2 > 0.0f)) return "occl_alpha2 must be positive";
  if (!(cfg.hole_eps > 0.0f)) return "hole_eps must be positive";
  if (!(cfg.fusion_eps > 0.0f)) return "fusion_eps must be positive";
  if (!(cfg.tau >= 0.0f && cfg.tau <= 1.0f)) return "tau must be in [0, 1]";
  return std::nullopt;
}

namespace detail {

inline void require_same_size(int h1, int w1, int h2, int w2,
                              const char* what) {
  if (h1 != h2 || w1 != w2)
    throw ShapeError(std::string(what) + ": " + std::to_string(w1) + "x" +
                     std::to_string(h1) + " vs " + std::to_string(w2) + "x" +
                     std::to_string(h2));
}

inline void require_valid_config(const PipelineConfig& cfg) {
  if (auto err = validate(cfg)) throw ParamError(*err);
}

}  // namespace detail

}  // namespace flowinterp
