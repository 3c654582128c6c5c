#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "flowinterp/core.hpp"

// Backward warping and softmax forward splatting.
//
// softmax_splat runs two passes so that arbitrary weight maps in [0, 100]
// stay finite: pass 1 records the maximum contributing weight per target
// pixel, pass 2 accumulates exp(weight - max) terms in double. The stored
// mass is that max-shifted denominator; it equals the plain kernel mass
// sum_q b(u) whenever the weight map is constant. Accumulation is serial in
// source row-major order, so results are bitwise reproducible across runs.

namespace flowinterp {

template <typename Raster>
struct SplatResult {
  Raster values;    // softmax-weighted average of splatted sources, 0 at holes
  ScalarMap mass;   // max-shifted denominator sum_q exp(w(q) - max_w(p)) * b(u)
  ScalarMap holes;  // 1 where mass < hole_eps, else 0
};

namespace detail {

inline ImageBuffer make_like(const ImageBuffer& src) {
  return ImageBuffer(src.height, src.width, src.channels, 0.0f);
}

inline FlowField make_like(const FlowField& src) {
  return FlowField(src.height, src.width);
}

inline ScalarMap make_like(const ScalarMap& src) {
  return ScalarMap(src.height, src.width, src.kind, 0.0f);
}

}  // namespace detail

// out(p) = src sampled at p + flow(p), bilinear with clamp-to-edge.
template <typename Raster>
Raster backward_warp(const Raster& src, const FlowField& flow) {
  detail::require_same_size(src.height, src.width, flow.height, flow.width,
                            "backward_warp src vs flow");
  Raster out = detail::make_like(src);
  int ch = src.channel_count();
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      Vec2 f = flow.at(y, x);
      float sx = static_cast<float>(x) + f.x;
      float sy = static_cast<float>(y) + f.y;
      std::size_t base = (static_cast<std::size_t>(y) * src.width + x) * ch;
      for (int c = 0; c < ch; ++c)
        out.data[base + c] = detail::sample_raster(src, sx, sy, c);
    }
  }
  return out;
}

// Forward-splat src along flow with per-source scalar weights.
// pre: src, flow, weight share H x W; weight values in [0, cfg.alpha].
template <typename Raster>
SplatResult<Raster> softmax_splat(const Raster& src, const FlowField& flow,
                                  const ScalarMap& weight,
                                  const PipelineConfig& cfg = {}) {
  detail::require_same_size(src.height, src.width, flow.height, flow.width,
                            "softmax_splat src vs flow");
  detail::require_same_size(src.height, src.width, weight.height, weight.width,
                            "softmax_splat src vs weight");
  detail::require_valid_config(cfg);
  for (float w : weight.data) {
    if (!(w >= 0.0f && w <= cfg.alpha))
      throw ParamError("softmax_splat weight outside [0, alpha]");
  }

  const int h = src.height;
  const int w = src.width;
  const int ch = src.channel_count();
  const std::size_t n = static_cast<std::size_t>(h) * w;

  // Per (source, target) kernel visit: footprint is the 2x2 integer
  // neighborhood of the continuous landing position; contributions that fall
  // outside the raster are dropped.
  auto for_each_contribution = [&](auto&& fn) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        Vec2 f = flow.at(y, x);
        float tx = static_cast<float>(x) + f.x;
        float ty = static_cast<float>(y) + f.y;
        int x0 = static_cast<int>(std::floor(tx));
        int y0 = static_cast<int>(std::floor(ty));
        for (int dy = 0; dy <= 1; ++dy) {
          int py = y0 + dy;
          if (py < 0 || py >= h) continue;
          float by = 1.0f - std::abs(ty - static_cast<float>(py));
          if (!(by > 0.0f)) continue;
          for (int dx = 0; dx <= 1; ++dx) {
            int px = x0 + dx;
            if (px < 0 || px >= w) continue;
            float bx = 1.0f - std::abs(tx - static_cast<float>(px));
            if (!(bx > 0.0f)) continue;
            fn(static_cast<std::size_t>(y) * w + x,
               static_cast<std::size_t>(py) * w + px, bx * by);
          }
        }
      }
    }
  };

  std::vector<float> max_w(n, 0.0f);
  std::vector<bool> touched(n, false);
  for_each_contribution([&](std::size_t q, std::size_t p, float) {
    float wq = weight.data[q];
    if (!touched[p] || wq > max_w[p]) {
      max_w[p] = wq;
      touched[p] = true;
    }
  });

  std::vector<double> num(n * static_cast<std::size_t>(ch), 0.0);
  std::vector<double> den(n, 0.0);
  for_each_contribution([&](std::size_t q, std::size_t p, float b) {
    double e = std::exp(static_cast<double>(weight.data[q]) -
                        static_cast<double>(max_w[p])) *
               static_cast<double>(b);
    den[p] += e;
    for (int c = 0; c < ch; ++c)
      num[p * ch + c] += e * static_cast<double>(src.data[q * ch + c]);
  });

  SplatResult<Raster> out{detail::make_like(src),
                          ScalarMap(h, w, MapKind::mass, 0.0f),
                          ScalarMap(h, w, MapKind::occlusion, 0.0f)};
  for (std::size_t p = 0; p < n; ++p) {
    float mass = static_cast<float>(den[p]);
    out.mass.data[p] = mass;
    if (mass < cfg.hole_eps) {
      out.holes.data[p] = 1.0f;
      // values stay 0
    } else {
      for (int c = 0; c < ch; ++c)
        out.values.data[p * ch + c] =
            static_cast<float>(num[p * ch + c] / den[p]);
    }
  }
  return out;
}

}  // namespace flowinterp
