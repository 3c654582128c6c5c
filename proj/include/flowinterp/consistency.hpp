#pragma once

#include <algorithm>
#include <cmath>

#include "flowinterp/core.hpp"

// Forward-backward flow consistency: per-pixel confidence, a thresholded
// binary occlusion map, and the occlusion-derived splat weight mask.
//
// All three sample the opposing flow at the forward correspondence with
// bilinear clamp-to-edge lookups, so disagreement with an analytic occlusion
// oracle is confined to a ~1 pixel band at motion boundaries.

namespace flowinterp {

// Confidence never reaches exact zero: exp() underflows float for residual
// ratios beyond ~104, and downstream fusion requires confidences that still
// dominate fusion_eps. The floor is far below any meaningful confidence.
inline constexpr float kConfidenceFloor = 1e-6f;

namespace detail {

struct ConsistencyTerms {
  float residual_sq;   // |v_fwd(x) + v_bwd(x + v_fwd(x))|^2
  float magnitude_sq;  // |v_fwd(x)|^2 + |v_bwd(x + v_fwd(x))|^2
};

inline ConsistencyTerms consistency_terms(const FlowField& v_fwd,
                                          const FlowField& v_bwd, int y,
                                          int x) {
  Vec2 f = v_fwd.at(y, x);
  Vec2 b = bilinear_sample(v_bwd, static_cast<float>(x) + f.x,
                           static_cast<float>(y) + f.y);
  float rx = f.x + b.x;
  float ry = f.y + b.y;
  return {rx * rx + ry * ry,
          f.x * f.x + f.y * f.y + b.x * b.x + b.y * b.y};
}

}  // namespace detail

// C(x) = exp(-residual^2 / (gamma1 * magnitudes + gamma2)), clamped to
// [kConfidenceFloor, 1]. Equals 1 exactly iff the residual is exactly zero
// (up to float exp granularity near zero).
inline ScalarMap confidence_map(const FlowField& v_fwd, const FlowField& v_bwd,
                                const PipelineConfig& cfg = {}) {
  detail::require_same_size(v_fwd.height, v_fwd.width, v_bwd.height,
                            v_bwd.width, "confidence_map forward vs backward");
  detail::require_valid_config(cfg);
  ScalarMap out(v_fwd.height, v_fwd.width, MapKind::confidence, 1.0f);
  for (int y = 0; y < v_fwd.height; ++y) {
    for (int x = 0; x < v_fwd.width; ++x) {
      auto t = detail::consistency_terms(v_fwd, v_bwd, y, x);
      float den = cfg.gamma1 * t.magnitude_sq + cfg.gamma2;
      float c = std::exp(-t.residual_sq / den);
      out.at(y, x) = std::clamp(c, kConfidenceFloor, 1.0f);
    }
  }
  return out;
}

// Binary map: 1 where residual^2 > occl_alpha1 * magnitudes + occl_alpha2.
inline ScalarMap occlusion_map(const FlowField& v_fwd, const FlowField& v_bwd,
                               const PipelineConfig& cfg = {}) {
  detail::require_same_size(v_fwd.height, v_fwd.width, v_bwd.height,
                            v_bwd.width, "occlusion_map forward vs backward");
  detail::require_valid_config(cfg);
  ScalarMap out(v_fwd.height, v_fwd.width, MapKind::occlusion, 0.0f);
  for (int y = 0; y < v_fwd.height; ++y) {
    for (int x = 0; x < v_fwd.width; ++x) {
      auto t = detail::consistency_terms(v_fwd, v_bwd, y, x);
      float threshold = cfg.occl_alpha1 * t.magnitude_sq + cfg.occl_alpha2;
      out.at(y, x) = t.residual_sq > threshold ? 1.0f : 0.0f;
    }
  }
  return out;
}

// M(x) = alpha * (1 - O(x)) * O(x + v_fwd(x)); values in [0, alpha].
// Nonzero exactly where the pixel is visible now but its correspondence
// lands on occluded ground, which is what lets foreground sources win the
// splat and removes the duplicate (ghost) of a moving object.
inline ScalarMap occlusion_weight_mask(const ScalarMap& o_fwd,
                                       const FlowField& v_fwd,
                                       const PipelineConfig& cfg = {}) {
  detail::require_same_size(o_fwd.height, o_fwd.width, v_fwd.height,
                            v_fwd.width, "occlusion_weight_mask map vs flow");
  detail::require_valid_config(cfg);
  ScalarMap out(o_fwd.height, o_fwd.width, MapKind::weight, 0.0f);
  for (int y = 0; y < o_fwd.height; ++y) {
    for (int x = 0; x < o_fwd.width; ++x) {
      Vec2 f = v_fwd.at(y, x);
      float warped = bilinear_sample(o_fwd, static_cast<float>(x) + f.x,
                                     static_cast<float>(y) + f.y);
      float m = cfg.alpha * (1.0f - o_fwd.at(y, x)) * warped;
      out.at(y, x) = std::clamp(m, 0.0f, cfg.alpha);
    }
  }
  return out;
}

}  // namespace flowinterp
