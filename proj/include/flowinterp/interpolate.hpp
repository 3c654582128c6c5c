#pragma once

#include <algorithm>
#include <cmath>

#include "flowinterp/consistency.hpp"
#include "flowinterp/core.hpp"
#include "flowinterp/warp.hpp"

// Frame interpolation at arbitrary t in [0, 1]:
//
//   1. intermediate_flows: forward-splat the scaled inter-frame flows to the
//      time-t grid, weighted by the occlusion mask so foreground wins where
//      surfaces collide and the vacated ghost region receives nothing.
//   2. fill_holes: complete each splatted field from the opposite one via the
//      linear-motion identity (1-t) * V_t0 + t * V_t1 = 0; pixels missing in
//      both stay flagged.
//   3. fuse: backward-warp both input frames along the (filled) flows and
//      blend them with forward-backward confidence weights computed on those
//      same flows.
//
// t = 0 and t = 1 short-circuit to bitwise copies of the inputs.

namespace flowinterp {

struct IntermediateFlows {
  FlowField flow_t1;   // time-t grid toward frame 1
  ScalarMap holes_t1;
  FlowField flow_t0;   // time-t grid toward frame 0
  ScalarMap holes_t0;
};

struct HoleFillResult {
  FlowField flow_t0;
  FlowField flow_t1;
  ScalarMap holes_t0;  // residual: hole in both inputs, value left at 0
  ScalarMap holes_t1;
};

struct FusionResult {
  ImageBuffer frame_t;
  ScalarMap conf_t0;
  ScalarMap conf_t1;
};

struct InterpolationOutput {
  ImageBuffer frame_t;
  FlowField flow_t0;
  FlowField flow_t1;
  ScalarMap conf_t0;
  ScalarMap conf_t1;
  ScalarMap holes_t0;
  ScalarMap holes_t1;
};

namespace detail {

inline void require_unit_interval(float t) {
  if (!(t >= 0.0f && t <= 1.0f))
    throw ParamError("t must be in [0, 1]");
}

inline FlowField scaled(const FlowField& f, float s) {
  FlowField out = f;
  for (float& v : out.data) v *= s;
  return out;
}

}  // namespace detail

// pre: t in [0, 1]. At the endpoints the splat displacement toward the near
// frame is zero, so the result is returned exactly: the near-side field is a
// copy of the input flow and the far-side field is identically zero, with no
// holes on either.
inline IntermediateFlows intermediate_flows(const FlowField& flow01,
                                            const FlowField& flow10, float t,
                                            const PipelineConfig& cfg = {}) {
  detail::require_same_size(flow01.height, flow01.width, flow10.height,
                            flow10.width, "intermediate_flows 0->1 vs 1->0");
  detail::require_valid_config(cfg);
  detail::require_unit_interval(t);

  ScalarMap no_holes(flow01.height, flow01.width, MapKind::occlusion, 0.0f);
  if (t == 0.0f) {
    return {flow01, no_holes, FlowField(flow01.height, flow01.width),
            no_holes};
  }
  if (t == 1.0f) {
    return {FlowField(flow01.height, flow01.width), no_holes, flow10,
            no_holes};
  }

  ScalarMap mask0 = occlusion_weight_mask(occlusion_map(flow01, flow10, cfg),
                                          flow01, cfg);
  auto to1 = softmax_splat(detail::scaled(flow01, 1.0f - t),
                           detail::scaled(flow01, t), mask0, cfg);

  ScalarMap mask1 = occlusion_weight_mask(occlusion_map(flow10, flow01, cfg),
                                          flow10, cfg);
  auto to0 = softmax_splat(detail::scaled(flow10, t),
                           detail::scaled(flow10, 1.0f - t), mask1, cfg);

  return {std::move(to1.values), std::move(to1.holes), std::move(to0.values),
          std::move(to0.holes)};
}

// pre: t in (0, 1) (callers shortcut the endpoints). Each one-sided hole is
// filled with the single multiply that satisfies the linear-motion identity;
// two-sided holes keep value 0 and stay flagged in both residual masks.
inline HoleFillResult fill_holes(const FlowField& flow_t0,
                                 const ScalarMap& holes_t0,
                                 const FlowField& flow_t1,
                                 const ScalarMap& holes_t1, float t,
                                 const PipelineConfig& cfg = {}) {
  detail::require_same_size(flow_t0.height, flow_t0.width, flow_t1.height,
                            flow_t1.width, "fill_holes t->0 vs t->1");
  detail::require_same_size(flow_t0.height, flow_t0.width, holes_t0.height,
                            holes_t0.width, "fill_holes flow vs holes");
  detail::require_same_size(flow_t1.height, flow_t1.width, holes_t1.height,
                            holes_t1.width, "fill_holes flow vs holes");
  detail::require_valid_config(cfg);
  if (!(t > 0.0f && t < 1.0f)) throw ParamError("fill_holes needs t in (0, 1)");

  HoleFillResult out{flow_t0, flow_t1,
                     ScalarMap(flow_t0.height, flow_t0.width,
                               MapKind::occlusion, 0.0f),
                     ScalarMap(flow_t0.height, flow_t0.width,
                               MapKind::occlusion, 0.0f)};
  const float ratio_to0 = -(t / (1.0f - t));
  const float ratio_to1 = -((1.0f - t) / t);
  const std::size_t n = static_cast<std::size_t>(flow_t0.height) *
                        flow_t0.width;
  for (std::size_t p = 0; p < n; ++p) {
    bool h0 = holes_t0.data[p] != 0.0f;
    bool h1 = holes_t1.data[p] != 0.0f;
    if (h0 && h1) {
      out.flow_t0.data[2 * p] = out.flow_t0.data[2 * p + 1] = 0.0f;
      out.flow_t1.data[2 * p] = out.flow_t1.data[2 * p + 1] = 0.0f;
      out.holes_t0.data[p] = 1.0f;
      out.holes_t1.data[p] = 1.0f;
    } else if (h0) {
      out.flow_t0.data[2 * p] = ratio_to0 * flow_t1.data[2 * p];
      out.flow_t0.data[2 * p + 1] = ratio_to0 * flow_t1.data[2 * p + 1];
    } else if (h1) {
      out.flow_t1.data[2 * p] = ratio_to1 * flow_t0.data[2 * p];
      out.flow_t1.data[2 * p + 1] = ratio_to1 * flow_t0.data[2 * p + 1];
    }
  }
  return out;
}

// Confidence-weighted blend of the two backward-warped frames. Confidences
// are computed against the linearly scaled inter-frame flows, so they are
// meaningful only after hole filling.
inline FusionResult fuse(const ImageBuffer& frame0, const ImageBuffer& frame1,
                         const FlowField& flow_t0, const FlowField& flow_t1,
                         const FlowField& flow01, const FlowField& flow10,
                         float t, const PipelineConfig& cfg = {}) {
  detail::require_same_size(frame0.height, frame0.width, frame1.height,
                            frame1.width, "fuse frame0 vs frame1");
  if (frame0.channels != frame1.channels)
    throw ShapeError("fuse frame0 vs frame1: channel counts differ");
  detail::require_same_size(frame0.height, frame0.width, flow_t0.height,
                            flow_t0.width, "fuse frames vs flow_t0");
  detail::require_same_size(frame0.height, frame0.width, flow_t1.height,
                            flow_t1.width, "fuse frames vs flow_t1");
  detail::require_same_size(frame0.height, frame0.width, flow01.height,
                            flow01.width, "fuse frames vs flow01");
  detail::require_same_size(frame0.height, frame0.width, flow10.height,
                            flow10.width, "fuse frames vs flow10");
  detail::require_valid_config(cfg);
  detail::require_unit_interval(t);

  ScalarMap conf_t0 =
      confidence_map(flow_t0, detail::scaled(flow01, t), cfg);
  ScalarMap conf_t1 =
      confidence_map(flow_t1, detail::scaled(flow10, 1.0f - t), cfg);
  ImageBuffer warped0 = backward_warp(frame0, flow_t0);
  ImageBuffer warped1 = backward_warp(frame1, flow_t1);

  ImageBuffer frame_t(frame0.height, frame0.width, frame0.channels, 0.0f);
  const std::size_t n = static_cast<std::size_t>(frame0.height) * frame0.width;
  const int ch = frame0.channels;
  for (std::size_t p = 0; p < n; ++p) {
    float c0 = conf_t0.data[p];
    float c1 = conf_t1.data[p];
    float den = c0 + c1 + cfg.fusion_eps;
    for (int c = 0; c < ch; ++c) {
      float v = (c0 * warped0.data[p * ch + c] + c1 * warped1.data[p * ch + c]) /
                den;
      frame_t.data[p * ch + c] = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return {std::move(frame_t), std::move(conf_t0), std::move(conf_t1)};
}

// Full pipeline. post: t = 0 returns frame0/flow01 bitwise (flow_t0 = 0),
// t = 1 mirrors. Pixels left holed on both sides fall back to the plain
// blend (1-t) * frame0 + t * frame1.
inline InterpolationOutput interpolate(const ImageBuffer& frame0,
                                       const ImageBuffer& frame1,
                                       const FlowField& flow01,
                                       const FlowField& flow10, float t,
                                       const PipelineConfig& cfg = {}) {
  detail::require_same_size(frame0.height, frame0.width, frame1.height,
                            frame1.width, "interpolate frame0 vs frame1");
  if (frame0.channels != frame1.channels)
    throw ShapeError("interpolate frame0 vs frame1: channel counts differ");
  detail::require_same_size(frame0.height, frame0.width, flow01.height,
                            flow01.width, "interpolate frames vs flow01");
  detail::require_same_size(frame0.height, frame0.width, flow10.height,
                            flow10.width, "interpolate frames vs flow10");
  detail::require_valid_config(cfg);
  detail::require_unit_interval(t);

  if (t == 0.0f || t == 1.0f) {
    IntermediateFlows flows = intermediate_flows(flow01, flow10, t, cfg);
    FusionResult endpoint = fuse(frame0, frame1, flows.flow_t0, flows.flow_t1,
                                 flow01, flow10, t, cfg);
    return {t == 0.0f ? frame0 : frame1, std::move(flows.flow_t0),
            std::move(flows.flow_t1), std::move(endpoint.conf_t0),
            std::move(endpoint.conf_t1), std::move(flows.holes_t0),
            std::move(flows.holes_t1)};
  }

  IntermediateFlows flows = intermediate_flows(flow01, flow10, t, cfg);
  HoleFillResult filled = fill_holes(flows.flow_t0, flows.holes_t0,
                                     flows.flow_t1, flows.holes_t1, t, cfg);
  FusionResult fused = fuse(frame0, frame1, filled.flow_t0, filled.flow_t1,
                            flow01, flow10, t, cfg);

  const std::size_t n = static_cast<std::size_t>(frame0.height) * frame0.width;
  const int ch = frame0.channels;
  for (std::size_t p = 0; p < n; ++p) {
    if (filled.holes_t0.data[p] != 0.0f && filled.holes_t1.data[p] != 0.0f) {
      for (int c = 0; c < ch; ++c) {
        fused.frame_t.data[p * ch + c] =
            (1.0f - t) * frame0.data[p * ch + c] + t * frame1.data[p * ch + c];
      }
    }
  }
  return {std::move(fused.frame_t),  std::move(filled.flow_t0),
          std::move(filled.flow_t1), std::move(fused.conf_t0),
          std::move(fused.conf_t1),  std::move(filled.holes_t0),
          std::move(filled.holes_t1)};
}

}  // namespace flowinterp
