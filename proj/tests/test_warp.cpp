#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "flowinterp/warp.hpp"
#include "reference/splat_reference.hpp"

using namespace flowinterp;

namespace {

ImageBuffer strip(std::vector<float> values) {
  ImageBuffer img(1, static_cast<int>(values.size()), 1);
  img.data = std::move(values);
  return img;
}

}  // namespace

TEST_CASE("backward_warp with zero flow is the identity") {
  ImageBuffer img(3, 4, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<float>(i) / static_cast<float>(img.data.size());
  FlowField flow(3, 4);
  ImageBuffer out = backward_warp(img, flow);
  CHECK(out.data == img.data);
}

TEST_CASE("backward_warp samples the midpoint of a 1x2 gradient") {
  ImageBuffer img = strip({0.0f, 1.0f});
  FlowField flow(1, 2);
  flow.set(0, 0, {0.5f, 0.0f});
  ImageBuffer out = backward_warp(img, flow);
  CHECK(out.at(0, 0) == Catch::Approx(0.5).margin(1e-7));
  CHECK(out.at(0, 1) == 1.0f);
}

TEST_CASE("backward_warp of a constant image is constant under any flow") {
  ImageBuffer img(4, 4, 1);
  for (float& v : img.data) v = 0.37f;
  FlowField flow(4, 4);
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> d(-3.0f, 3.0f);
  for (float& v : flow.data) v = d(rng);
  ImageBuffer out = backward_warp(img, flow);
  for (float v : out.data) CHECK(v == Catch::Approx(0.37).margin(1e-6));
}

TEST_CASE("backward_warp mismatched sizes throw ShapeError") {
  ImageBuffer img(2, 2, 1);
  FlowField flow(2, 3);
  CHECK_THROWS_AS(backward_warp(img, flow), ShapeError);
}

TEST_CASE("splat merges two sources landing on one target equally") {
  // Pixel 0 shifts one step right onto pixel 1; pixel 1 stays. Both arrive
  // with unit kernel weight, so target 1 averages them and target 0 is a
  // hole.
  ImageBuffer img = strip({0.8f, 0.2f, 0.5f, 0.7f});
  FlowField flow(1, 4);
  flow.set(0, 0, {1.0f, 0.0f});
  ScalarMap weight(1, 4, MapKind::weight, 0.0f);
  auto res = softmax_splat(img, flow, weight);
  CHECK(res.holes.at(0, 0) == 1.0f);
  CHECK(res.values.at(0, 0) == 0.0f);
  CHECK(res.values.at(0, 1) == Catch::Approx(0.5).margin(1e-6));
  CHECK(res.values.at(0, 2) == 0.5f);
  CHECK(res.values.at(0, 3) == 0.7f);
  CHECK(res.mass.at(0, 1) == Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("splat weight 50 lets one source dominate without overflow") {
  ImageBuffer img = strip({0.8f, 0.2f, 0.5f, 0.7f});
  FlowField flow(1, 4);
  flow.set(0, 0, {1.0f, 0.0f});
  ScalarMap weight(1, 4, MapKind::weight, 0.0f);
  weight.at(0, 0) = 50.0f;
  auto res = softmax_splat(img, flow, weight);
  // (e^50 * 0.8 + 0.2) / (e^50 + 1): indistinguishable from 0.8 in float.
  CHECK(res.values.at(0, 1) == Catch::Approx(0.8).margin(1e-6));
  for (float v : res.values.data) CHECK(std::isfinite(v));
  for (float v : res.mass.data) CHECK(std::isfinite(v));
}

TEST_CASE("splat along an integer permutation is exact") {
  // 2x2 horizontal swap: each target receives exactly one source with b = 1.
  ImageBuffer img(2, 2, 1);
  img.data = {0.1f, 0.4f, 0.6f, 0.9f};
  FlowField flow(2, 2);
  flow.set(0, 0, {1.0f, 0.0f});
  flow.set(0, 1, {-1.0f, 0.0f});
  flow.set(1, 0, {1.0f, 0.0f});
  flow.set(1, 1, {-1.0f, 0.0f});
  ScalarMap weight(2, 2, MapKind::weight, 0.0f);
  auto res = softmax_splat(img, flow, weight);
  CHECK(res.values.data == std::vector<float>{0.4f, 0.1f, 0.9f, 0.6f});
  for (float m : res.mass.data) CHECK(m == 1.0f);
  for (float h : res.holes.data) CHECK(h == 0.0f);
}

TEST_CASE("splat values are shift-invariant in the weights") {
  ImageBuffer img(3, 3, 1);
  img.data = {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f, 0.8f, 0.9f};
  FlowField flow(3, 3);
  flow.set(0, 0, {0.5f, 0.5f});
  flow.set(1, 1, {-0.25f, 0.75f});
  flow.set(2, 2, {-1.0f, -1.0f});
  ScalarMap w0(3, 3, MapKind::weight, 0.0f);
  ScalarMap w7(3, 3, MapKind::weight, 7.0f);
  auto r0 = softmax_splat(img, flow, w0);
  auto r7 = softmax_splat(img, flow, w7);
  CHECK(r0.values.data == r7.values.data);  // bitwise: same softmax
  CHECK(r0.holes.data == r7.holes.data);
}

TEST_CASE("splat mass is conserved when all kernels land inside") {
  ImageBuffer img(4, 4, 1);
  FlowField flow(4, 4);
  // Shift the interior 2x2 block by fractional offsets; kernels stay inside.
  flow.set(1, 1, {0.5f, 0.25f});
  flow.set(1, 2, {-0.5f, 0.75f});
  flow.set(2, 1, {0.3f, -0.4f});
  ScalarMap weight(4, 4, MapKind::weight, 0.0f);
  auto res = softmax_splat(img, flow, weight);
  double total = 0.0;
  for (float m : res.mass.data) total += m;
  CHECK(total == Catch::Approx(16.0).margin(1e-5));
}

TEST_CASE("splat drops contributions outside the raster") {
  ImageBuffer img = strip({1.0f, 1.0f});
  FlowField flow(1, 2);
  flow.set(0, 1, {5.0f, 0.0f});  // leaves the image entirely
  ScalarMap weight(1, 2, MapKind::weight, 0.0f);
  auto res = softmax_splat(img, flow, weight);
  CHECK(res.holes.at(0, 1) == 1.0f);
  double total = 0.0;
  for (float m : res.mass.data) total += m;
  CHECK(total == Catch::Approx(1.0).margin(1e-6));  // only pixel 0 remains
}

TEST_CASE("splat rejects weights outside [0, alpha]") {
  ImageBuffer img = strip({0.5f});
  FlowField flow(1, 1);
  ScalarMap weight(1, 1, MapKind::weight, -1.0f);
  CHECK_THROWS_AS(softmax_splat(img, flow, weight), ParamError);
  weight.data[0] = 51.0f;  // default alpha is 50
  CHECK_THROWS_AS(softmax_splat(img, flow, weight), ParamError);
}

TEST_CASE("splat of flow fields carries both channels") {
  FlowField src(1, 3, {2.0f, -1.0f});
  FlowField motion(1, 3);
  motion.set(0, 0, {1.0f, 0.0f});
  ScalarMap weight(1, 3, MapKind::weight, 0.0f);
  auto res = softmax_splat(src, motion, weight);
  CHECK(res.values.at(0, 1).x == Catch::Approx(2.0).margin(1e-6));
  CHECK(res.values.at(0, 1).y == Catch::Approx(-1.0).margin(1e-6));
}

TEST_CASE("splat agrees with the scalar reference on random instances") {
  std::mt19937 rng(20240811);
  std::uniform_real_distribution<float> flow_d(-4.0f, 4.0f);
  std::uniform_real_distribution<float> weight_d(0.0f, 50.0f);
  std::uniform_real_distribution<float> value_d(0.0f, 1.0f);
  for (int trial = 0; trial < 10; ++trial) {
    const int channels = trial % 2 ? 3 : 1;
    ImageBuffer img(16, 16, channels);
    for (float& v : img.data) v = value_d(rng);
    FlowField flow(16, 16);
    for (float& v : flow.data) v = flow_d(rng);
    ScalarMap weight(16, 16, MapKind::weight, 0.0f);
    for (float& v : weight.data) v = weight_d(rng);

    auto prod = softmax_splat(img, flow, weight);
    auto ref = splat_reference::splat(img, flow, weight, 1e-7f);

    double max_diff = 0.0;
    for (std::size_t i = 0; i < prod.values.data.size(); ++i)
      max_diff = std::max(
          max_diff, std::abs(prod.values.data[i] - ref.values[i]));
    CHECK(max_diff <= 1e-5);
    for (std::size_t i = 0; i < prod.holes.data.size(); ++i)
      CHECK((prod.holes.data[i] != 0.0f) == (ref.holes[i] != 0));
  }
}

TEST_CASE("splat stays finite at alpha = 100") {
  PipelineConfig cfg;
  cfg.alpha = 100.0f;
  std::mt19937 rng(99);
  std::uniform_real_distribution<float> flow_d(-4.0f, 4.0f);
  std::uniform_real_distribution<float> weight_d(0.0f, 100.0f);
  ImageBuffer img(16, 16, 1);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<float>(i % 7) / 7.0f;
  FlowField flow(16, 16);
  for (float& v : flow.data) v = flow_d(rng);
  ScalarMap weight(16, 16, MapKind::weight, 0.0f);
  for (float& v : weight.data) v = weight_d(rng);
  auto res = softmax_splat(img, flow, weight, cfg);
  for (float v : res.values.data) CHECK(std::isfinite(v));
  for (float v : res.mass.data) CHECK(std::isfinite(v));
}

TEST_CASE("splat values at non-hole pixels are convex combinations") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> flow_d(-2.0f, 2.0f);
  ImageBuffer img(8, 8, 1);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = (i % 2) ? 0.25f : 0.75f;
  FlowField flow(8, 8);
  for (float& v : flow.data) v = flow_d(rng);
  ScalarMap weight(8, 8, MapKind::weight, 0.0f);
  auto res = softmax_splat(img, flow, weight);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if (res.holes.at(y, x) == 0.0f) {
        CHECK(res.values.at(y, x) >= 0.25f - 1e-6f);
        CHECK(res.values.at(y, x) <= 0.75f + 1e-6f);
      }
}

TEST_CASE("splat is bitwise deterministic across runs") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<float> flow_d(-3.0f, 3.0f);
  ImageBuffer img(12, 12, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<float>((i * 31) % 101) / 101.0f;
  FlowField flow(12, 12);
  for (float& v : flow.data) v = flow_d(rng);
  ScalarMap weight(12, 12, MapKind::weight, 3.0f);
  auto a = softmax_splat(img, flow, weight);
  auto b = softmax_splat(img, flow, weight);
  CHECK(a.values.data == b.values.data);
  CHECK(a.mass.data == b.mass.data);
  CHECK(a.holes.data == b.holes.data);
}
