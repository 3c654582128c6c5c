#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "flowinterp/core.hpp"

// Image and flow quality metrics plus the small pieces of semi-supervised
// training arithmetic (masked flow loss, EMA teacher update, distractor
// mixing). Reductions accumulate in double.

namespace flowinterp {

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  long pixel_count = 0;
};

struct MaskedL1 {
  double loss = 0.0;
  long valid_count = 0;
};

struct FlowErrorStats {
  double epe = 0.0;    // mean endpoint error, pixels
  double fl_all = 0.0; // percent of pixels with error > 3 px and > 5% of |target|
};

// Model parameters as a flat vector; double so long EMA chains stay within
// 1e-9 relative of the analytic contraction.
struct ParameterVector {
  std::vector<double> data;
};

namespace detail {

inline void require_same_image(const ImageBuffer& a, const ImageBuffer& b,
                               const char* what) {
  require_same_size(a.height, a.width, b.height, b.width, what);
  if (a.channels != b.channels)
    throw ShapeError(std::string(what) + ": channel counts differ");
}

}  // namespace detail

// 10 * log10(1 / MSE) over all pixels and channels; values are assumed in
// [0, 1] so the peak is 1. MSE below 1e-12 reports the 99.0 dB cap.
inline double psnr(const ImageBuffer& ref, const ImageBuffer& test) {
  detail::require_same_image(ref, test, "psnr ref vs test");
  double acc = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    double d = static_cast<double>(ref.data[i]) -
               static_cast<double>(test.data[i]);
    acc += d * d;
  }
  double mse = acc / static_cast<double>(ref.data.size());
  if (mse < 1e-12) return 99.0;
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

// 11x11 Gaussian window, sigma 1.5, normalized to sum 1.
inline const std::array<double, 121>& ssim_window() {
  static const std::array<double, 121> w = [] {
    std::array<double, 121> out{};
    double sum = 0.0;
    for (int y = 0; y < 11; ++y) {
      for (int x = 0; x < 11; ++x) {
        double dx = x - 5;
        double dy = y - 5;
        double g = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
        out[static_cast<std::size_t>(y) * 11 + x] = g;
        sum += g;
      }
    }
    for (double& v : out) v /= sum;
    return out;
  }();
  return w;
}

}  // namespace detail

// Mean structural similarity over all fully interior 11x11 window centers and
// channels, Gaussian weighting, K1 = 0.01, K2 = 0.03, dynamic range 1.
inline double ssim(const ImageBuffer& ref, const ImageBuffer& test) {
  detail::require_same_image(ref, test, "ssim ref vs test");
  if (std::min(ref.height, ref.width) < 11)
    throw ShapeError("ssim needs images at least 11x11");
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const auto& win = detail::ssim_window();
  double acc = 0.0;
  long count = 0;
  for (int cy = 5; cy <= ref.height - 6; ++cy) {
    for (int cx = 5; cx <= ref.width - 6; ++cx) {
      for (int c = 0; c < ref.channels; ++c) {
        double mx = 0.0, my = 0.0, mxx = 0.0, myy = 0.0, mxy = 0.0;
        for (int wy = 0; wy < 11; ++wy) {
          for (int wx = 0; wx < 11; ++wx) {
            double g = win[static_cast<std::size_t>(wy) * 11 + wx];
            double a = ref.at(cy + wy - 5, cx + wx - 5, c);
            double b = test.at(cy + wy - 5, cx + wx - 5, c);
            mx += g * a;
            my += g * b;
            mxx += g * a * a;
            myy += g * b * b;
            mxy += g * a * b;
          }
        }
        double vx = mxx - mx * mx;
        double vy = myy - my * my;
        double cov = mxy - mx * my;
        acc += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
               ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        ++count;
      }
    }
  }
  return acc / static_cast<double>(count);
}

inline MetricReport metric_report(const ImageBuffer& ref,
                                  const ImageBuffer& test) {
  return {psnr(ref, test), ssim(ref, test),
          static_cast<long>(ref.height) * ref.width};
}

// Mean |du| + |dv| over pixels whose confidence reaches tau; an empty valid
// set reports loss 0.
inline MaskedL1 masked_l1_loss(const FlowField& pred, const FlowField& target,
                               const ScalarMap& conf, float tau) {
  detail::require_same_size(pred.height, pred.width, target.height,
                            target.width, "masked_l1_loss pred vs target");
  detail::require_same_size(pred.height, pred.width, conf.height, conf.width,
                            "masked_l1_loss pred vs conf");
  if (!(tau >= 0.0f && tau <= 1.0f))
    throw ParamError("tau must be in [0, 1]");
  double acc = 0.0;
  long valid = 0;
  const std::size_t n = static_cast<std::size_t>(pred.height) * pred.width;
  for (std::size_t p = 0; p < n; ++p) {
    if (conf.data[p] < tau) continue;
    acc += std::abs(static_cast<double>(pred.data[2 * p]) -
                    static_cast<double>(target.data[2 * p])) +
           std::abs(static_cast<double>(pred.data[2 * p + 1]) -
                    static_cast<double>(target.data[2 * p + 1]));
    ++valid;
  }
  return {valid == 0 ? 0.0 : acc / static_cast<double>(valid), valid};
}

// Mean endpoint error and the outlier percentage (error > 3 px and > 5% of
// the target magnitude). mask, when given, selects pixels with value > 0.5.
inline FlowErrorStats endpoint_error(const FlowField& pred,
                                     const FlowField& target,
                                     const ScalarMap* mask = nullptr) {
  detail::require_same_size(pred.height, pred.width, target.height,
                            target.width, "endpoint_error pred vs target");
  if (mask != nullptr)
    detail::require_same_size(pred.height, pred.width, mask->height,
                              mask->width, "endpoint_error pred vs mask");
  double acc = 0.0;
  long outliers = 0;
  long counted = 0;
  const std::size_t n = static_cast<std::size_t>(pred.height) * pred.width;
  for (std::size_t p = 0; p < n; ++p) {
    if (mask != nullptr && !(mask->data[p] > 0.5f)) continue;
    double du = static_cast<double>(pred.data[2 * p]) -
                static_cast<double>(target.data[2 * p]);
    double dv = static_cast<double>(pred.data[2 * p + 1]) -
                static_cast<double>(target.data[2 * p + 1]);
    double err = std::sqrt(du * du + dv * dv);
    double mag = std::hypot(static_cast<double>(target.data[2 * p]),
                            static_cast<double>(target.data[2 * p + 1]));
    acc += err;
    if (err > 3.0 && err > 0.05 * mag) ++outliers;
    ++counted;
  }
  if (counted == 0) return {0.0, 0.0};
  return {acc / static_cast<double>(counted),
          100.0 * static_cast<double>(outliers) / static_cast<double>(counted)};
}

// teacher' = decay * teacher + (1 - decay) * student, elementwise.
inline ParameterVector ema_update(const ParameterVector& teacher,
                                  const ParameterVector& student,
                                  double decay) {
  if (teacher.data.size() != student.data.size())
    throw ShapeError("ema_update teacher vs student: lengths differ");
  if (!(decay >= 0.0 && decay <= 1.0))
    throw ParamError("decay must be in [0, 1]");
  ParameterVector out;
  out.data.resize(teacher.data.size());
  for (std::size_t i = 0; i < teacher.data.size(); ++i)
    out.data[i] = decay * teacher.data[i] + (1.0 - decay) * student.data[i];
  return out;
}

// lambda * base + (1 - lambda) * distractor, clamped to [0, 1].
inline ImageBuffer distract_mix(const ImageBuffer& base,
                                const ImageBuffer& distractor, float lambda) {
  detail::require_same_image(base, distractor, "distract_mix base vs distractor");
  if (!(lambda >= 0.0f && lambda <= 1.0f))
    throw ParamError("lambda must be in [0, 1]");
  ImageBuffer out(base.height, base.width, base.channels);
  for (std::size_t i = 0; i < base.data.size(); ++i) {
    float v = lambda * base.data[i] + (1.0f - lambda) * distractor.data[i];
    out.data[i] = std::clamp(v, 0.0f, 1.0f);
  }
  return out;
}

// supervised + w * self_supervised.
inline double total_loss(double supervised, double self_supervised, double w) {
  return supervised + w * self_supervised;
}

}  // namespace flowinterp
