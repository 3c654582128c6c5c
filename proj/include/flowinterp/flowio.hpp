#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "flowinterp/core.hpp"
#include "flowinterp/detail/png.hpp"

// File formats: Middlebury .flo (byte-exact round trip), binary PPM/PGM, the
// 8-bit PNG subset from detail/png.hpp, and the standard flow color-wheel
// visualization. All multi-byte .flo fields are little-endian regardless of
// host order.

namespace flowinterp {

inline constexpr float kFloMagic = 202021.25f;

namespace detail {

inline void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline std::uint32_t get_le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<std::uint8_t> write_flo(const FlowField& flow) {
  if (auto err = validate(flow)) throw IoError("write_flo: " + *err);
  std::vector<std::uint8_t> out;
  out.reserve(12 + flow.data.size() * 4);
  detail::put_le32(out, std::bit_cast<std::uint32_t>(kFloMagic));
  detail::put_le32(out, static_cast<std::uint32_t>(flow.width));
  detail::put_le32(out, static_cast<std::uint32_t>(flow.height));
  for (float v : flow.data)
    detail::put_le32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline FlowField read_flo(const std::uint8_t* bytes, std::size_t size) {
  if (size < 12) throw IoError("read_flo: unexpected EOF in header");
  float magic = std::bit_cast<float>(detail::get_le32(bytes));
  if (magic != kFloMagic) throw IoError("read_flo: not a .flo file");
  std::int32_t w = static_cast<std::int32_t>(detail::get_le32(bytes + 4));
  std::int32_t h = static_cast<std::int32_t>(detail::get_le32(bytes + 8));
  if (w <= 0 || h <= 0) throw IoError("read_flo: invalid header");
  std::uint64_t payload = 8ull * static_cast<std::uint64_t>(w) *
                          static_cast<std::uint64_t>(h);
  if (size - 12 < payload) throw IoError("read_flo: unexpected EOF in payload");
  if (size - 12 > payload) throw IoError("read_flo: unexpected trailing bytes");
  FlowField flow(h, w);
  for (std::size_t i = 0; i < flow.data.size(); ++i)
    flow.data[i] = std::bit_cast<float>(detail::get_le32(bytes + 12 + 4 * i));
  return flow;
}

inline FlowField read_flo(const std::vector<std::uint8_t>& bytes) {
  return read_flo(bytes.data(), bytes.size());
}

namespace detail {

inline std::uint8_t quantize(float v) {
  long q = std::lround(v * 255.0f);
  return static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
}

inline std::vector<std::uint8_t> encode_pnm(const ImageBuffer& img) {
  if (img.channels != 1 && img.channels != 3)
    throw IoError("pnm encode: channel count must be 1 or 3");
  std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                       std::to_string(img.width) + " " +
                       std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.data.size());
  for (float v : img.data) out.push_back(quantize(v));
  return out;
}

inline ImageBuffer decode_pnm(const std::uint8_t* bytes, std::size_t size) {
  if (size < 2) throw IoError("pnm decode: unexpected EOF");
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw IoError("pnm decode: not a binary PGM/PPM");
  int channels = bytes[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  auto next_int = [&](const char* what) {
    // Skip whitespace and '#' comments between header tokens.
    for (;;) {
      while (pos < size &&
             std::isspace(static_cast<unsigned char>(bytes[pos])))
        ++pos;
      if (pos < size && bytes[pos] == '#') {
        while (pos < size && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= size || !std::isdigit(bytes[pos]))
      throw IoError(std::string("pnm decode: malformed header (") + what + ")");
    long v = 0;
    while (pos < size && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1000000000L)
        throw IoError(std::string("pnm decode: malformed header (") + what + ")");
      ++pos;
    }
    return v;
  };
  long width = next_int("width");
  long height = next_int("height");
  long maxval = next_int("maxval");
  if (width <= 0 || height <= 0)
    throw IoError("pnm decode: invalid dimensions");
  if (maxval > 255) throw IoError("pnm decode: unsupported bit depth");
  if (maxval != 255) throw IoError("pnm decode: unsupported maxval");
  if (pos >= size || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw IoError("pnm decode: malformed header (missing separator)");
  ++pos;
  std::size_t expected =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
      static_cast<std::size_t>(channels);
  if (size - pos < expected) throw IoError("pnm decode: unexpected EOF in pixels");
  ImageBuffer img(static_cast<int>(height), static_cast<int>(width), channels);
  for (std::size_t i = 0; i < expected; ++i)
    img.data[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
  return img;
}

}  // namespace detail

enum class ImageFormat { png, pnm };

// Dispatches on the stream's magic bytes; 8-bit PNG / binary PGM / binary PPM.
inline ImageBuffer read_image(const std::uint8_t* bytes, std::size_t size) {
  if (size >= 8 &&
      std::memcmp(bytes, detail::kPngSignature, 8) == 0)
    return detail::decode_png(bytes, size);
  if (size >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
    return detail::decode_pnm(bytes, size);
  throw IoError("read_image: unrecognized image format");
}

inline ImageBuffer read_image(const std::vector<std::uint8_t>& bytes) {
  return read_image(bytes.data(), bytes.size());
}

// Encodes with round(v * 255) clamped to [0, 255]; decode maps k back to
// k/255, so an 8-bit round trip is exact.
inline std::vector<std::uint8_t> write_image(const ImageBuffer& img,
                                             ImageFormat format) {
  if (auto err = validate(img)) throw IoError("write_image: " + *err);
  return format == ImageFormat::png ? detail::encode_png(img)
                                    : detail::encode_pnm(img);
}

namespace detail {

// Middlebury color wheel: 55 hue entries over six unevenly sized segments.
inline const std::vector<std::array<float, 3>>& color_wheel() {
  static const std::vector<std::array<float, 3>> wheel = [] {
    constexpr int kRY = 15, kYG = 6, kGC = 4, kCB = 11, kBM = 13, kMR = 6;
    std::vector<std::array<float, 3>> w;
    w.reserve(kRY + kYG + kGC + kCB + kBM + kMR);
    auto push = [&](int r, int g, int b) {
      w.push_back({static_cast<float>(r) / 255.0f,
                   static_cast<float>(g) / 255.0f,
                   static_cast<float>(b) / 255.0f});
    };
    for (int i = 0; i < kRY; ++i) push(255, 255 * i / kRY, 0);
    for (int i = 0; i < kYG; ++i) push(255 - 255 * i / kYG, 255, 0);
    for (int i = 0; i < kGC; ++i) push(0, 255, 255 * i / kGC);
    for (int i = 0; i < kCB; ++i) push(0, 255 - 255 * i / kCB, 255);
    for (int i = 0; i < kBM; ++i) push(255 * i / kBM, 0, 255);
    for (int i = 0; i < kMR; ++i) push(255, 0, 255 - 255 * i / kMR);
    return w;
  }();
  return wheel;
}

}  // namespace detail

// Hue from direction, saturation from magnitude relative to max_norm
// (default: the field's own max; an all-zero field divides by 1). Zero flow
// renders white; magnitudes above max_norm darken toward 75%.
inline ImageBuffer flow_to_color(const FlowField& flow, float max_norm = 0.0f) {
  if (auto err = validate(flow)) throw ParamError("flow_to_color: " + *err);
  if (max_norm < 0.0f || !std::isfinite(max_norm))
    throw ParamError("flow_to_color: max_norm must be finite and >= 0");
  float scale = max_norm;
  if (scale == 0.0f) {
    for (int y = 0; y < flow.height; ++y)
      for (int x = 0; x < flow.width; ++x) {
        Vec2 f = flow.at(y, x);
        scale = std::max(scale, std::hypot(f.x, f.y));
      }
    if (scale == 0.0f) scale = 1.0f;
  }

  const auto& wheel = detail::color_wheel();
  const int ncols = static_cast<int>(wheel.size());
  ImageBuffer out(flow.height, flow.width, 3);
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      Vec2 f = flow.at(y, x);
      float u = f.x / scale;
      float v = f.y / scale;
      float rad = std::hypot(u, v);
      float angle = std::atan2(-v, -u) / 3.14159265358979323846f;
      float fk = (angle + 1.0f) / 2.0f * static_cast<float>(ncols - 1);
      int k0 = static_cast<int>(fk);
      k0 = std::clamp(k0, 0, ncols - 1);
      int k1 = (k0 + 1) % ncols;
      float frac = fk - static_cast<float>(k0);
      for (int c = 0; c < 3; ++c) {
        float col = (1.0f - frac) * wheel[static_cast<std::size_t>(k0)]
                                         [static_cast<std::size_t>(c)] +
                    frac * wheel[static_cast<std::size_t>(k1)]
                                [static_cast<std::size_t>(c)];
        if (rad <= 1.0f)
          col = 1.0f - rad * (1.0f - col);  // saturate toward white at zero
        else
          col *= 0.75f;
        out.at(y, x, c) = std::clamp(col, 0.0f, 1.0f);
      }
    }
  }
  return out;
}

// Path helpers; format chosen by extension (.png, .pgm/.ppm/.pnm, .flo).

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace detail

inline ImageBuffer load_image(const std::filesystem::path& path) {
  return read_image(detail::read_file(path));
}

inline void save_image(const std::filesystem::path& path,
                       const ImageBuffer& img) {
  std::string ext = path.extension().string();
  ImageFormat format;
  if (ext == ".png") {
    format = ImageFormat::png;
  } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    format = ImageFormat::pnm;
  } else {
    throw IoError("save_image: unsupported extension '" + ext + "'");
  }
  detail::write_file(path, write_image(img, format));
}

inline FlowField load_flo(const std::filesystem::path& path) {
  return read_flo(detail::read_file(path));
}

inline void save_flo(const std::filesystem::path& path, const FlowField& flow) {
  detail::write_file(path, write_flo(flow));
}

}  // namespace flowinterp
