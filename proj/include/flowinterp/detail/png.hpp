#pragma once

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "flowinterp/core.hpp"

// Minimal PNG subset: 8-bit grayscale and RGB, non-interlaced. Decoding
// verifies chunk CRCs and supports all five scanline filters; everything the
// subset excludes (16-bit, palette, alpha, interlacing) fails with a
// descriptive IoError. Encoding emits filter-None rows compressed at a fixed
// zlib level, so output bytes are deterministic for a given zlib build.

namespace flowinterp::detail {

inline constexpr unsigned char kPngSignature[8] = {0x89, 'P',  'N',  'G',
                                                   '\r', '\n', 0x1a, '\n'};

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) |
         static_cast<std::uint32_t>(p[3]);
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                         const std::uint8_t* data, std::size_t len) {
  put_be32(out, static_cast<std::uint32_t>(len));
  std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  if (len > 0) out.insert(out.end(), data, data + len);
  uLong crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + len));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

inline std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  if (img.channels != 1 && img.channels != 3)
    throw IoError("png encode: channel count must be 1 or 3");
  if (img.height <= 0 || img.width <= 0)
    throw IoError("png encode: empty image");

  const int ch = img.channels;
  const std::size_t stride = static_cast<std::size_t>(img.width) * ch;
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(img.height) *
                                (stride + 1));
  std::size_t r = 0;
  for (int y = 0; y < img.height; ++y) {
    raw[r++] = 0;  // filter: None
    for (std::size_t i = 0; i < stride; ++i) {
      float v = img.data[static_cast<std::size_t>(y) * stride + i];
      long q = std::lround(v * 255.0f);
      raw[r++] = static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
    }
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoError("png encode: zlib compression failed");
  compressed.resize(bound);

  std::vector<std::uint8_t> out(kPngSignature, kPngSignature + 8);
  std::uint8_t ihdr[13];
  ihdr[0] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(img.width) >> 24);
  ihdr[1] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(img.width) >> 16);
  ihdr[2] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(img.width) >> 8);
  ihdr[3] = static_cast<std::uint8_t>(img.width);
  ihdr[4] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(img.height) >> 24);
  ihdr[5] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(img.height) >> 16);
  ihdr[6] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(img.height) >> 8);
  ihdr[7] = static_cast<std::uint8_t>(img.height);
  ihdr[8] = 8;                      // bit depth
  ihdr[9] = ch == 1 ? 0 : 2;        // color type: gray / truecolor
  ihdr[10] = 0;                     // compression
  ihdr[11] = 0;                     // filter method
  ihdr[12] = 0;                     // no interlace
  append_chunk(out, "IHDR", ihdr, 13);
  append_chunk(out, "IDAT", compressed.data(), compressed.size());
  append_chunk(out, "IEND", nullptr, 0);
  return out;
}

inline std::uint8_t paeth(std::uint8_t a, std::uint8_t b, std::uint8_t c) {
  int p = static_cast<int>(a) + b - c;
  int pa = std::abs(p - a);
  int pb = std::abs(p - b);
  int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

inline void unfilter_row(std::uint8_t filter, std::uint8_t* row,
                         const std::uint8_t* prev, std::size_t stride,
                         int bpp) {
  switch (filter) {
    case 0:
      break;
    case 1:  // Sub
      for (std::size_t i = static_cast<std::size_t>(bpp); i < stride; ++i)
        row[i] = static_cast<std::uint8_t>(row[i] + row[i - bpp]);
      break;
    case 2:  // Up
      if (prev != nullptr)
        for (std::size_t i = 0; i < stride; ++i)
          row[i] = static_cast<std::uint8_t>(row[i] + prev[i]);
      break;
    case 3:  // Average
      for (std::size_t i = 0; i < stride; ++i) {
        int a = i >= static_cast<std::size_t>(bpp) ? row[i - bpp] : 0;
        int b = prev != nullptr ? prev[i] : 0;
        row[i] = static_cast<std::uint8_t>(row[i] + (a + b) / 2);
      }
      break;
    case 4:  // Paeth
      for (std::size_t i = 0; i < stride; ++i) {
        std::uint8_t a = i >= static_cast<std::size_t>(bpp) ? row[i - bpp] : 0;
        std::uint8_t b = prev != nullptr ? prev[i] : 0;
        std::uint8_t c = (prev != nullptr && i >= static_cast<std::size_t>(bpp))
                             ? prev[i - bpp]
                             : 0;
        row[i] = static_cast<std::uint8_t>(row[i] + paeth(a, b, c));
      }
      break;
    default:
      throw IoError("png decode: malformed stream (bad filter type " +
                    std::to_string(filter) + ")");
  }
}

inline ImageBuffer decode_png(const std::uint8_t* bytes, std::size_t size) {
  if (size < 8 || std::memcmp(bytes, kPngSignature, 8) != 0)
    throw IoError("png decode: bad signature");

  std::size_t pos = 8;
  bool saw_ihdr = false;
  bool saw_iend = false;
  std::uint32_t width = 0, height = 0;
  int channels = 0;
  std::vector<std::uint8_t> idat;

  while (pos < size) {
    if (size - pos < 12) throw IoError("png decode: unexpected EOF in chunk");
    std::uint32_t len = get_be32(bytes + pos);
    const std::uint8_t* type = bytes + pos + 4;
    if (size - pos - 12 < len)
      throw IoError("png decode: unexpected EOF in chunk data");
    const std::uint8_t* data = bytes + pos + 8;
    std::uint32_t stored_crc = get_be32(data + len);
    uLong crc = crc32(0L, type, static_cast<uInt>(4 + len));
    if (static_cast<std::uint32_t>(crc) != stored_crc)
      throw IoError("png decode: chunk CRC mismatch");

    std::string tname(reinterpret_cast<const char*>(type), 4);
    if (!saw_ihdr && tname != "IHDR")
      throw IoError("png decode: first chunk is not IHDR");
    if (tname == "IHDR") {
      if (len != 13) throw IoError("png decode: malformed IHDR");
      width = get_be32(data);
      height = get_be32(data + 4);
      int bit_depth = data[8];
      int color_type = data[9];
      if (data[10] != 0 || data[11] != 0)
        throw IoError("png decode: malformed stream (bad method fields)");
      if (data[12] != 0)
        throw IoError("png decode: unsupported interlaced PNG");
      // Color type first: "palette" explains a 2-bit depth better than the
      // depth does.
      if (color_type == 0) channels = 1;
      else if (color_type == 2) channels = 3;
      else if (color_type == 3)
        throw IoError("png decode: unsupported color type (palette)");
      else if (color_type == 4 || color_type == 6)
        throw IoError("png decode: unsupported color type (alpha)");
      else
        throw IoError("png decode: unsupported color type " +
                      std::to_string(color_type));
      if (bit_depth != 8)
        throw IoError("png decode: unsupported bit depth " +
                      std::to_string(bit_depth));
      if (width == 0 || height == 0)
        throw IoError("png decode: invalid dimensions");
      if (static_cast<std::uint64_t>(width) * height > (1u << 28))
        throw IoError("png decode: image too large");
      saw_ihdr = true;
    } else if (tname == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (tname == "IEND") {
      saw_iend = true;
      break;
    }
    // Ancillary chunks are skipped.
    pos += 12 + len;
  }
  if (!saw_ihdr) throw IoError("png decode: missing IHDR");
  if (!saw_iend) throw IoError("png decode: unexpected EOF (no IEND)");
  if (idat.empty()) throw IoError("png decode: missing IDAT");

  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(height) *
                                (stride + 1));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  int zrc = uncompress(raw.data(), &raw_len, idat.data(),
                       static_cast<uLong>(idat.size()));
  if (zrc != Z_OK || raw_len != raw.size())
    throw IoError("png decode: malformed stream (inflate failed)");

  ImageBuffer img(static_cast<int>(height), static_cast<int>(width), channels);
  const std::uint8_t* prev = nullptr;
  for (std::uint32_t y = 0; y < height; ++y) {
    std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
    std::uint8_t filter = row[0];
    unfilter_row(filter, row + 1, prev, stride, channels);
    for (std::size_t i = 0; i < stride; ++i)
      img.data[static_cast<std::size_t>(y) * stride + i] =
          static_cast<float>(row[1 + i]) / 255.0f;
    prev = row + 1;
  }
  return img;
}

}  // namespace flowinterp::detail
