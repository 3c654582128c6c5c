#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "flowinterp/flowio.hpp"

using namespace flowinterp;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path data_dir() { return FLOWINTERP_TEST_DATA_DIR; }

// Hand-assembled stream: magic "PIEH", width 2, height 1,
// pixels (1.0, 0.0) and (-1.0, 0.5), all little-endian.
std::vector<std::uint8_t> reference_flo_bytes() {
  return {
      0x50, 0x49, 0x45, 0x48,  // 202021.25f
      0x02, 0x00, 0x00, 0x00,  // width
      0x01, 0x00, 0x00, 0x00,  // height
      0x00, 0x00, 0x80, 0x3F,  // 1.0
      0x00, 0x00, 0x00, 0x00,  // 0.0
      0x00, 0x00, 0x80, 0xBF,  // -1.0
      0x00, 0x00, 0x00, 0x3F,  // 0.5
  };
}

}  // namespace

TEST_CASE("read_flo decodes a hand-assembled stream") {
  FlowField flow = read_flo(reference_flo_bytes());
  REQUIRE(flow.width == 2);
  REQUIRE(flow.height == 1);
  CHECK(flow.at(0, 0).x == 1.0f);
  CHECK(flow.at(0, 0).y == 0.0f);
  CHECK(flow.at(0, 1).x == -1.0f);
  CHECK(flow.at(0, 1).y == 0.5f);
}

TEST_CASE("write_flo reproduces the reference bytes") {
  FlowField flow(1, 2);
  flow.set(0, 0, {1.0f, 0.0f});
  flow.set(0, 1, {-1.0f, 0.5f});
  CHECK(write_flo(flow) == reference_flo_bytes());
}

TEST_CASE("a 1x1 zero flow serializes to exactly 20 bytes") {
  FlowField flow(1, 1);
  CHECK(write_flo(flow).size() == 20);
}

TEST_CASE("read_flo rejects a wrong magic number") {
  auto bytes = reference_flo_bytes();
  bytes[0] = 0x00;
  bytes[1] = 0x00;
  bytes[2] = 0x00;
  bytes[3] = 0x00;
  CHECK_THROWS_AS(read_flo(bytes), IoError);
  CHECK_THROWS_WITH(read_flo(bytes), ContainsSubstring("not a .flo file"));
}

TEST_CASE("read_flo rejects truncated streams") {
  auto bytes = reference_flo_bytes();
  auto header_cut = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 7);
  CHECK_THROWS_WITH(read_flo(header_cut), ContainsSubstring("unexpected EOF"));
  auto payload_cut =
      std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 3);
  CHECK_THROWS_WITH(read_flo(payload_cut), ContainsSubstring("unexpected EOF"));
}

TEST_CASE("read_flo rejects trailing bytes") {
  auto bytes = reference_flo_bytes();
  bytes.push_back(0x00);
  CHECK_THROWS_WITH(read_flo(bytes), ContainsSubstring("trailing"));
}

TEST_CASE("read_flo rejects non-positive dimensions") {
  auto bytes = reference_flo_bytes();
  bytes[4] = 0x00;  // width 0
  CHECK_THROWS_WITH(read_flo(bytes), ContainsSubstring("invalid header"));
}

TEST_CASE("flo round trip is byte-exact on random fields") {
  std::mt19937 rng(20240812u);
  std::uniform_real_distribution<float> val(-1000.0f, 1000.0f);
  std::uniform_int_distribution<int> dim(1, 9);
  for (int trial = 0; trial < 25; ++trial) {
    FlowField flow(dim(rng), dim(rng));
    for (float& v : flow.data) v = val(rng);
    std::vector<std::uint8_t> bytes = write_flo(flow);
    FlowField back = read_flo(bytes);
    REQUIRE(back.width == flow.width);
    REQUIRE(back.height == flow.height);
    // Re-encoding must reproduce the identical stream, bit for bit.
    CHECK(write_flo(back) == bytes);
  }
}

TEST_CASE("write_flo rejects non-finite values") {
  FlowField flow(1, 1);
  flow.set(0, 0, {std::numeric_limits<float>::quiet_NaN(), 0.0f});
  CHECK_THROWS_AS(write_flo(flow), IoError);
}

TEST_CASE("png decode recovers exact 8-bit rgb values") {
  ImageBuffer img = load_image(data_dir() / "rgb_3x2.png");
  REQUIRE(img.width == 3);
  REQUIRE(img.height == 2);
  REQUIRE(img.channels == 3);
  const int expected[2][3][3] = {
      {{0, 64, 255}, {128, 200, 32}, {255, 255, 0}},
      {{17, 34, 51}, {250, 1, 2}, {90, 91, 92}},
  };
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(img.at(y, x, c) ==
              static_cast<float>(expected[y][x][c]) / 255.0f);
}

TEST_CASE("png decode recovers exact 8-bit grayscale values") {
  ImageBuffer img = load_image(data_dir() / "gray_4x3.png");
  REQUIRE(img.width == 4);
  REQUIRE(img.height == 3);
  REQUIRE(img.channels == 1);
  const int expected[12] = {0, 85, 170, 255, 1, 2, 3, 4, 250, 200, 150, 100};
  for (int i = 0; i < 12; ++i)
    CHECK(img.data[static_cast<std::size_t>(i)] ==
          static_cast<float>(expected[i]) / 255.0f);
}

TEST_CASE("png and ppm decoders agree on the same pixels") {
  ImageBuffer png = load_image(data_dir() / "rgb_3x2.png");
  ImageBuffer ppm = load_image(data_dir() / "rgb_3x2.ppm");
  REQUIRE(png.width == ppm.width);
  REQUIRE(png.height == ppm.height);
  REQUIRE(png.channels == ppm.channels);
  CHECK(png.data == ppm.data);
}

TEST_CASE("png decode rejects unsupported variants with clear messages") {
  CHECK_THROWS_WITH(load_image(data_dir() / "gray16_2x2.png"),
                    ContainsSubstring("unsupported bit depth"));
  CHECK_THROWS_WITH(load_image(data_dir() / "palette_2x2.png"),
                    ContainsSubstring("palette"));
  CHECK_THROWS_WITH(load_image(data_dir() / "rgba_2x1.png"),
                    ContainsSubstring("alpha"));
  CHECK_THROWS_WITH(load_image(data_dir() / "interlaced_2x2.png"),
                    ContainsSubstring("interlaced"));
}

TEST_CASE("png decode rejects corrupted streams") {
  auto bytes = detail::read_file(data_dir() / "gray_4x3.png");
  SECTION("bad signature") {
    bytes[1] = 'X';
    CHECK_THROWS_WITH(read_image(bytes), ContainsSubstring("unrecognized"));
  }
  SECTION("chunk CRC mismatch") {
    bytes.back() ^= 0xFF;  // IEND CRC
    CHECK_THROWS_WITH(read_image(bytes), ContainsSubstring("CRC"));
  }
  SECTION("truncation") {
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(read_image(bytes), IoError);
  }
}

TEST_CASE("png round trip preserves 8-bit quantized images exactly") {
  ImageBuffer img(7, 5, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<float>((37 * i + 11) % 256) / 255.0f;
  ImageBuffer back = read_image(write_image(img, ImageFormat::png));
  REQUIRE(back.height == img.height);
  REQUIRE(back.width == img.width);
  REQUIRE(back.channels == img.channels);
  CHECK(back.data == img.data);

  ImageBuffer gray(9, 4, 1);
  for (std::size_t i = 0; i < gray.data.size(); ++i)
    gray.data[i] = static_cast<float>((11 * i + 3) % 256) / 255.0f;
  ImageBuffer gback = read_image(write_image(gray, ImageFormat::png));
  CHECK(gback.channels == 1);
  CHECK(gback.data == gray.data);
}

TEST_CASE("pnm encoder writes the documented header and rounds half up") {
  ImageBuffer img(1, 4, 1);
  img.data = {0.0f, 0.5f, 1.0f, 0.2f};
  std::vector<std::uint8_t> bytes = write_image(img, ImageFormat::pnm);
  const std::string header = "P5\n4 1\n255\n";
  REQUIRE(bytes.size() == header.size() + 4);
  CHECK(std::string(bytes.begin(),
                    bytes.begin() + static_cast<long>(header.size())) ==
        header);
  CHECK(bytes[header.size() + 0] == 0);
  CHECK(bytes[header.size() + 1] == 128);  // 0.5 * 255 = 127.5 rounds up
  CHECK(bytes[header.size() + 2] == 255);
  CHECK(bytes[header.size() + 3] == 51);
}

TEST_CASE("pnm decoder handles comments and rejects malformed headers") {
  std::string good = "P5\n# a comment\n2 1\n255\n";
  std::vector<std::uint8_t> bytes(good.begin(), good.end());
  bytes.push_back(10);
  bytes.push_back(20);
  ImageBuffer img = read_image(bytes);
  REQUIRE(img.width == 2);
  CHECK(img.data[0] == 10.0f / 255.0f);

  std::string deep = "P5\n2 1\n65535\n";
  std::vector<std::uint8_t> deep_bytes(deep.begin(), deep.end());
  deep_bytes.resize(deep_bytes.size() + 4);
  CHECK_THROWS_WITH(read_image(deep_bytes),
                    ContainsSubstring("unsupported bit depth"));

  std::string bad = "P5\nxx\n";
  std::vector<std::uint8_t> bad_bytes(bad.begin(), bad.end());
  CHECK_THROWS_WITH(read_image(bad_bytes), ContainsSubstring("malformed"));
}

TEST_CASE("flow_to_color renders zero flow as white") {
  FlowField flow(4, 4);
  ImageBuffer img = flow_to_color(flow);
  REQUIRE(img.channels == 3);
  for (float v : img.data) CHECK(v == 1.0f);
}

TEST_CASE("flow_to_color maps opposite directions to opposite wheel hues") {
  FlowField flow(1, 2);
  flow.set(0, 0, {1.0f, 0.0f});
  flow.set(0, 1, {-1.0f, 0.0f});
  ImageBuffer img = flow_to_color(flow, 1.0f);
  // +x at full saturation lands on the wheel's red entry...
  CHECK(img.at(0, 0, 0) == 1.0f);
  CHECK(img.at(0, 0, 1) == 0.0f);
  CHECK(img.at(0, 0, 2) == 0.0f);
  // ...and -x on the cyan-blue entry half a wheel away.
  CHECK(img.at(0, 1, 0) == 0.0f);
  CHECK(img.at(0, 1, 1) == 209.0f / 255.0f);
  CHECK(img.at(0, 1, 2) == 1.0f);
}

TEST_CASE("flow_to_color darkens magnitudes beyond max_norm") {
  FlowField flow(1, 1, {2.0f, 0.0f});
  ImageBuffer img = flow_to_color(flow, 1.0f);
  CHECK(img.at(0, 0, 0) == Catch::Approx(0.75).margin(1e-6));
  CHECK(img.at(0, 0, 1) == 0.0f);
}

TEST_CASE("flow_to_color auto-normalization is scale invariant") {
  FlowField a(3, 3);
  std::mt19937 rng(99u);
  std::uniform_real_distribution<float> val(-5.0f, 5.0f);
  for (float& v : a.data) v = val(rng);
  FlowField b = a;
  for (float& v : b.data) v *= 4.0f;
  ImageBuffer ia = flow_to_color(a);
  ImageBuffer ib = flow_to_color(b);
  REQUIRE(ia.data.size() == ib.data.size());
  for (std::size_t i = 0; i < ia.data.size(); ++i)
    CHECK(ia.data[i] == Catch::Approx(ib.data[i]).margin(1e-6));
  CHECK_FALSE(validate(ia).has_value());
}

TEST_CASE("flow_to_color rejects bad max_norm") {
  FlowField flow(2, 2);
  CHECK_THROWS_AS(flow_to_color(flow, -1.0f), ParamError);
}

TEST_CASE("save and load round trip through files") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "flowinterp_io_test";
  fs::create_directories(dir);

  FlowField flow(3, 2);
  flow.set(1, 1, {4.25f, -7.5f});
  save_flo(dir / "f.flo", flow);
  FlowField flow_back = load_flo(dir / "f.flo");
  CHECK(flow_back.data == flow.data);

  ImageBuffer img(4, 6, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<float>((5 * i + 1) % 256) / 255.0f;
  save_image(dir / "i.png", img);
  ImageBuffer png_back = load_image(dir / "i.png");
  CHECK(png_back.data == img.data);
  save_image(dir / "i.ppm", img);
  ImageBuffer ppm_back = load_image(dir / "i.ppm");
  CHECK(ppm_back.data == img.data);

  CHECK_THROWS_AS(save_image(dir / "i.bmp", img), IoError);
  CHECK_THROWS_WITH(load_image(dir / "missing.png"),
                    ContainsSubstring("cannot open"));
  fs::remove_all(dir);
}
