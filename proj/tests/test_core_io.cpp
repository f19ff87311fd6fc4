#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "sflow/error.hpp"
#include "sflow/image.hpp"
#include "support.hpp"

using namespace sflow;
using sflow::testing::TempDir;

namespace {

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double hue_of(const float* rgb) {
  const double r = rgb[0], g = rgb[1], b = rgb[2];
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  if (d == 0.0) return 0.0;
  double h;
  if (mx == r) {
    h = std::fmod((g - b) / d, 6.0);
  } else if (mx == g) {
    h = (b - r) / d + 2.0;
  } else {
    h = (r - g) / d + 4.0;
  }
  h *= 60.0;
  return h < 0 ? h + 360.0 : h;
}

}  // namespace

TEST_CASE("load_image: 8-bit P6 scaling") {
  TempDir dir("io");
  write_bytes(dir.file("red.ppm"), std::string("P6\n1 1\n255\n") + std::string("\xff\x00\x00", 3));
  const Image img = load_image(dir.file("red.ppm"));
  REQUIRE(img.height == 1);
  REQUIRE(img.width == 1);
  CHECK(img.at(0, 0, 0) == 1.0f);
  CHECK(img.at(0, 0, 1) == 0.0f);
  CHECK(img.at(0, 0, 2) == 0.0f);
}

TEST_CASE("load_image: zero image and comments") {
  TempDir dir("io");
  write_bytes(dir.file("zero.ppm"), std::string("P6\n# comment\n2 2\n255\n") + std::string(12, '\0'));
  const Image img = load_image(dir.file("zero.ppm"));
  CHECK(img.height == 2);
  CHECK(img.width == 2);
  CHECK(std::all_of(img.data.begin(), img.data.end(), [](float x) { return x == 0.0f; }));
}

TEST_CASE("load_image: P5 is replicated to RGB") {
  TempDir dir("io");
  write_bytes(dir.file("g.pgm"), std::string("P5\n2 1\n255\n") + std::string("\x33\xcc", 2));
  const Image img = load_image(dir.file("g.pgm"));
  for (int ch = 0; ch < 3; ++ch) {
    CHECK(img.at(0, 0, ch) == doctest::Approx(0x33 / 255.0));
    CHECK(img.at(0, 1, ch) == doctest::Approx(0xcc / 255.0));
  }
}

TEST_CASE("image round-trip through PPM and PNG") {
  TempDir dir("io");
  std::mt19937_64 rng(3);
  Image img = sflow::testing::textured_image(8, 8, rng);
  for (auto& x : img.data) x = std::round(x * 255.0f) / 255.0f;
  for (const char* name : {"a.ppm", "a.png"}) {
    write_image(dir.file(name), img);
    const Image back = load_image(dir.file(name));
    REQUIRE(back.height == 8);
    REQUIRE(back.width == 8);
    for (std::size_t k = 0; k < img.data.size(); ++k) CHECK(back.data[k] == img.data[k]);
  }
  CHECK(read_bytes(dir.file("a.png")).substr(1, 3) == "PNG");
}

TEST_CASE("load_image: errors name the file and attribute") {
  TempDir dir("io");
  const std::string missing = dir.file("missing.ppm");
  try {
    load_image(missing);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
    CHECK(e.exit_code() == 3);
  }
  write_bytes(dir.file("deep.ppm"), "P6\n1 1\n65535\n" + std::string(6, '\0'));
  try {
    load_image(dir.file("deep.ppm"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bit depth") != std::string::npos);
  }
  write_bytes(dir.file("short.ppm"), "P6\n2 2\n255\n" + std::string(5, '\0'));
  CHECK_THROWS_AS(load_image(dir.file("short.ppm")), DataError);
  write_bytes(dir.file("p3.ppm"), "P3\n1 1\n255\n0 0 0\n");
  CHECK_THROWS_AS(load_image(dir.file("p3.ppm")), DataError);
}

TEST_CASE("load_mask: nonzero pixels are valid") {
  TempDir dir("io");
  write_bytes(dir.file("m.pgm"), std::string("P5\n3 1\n255\n") + std::string("\x00\x01\xff", 3));
  const OcclusionMask mask = load_mask(dir.file("m.pgm"));
  CHECK(mask.valid == std::vector<std::uint8_t>{0, 1, 1});
}

TEST_CASE("write_flo: 1x1 zero flow layout") {
  TempDir dir("io");
  write_flo(dir.file("z.flo"), FlowField(1, 1));
  const std::string bytes = read_bytes(dir.file("z.flo"));
  REQUIRE(bytes.size() == 20);
  CHECK(bytes.substr(0, 4) == "PIEH");
  CHECK(bytes.substr(4, 4) == std::string("\x01\x00\x00\x00", 4));
  CHECK(bytes.substr(8, 4) == std::string("\x01\x00\x00\x00", 4));
  CHECK(bytes.substr(12, 8) == std::string(8, '\0'));
}

TEST_CASE("flo round-trip keeps width/height order and non-finite values") {
  TempDir dir("io");
  std::mt19937_64 rng(5);
  std::normal_distribution<float> n(0.0f, 10.0f);
  FlowField f(3, 5);
  for (auto& x : f.u) x = n(rng);
  for (auto& x : f.v) x = n(rng);
  f.u[7] = 1e10f;
  f.v[2] = std::numeric_limits<float>::quiet_NaN();
  write_flo(dir.file("f.flo"), f);
  const FlowField g = read_flo(dir.file("f.flo"));
  REQUIRE(g.height == 3);
  REQUIRE(g.width == 5);
  for (std::size_t p = 0; p < f.pixels(); ++p) {
    CHECK(std::memcmp(&f.u[p], &g.u[p], 4) == 0);
    CHECK(std::memcmp(&f.v[p], &g.v[p], 4) == 0);
  }
}

TEST_CASE("read_flo: bad magic and truncation") {
  TempDir dir("io");
  write_bytes(dir.file("bad.flo"), std::string(20, '\0'));
  try {
    read_flo(dir.file("bad.flo"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
  write_flo(dir.file("t.flo"), FlowField(2, 2));
  const std::string full = read_bytes(dir.file("t.flo"));
  write_bytes(dir.file("t.flo"), full.substr(0, full.size() - 3));
  CHECK_THROWS_AS(read_flo(dir.file("t.flo")), DataError);
}

TEST_CASE("flow_to_color: zero flow is white") {
  const Image img = flow_to_color(FlowField(4, 4));
  CHECK(std::all_of(img.data.begin(), img.data.end(), [](float x) { return x == 1.0f; }));
}

TEST_CASE("flow_to_color: constant saturated flow gives one hue") {
  const FlowField f = sflow::testing::constant_flow(3, 3, 2.0f, 0.0f);
  const Image img = flow_to_color(f, 2.0);
  for (std::size_t p = 0; p < f.pixels(); ++p) {
    CHECK(img.data[p * 3] == img.data[0]);
    CHECK(img.data[p * 3 + 1] == img.data[1]);
    CHECK(img.data[p * 3 + 2] == img.data[2]);
  }
  CHECK(std::min({img.data[0], img.data[1], img.data[2]}) == doctest::Approx(0.0));
}

TEST_CASE("flow_to_color: opposite and orthogonal directions") {
  FlowField f(1, 3);
  f.u = {3.0f, -3.0f, 0.0f};
  f.v = {0.0f, 0.0f, 3.0f};
  const Image img = flow_to_color(f);
  const double h0 = hue_of(&img.data[0]);
  const double h1 = hue_of(&img.data[3]);
  const double h2 = hue_of(&img.data[6]);
  CHECK(std::fmod(h1 - h0 + 360.0, 360.0) == doctest::Approx(180.0).epsilon(1e-4));
  CHECK(std::fmod(h2 - h0 + 360.0, 360.0) == doctest::Approx(90.0).epsilon(1e-4));
}

TEST_CASE("flow_to_color: non-finite vectors are black") {
  FlowField f(1, 2);
  f.u = {std::numeric_limits<float>::infinity(), 1.0f};
  const Image img = flow_to_color(f);
  CHECK(img.data[0] == 0.0f);
  CHECK(img.data[1] == 0.0f);
  CHECK(img.data[2] == 0.0f);
}

TEST_CASE("endpoint_error: identity, 3-4-5 and mask") {
  FlowField gt(1, 2);
  CHECK(endpoint_error(gt, gt).epe_all == 0.0);
  FlowField f(1, 2);
  f.u = {3.0f, 0.0f};
  f.v = {4.0f, 0.0f};
  OcclusionMask mask(1, 2);
  mask.valid = {0, 1};
  const EpeStats s = endpoint_error(f, gt, mask);
  CHECK(s.epe_all == doctest::Approx(2.5));
  CHECK(s.epe_noc == 0.0);
  CHECK(s.count_noc == 1);
  CHECK_THROWS_AS(endpoint_error(f, FlowField(2, 1)), DataError);
}

TEST_CASE("endpoint_error: random 4x4 vs scalar loop") {
  std::mt19937_64 rng(9);
  std::normal_distribution<float> n(0.0f, 4.0f);
  FlowField a(4, 4), b(4, 4);
  for (auto* v : {&a.u, &a.v, &b.u, &b.v}) {
    for (auto& x : *v) x = n(rng);
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < 16; ++p) {
    sum += std::hypot(static_cast<double>(a.u[p]) - b.u[p], static_cast<double>(a.v[p]) - b.v[p]);
  }
  CHECK(endpoint_error(a, b).epe_all == doctest::Approx(sum / 16).epsilon(1e-12));
}
