#include "sflow/image.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sflow/error.hpp"
#include "sflow/io_util.hpp"

namespace sflow {

namespace {

constexpr float kFloMagic = 202021.25f;

bool has_extension(const std::string& path, const std::string& ext) {
  if (path.size() < ext.size()) return false;
  std::string tail = path.substr(path.size() - ext.size());
  std::transform(tail.begin(), tail.end(), tail.begin(), [](unsigned char c) { return std::tolower(c); });
  return tail == ext;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_header_int(std::istream& in, const std::string& path, const char* attribute) {
  const std::string tok = next_token(in);
  try {
    std::size_t used = 0;
    const int value = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return value;
  } catch (const std::exception&) {
    throw DataError(path + ": bad PNM " + attribute + " '" + tok + "'");
  }
}

Image load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path);
  const std::string magic = next_token(in);
  if (magic != "P6" && magic != "P5") {
    throw DataError(path + ": unsupported PNM magic '" + magic + "' (expected P6 or P5)");
  }
  const int width = parse_header_int(in, path, "width");
  const int height = parse_header_int(in, path, "height");
  const int maxval = parse_header_int(in, path, "maxval");
  if (width <= 0 || height <= 0) throw DataError(path + ": non-positive image dimensions");
  if (maxval != 255) {
    throw DataError(path + ": unsupported bit depth, maxval " + std::to_string(maxval) + " (expected 255)");
  }
  const int channels = magic == "P6" ? 3 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw DataError(path + ": truncated pixel data");
  }
  Image image(height, width);
  for (std::size_t p = 0; p < image.pixels(); ++p) {
    for (int ch = 0; ch < 3; ++ch) {
      const unsigned char byte = raw[p * channels + (channels == 3 ? ch : 0)];
      image.data[p * 3 + ch] = static_cast<float>(byte) / 255.0f;
    }
  }
  return image;
}

Image load_png(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw DataError(path + ": cannot read PNG (" + png.message + ")");
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    throw DataError(path + ": unsupported bit depth 16 (expected 8)");
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> raw(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw DataError(path + ": PNG decode failed (" + msg + ")");
  }
  Image image(static_cast<int>(png.height), static_cast<int>(png.width));
  for (std::size_t k = 0; k < image.data.size(); ++k) image.data[k] = static_cast<float>(raw[k]) / 255.0f;
  return image;
}

std::vector<unsigned char> to_bytes(const Image& image) {
  std::vector<unsigned char> raw(image.data.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const float x = std::clamp(image.data[k], 0.0f, 1.0f);
    raw[k] = static_cast<unsigned char>(std::lround(x * 255.0f));
  }
  return raw;
}

void hsv_to_rgb(double hue_deg, double sat, double val, float* rgb) {
  const double h = std::fmod(hue_deg, 360.0) / 60.0;
  const int sector = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double p = val * (1.0 - sat);
  const double q = val * (1.0 - sat * f);
  const double t = val * (1.0 - sat * (1.0 - f));
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = val, g = t, b = p; break;
    case 1: r = q, g = val, b = p; break;
    case 2: r = p, g = val, b = t; break;
    case 3: r = p, g = q, b = val; break;
    case 4: r = t, g = p, b = val; break;
    default: r = val, g = p, b = q; break;
  }
  rgb[0] = static_cast<float>(r);
  rgb[1] = static_cast<float>(g);
  rgb[2] = static_cast<float>(b);
}

void check_same_shape(const FlowField& a, const FlowField& b) {
  if (a.height != b.height || a.width != b.width) {
    std::ostringstream os;
    os << "flow dimension mismatch: " << a.height << "x" << a.width << " vs " << b.height << "x" << b.width;
    throw DataError(os.str());
  }
}

}  // namespace

Image load_image(const std::string& path) {
  if (has_extension(path, ".png")) return load_png(path);
  return load_pnm(path);
}

void write_ppm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image: " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  const auto raw = to_bytes(image);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("write failed: " + path);
}

void write_png(const std::string& path, const Image& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  const auto raw = to_bytes(image);
  if (!png_image_write_to_file(&png, path.c_str(), 0, raw.data(), 0, nullptr)) {
    throw DataError(path + ": PNG write failed (" + png.message + ")");
  }
}

void write_image(const std::string& path, const Image& image) {
  if (has_extension(path, ".png")) {
    write_png(path, image);
  } else {
    write_ppm(path, image);
  }
}

OcclusionMask load_mask(const std::string& path) {
  const Image image = load_image(path);
  OcclusionMask mask(image.height, image.width, false);
  for (std::size_t p = 0; p < image.pixels(); ++p) {
    const bool nonzero = image.data[p * 3] > 0 || image.data[p * 3 + 1] > 0 || image.data[p * 3 + 2] > 0;
    mask.valid[p] = nonzero ? 1 : 0;
  }
  return mask;
}

FlowField read_flo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open flow file: " + path);
  BinaryReader reader(in, path);
  const float magic = reader.f32();
  if (magic != kFloMagic) throw DataError(path + ": bad .flo magic number");
  const std::int32_t width = reader.i32();
  const std::int32_t height = reader.i32();
  if (width <= 0 || height <= 0) throw DataError(path + ": non-positive .flo dimensions");
  FlowField flow(height, width);
  for (std::size_t p = 0; p < flow.pixels(); ++p) {
    flow.u[p] = reader.f32();
    flow.v[p] = reader.f32();
  }
  return flow;
}

void write_flo(const std::string& path, const FlowField& flow) {
  if (flow.height <= 0 || flow.width <= 0) throw DataError(path + ": non-positive flow dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write flow file: " + path);
  BinaryWriter writer(out);
  writer.f32(kFloMagic);
  writer.i32(flow.width);
  writer.i32(flow.height);
  for (std::size_t p = 0; p < flow.pixels(); ++p) {
    writer.f32(flow.u[p]);
    writer.f32(flow.v[p]);
  }
  if (!out) throw DataError("write failed: " + path);
}

Image flow_to_color(const FlowField& flow, std::optional<double> max_radius) {
  double radius = max_radius.value_or(0.0);
  if (radius <= 0.0) {
    for (std::size_t p = 0; p < flow.pixels(); ++p) {
      const double m = std::hypot(static_cast<double>(flow.u[p]), static_cast<double>(flow.v[p]));
      if (std::isfinite(m)) radius = std::max(radius, m);
    }
  }
  Image color(flow.height, flow.width, 1.0f);
  for (std::size_t p = 0; p < flow.pixels(); ++p) {
    const double u = flow.u[p];
    const double v = flow.v[p];
    float* rgb = &color.data[p * 3];
    if (!std::isfinite(u) || !std::isfinite(v)) {
      rgb[0] = rgb[1] = rgb[2] = 0.0f;
      continue;
    }
    const double mag = std::hypot(u, v);
    if (mag == 0.0 || radius <= 0.0) continue;
    double hue = std::atan2(v, u) * 180.0 / std::numbers::pi;
    if (hue < 0) hue += 360.0;
    hsv_to_rgb(hue, std::min(mag / radius, 1.0), 1.0, rgb);
  }
  return color;
}

EpeStats endpoint_error(const FlowField& flow, const FlowField& gt, const OcclusionMask& mask) {
  check_same_shape(flow, gt);
  if (mask.height != flow.height || mask.width != flow.width) {
    throw DataError("occlusion mask dimensions do not match the flow");
  }
  EpeStats stats;
  double sum_all = 0.0;
  double sum_noc = 0.0;
  for (std::size_t p = 0; p < flow.pixels(); ++p) {
    const double du = static_cast<double>(flow.u[p]) - gt.u[p];
    const double dv = static_cast<double>(flow.v[p]) - gt.v[p];
    const double e = std::sqrt(du * du + dv * dv);
    sum_all += e;
    ++stats.count_all;
    if (mask.valid[p]) {
      sum_noc += e;
      ++stats.count_noc;
    }
  }
  stats.epe_all = stats.count_all ? sum_all / static_cast<double>(stats.count_all) : 0.0;
  stats.epe_noc = stats.count_noc ? sum_noc / static_cast<double>(stats.count_noc) : 0.0;
  return stats;
}

EpeStats endpoint_error(const FlowField& flow, const FlowField& gt) {
  return endpoint_error(flow, gt, OcclusionMask(flow.height, flow.width, true));
}

}  // namespace sflow
