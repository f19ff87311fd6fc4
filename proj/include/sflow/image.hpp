#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sflow {

/// RGB image with values in [0,1], row-major and channel-interleaved.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> data;  // height * width * 3

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  float& at(int r, int c, int ch) {
    return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
  }
  float at(int r, int c, int ch) const {
    return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
  }
};

/// Per-pixel displacement. u is horizontal (columns), v is vertical (rows).
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(int h, int w)
      : height(h),
        width(w),
        u(static_cast<std::size_t>(h) * w, 0.0f),
        v(static_cast<std::size_t>(h) * w, 0.0f) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
};

/// true = non-occluded, counted by the "noc" metric.
struct OcclusionMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> valid;

  OcclusionMask() = default;
  OcclusionMask(int h, int w, bool fill = true)
      : height(h), width(w), valid(static_cast<std::size_t>(h) * w, fill ? 1 : 0) {}
};

struct EpeStats {
  double epe_all = 0.0;
  double epe_noc = 0.0;
  std::size_t count_all = 0;
  std::size_t count_noc = 0;
};

// Image files. PPM (P6, P5 replicated to RGB) is always available; PNG via libpng.
Image load_image(const std::string& path);
void write_ppm(const std::string& path, const Image& image);
void write_png(const std::string& path, const Image& image);
/// Dispatches on extension: ".png" writes PNG, anything else PPM.
void write_image(const std::string& path, const Image& image);

/// Nonzero pixels (any channel) are non-occluded.
OcclusionMask load_mask(const std::string& path);

// Middlebury .flo: float 202021.25, int32 width, int32 height, (u,v) float32 pairs.
FlowField read_flo(const std::string& path);
void write_flo(const std::string& path, const FlowField& flow);

/// Color coding by hue = direction, saturation = magnitude / max_radius (clipped
/// to 1), value = 1. Zero flow is white, non-finite vectors are black.
/// max_radius <= 0 or absent selects the largest finite magnitude.
Image flow_to_color(const FlowField& flow, std::optional<double> max_radius = std::nullopt);

/// Mean endpoint error over all pixels and over mask-true pixels.
EpeStats endpoint_error(const FlowField& flow, const FlowField& gt, const OcclusionMask& mask);
EpeStats endpoint_error(const FlowField& flow, const FlowField& gt);

}  // namespace sflow
