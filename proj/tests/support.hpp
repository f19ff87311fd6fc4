#pragma once

// Synthetic inputs shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "sflow/costvol.hpp"
#include "sflow/descriptors.hpp"
#include "sflow/image.hpp"

namespace sflow::testing {

inline DoubleDescriptorField random_field(int h, int w, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  DoubleDescriptorField f(h, w);
  for (auto& x : f.data) x = dist(rng);
  return f;
}

inline BinaryDescriptorField random_bits(int h, int w, std::mt19937_64& rng) {
  BinaryDescriptorField f(h, w);
  for (auto& x : f.words) x = rng();
  return f;
}

/// Uniform random RGB noise, a texture every local descriptor can match.
inline Image textured_image(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Image img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = static_cast<float>(u01(rng));
    }
  }
  return img;
}

/// image2(r + dv, c + du) = image1(r, c); uncovered pixels are filled with fresh noise.
inline Image shifted_image(const Image& image1, int du, int dv, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Image out(image1.height, image1.width);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const int sr = r - dv;
      const int sc = c - du;
      for (int ch = 0; ch < 3; ++ch) {
        const bool inside = sr >= 0 && sr < out.height && sc >= 0 && sc < out.width;
        out.at(r, c, ch) = inside ? image1.at(sr, sc, ch) : static_cast<float>(u01(rng));
      }
    }
  }
  return out;
}

inline FlowField constant_flow(int h, int w, float u, float v) {
  FlowField f(h, w);
  std::fill(f.u.begin(), f.u.end(), u);
  std::fill(f.v.begin(), f.v.end(), v);
  return f;
}

/// Ground truth of shifted_image: (du, dv) where the target stays in-frame, the Middlebury
/// unknown marker (1e10) elsewhere.
inline FlowField shift_ground_truth(int h, int w, int du, int dv) {
  FlowField f(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      const bool inside = r + dv >= 0 && r + dv < h && c + du >= 0 && c + du < w;
      f.u[p] = inside ? static_cast<float>(du) : 1e10f;
      f.v[p] = inside ? static_cast<float>(dv) : 1e10f;
    }
  }
  return f;
}

inline Image add_noise(const Image& image, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  Image out = image;
  for (auto& x : out.data) x = static_cast<float>(std::clamp(static_cast<double>(x) + n(rng), 0.0, 1.0));
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("sflow_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace sflow::testing
