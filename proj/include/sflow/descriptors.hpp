#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sflow/image.hpp"

namespace sflow {

/// Descriptor dimensionality. One quantized descriptor is one 64-bit word.
inline constexpr int kDescriptorDim = 64;

/// Per-pixel real descriptors, pixel-major: data[p * 64 + k].
template <class T>
struct BasicDescriptorField {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  BasicDescriptorField() = default;
  BasicDescriptorField(int h, int w, T fill = T(0))
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * kDescriptorDim, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  bool empty() const { return data.empty(); }
  std::span<T> pixel(std::size_t p) { return {data.data() + p * kDescriptorDim, kDescriptorDim}; }
  std::span<const T> pixel(std::size_t p) const {
    return {data.data() + p * kDescriptorDim, kDescriptorDim};
  }
};

using FloatDescriptorField = BasicDescriptorField<float>;
using DoubleDescriptorField = BasicDescriptorField<double>;

/// Bit k of a word is 1 iff component k is >= 0 (represents +1).
struct BinaryDescriptorField {
  int height = 0;
  int width = 0;
  std::vector<std::uint64_t> words;

  BinaryDescriptorField() = default;
  BinaryDescriptorField(int h, int w) : height(h), width(w), words(static_cast<std::size_t>(h) * w, 0) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  bool empty() const { return words.empty(); }
};

/// Parameters of the two-layer extractor: 3x3 conv (3 -> k) + tanh, 1x1 conv (k -> 64) + tanh.
///   w1[((ky * 3 + kx) * 3 + c) * k + o], b1[o], w2[c * 64 + o], b2[o]
struct ThetaParams {
  int k = 16;
  std::vector<double> w1, b1, w2, b2;

  static ThetaParams zeros(int k);
  /// Uniform in +-1/sqrt(fan_in), rounded to float precision so checkpoints are exact.
  static ThetaParams random(int k, std::uint64_t seed);

  std::size_t size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
  /// Declaration order: w1, b1, w2, b2.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  double& operator[](std::size_t index);
};

/// Cached activations of one forward pass, needed for backprop.
struct ExtractorActivations {
  int height = 0;
  int width = 0;
  int k = 0;
  std::vector<double> hidden;   // h * w * k, after tanh
  DoubleDescriptorField output;  // after tanh
};

// Census window: 9 wide, 7 tall, center excluded, row-major (dy = -3..3, dx = -4..4).
inline constexpr int kCensusHalfWidth = 4;
inline constexpr int kCensusHalfHeight = 3;
inline constexpr int kCensusBits = 62;
struct CensusOffset {
  int dy;
  int dx;
};
std::array<CensusOffset, kCensusBits> census_offsets();

/// Luminance 0.299 R + 0.587 G + 0.114 B.
std::vector<double> luminance(const Image& image);

/// Bit j is set iff lum(neighbor j) >= lum(center); bits 62..63 are zero. Replicated borders.
BinaryDescriptorField census_transform(const Image& image);

/// sign(0) := +1.
template <class T>
BinaryDescriptorField quantize(const BasicDescriptorField<T>& field);

/// +-1 embedding of the bits.
template <class T = float>
BasicDescriptorField<T> embed_binary(const BinaryDescriptorField& field);

template <class T>
BasicDescriptorField<T> convert_field(const BasicDescriptorField<double>& field);

/// -<a, b>, accumulated in T. Eight fixed partial sums combined in a fixed order, so
/// the result is bit-identical wherever it is evaluated while still vectorizing.
template <class T>
T dot_cost(const T* a, const T* b) {
  T lane[8] = {};
  for (int k = 0; k < kDescriptorDim; k += 8) {
    for (int j = 0; j < 8; ++j) lane[j] += a[k + j] * b[k + j];
  }
  return -(((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7])));
}
template <class T>
T dot_cost(std::span<const T> a, std::span<const T> b) {
  return dot_cost(a.data(), b.data());
}

/// 2 * popcount(a ^ b) - 64, equal to dot_cost of the +-1 embeddings.
inline int hamming_cost(std::uint64_t a, std::uint64_t b) {
  return 2 * std::popcount(a ^ b) - kDescriptorDim;
}

/// Requires image >= 3x3. Zero padding, stride 1.
DoubleDescriptorField tiny_extractor_forward(const Image& image, const ThetaParams& theta,
                                             ExtractorActivations* activations = nullptr);

/// Gradient of a scalar loss w.r.t. theta given dL/d(output descriptors).
ThetaParams tiny_extractor_backward(const Image& image, const ThetaParams& theta,
                                    const ExtractorActivations& activations,
                                    const DoubleDescriptorField& grad_output);

// FDF1: magic, int32 h, w, m (little-endian), then h*w*m float32, pixel-major.
FloatDescriptorField load_descriptor_field(const std::string& path);
void save_descriptor_field(const std::string& path, const FloatDescriptorField& field);

}  // namespace sflow
