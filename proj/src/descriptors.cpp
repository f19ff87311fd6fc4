#include "sflow/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "sflow/error.hpp"
#include "sflow/io_util.hpp"

namespace sflow {

ThetaParams ThetaParams::zeros(int k) {
  if (k <= 0) throw ConfigError("extractor width k must be positive");
  ThetaParams t;
  t.k = k;
  t.w1.assign(static_cast<std::size_t>(27) * k, 0.0);
  t.b1.assign(k, 0.0);
  t.w2.assign(static_cast<std::size_t>(k) * kDescriptorDim, 0.0);
  t.b2.assign(kDescriptorDim, 0.0);
  return t;
}

ThetaParams ThetaParams::random(int k, std::uint64_t seed) {
  ThetaParams t = zeros(k);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](std::vector<double>& v, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (double& x : v) x = static_cast<float>(dist(rng));
  };
  fill(t.w1, 1.0 / std::sqrt(27.0));
  fill(t.b1, 0.1);
  fill(t.w2, 1.0 / std::sqrt(static_cast<double>(k)));
  fill(t.b2, 0.1);
  return t;
}

std::vector<double> ThetaParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  flat.insert(flat.end(), w1.begin(), w1.end());
  flat.insert(flat.end(), b1.begin(), b1.end());
  flat.insert(flat.end(), w2.begin(), w2.end());
  flat.insert(flat.end(), b2.begin(), b2.end());
  return flat;
}

void ThetaParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw DataError("parameter vector size mismatch");
  auto it = flat.begin();
  for (auto* v : {&w1, &b1, &w2, &b2}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(v->size()), v->begin());
    it += static_cast<std::ptrdiff_t>(v->size());
  }
}

double& ThetaParams::operator[](std::size_t index) {
  for (auto* v : {&w1, &b1, &w2, &b2}) {
    if (index < v->size()) return (*v)[index];
    index -= v->size();
  }
  throw DataError("parameter index out of range");
}

std::array<CensusOffset, kCensusBits> census_offsets() {
  std::array<CensusOffset, kCensusBits> offsets{};
  int j = 0;
  for (int dy = -kCensusHalfHeight; dy <= kCensusHalfHeight; ++dy) {
    for (int dx = -kCensusHalfWidth; dx <= kCensusHalfWidth; ++dx) {
      if (dy == 0 && dx == 0) continue;
      offsets[j++] = {dy, dx};
    }
  }
  return offsets;
}

std::vector<double> luminance(const Image& image) {
  std::vector<double> lum(image.pixels());
  for (std::size_t p = 0; p < lum.size(); ++p) {
    lum[p] = 0.299 * image.data[p * 3] + 0.587 * image.data[p * 3 + 1] + 0.114 * image.data[p * 3 + 2];
  }
  return lum;
}

BinaryDescriptorField census_transform(const Image& image) {
  const auto lum = luminance(image);
  const auto offsets = census_offsets();
  const int h = image.height;
  const int w = image.width;
  BinaryDescriptorField out(h, w);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double center = lum[static_cast<std::size_t>(r) * w + c];
      std::uint64_t word = 0;
      for (int j = 0; j < kCensusBits; ++j) {
        const int rr = std::clamp(r + offsets[j].dy, 0, h - 1);
        const int cc = std::clamp(c + offsets[j].dx, 0, w - 1);
        if (lum[static_cast<std::size_t>(rr) * w + cc] >= center) word |= std::uint64_t{1} << j;
      }
      out.words[static_cast<std::size_t>(r) * w + c] = word;
    }
  }
  return out;
}

template <class T>
BinaryDescriptorField quantize(const BasicDescriptorField<T>& field) {
  BinaryDescriptorField out(field.height, field.width);
  for (std::size_t p = 0; p < field.pixels(); ++p) {
    const auto d = field.pixel(p);
    std::uint64_t word = 0;
    for (int k = 0; k < kDescriptorDim; ++k) {
      if (d[k] >= T(0)) word |= std::uint64_t{1} << k;
    }
    out.words[p] = word;
  }
  return out;
}

template <class T>
BasicDescriptorField<T> embed_binary(const BinaryDescriptorField& field) {
  BasicDescriptorField<T> out(field.height, field.width);
  for (std::size_t p = 0; p < field.pixels(); ++p) {
    auto d = out.pixel(p);
    for (int k = 0; k < kDescriptorDim; ++k) d[k] = (field.words[p] >> k) & 1 ? T(1) : T(-1);
  }
  return out;
}

template <class T>
BasicDescriptorField<T> convert_field(const BasicDescriptorField<double>& field) {
  BasicDescriptorField<T> out;
  out.height = field.height;
  out.width = field.width;
  out.data.assign(field.data.begin(), field.data.end());
  return out;
}

template BinaryDescriptorField quantize(const BasicDescriptorField<float>&);
template BinaryDescriptorField quantize(const BasicDescriptorField<double>&);
template BasicDescriptorField<float> embed_binary(const BinaryDescriptorField&);
template BasicDescriptorField<double> embed_binary(const BinaryDescriptorField&);
template BasicDescriptorField<float> convert_field(const BasicDescriptorField<double>&);
template BasicDescriptorField<double> convert_field(const BasicDescriptorField<double>&);

namespace {

void check_theta(const ThetaParams& theta) {
  const int k = theta.k;
  if (k <= 0 || theta.w1.size() != static_cast<std::size_t>(27) * k || theta.b1.size() != static_cast<std::size_t>(k) ||
      theta.w2.size() != static_cast<std::size_t>(k) * kDescriptorDim || theta.b2.size() != kDescriptorDim) {
    throw DataError("extractor parameters have inconsistent shapes");
  }
  for (const auto* v : {&theta.w1, &theta.b1, &theta.w2, &theta.b2}) {
    for (double x : *v) {
      if (!std::isfinite(x)) throw NumericError("extractor parameters are not finite");
    }
  }
}

}  // namespace

DoubleDescriptorField tiny_extractor_forward(const Image& image, const ThetaParams& theta,
                                             ExtractorActivations* activations) {
  check_theta(theta);
  if (image.height < 3 || image.width < 3) throw DataError("extractor needs an image of at least 3x3");
  const int h = image.height;
  const int w = image.width;
  const int k = theta.k;
  std::vector<double> hidden(static_cast<std::size_t>(h) * w * k);
  DoubleDescriptorField out(h, w);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r) {
    std::vector<double> z(k);
    for (int c = 0; c < w; ++c) {
      std::copy(theta.b1.begin(), theta.b1.end(), z.begin());
      for (int ky = 0; ky < 3; ++ky) {
        const int rr = r + ky - 1;
        if (rr < 0 || rr >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int cc = c + kx - 1;
          if (cc < 0 || cc >= w) continue;
          for (int ch = 0; ch < 3; ++ch) {
            const double x = image.at(rr, cc, ch);
            const double* wk = &theta.w1[static_cast<std::size_t>((ky * 3 + kx) * 3 + ch) * k];
            for (int o = 0; o < k; ++o) z[o] += x * wk[o];
          }
        }
      }
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      double* hp = &hidden[p * k];
      for (int o = 0; o < k; ++o) hp[o] = std::tanh(z[o]);

      auto desc = out.pixel(p);
      for (int o = 0; o < kDescriptorDim; ++o) desc[o] = theta.b2[o];
      for (int ci = 0; ci < k; ++ci) {
        const double* wk = &theta.w2[static_cast<std::size_t>(ci) * kDescriptorDim];
        for (int o = 0; o < kDescriptorDim; ++o) desc[o] += hp[ci] * wk[o];
      }
      for (int o = 0; o < kDescriptorDim; ++o) desc[o] = std::tanh(desc[o]);
    }
  }

  if (activations) {
    activations->height = h;
    activations->width = w;
    activations->k = k;
    activations->hidden = std::move(hidden);
    activations->output = out;
  }
  return out;
}

ThetaParams tiny_extractor_backward(const Image& image, const ThetaParams& theta,
                                    const ExtractorActivations& activations,
                                    const DoubleDescriptorField& grad_output) {
  check_theta(theta);
  const int h = image.height;
  const int w = image.width;
  const int k = theta.k;
  if (activations.height != h || activations.width != w || activations.k != k ||
      grad_output.height != h || grad_output.width != w) {
    throw DataError("extractor backward: activation shapes do not match the image");
  }

  // One partial gradient per row, summed in row order: identical for any thread count.
  std::vector<ThetaParams> rows(h, ThetaParams::zeros(k));
#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r) {
    ThetaParams& g = rows[r];
    std::vector<double> dz2(kDescriptorDim);
    std::vector<double> dz1(k);
    for (int c = 0; c < w; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      const auto out = activations.output.pixel(p);
      const auto gout = grad_output.pixel(p);
      for (int o = 0; o < kDescriptorDim; ++o) {
        dz2[o] = gout[o] * (1.0 - out[o] * out[o]);
        g.b2[o] += dz2[o];
      }
      const double* hp = &activations.hidden[p * k];
      for (int ci = 0; ci < k; ++ci) {
        const double* wk = &theta.w2[static_cast<std::size_t>(ci) * kDescriptorDim];
        double* gw = &g.w2[static_cast<std::size_t>(ci) * kDescriptorDim];
        double back = 0.0;
        for (int o = 0; o < kDescriptorDim; ++o) {
          gw[o] += hp[ci] * dz2[o];
          back += wk[o] * dz2[o];
        }
        dz1[ci] = back * (1.0 - hp[ci] * hp[ci]);
        g.b1[ci] += dz1[ci];
      }
      for (int ky = 0; ky < 3; ++ky) {
        const int rr = r + ky - 1;
        if (rr < 0 || rr >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int cc = c + kx - 1;
          if (cc < 0 || cc >= w) continue;
          for (int ch = 0; ch < 3; ++ch) {
            const double x = image.at(rr, cc, ch);
            double* gw = &g.w1[static_cast<std::size_t>((ky * 3 + kx) * 3 + ch) * k];
            for (int o = 0; o < k; ++o) gw[o] += x * dz1[o];
          }
        }
      }
    }
  }

  ThetaParams total = ThetaParams::zeros(k);
  for (const ThetaParams& g : rows) {
    for (std::size_t i = 0; i < total.w1.size(); ++i) total.w1[i] += g.w1[i];
    for (std::size_t i = 0; i < total.b1.size(); ++i) total.b1[i] += g.b1[i];
    for (std::size_t i = 0; i < total.w2.size(); ++i) total.w2[i] += g.w2[i];
    for (std::size_t i = 0; i < total.b2.size(); ++i) total.b2[i] += g.b2[i];
  }
  return total;
}

FloatDescriptorField load_descriptor_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open descriptor file: " + path);
  BinaryReader reader(in, path);
  if (reader.magic4() != "FDF1") throw DataError(path + ": bad descriptor magic (expected FDF1)");
  const std::int32_t h = reader.i32();
  const std::int32_t w = reader.i32();
  const std::int32_t m = reader.i32();
  if (h <= 0 || w <= 0) throw DataError(path + ": non-positive descriptor field dimensions");
  if (m != kDescriptorDim) {
    throw DataError(path + ": descriptor dimension m = " + std::to_string(m) + ", expected 64");
  }
  FloatDescriptorField field(h, w);
  for (float& x : field.data) x = reader.f32();
  return field;
}

void save_descriptor_field(const std::string& path, const FloatDescriptorField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write descriptor file: " + path);
  BinaryWriter writer(out);
  writer.magic4("FDF1");
  writer.i32(field.height);
  writer.i32(field.width);
  writer.i32(kDescriptorDim);
  for (float x : field.data) writer.f32(x);
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace sflow
