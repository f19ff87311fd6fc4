#include "sflow/learn.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sflow/error.hpp"
#include "sflow/io_util.hpp"

namespace sflow {

std::string to_string(GradScheme scheme) {
  switch (scheme) {
    case GradScheme::FF: return "FF";
    case GradScheme::FQ: return "FQ";
    default: return "QQ";
  }
}

GradScheme parse_grad_scheme(const std::string& text) {
  if (text == "FF") return GradScheme::FF;
  if (text == "FQ") return GradScheme::FQ;
  if (text == "QQ" || text == "QQ_STE") return GradScheme::QQ_STE;
  throw ConfigError("invalid gradient scheme '" + text + "' (expected FF, FQ or QQ)");
}

VariantSpec variant_for(GradScheme scheme) {
  switch (scheme) {
    case GradScheme::FF: return VariantSpec::FF();
    case GradScheme::FQ: return VariantSpec::FQ();
    default: return VariantSpec::QQ();
  }
}

TargetFlow TargetFlow::from_flow(const FlowField& gt, SearchWindow window) {
  TargetFlow t;
  t.height = gt.height;
  t.width = gt.width;
  t.D = window.size();
  t.u_label.assign(gt.pixels(), 0);
  t.v_label.assign(gt.pixels(), 0);
  t.valid.assign(gt.pixels(), 0);
  for (std::size_t p = 0; p < gt.pixels(); ++p) {
    if (!std::isfinite(gt.u[p]) || !std::isfinite(gt.v[p])) continue;
    const double u = std::round(static_cast<double>(gt.u[p]));
    const double v = std::round(static_cast<double>(gt.v[p]));
    if (u < -window.half() || u >= window.half() || v < -window.half() || v >= window.half()) continue;
    t.u_label[p] = window.label(static_cast<int>(u));
    t.v_label[p] = window.label(static_cast<int>(v));
    t.valid[p] = 1;
  }
  return t;
}

std::size_t TargetFlow::valid_count() const {
  std::size_t n = 0;
  for (auto x : valid) n += x;
  return n;
}

namespace {

void check_target(const CostProjectionPair& projection, const TargetFlow& target) {
  if (projection.height != target.height || projection.width != target.width || projection.D != target.D) {
    throw DataError("target flow does not match the cost projection");
  }
  if (target.valid_count() == 0) throw DataError("target flow has no valid pixels");
}

/// -log p(target) for p proportional to exp(-costs), with max-subtraction.
double row_nll(const double* costs, int D, int target) {
  double lowest = costs[0];
  for (int l = 1; l < D; ++l) lowest = std::min(lowest, costs[l]);
  double sum = 0.0;
  for (int l = 0; l < D; ++l) sum += std::exp(lowest - costs[l]);
  return (costs[target] - lowest) + std::log(sum);
}

void row_grad(const double* costs, int D, int target, double* grad) {
  double lowest = costs[0];
  for (int l = 1; l < D; ++l) lowest = std::min(lowest, costs[l]);
  double sum = 0.0;
  for (int l = 0; l < D; ++l) {
    grad[l] = std::exp(lowest - costs[l]);
    sum += grad[l];
  }
  // dL/dc(l) = [l = target] - p(l), since L = c(target) + log sum exp(-c).
  for (int l = 0; l < D; ++l) grad[l] = -grad[l] / sum;
  grad[target] += 1.0;
}

void require_finite(double x, const char* stage) {
  if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + stage);
}

template <class Container>
void require_finite_all(const Container& values, const char* stage) {
  for (double x : values) require_finite(x, stage);
}

}  // namespace

double softmax_nll(const CostProjectionPair& projection, const TargetFlow& target) {
  check_target(projection, target);
  const int D = projection.D;
  double loss = 0.0;
  for (std::size_t p = 0; p < projection.pixels(); ++p) {
    if (!target.valid[p]) continue;
    loss += row_nll(&projection.c_u[p * D], D, target.u_label[p]);
    loss += row_nll(&projection.c_v[p * D], D, target.v_label[p]);
  }
  return loss;
}

CostGradients loss_grad_costs(const CostProjectionPair& projection, const TargetFlow& target) {
  check_target(projection, target);
  const int D = projection.D;
  CostGradients g;
  g.g_u.assign(projection.c_u.size(), 0.0);
  g.g_v.assign(projection.c_v.size(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(projection.pixels());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    if (!target.valid[p]) continue;
    row_grad(&projection.c_u[p * D], D, target.u_label[p], &g.g_u[p * D]);
    row_grad(&projection.c_v[p * D], D, target.v_label[p], &g.g_v[p * D]);
  }
  return g;
}

RoutedGradient backprop_projection(const CostGradients& grads, const CostProjectionPair& projection,
                                   GradScheme scheme) {
  if (!(projection.variant == variant_for(scheme))) {
    throw ConfigError("scheme " + to_string(scheme) + " needs a " + variant_for(scheme).name() +
                      " projection, got " + projection.variant.name());
  }
  const int D = projection.D;
  const std::size_t n = projection.pixels() * static_cast<std::size_t>(D);
  if (grads.g_u.size() != n || grads.g_v.size() != n) throw DataError("cost gradients do not match the projection");
  RoutedGradient routed;
  routed.height = projection.height;
  routed.width = projection.width;
  routed.D = D;
  routed.scheme = scheme;
  routed.entries.resize(2 * n);
  for (std::size_t p = 0; p < projection.pixels(); ++p) {
    RoutedEntry* out = &routed.entries[2 * p * D];
    for (int a = 0; a < D; ++a) {
      out[a] = {static_cast<std::uint32_t>(p), static_cast<std::uint16_t>(a), projection.argmin_v[p * D + a],
                grads.g_u[p * D + a]};
    }
    for (int b = 0; b < D; ++b) {
      out[D + b] = {static_cast<std::uint32_t>(p), projection.argmin_u[p * D + b], static_cast<std::uint16_t>(b),
                    grads.g_v[p * D + b]};
    }
  }
  return routed;
}

DescriptorGradients descriptor_gradients(const RoutedGradient& routed, const DoubleDescriptorField& phi1,
                                         const DoubleDescriptorField& phi2) {
  const int h = routed.height;
  const int w = routed.width;
  const int D = routed.D;
  const int half = D / 2;
  if (phi1.height != h || phi1.width != w || phi2.height != h || phi2.width != w) {
    throw DataError("descriptor fields do not match the routed gradient");
  }
  if (routed.entries.size() != phi1.pixels() * 2 * static_cast<std::size_t>(D)) {
    throw DataError("routed gradient must hold 2 * D entries per pixel");
  }
  const bool straight_through = routed.scheme == GradScheme::QQ_STE;
  auto factor = [straight_through](double x) { return straight_through ? (x >= 0.0 ? 1.0 : -1.0) : x; };

  // Target pixel of an entry, or -1 when outside (constant cost, no gradient).
  auto target_of = [&](const RoutedEntry& e) -> std::ptrdiff_t {
    const int r = static_cast<int>(e.pixel / static_cast<std::uint32_t>(w));
    const int c = static_cast<int>(e.pixel % static_cast<std::uint32_t>(w));
    const int rr = r + e.v_label - half;
    const int cc = c + e.u_label - half;
    if (rr < 0 || rr >= h || cc < 0 || cc >= w) return -1;
    return static_cast<std::ptrdiff_t>(rr) * w + cc;
  };

  DescriptorGradients out{DoubleDescriptorField(h, w), DoubleDescriptorField(h, w)};
  const auto n = static_cast<std::ptrdiff_t>(phi1.pixels());
  const std::size_t per_pixel = 2 * static_cast<std::size_t>(D);

  // grad1 only receives entries of its own pixel.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    auto g = out.grad1.pixel(static_cast<std::size_t>(p));
    for (std::size_t k = 0; k < per_pixel; ++k) {
      const RoutedEntry& e = routed.entries[static_cast<std::size_t>(p) * per_pixel + k];
      const std::ptrdiff_t q = target_of(e);
      if (q < 0 || e.weight == 0.0) continue;
      const auto other = phi2.pixel(static_cast<std::size_t>(q));
      for (int m = 0; m < kDescriptorDim; ++m) g[m] -= e.weight * factor(other[m]);
    }
  }
  // grad2 gathers from many source pixels; a serial pass keeps the summation order fixed.
  for (const RoutedEntry& e : routed.entries) {
    const std::ptrdiff_t q = target_of(e);
    if (q < 0 || e.weight == 0.0) continue;
    auto g = out.grad2.pixel(static_cast<std::size_t>(q));
    const auto src = phi1.pixel(e.pixel);
    for (int m = 0; m < kDescriptorDim; ++m) g[m] -= e.weight * factor(src[m]);
  }
  return out;
}

ForwardPass forward_pass(const Image& image1, const Image& image2, const TargetFlow& target,
                         const ThetaParams& theta, GradScheme scheme) {
  if (image1.height != image2.height || image1.width != image2.width) throw DataError("image pair differs in size");
  if (target.height != image1.height || target.width != image1.width) {
    throw DataError("target flow does not match the image size");
  }
  ForwardPass fp;
  tiny_extractor_forward(image1, theta, &fp.acts1);
  tiny_extractor_forward(image2, theta, &fp.acts2);
  require_finite_all(fp.acts1.output.data, "extractor forward");
  require_finite_all(fp.acts2.output.data, "extractor forward");

  const VariantSpec variant = variant_for(scheme);
  MatchPair<double> pair;
  pair.full1 = &fp.acts1.output;
  pair.full2 = &fp.acts2.output;
  if (variant.uses(CostMode::Q)) {
    fp.bits1 = quantize(fp.acts1.output);
    fp.bits2 = quantize(fp.acts2.output);
    pair.binary1 = &fp.bits1;
    pair.binary2 = &fp.bits2;
  }
  fp.projection = min_project(pair, SearchWindow(target.D), variant);
  fp.loss = softmax_nll(fp.projection, target);
  require_finite(fp.loss, "loss");
  return fp;
}

LossAndGrad grad_theta(const Image& image1, const Image& image2, const TargetFlow& target,
                       const ThetaParams& theta, GradScheme scheme) {
  const ForwardPass fp = forward_pass(image1, image2, target, theta, scheme);
  const CostGradients cost_grads = loss_grad_costs(fp.projection, target);
  require_finite_all(cost_grads.g_u, "cost gradient");
  require_finite_all(cost_grads.g_v, "cost gradient");
  const RoutedGradient routed = backprop_projection(cost_grads, fp.projection, scheme);
  const DescriptorGradients dg = descriptor_gradients(routed, fp.acts1.output, fp.acts2.output);
  require_finite_all(dg.grad1.data, "descriptor gradient");
  require_finite_all(dg.grad2.data, "descriptor gradient");

  LossAndGrad out;
  out.loss = fp.loss;
  out.grad = tiny_extractor_backward(image1, theta, fp.acts1, dg.grad1);
  const ThetaParams second = tiny_extractor_backward(image2, theta, fp.acts2, dg.grad2);
  std::vector<double> flat = out.grad.flatten();
  const std::vector<double> other = second.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += other[i];
  require_finite_all(flat, "theta gradient");
  out.grad.assign(flat);
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and >= 0");
  }
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (k <= 0) throw ConfigError("extractor width k must be positive");
  SearchWindow window(D);
}

TrainResult train(const std::vector<TrainingPair>& pairs, const TrainConfig& config) {
  config.validate();
  if (pairs.empty()) throw DataError("training set is empty");
  TrainResult result;
  result.theta = ThetaParams::random(config.k, config.seed);
  std::vector<double> params = result.theta.flatten();

  auto evaluate = [&](bool with_grad, std::vector<double>* grad) {
    double loss = 0.0;
    if (grad) grad->assign(params.size(), 0.0);
    for (const auto& pair : pairs) {
      if (pair.target.D != config.D) throw DataError("training target search size differs from the config");
      if (with_grad) {
        const LossAndGrad lg = grad_theta(pair.image1, pair.image2, pair.target, result.theta, config.scheme);
        loss += lg.loss;
        const auto g = lg.grad.flatten();
        for (std::size_t i = 0; i < g.size(); ++i) (*grad)[i] += g[i];
      } else {
        loss += forward_pass(pair.image1, pair.image2, pair.target, result.theta, config.scheme).loss;
      }
    }
    return loss;
  };

  std::vector<double> grad;
  for (int step = 0; step < config.steps; ++step) {
    const double loss = evaluate(true, &grad);
    if (!std::isfinite(loss)) {
      std::ostringstream os;
      os << "training diverged at step " << step << " (loss " << loss << ")";
      throw NumericError(os.str());
    }
    result.loss_trace.push_back(loss);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * grad[i];
    result.theta.assign(params);
  }
  const double final_loss = evaluate(false, nullptr);
  if (!std::isfinite(final_loss)) throw NumericError("training diverged after the last step");
  result.loss_trace.push_back(final_loss);
  return result;
}

void save_theta(const std::string& path, const ThetaParams& theta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  BinaryWriter writer(out);
  writer.magic4("THT1");
  writer.i32(theta.k);
  for (double x : theta.flatten()) writer.f32(static_cast<float>(x));
  if (!out) throw DataError("write failed: " + path);
}

ThetaParams load_theta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  BinaryReader reader(in, path);
  if (reader.magic4() != "THT1") throw DataError(path + ": bad checkpoint magic (expected THT1)");
  const std::int32_t k = reader.i32();
  if (k <= 0 || k > 4096) throw DataError(path + ": invalid extractor width k = " + std::to_string(k));
  ThetaParams theta = ThetaParams::zeros(k);
  std::vector<double> flat(theta.size());
  for (double& x : flat) x = reader.f32();
  if (!reader.at_end()) throw DataError(path + ": trailing bytes after parameters");
  theta.assign(flat);
  return theta;
}

void write_loss_csv(const std::string& path, const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write loss trace: " + path);
  out.precision(17);
  out << "step,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << "," << trace[i] << "\n";
}

}  // namespace sflow
