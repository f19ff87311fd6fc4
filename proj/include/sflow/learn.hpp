#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sflow/costvol.hpp"
#include "sflow/descriptors.hpp"
#include "sflow/image.hpp"

namespace sflow {

/// FF and FQ differentiate the full cost at the selected pair; QQ_STE differentiates the
/// quantized cost with sign treated as identity.
enum class GradScheme { FF, FQ, QQ_STE };

std::string to_string(GradScheme scheme);
GradScheme parse_grad_scheme(const std::string& text);
/// Projection variant a scheme must be trained with.
VariantSpec variant_for(GradScheme scheme);

/// Integer ground-truth labels; pixels whose rounded target leaves S are masked out.
struct TargetFlow {
  int height = 0;
  int width = 0;
  int D = 0;
  std::vector<int> u_label;
  std::vector<int> v_label;
  std::vector<std::uint8_t> valid;

  static TargetFlow from_flow(const FlowField& gt, SearchWindow window);
  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t valid_count() const;
};

/// L = -sum_i [log p(u*_i) + log p(v*_i)], p(u) proportional to exp(-c_u(u)), over valid pixels.
double softmax_nll(const CostProjectionPair& projection, const TargetFlow& target);

struct CostGradients {
  std::vector<double> g_u;  // dL/dc_u, |pixels| x D
  std::vector<double> g_v;
};

/// Exact derivative of the loss w.r.t. the costs: g_u[i][u] = [u = u*_i] - p(u) on valid pixels, 0 elsewhere.
CostGradients loss_grad_costs(const CostProjectionPair& projection, const TargetFlow& target);

/// One gradient contribution to a single 4D cost entry (pixel, u, v).
struct RoutedEntry {
  std::uint32_t pixel = 0;
  std::uint16_t u_label = 0;
  std::uint16_t v_label = 0;
  double weight = 0.0;
};

/// Per pixel: D entries (u, argmin_v[u]) followed by D entries (argmin_u[v], v).
struct RoutedGradient {
  int height = 0;
  int width = 0;
  int D = 0;
  GradScheme scheme = GradScheme::FF;
  std::vector<RoutedEntry> entries;
};

/// Routes dL/dc_u and dL/dc_v onto the 4D entries selected by the inner argmin tables.
/// Throws ConfigError if the projection was built with a variant other than variant_for(scheme).
RoutedGradient backprop_projection(const CostGradients& grads, const CostProjectionPair& projection,
                                   GradScheme scheme);

struct DescriptorGradients {
  DoubleDescriptorField grad1;
  DoubleDescriptorField grad2;
};

/// Chain rule from routed 4D entries to both descriptor fields through d = -<phi1, phi2>.
DescriptorGradients descriptor_gradients(const RoutedGradient& routed, const DoubleDescriptorField& phi1,
                                         const DoubleDescriptorField& phi2);

/// Everything the loss depends on for one image pair, kept for gradient evaluation.
struct ForwardPass {
  ExtractorActivations acts1, acts2;
  BinaryDescriptorField bits1, bits2;
  CostProjectionPair projection;
  double loss = 0.0;
};

ForwardPass forward_pass(const Image& image1, const Image& image2, const TargetFlow& target,
                         const ThetaParams& theta, GradScheme scheme);

struct LossAndGrad {
  double loss = 0.0;
  ThetaParams grad;
};

/// Full chain: costs -> routed entries -> descriptors -> extractor parameters.
LossAndGrad grad_theta(const Image& image1, const Image& image2, const TargetFlow& target,
                       const ThetaParams& theta, GradScheme scheme);

struct TrainConfig {
  double learning_rate = 1e-2;
  int steps = 50;
  GradScheme scheme = GradScheme::FF;
  std::uint64_t seed = 0;
  int k = 16;
  int D = 8;

  void validate() const;
};

struct TrainingPair {
  Image image1;
  Image image2;
  TargetFlow target;
};

struct TrainResult {
  ThetaParams theta;
  /// loss_trace[0] is the initial loss, loss_trace[t] the loss after t updates.
  std::vector<double> loss_trace;
};

/// Plain gradient descent on the summed loss over all pairs.
TrainResult train(const std::vector<TrainingPair>& pairs, const TrainConfig& config);

// THT1 checkpoint: magic, int32 k, then w1, b1, w2, b2 as float32.
void save_theta(const std::string& path, const ThetaParams& theta);
ThetaParams load_theta(const std::string& path);
void write_loss_csv(const std::string& path, const std::vector<double>& trace);

}  // namespace sflow
