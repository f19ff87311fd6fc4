#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sflow/descriptors.hpp"
#include "sflow/image.hpp"

namespace sflow {

/// Full (real dot product) or quantized (Hamming) matching cost.
enum class CostMode { F, Q };

/// Outer cost and inner min-projection cost. FF, FQ (inner Q, outer F) and QQ.
struct VariantSpec {
  CostMode outer = CostMode::F;
  CostMode inner = CostMode::F;

  static constexpr VariantSpec FF() { return {CostMode::F, CostMode::F}; }
  static constexpr VariantSpec FQ() { return {CostMode::F, CostMode::Q}; }
  static constexpr VariantSpec QQ() { return {CostMode::Q, CostMode::Q}; }

  std::string name() const;
  static VariantSpec parse(const std::string& text);
  bool uses(CostMode mode) const { return outer == mode || inner == mode; }
  friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

std::string to_string(CostMode mode);
CostMode parse_cost_mode(const std::string& text);

/// Displacements S = {-D/2, ..., D/2 - 1}; label index l <-> displacement l - D/2.
class SearchWindow {
 public:
  explicit SearchWindow(int size);
  int size() const { return size_; }
  int half() const { return size_ / 2; }
  int displacement(int label) const { return label - size_ / 2; }
  int label(int displacement) const { return displacement + size_ / 2; }
  bool contains(int displacement) const { return displacement >= -half() && displacement < half(); }

 private:
  int size_;
};

/// Cost of displacements that leave the image: m + 1, worse than any in-range cost.
inline constexpr double kOutsideCost = kDescriptorDim + 1;

/// Non-owning view of the descriptor fields of both images. Full fields are needed
/// for F-mode costs, binary fields for Q-mode costs.
template <class T>
struct MatchPair {
  const BasicDescriptorField<T>* full1 = nullptr;
  const BasicDescriptorField<T>* full2 = nullptr;
  const BinaryDescriptorField* binary1 = nullptr;
  const BinaryDescriptorField* binary2 = nullptr;

  int height() const;
  int width() const;
  /// Throws DataError if the fields for `mode` are missing or differ in shape.
  void require(CostMode mode) const;
};

/// c_i(u, v) for pixel (r, c) and displacement (u, v) in pixels.
template <class T>
double local_cost(const MatchPair<T>& pair, int r, int c, int u, int v, CostMode mode);

/// The two min-projected volumes plus inner argmin tables, |pixels| x D each.
struct CostProjectionPair {
  int height = 0;
  int width = 0;
  int D = 0;
  VariantSpec variant;
  std::vector<double> c_u;               // c_u[p * D + u_label]
  std::vector<double> c_v;               // c_v[p * D + v_label]
  std::vector<std::uint16_t> argmin_v;   // v label minimizing the inner cost for (p, u_label)
  std::vector<std::uint16_t> argmin_u;   // u label minimizing the inner cost for (p, v_label)

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t index(std::size_t p, int label) const { return p * static_cast<std::size_t>(D) + label; }
};

/// Counts of cost evaluations per mode that touched descriptor data (in-image pairs).
struct ProjectionStats {
  std::uint64_t full_evals = 0;
  std::uint64_t quant_evals = 0;
};

/// Min-projection of the 4D cost without storing it. Ties go to the smallest label.
/// Parallel over pixels; each pixel's rows are written by one worker.
template <class T>
CostProjectionPair min_project(const MatchPair<T>& pair, SearchWindow window, VariantSpec variant,
                               ProjectionStats* stats = nullptr);

/// Per-pixel argmin of c_u and c_v (smallest label on ties).
FlowField wta(const CostProjectionPair& projection);

struct ProjectedBytes {
  std::uint64_t full_4d = 0;  // H * W * D^2 * bytes
  std::uint64_t split = 0;    // 2 * H * W * D * bytes
};
/// Throws NumericError if a size does not fit in 64 bits.
ProjectedBytes projected_bytes(std::int64_t height, std::int64_t width, std::int64_t D,
                               std::int64_t bytes_per_entry);

// CPV1 debug dump: magic, int32 h, w, D, then c_u and c_v as float32.
void save_projection(const std::string& path, const CostProjectionPair& projection);
CostProjectionPair load_projection(const std::string& path);

}  // namespace sflow
