#include "sflow/reference.hpp"

#include <cmath>
#include <limits>

#include "sflow/error.hpp"

namespace sflow::reference {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

template <class T>
std::vector<double> cost_table(const MatchPair<T>& pair, int r, int c, int D, CostMode mode) {
  const int half = D / 2;
  std::vector<double> table(static_cast<std::size_t>(D) * D);
  for (int a = 0; a < D; ++a) {
    for (int b = 0; b < D; ++b) table[static_cast<std::size_t>(a) * D + b] = local_cost(pair, r, c, a - half, b - half, mode);
  }
  return table;
}

template <class T>
CostProjectionPair min_project(const MatchPair<T>& pair, SearchWindow window, VariantSpec variant) {
  const int D = window.size();
  CostProjectionPair out;
  out.height = pair.height();
  out.width = pair.width();
  out.D = D;
  out.variant = variant;
  const std::size_t n = out.pixels() * D;
  out.c_u.resize(n);
  out.c_v.resize(n);
  out.argmin_v.resize(n);
  out.argmin_u.resize(n);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * out.width + c;
      const auto inner = cost_table(pair, r, c, D, variant.inner);
      const auto outer = cost_table(pair, r, c, D, variant.outer);
      for (int a = 0; a < D; ++a) {
        int best = 0;
        for (int b = 1; b < D; ++b) {
          if (inner[static_cast<std::size_t>(a) * D + b] < inner[static_cast<std::size_t>(a) * D + best]) best = b;
        }
        out.argmin_v[p * D + a] = static_cast<std::uint16_t>(best);
        out.c_u[p * D + a] = outer[static_cast<std::size_t>(a) * D + best];
      }
      for (int b = 0; b < D; ++b) {
        int best = 0;
        for (int a = 1; a < D; ++a) {
          if (inner[static_cast<std::size_t>(a) * D + b] < inner[static_cast<std::size_t>(best) * D + b]) best = a;
        }
        out.argmin_u[p * D + b] = static_cast<std::uint16_t>(best);
        out.c_v[p * D + b] = outer[static_cast<std::size_t>(best) * D + b];
      }
    }
  }
  return out;
}

template <class T>
FlowField joint_argmin(const MatchPair<T>& pair, SearchWindow window, CostMode mode,
                       std::vector<std::uint8_t>* unique) {
  const int D = window.size();
  FlowField flow(pair.height(), pair.width());
  if (unique) unique->assign(flow.pixels(), 0);
  for (int r = 0; r < flow.height; ++r) {
    for (int c = 0; c < flow.width; ++c) {
      const auto table = cost_table(pair, r, c, D, mode);
      std::size_t best = 0;
      int count = 0;
      for (std::size_t k = 0; k < table.size(); ++k) {
        if (table[k] < table[best]) best = k;
      }
      for (double x : table) count += x == table[best];
      const std::size_t p = static_cast<std::size_t>(r) * flow.width + c;
      flow.u[p] = static_cast<float>(window.displacement(static_cast<int>(best / D)));
      flow.v[p] = static_cast<float>(window.displacement(static_cast<int>(best % D)));
      if (unique) (*unique)[p] = count == 1;
    }
  }
  return flow;
}

std::vector<double> dt_message(std::span<const double> h, double w, const RobustPenalty& penalty) {
  const int D = static_cast<int>(h.size());
  std::vector<double> out(D, kInf);
  for (int t = 0; t < D; ++t) {
    for (int s = 0; s < D; ++s) {
      out[t] = std::min(out[t], h[s] + w * std::min(penalty.tau1 * std::abs(t - s), penalty.tau2));
    }
  }
  return out;
}

void pass_u_to_v(DualState& state, const MatchPair<float>& pair, CostMode mode) {
  const int D = state.D;
  for (int r = 0; r < state.height; ++r) {
    for (int c = 0; c < state.width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * state.width + c;
      const auto table = cost_table(pair, r, c, D, mode);
      for (int b = 0; b < D; ++b) {
        double best = kInf;
        for (int a = 0; a < D; ++a) best = std::min(best, table[static_cast<std::size_t>(a) * D + b] - state.lambda3[p * D + a]);
        state.lambda4[p * D + b] = best;
      }
    }
  }
}

void pass_v_to_u(DualState& state, const MatchPair<float>& pair, CostMode mode) {
  const int D = state.D;
  for (int r = 0; r < state.height; ++r) {
    for (int c = 0; c < state.width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * state.width + c;
      const auto table = cost_table(pair, r, c, D, mode);
      for (int a = 0; a < D; ++a) {
        double best = kInf;
        for (int b = 0; b < D; ++b) best = std::min(best, table[static_cast<std::size_t>(a) * D + b] - state.lambda4[p * D + b]);
        state.lambda3[p * D + a] = best;
      }
    }
  }
}

double chain_minimum_exhaustive(std::span<const double> unary, std::span<const double> edge,
                                const RobustPenalty& penalty, int D) {
  const int n = static_cast<int>(unary.size() / D);
  std::vector<int> x(n, 0);
  double best = kInf;
  while (true) {
    double e = 0.0;
    for (int j = 0; j < n; ++j) e += unary[static_cast<std::size_t>(j) * D + x[j]];
    for (int j = 0; j + 1 < n; ++j) e += edge[j] * rho(x[j] - x[j + 1], penalty);
    best = std::min(best, e);
    int j = 0;
    while (j < n && ++x[j] == D) x[j++] = 0;
    if (j == n) break;
  }
  return best;
}

double plane_energy(std::span<const int> labels, std::span<const double> unary, const EdgeWeights& weights,
                    const RobustPenalty& penalty, int D) {
  const int h = weights.height;
  const int w = weights.width;
  double e = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      e += unary[p * D + labels[p]];
      if (c + 1 < w) e += weights.horizontal[p] * rho(labels[p] - labels[p + 1], penalty);
      if (r + 1 < h) e += weights.vertical[p] * rho(labels[p] - labels[p + w], penalty);
    }
  }
  return e;
}

ExhaustiveResult exhaustive_minimum(const MatchPair<float>& pair, const EdgeWeights& weights,
                                    const RobustPenalty& penalty, int D, CostMode mode) {
  const int h = pair.height();
  const int w = pair.width();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  if (std::pow(static_cast<double>(D), 2.0 * static_cast<double>(n)) > 1e7) {
    throw ConfigError("exhaustive_minimum: instance too large");
  }
  std::vector<std::vector<double>> tables(n);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) tables[static_cast<std::size_t>(r) * w + c] = cost_table(pair, r, c, D, mode);
  }
  std::vector<int> x(2 * n, 0);  // u labels then v labels
  ExhaustiveResult result;
  result.energy = kInf;
  result.flow = FlowField(h, w);
  while (true) {
    double e = 0.0;
    for (std::size_t p = 0; p < n; ++p) e += tables[p][static_cast<std::size_t>(x[p]) * D + x[n + p]];
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t p = static_cast<std::size_t>(r) * w + c;
        if (c + 1 < w) e += weights.horizontal[p] * (rho(x[p] - x[p + 1], penalty) + rho(x[n + p] - x[n + p + 1], penalty));
        if (r + 1 < h) e += weights.vertical[p] * (rho(x[p] - x[p + w], penalty) + rho(x[n + p] - x[n + p + w], penalty));
      }
    }
    if (e < result.energy) {
      result.energy = e;
      for (std::size_t p = 0; p < n; ++p) {
        result.flow.u[p] = static_cast<float>(x[p] - D / 2);
        result.flow.v[p] = static_cast<float>(x[n + p] - D / 2);
      }
    }
    std::size_t j = 0;
    while (j < x.size() && ++x[j] == D) x[j++] = 0;
    if (j == x.size()) break;
  }
  return result;
}

template std::vector<double> cost_table(const MatchPair<float>&, int, int, int, CostMode);
template std::vector<double> cost_table(const MatchPair<double>&, int, int, int, CostMode);
template CostProjectionPair min_project(const MatchPair<float>&, SearchWindow, VariantSpec);
template CostProjectionPair min_project(const MatchPair<double>&, SearchWindow, VariantSpec);
template FlowField joint_argmin(const MatchPair<float>&, SearchWindow, CostMode, std::vector<std::uint8_t>*);
template FlowField joint_argmin(const MatchPair<double>&, SearchWindow, CostMode, std::vector<std::uint8_t>*);

}  // namespace sflow::reference
