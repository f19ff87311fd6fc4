#pragma once

// Serial, unoptimized reference implementations. They follow the definitions literally
// (materialized D x D cost tables, quadratic messages, exhaustive enumeration) and serve
// as oracles for the parallel kernels and as the baseline of the benchmark.

#include <cstdint>
#include <span>
#include <vector>

#include "sflow/costvol.hpp"
#include "sflow/crf.hpp"

namespace sflow::reference {

/// D x D table of c_i(u, v) for one pixel, indexed [u_label * D + v_label].
template <class T>
std::vector<double> cost_table(const MatchPair<T>& pair, int r, int c, int D, CostMode mode);

/// Min-projection by materializing the 4D cost of each pixel.
template <class T>
CostProjectionPair min_project(const MatchPair<T>& pair, SearchWindow window, VariantSpec variant);

/// Joint 4D argmin per pixel (ties to smallest u, then v); `unique` marks pixels with a single minimizer.
template <class T>
FlowField joint_argmin(const MatchPair<T>& pair, SearchWindow window, CostMode mode,
                       std::vector<std::uint8_t>* unique = nullptr);

/// out[t] = min_s (h[s] + w * rho(t - s)), quadratic.
std::vector<double> dt_message(std::span<const double> h, double w, const RobustPenalty& penalty);

void pass_u_to_v(DualState& state, const MatchPair<float>& pair, CostMode mode);
void pass_v_to_u(DualState& state, const MatchPair<float>& pair, CostMode mode);

/// Exhaustive minimum of one chain energy sum_j unary_j(x_j) + sum_j edge_j rho(x_j - x_j+1).
double chain_minimum_exhaustive(std::span<const double> unary, std::span<const double> edge,
                                const RobustPenalty& penalty, int D);

/// Energy of a labeling of one plane: sum_i unary_i(x_i) + f_h(x) + f_v(x).
double plane_energy(std::span<const int> labels, std::span<const double> unary, const EdgeWeights& weights,
                    const RobustPenalty& penalty, int D);

struct ExhaustiveResult {
  double energy = 0.0;
  FlowField flow;
};

/// Global minimum of the coupled energy over all D^(2 |pixels|) labelings. Tiny instances only.
ExhaustiveResult exhaustive_minimum(const MatchPair<float>& pair, const EdgeWeights& weights,
                                    const RobustPenalty& penalty, int D, CostMode mode);

}  // namespace sflow::reference
