#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sflow/costvol.hpp"
#include "sflow/image.hpp"

namespace sflow {

/// rho(t) = min(tau1 * |t|, tau2).
struct RobustPenalty {
  double tau1 = 0.25;
  double tau2 = 25.0;
};

double rho(int t, const RobustPenalty& penalty);

/// Contrast-sensitive weights of the 4-connected grid.
/// horizontal[r * w + c] couples (r, c)-(r, c + 1); vertical[r * w + c] couples (r, c)-(r + 1, c).
/// Entries without an edge (last column / last row) are 0.
struct EdgeWeights {
  int height = 0;
  int width = 0;
  std::vector<double> horizontal;
  std::vector<double> vertical;
};

/// w_ij = exp(-(alpha / 3) * sum_c |I_i,c - I_j,c|).
EdgeWeights contrast_weights(const Image& image, double alpha);
EdgeWeights uniform_weights(int height, int width, double value);

struct CrfParams {
  double alpha = 8.5;
  RobustPenalty penalty;
  int D = 128;
  int it_inner = 8;
  int it_outer = 5;
  CostMode mode = CostMode::Q;
  /// Decode and evaluate the primal energy after every step (one extra cross-plane sweep).
  bool record_energy = true;

  void validate() const;
};

/// Lagrange multipliers, each |pixels| x D, indexed [p * D + label].
/// lambda1 / lambda3 live on u labels, lambda2 / lambda4 on v labels.
struct DualState {
  int height = 0;
  int width = 0;
  int D = 0;
  std::vector<double> lambda1, lambda2, lambda3, lambda4;

  static DualState zeros(int height, int width, int D);
  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
};

struct BoundStep {
  std::string label;
  double psi = 0.0;
  std::optional<double> energy;
};

struct BoundTrace {
  std::vector<BoundStep> steps;

  /// CSV lines "step_label,psi,energy" with a header row.
  void write_csv(const std::string& path) const;
  std::string to_csv() const;
};

/// out[t] = min_s (h[s] + w * rho(t - s)) in O(D).
void chain_dt_message(std::span<const double> h, double w, const RobustPenalty& penalty, std::span<double> out);

/// In-plane dual update (u- or v-plane, the structure is identical).
/// Horizontal chains carry unaries lambda_plane + lambda_cross, vertical chains -lambda_plane.
/// Each of the it_inner sweeps replaces the unaries of both chain families by the average of their
/// min-marginal minorants, which never decreases the plane bound. Returns the slack s, a modular
/// minorant of lambda_cross + f_h + f_v whose sum of per-pixel minima equals the plane bound.
/// Without edges, s = lambda_cross and lambda_plane ends at zero.
std::vector<double> dmm_inplane(std::span<double> lambda_plane, std::span<const double> lambda_cross,
                                const EdgeWeights& weights, const RobustPenalty& penalty, int D, int it_inner);

/// min_u [(lambda_plane + lambda_cross)(u) + f_h(u)] + min_u [-lambda_plane(u) + f_v(u)].
double plane_bound(std::span<const double> lambda_plane, std::span<const double> lambda_cross,
                   const EdgeWeights& weights, const RobustPenalty& penalty, int D);

/// Modular minorant of one chain energy: on each segment between zero-weight edges, the min-marginals
/// divided by the segment length. `unary` holds n x D values, `edge` the n - 1 chain weights.
/// Sum of minima of s equals the chain minimum.
void chain_minorant(std::span<const double> unary, std::span<const double> edge, const RobustPenalty& penalty,
                    int D, std::span<double> slack);

/// Cross-plane message u -> v: lambda4_i(v) := min_u [c_i(u, v) - lambda3_i(u)].
void pass_u_to_v(DualState& state, const MatchPair<float>& pair, CostMode mode);
/// Cross-plane message v -> u: lambda3_i(u) := min_v [c_i(u, v) - lambda4_i(v)].
void pass_v_to_u(DualState& state, const MatchPair<float>& pair, CostMode mode);

/// sum_i min_{u,v} [c_i(u, v) - lambda3_i(u) - lambda4_i(v)].
double cross_bound(const DualState& state, const MatchPair<float>& pair, CostMode mode);

/// Psi = plane bound (u) + plane bound (v) + cross bound. Never exceeds the primal energy.
double lower_bound(const DualState& state, const MatchPair<float>& pair, const EdgeWeights& weights,
                   const RobustPenalty& penalty, CostMode mode);

/// Energy of the coupled model for an integer flow with labels in S.
double primal_energy(const FlowField& flow, const MatchPair<float>& pair, const EdgeWeights& weights,
                     const RobustPenalty& penalty, int D, CostMode mode);

/// Per-pixel argmin of the cross subproblem, ties to the smallest u then v.
FlowField decode_primal(const DualState& state, const MatchPair<float>& pair, CostMode mode);

struct CrfResult {
  FlowField flow;
  BoundTrace trace;
  DualState state;
};

/// Alternates v->u, u-plane, u->v, v-plane for it_outer iterations from lambda = 0.
CrfResult optimize(const MatchPair<float>& pair, const EdgeWeights& weights, const CrfParams& params);
CrfResult optimize(const MatchPair<float>& pair, const Image& image1, const CrfParams& params);

}  // namespace sflow
