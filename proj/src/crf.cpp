#include "sflow/crf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sflow/detail/cost_rows.hpp"
#include "sflow/error.hpp"

namespace sflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_state(const DualState& state, const MatchPair<float>& pair) {
  if (state.height != pair.height() || state.width != pair.width()) {
    throw DataError("dual state and descriptor fields differ in shape");
  }
  const std::size_t n = state.pixels() * static_cast<std::size_t>(state.D);
  if (state.lambda1.size() != n || state.lambda2.size() != n || state.lambda3.size() != n ||
      state.lambda4.size() != n) {
    throw DataError("dual state has inconsistent multiplier sizes");
  }
}

void check_weights(const EdgeWeights& weights, std::size_t plane_size, int D) {
  const std::size_t pixels = static_cast<std::size_t>(weights.height) * weights.width;
  if (pixels * static_cast<std::size_t>(D) != plane_size || weights.horizontal.size() != pixels ||
      weights.vertical.size() != pixels) {
    throw DataError("edge weights do not match the multiplier fields");
  }
}

/// Chain of n pixels starting at `first` with index step `stride`; edge j couples nodes j, j+1.
struct Chain {
  std::size_t first;
  std::size_t stride;
  int length;
  const double* edge_weights;  // indexed like pixels, edge j at first + j * stride
};

Chain row_chain(const EdgeWeights& w, int r) {
  return {static_cast<std::size_t>(r) * w.width, 1, w.width, w.horizontal.data()};
}

Chain column_chain(const EdgeWeights& w, int c) {
  return {static_cast<std::size_t>(c), static_cast<std::size_t>(w.width), w.height, w.vertical.data()};
}

/// Per-worker scratch for chain computations; sized O(chain length * D).
struct ChainWorkspace {
  std::vector<double> unary, slack, backward, edge, tmp, msg;

  void resize(int n, int D) {
    const std::size_t nd = static_cast<std::size_t>(n) * D;
    unary.resize(nd);
    slack.resize(nd);
    backward.resize(nd);
    edge.resize(n > 0 ? n - 1 : 0);
    tmp.resize(D);
    msg.resize(D);
  }
};

void gather_edges(const Chain& chain, ChainWorkspace& ws) {
  for (int j = 0; j + 1 < chain.length; ++j) ws.edge[j] = chain.edge_weights[chain.first + j * chain.stride];
}

/// Minimum of a chain energy by forward dynamic programming.
double chain_minimum(std::span<const double> unary, std::span<const double> edge, const RobustPenalty& penalty,
                     int D, std::vector<double>& msg, std::vector<double>& tmp) {
  const int n = static_cast<int>(unary.size() / D);
  std::fill(msg.begin(), msg.end(), 0.0);
  for (int j = 0; j + 1 < n; ++j) {
    for (int t = 0; t < D; ++t) tmp[t] = unary[static_cast<std::size_t>(j) * D + t] + msg[t];
    chain_dt_message(tmp, edge[j], penalty, msg);
  }
  double best = kInf;
  for (int t = 0; t < D; ++t) best = std::min(best, unary[static_cast<std::size_t>(n - 1) * D + t] + msg[t]);
  return best;
}

/// Backward messages: backward[j](x) = min over x_{j+1..n} of the chain energy right of node j.
void chain_backward(std::span<const double> unary, std::span<const double> edge, const RobustPenalty& penalty,
                    int D, std::vector<double>& backward, std::vector<double>& tmp) {
  const int n = static_cast<int>(unary.size() / D);
  double* last = backward.data() + static_cast<std::size_t>(n - 1) * D;
  std::fill(last, last + D, 0.0);
  for (int j = n - 2; j >= 0; --j) {
    const double* a = unary.data() + static_cast<std::size_t>(j + 1) * D;
    const double* b = backward.data() + static_cast<std::size_t>(j + 1) * D;
    for (int t = 0; t < D; ++t) tmp[t] = a[t] + b[t];
    chain_dt_message(tmp, edge[j], penalty, std::span<double>(backward.data() + static_cast<std::size_t>(j) * D, D));
  }
}

/// s_j = m_j / n, where m_j are the min-marginals of the chain energy. Each m_j(x_j) <= E(x), so the
/// average is a minorant, and every m_j attains the chain minimum, so the minima of s sum to it.
void uniform_minorant_ws(std::span<const double> unary, std::span<const double> edge, const RobustPenalty& penalty,
                         int D, std::span<double> slack, std::vector<double>& backward, std::vector<double>& msg,
                         std::vector<double>& tmp) {
  const int n = static_cast<int>(unary.size() / D);
  chain_backward(unary, edge, penalty, D, backward, tmp);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::fill(msg.begin(), msg.end(), 0.0);
  for (int j = 0; j < n; ++j) {
    const double* a = unary.data() + static_cast<std::size_t>(j) * D;
    const double* b = backward.data() + static_cast<std::size_t>(j) * D;
    double* s = slack.data() + static_cast<std::size_t>(j) * D;
    for (int t = 0; t < D; ++t) s[t] = (a[t] + msg[t] + b[t]) * inv_n;
    if (j == n - 1) break;
    for (int t = 0; t < D; ++t) tmp[t] = a[t] + msg[t];
    chain_dt_message(tmp, edge[j], penalty, msg);
  }
}

/// Zero-weight edges split a chain into independent segments; each gets its own uniform minorant,
/// so a fully decoupled chain returns its unaries unchanged.
void chain_minorant_ws(std::span<const double> unary, std::span<const double> edge, const RobustPenalty& penalty,
                       int D, std::span<double> slack, std::vector<double>& backward, std::vector<double>& msg,
                       std::vector<double>& tmp) {
  const std::size_t n = unary.size() / static_cast<std::size_t>(D);
  std::size_t begin = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j + 1 < n && edge[j] != 0.0) continue;
    const std::size_t len = j + 1 - begin;
    uniform_minorant_ws(unary.subspan(begin * D, len * D), edge.subspan(begin, len - 1), penalty, D,
                        slack.subspan(begin * D, len * D), backward, msg, tmp);
    begin = j + 1;
  }
}

template <class Op>
void for_each_chain_parallel(const EdgeWeights& weights, bool horizontal, int D, Op&& op) {
  const int count = horizontal ? weights.height : weights.width;
  const int length = horizontal ? weights.width : weights.height;
#pragma omp parallel
  {
    ChainWorkspace ws;
    ws.resize(length, D);
#pragma omp for schedule(static)
    for (int k = 0; k < count; ++k) {
      const Chain chain = horizontal ? row_chain(weights, k) : column_chain(weights, k);
      gather_edges(chain, ws);
      op(k, chain, ws);
    }
  }
}

}  // namespace

double rho(int t, const RobustPenalty& penalty) {
  return std::min(penalty.tau1 * std::abs(t), penalty.tau2);
}

EdgeWeights contrast_weights(const Image& image, double alpha) {
  EdgeWeights w = uniform_weights(image.height, image.width, 0.0);
  const int h = image.height;
  const int wd = image.width;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < wd; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * wd + c;
      if (c + 1 < wd) {
        double diff = 0.0;
        for (int ch = 0; ch < 3; ++ch) diff += std::abs(static_cast<double>(image.at(r, c, ch)) - image.at(r, c + 1, ch));
        w.horizontal[p] = std::exp(-(alpha / 3.0) * diff);
      }
      if (r + 1 < h) {
        double diff = 0.0;
        for (int ch = 0; ch < 3; ++ch) diff += std::abs(static_cast<double>(image.at(r, c, ch)) - image.at(r + 1, c, ch));
        w.vertical[p] = std::exp(-(alpha / 3.0) * diff);
      }
    }
  }
  return w;
}

EdgeWeights uniform_weights(int height, int width, double value) {
  EdgeWeights w;
  w.height = height;
  w.width = width;
  const std::size_t n = static_cast<std::size_t>(height) * width;
  w.horizontal.assign(n, 0.0);
  w.vertical.assign(n, 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * width + c;
      if (c + 1 < width) w.horizontal[p] = value;
      if (r + 1 < height) w.vertical[p] = value;
    }
  }
  return w;
}

void CrfParams::validate() const {
  SearchWindow window(D);
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
  if (!(penalty.tau1 > 0.0) || !std::isfinite(penalty.tau1)) throw ConfigError("tau1 must be finite and > 0");
  if (!(penalty.tau2 > 0.0) || !std::isfinite(penalty.tau2)) throw ConfigError("tau2 must be finite and > 0");
  if (it_inner < 1) throw ConfigError("it_inner must be >= 1");
  if (it_outer < 0) throw ConfigError("it_outer must be >= 0");
}

DualState DualState::zeros(int height, int width, int D) {
  DualState s;
  s.height = height;
  s.width = width;
  s.D = D;
  const std::size_t n = static_cast<std::size_t>(height) * width * D;
  s.lambda1.assign(n, 0.0);
  s.lambda2.assign(n, 0.0);
  s.lambda3.assign(n, 0.0);
  s.lambda4.assign(n, 0.0);
  return s;
}

std::string BoundTrace::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "step_label,psi,energy\n";
  for (const auto& step : steps) {
    os << step.label << "," << step.psi << ",";
    if (step.energy) os << *step.energy;
    os << "\n";
  }
  return os.str();
}

void BoundTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace: " + path);
  out << to_csv();
}

void chain_dt_message(std::span<const double> h, double w, const RobustPenalty& penalty, std::span<double> out) {
  const int D = static_cast<int>(h.size());
  if (D == 0) return;
  const double tau1 = penalty.tau1;
  double min_h = h[0];
  for (int t = 1; t < D; ++t) min_h = std::min(min_h, h[t]);
  const double truncated = min_h + w * penalty.tau2;

  // Lower envelope of the linear cones, tracking the best source on each side. Every
  // candidate is evaluated as h[s] + w * (tau1 * |t - s|), the same expression as the
  // quadratic definition, so the result is one of its terms.
  int best = 0;
  for (int t = 0; t < D; ++t) {
    double value = h[t];
    if (t > 0) {
      const double cand = h[best] + w * (tau1 * (t - best));
      if (h[t] <= cand) {
        best = t;
      } else {
        value = cand;
      }
    }
    out[t] = value;
  }
  best = D - 1;
  for (int t = D - 1; t >= 0; --t) {
    double value = h[t];
    if (t < D - 1) {
      const double cand = h[best] + w * (tau1 * (best - t));
      if (h[t] <= cand) {
        best = t;
      } else {
        value = cand;
      }
    }
    out[t] = std::min({out[t], value, truncated});
  }
}

void chain_minorant(std::span<const double> unary, std::span<const double> edge, const RobustPenalty& penalty,
                    int D, std::span<double> slack) {
  const std::size_t n = unary.size() / static_cast<std::size_t>(D);
  if (n == 0 || unary.size() != n * D || slack.size() != unary.size() || edge.size() + 1 != n) {
    throw DataError("chain_minorant: inconsistent sizes");
  }
  std::vector<double> backward(unary.size()), msg(D), tmp(D);
  chain_minorant_ws(unary, edge, penalty, D, slack, backward, msg, tmp);
}

std::vector<double> dmm_inplane(std::span<double> lambda_plane, std::span<const double> lambda_cross,
                                const EdgeWeights& weights, const RobustPenalty& penalty, int D, int it_inner) {
  if (it_inner < 1) throw ConfigError("it_inner must be >= 1");
  if (lambda_plane.size() != lambda_cross.size()) throw DataError("dmm_inplane: multiplier size mismatch");
  check_weights(weights, lambda_plane.size(), D);

  // Minorants of all horizontal chains (unaries lambda_plane + lambda_cross) or all vertical
  // chains (unaries -lambda_plane), written into `out` at pixel positions.
  auto family_minorant = [&](bool horizontal, std::span<double> out) {
    for_each_chain_parallel(weights, horizontal, D, [&](int, const Chain& chain, ChainWorkspace& ws) {
      for (int j = 0; j < chain.length; ++j) {
        const std::size_t p = (chain.first + j * chain.stride) * D;
        double* u = &ws.unary[static_cast<std::size_t>(j) * D];
        for (int t = 0; t < D; ++t) u[t] = horizontal ? lambda_plane[p + t] + lambda_cross[p + t] : -lambda_plane[p + t];
      }
      chain_minorant_ws(ws.unary, std::span<const double>(ws.edge.data(), ws.edge.size()), penalty, D, ws.slack,
                        ws.backward, ws.msg, ws.tmp);
      for (int j = 0; j < chain.length; ++j) {
        const std::size_t p = (chain.first + j * chain.stride) * D;
        std::copy_n(&ws.slack[static_cast<std::size_t>(j) * D], D, &out[p]);
      }
    });
  };

  std::vector<double> s_h(lambda_plane.size());
  std::vector<double> s_v(lambda_plane.size());
  for (int sweep = 0; sweep < it_inner; ++sweep) {
    // Both families receive the average of the two minorants: new bound >= sum_i min (s_h + s_v) >= old bound.
    family_minorant(true, s_h);
    family_minorant(false, s_v);
    for (std::size_t k = 0; k < lambda_plane.size(); ++k) lambda_plane[k] += 0.5 * (s_v[k] - s_h[k]);
  }
  // Hand the vertical minorant to the horizontal chains, then the horizontal minorant bounds the whole plane.
  family_minorant(false, s_v);
  for (std::size_t k = 0; k < lambda_plane.size(); ++k) lambda_plane[k] += s_v[k];
  family_minorant(true, s_h);
  return s_h;
}

double plane_bound(std::span<const double> lambda_plane, std::span<const double> lambda_cross,
                   const EdgeWeights& weights, const RobustPenalty& penalty, int D) {
  if (lambda_plane.size() != lambda_cross.size()) throw DataError("plane_bound: multiplier size mismatch");
  check_weights(weights, lambda_plane.size(), D);
  std::vector<double> rows(weights.height), cols(weights.width);
  for_each_chain_parallel(weights, true, D, [&](int k, const Chain& chain, ChainWorkspace& ws) {
    for (int j = 0; j < chain.length; ++j) {
      const std::size_t p = (chain.first + j * chain.stride) * D;
      for (int t = 0; t < D; ++t) ws.unary[static_cast<std::size_t>(j) * D + t] = lambda_plane[p + t] + lambda_cross[p + t];
    }
    rows[k] = chain_minimum(ws.unary, std::span<const double>(ws.edge.data(), ws.edge.size()), penalty, D, ws.msg, ws.tmp);
  });
  for_each_chain_parallel(weights, false, D, [&](int k, const Chain& chain, ChainWorkspace& ws) {
    for (int j = 0; j < chain.length; ++j) {
      const std::size_t p = (chain.first + j * chain.stride) * D;
      for (int t = 0; t < D; ++t) ws.unary[static_cast<std::size_t>(j) * D + t] = -lambda_plane[p + t];
    }
    cols[k] = chain_minimum(ws.unary, std::span<const double>(ws.edge.data(), ws.edge.size()), penalty, D, ws.msg, ws.tmp);
  });
  double total = 0.0;
  for (double x : rows) total += x;
  for (double x : cols) total += x;
  return total;
}

namespace {

template <CostMode Mode>
void pass_u_to_v_kernel(DualState& state, const MatchPair<float>& pair) {
  const detail::CostRows<float, Mode> rows(pair);
  const int D = state.D;
  const int h = state.height;
  const int w = state.width;
#pragma omp parallel
  {
    std::vector<double> best(D);
#pragma omp for schedule(static)
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t base = (static_cast<std::size_t>(r) * w + c) * D;
        const double* l3 = &state.lambda3[base];
        std::fill(best.begin(), best.end(), kInf);
        detail::for_each_cost(rows, r, c, D, [&](int a, int b, auto cost) {
          best[b] = std::min(best[b], static_cast<double>(cost) - l3[a]);
        });
        std::copy(best.begin(), best.end(), state.lambda4.begin() + static_cast<std::ptrdiff_t>(base));
      }
    }
  }
}

template <CostMode Mode>
void pass_v_to_u_kernel(DualState& state, const MatchPair<float>& pair) {
  const detail::CostRows<float, Mode> rows(pair);
  const int D = state.D;
  const int h = state.height;
  const int w = state.width;
#pragma omp parallel
  {
    std::vector<double> best(D);
#pragma omp for schedule(static)
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t base = (static_cast<std::size_t>(r) * w + c) * D;
        const double* l4 = &state.lambda4[base];
        std::fill(best.begin(), best.end(), kInf);
        detail::for_each_cost(rows, r, c, D, [&](int a, int b, auto cost) {
          best[a] = std::min(best[a], static_cast<double>(cost) - l4[b]);
        });
        std::copy(best.begin(), best.end(), state.lambda3.begin() + static_cast<std::ptrdiff_t>(base));
      }
    }
  }
}

/// Per-pixel minimum and argmin of c - lambda3(u) - lambda4(v); ties to smallest u, then v.
template <CostMode Mode>
void cross_minimize(const DualState& state, const MatchPair<float>& pair, std::vector<double>& values,
                    std::vector<int>* u_labels, std::vector<int>* v_labels) {
  const detail::CostRows<float, Mode> rows(pair);
  const int D = state.D;
  const int h = state.height;
  const int w = state.width;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      const double* l3 = &state.lambda3[p * D];
      const double* l4 = &state.lambda4[p * D];
      double best = kInf;
      int best_a = 0;
      int best_b = 0;
      detail::for_each_cost(rows, r, c, D, [&](int a, int b, auto cost) {
        const double value = (static_cast<double>(cost) - l3[a]) - l4[b];
        if (value < best) {
          best = value;
          best_a = a;
          best_b = b;
        }
      });
      values[p] = best;
      if (u_labels) (*u_labels)[p] = best_a;
      if (v_labels) (*v_labels)[p] = best_b;
    }
  }
}

}  // namespace

void pass_u_to_v(DualState& state, const MatchPair<float>& pair, CostMode mode) {
  check_state(state, pair);
  if (mode == CostMode::Q) {
    pass_u_to_v_kernel<CostMode::Q>(state, pair);
  } else {
    pass_u_to_v_kernel<CostMode::F>(state, pair);
  }
}

void pass_v_to_u(DualState& state, const MatchPair<float>& pair, CostMode mode) {
  check_state(state, pair);
  if (mode == CostMode::Q) {
    pass_v_to_u_kernel<CostMode::Q>(state, pair);
  } else {
    pass_v_to_u_kernel<CostMode::F>(state, pair);
  }
}

double cross_bound(const DualState& state, const MatchPair<float>& pair, CostMode mode) {
  check_state(state, pair);
  std::vector<double> values(state.pixels());
  if (mode == CostMode::Q) {
    cross_minimize<CostMode::Q>(state, pair, values, nullptr, nullptr);
  } else {
    cross_minimize<CostMode::F>(state, pair, values, nullptr, nullptr);
  }
  double total = 0.0;
  for (double x : values) total += x;
  return total;
}

double lower_bound(const DualState& state, const MatchPair<float>& pair, const EdgeWeights& weights,
                   const RobustPenalty& penalty, CostMode mode) {
  const double psi_u = plane_bound(state.lambda1, state.lambda3, weights, penalty, state.D);
  const double psi_v = plane_bound(state.lambda2, state.lambda4, weights, penalty, state.D);
  return psi_u + psi_v + cross_bound(state, pair, mode);
}

FlowField decode_primal(const DualState& state, const MatchPair<float>& pair, CostMode mode) {
  check_state(state, pair);
  std::vector<double> values(state.pixels());
  std::vector<int> us(state.pixels()), vs(state.pixels());
  if (mode == CostMode::Q) {
    cross_minimize<CostMode::Q>(state, pair, values, &us, &vs);
  } else {
    cross_minimize<CostMode::F>(state, pair, values, &us, &vs);
  }
  const int half = state.D / 2;
  FlowField flow(state.height, state.width);
  for (std::size_t p = 0; p < flow.pixels(); ++p) {
    flow.u[p] = static_cast<float>(us[p] - half);
    flow.v[p] = static_cast<float>(vs[p] - half);
  }
  return flow;
}

double primal_energy(const FlowField& flow, const MatchPair<float>& pair, const EdgeWeights& weights,
                     const RobustPenalty& penalty, int D, CostMode mode) {
  const SearchWindow window(D);
  const int h = flow.height;
  const int w = flow.width;
  if (h != pair.height() || w != pair.width() || weights.height != h || weights.width != w) {
    throw DataError("primal_energy: flow, descriptors and weights differ in shape");
  }
  std::vector<int> us(flow.pixels()), vs(flow.pixels());
  for (std::size_t p = 0; p < flow.pixels(); ++p) {
    const float u = flow.u[p];
    const float v = flow.v[p];
    if (u != std::floor(u) || v != std::floor(v) || !window.contains(static_cast<int>(u)) ||
        !window.contains(static_cast<int>(v))) {
      throw DataError("primal_energy: flow label outside the search window at pixel " + std::to_string(p));
    }
    us[p] = static_cast<int>(u);
    vs[p] = static_cast<int>(v);
  }
  double unary = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      unary += local_cost(pair, r, c, us[p], vs[p], mode);
    }
  }
  double pairwise = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      if (c + 1 < w) {
        pairwise += weights.horizontal[p] * (rho(us[p] - us[p + 1], penalty) + rho(vs[p] - vs[p + 1], penalty));
      }
      if (r + 1 < h) {
        const std::size_t q = p + w;
        pairwise += weights.vertical[p] * (rho(us[p] - us[q], penalty) + rho(vs[p] - vs[q], penalty));
      }
    }
  }
  return unary + pairwise;
}

CrfResult optimize(const MatchPair<float>& pair, const EdgeWeights& weights, const CrfParams& params) {
  params.validate();
  pair.require(params.mode);
  if (weights.height != pair.height() || weights.width != pair.width()) {
    throw DataError("edge weights and descriptor fields differ in shape");
  }
  const int D = params.D;
  CrfResult result;
  result.state = DualState::zeros(pair.height(), pair.width(), D);
  DualState& state = result.state;

  auto record = [&](std::string label) {
    BoundStep step;
    step.label = std::move(label);
    step.psi = lower_bound(state, pair, weights, params.penalty, params.mode);
    if (params.record_energy) {
      step.energy = primal_energy(decode_primal(state, pair, params.mode), pair, weights, params.penalty, D, params.mode);
    }
    if (!std::isfinite(step.psi)) throw NumericError("lower bound became non-finite at step " + step.label);
    result.trace.steps.push_back(std::move(step));
  };

  record("init");
  for (int t = 1; t <= params.it_outer; ++t) {
    const std::string prefix = std::to_string(t) + ":";
    pass_v_to_u(state, pair, params.mode);
    record(prefix + "v->u");

    std::vector<double> slack = dmm_inplane(state.lambda1, state.lambda3, weights, params.penalty, D, params.it_inner);
    for (std::size_t k = 0; k < slack.size(); ++k) state.lambda3[k] -= slack[k];
    record(prefix + "u-plane");

    pass_u_to_v(state, pair, params.mode);
    record(prefix + "u->v");

    slack = dmm_inplane(state.lambda2, state.lambda4, weights, params.penalty, D, params.it_inner);
    for (std::size_t k = 0; k < slack.size(); ++k) state.lambda4[k] -= slack[k];
    record(prefix + "v-plane");
  }
  result.flow = decode_primal(state, pair, params.mode);
  return result;
}

CrfResult optimize(const MatchPair<float>& pair, const Image& image1, const CrfParams& params) {
  return optimize(pair, contrast_weights(image1, params.alpha), params);
}

}  // namespace sflow
