#include "sflow/costvol.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "sflow/detail/cost_rows.hpp"
#include "sflow/error.hpp"
#include "sflow/io_util.hpp"

namespace sflow {

std::string to_string(CostMode mode) { return mode == CostMode::F ? "F" : "Q"; }

CostMode parse_cost_mode(const std::string& text) {
  if (text == "F" || text == "f") return CostMode::F;
  if (text == "Q" || text == "q") return CostMode::Q;
  throw ConfigError("invalid cost mode '" + text + "' (expected F or Q)");
}

std::string VariantSpec::name() const { return to_string(outer) + to_string(inner); }

VariantSpec VariantSpec::parse(const std::string& text) {
  if (text == "FF") return FF();
  if (text == "FQ") return FQ();
  if (text == "QQ") return QQ();
  throw ConfigError("invalid variant '" + text + "' (expected FF, FQ or QQ)");
}

SearchWindow::SearchWindow(int size) : size_(size) {
  if (size <= 0 || size % 2 != 0) throw ConfigError("search size D must be even and positive, got " + std::to_string(size));
  if (size > std::numeric_limits<std::uint16_t>::max()) throw ConfigError("search size D too large");
}

template <class T>
int MatchPair<T>::height() const {
  if (binary1) return binary1->height;
  if (full1) return full1->height;
  return 0;
}

template <class T>
int MatchPair<T>::width() const {
  if (binary1) return binary1->width;
  if (full1) return full1->width;
  return 0;
}

template <class T>
void MatchPair<T>::require(CostMode mode) const {
  if (mode == CostMode::Q) {
    if (!binary1 || !binary2 || binary1->empty() || binary2->empty()) {
      throw DataError("Q-mode cost requires binary descriptor fields for both images");
    }
    if (binary1->height != binary2->height || binary1->width != binary2->width) {
      throw DataError("binary descriptor fields differ in shape");
    }
  } else {
    if (!full1 || !full2 || full1->empty() || full2->empty()) {
      throw DataError("F-mode cost requires real descriptor fields for both images");
    }
    if (full1->height != full2->height || full1->width != full2->width) {
      throw DataError("descriptor fields differ in shape");
    }
  }
  if (height() <= 0 || width() <= 0) throw DataError("empty descriptor fields");
  if (full1 && binary1 && (full1->height != binary1->height || full1->width != binary1->width)) {
    throw DataError("real and binary descriptor fields differ in shape");
  }
}

template <class T>
double local_cost(const MatchPair<T>& pair, int r, int c, int u, int v, CostMode mode) {
  const int h = pair.height();
  const int w = pair.width();
  const int rr = r + v;
  const int cc = c + u;
  if (rr < 0 || rr >= h || cc < 0 || cc >= w) return kOutsideCost;
  const std::size_t p = static_cast<std::size_t>(r) * w + c;
  const std::size_t q = static_cast<std::size_t>(rr) * w + cc;
  if (mode == CostMode::Q) {
    return detail::CostRows<T, CostMode::Q>(pair).at(p, q);
  }
  return static_cast<double>(detail::CostRows<T, CostMode::F>(pair).at(p, q));
}

namespace {

template <class T, CostMode Inner, CostMode Outer>
void project_kernel(const MatchPair<T>& pair, int D, CostProjectionPair& out, ProjectionStats* stats) {
  using InnerRows = detail::CostRows<T, Inner>;
  using OuterRows = detail::CostRows<T, Outer>;
  using InnerValue = typename InnerRows::value_type;
  const InnerRows inner(pair);
  const OuterRows outer(pair);
  const int h = inner.height;
  const int w = inner.width;
  const int half = D / 2;
  std::uint64_t inner_evals = 0;
  std::uint64_t outer_evals = 0;

#pragma omp parallel reduction(+ : inner_evals, outer_evals)
  {
    // Traversal is v-label outer, u-label inner, so each line of costs reads contiguous target pixels.
    std::vector<InnerValue> u_best(D);
    std::vector<std::int32_t> u_arg(D);  // int32 keeps the select loop at one lane width
    std::vector<InnerValue> line(D);
#pragma omp for schedule(static)
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        // Labels a in [a_lo, a_hi) keep the target column inside the image.
        const int a_lo = std::max(0, half - c);
        const int a_hi = std::min(D, w - c + half);
        const std::size_t p = static_cast<std::size_t>(r) * w + c;
        double* cu = &out.c_u[p * D];
        double* cv = &out.c_v[p * D];
        std::uint16_t* av = &out.argmin_v[p * D];
        std::uint16_t* au = &out.argmin_u[p * D];
        for (int a = 0; a < D; ++a) {
          u_best[a] = std::numeric_limits<InnerValue>::max();
          u_arg[a] = 0;
        }
        for (int b = 0; b < D; ++b) {
          const int rr = r + b - half;
          const bool row_inside = rr >= 0 && rr < h;
          const int lo = row_inside ? a_lo : D;
          const int hi = row_inside ? a_hi : D;
          for (int a = 0; a < lo; ++a) line[a] = InnerRows::kOutside;
          if (lo < hi) {
            const std::size_t q0 = static_cast<std::size_t>(rr) * w + (c - half);
            for (int a = lo; a < hi; ++a) line[a] = inner.at(p, q0 + a);
            inner_evals += static_cast<std::uint64_t>(hi - lo);
          }
          for (int a = std::max(lo, hi); a < D; ++a) line[a] = InnerRows::kOutside;

          InnerValue v_best = line[0];
          int v_arg = 0;
          if constexpr (Inner == CostMode::Q) {
            for (int a = 1; a < D; ++a) v_best = std::min(v_best, line[a]);
            while (line[v_arg] != v_best) ++v_arg;
          } else {
            for (int a = 1; a < D; ++a) {
              if (line[a] < v_best) {
                v_best = line[a];
                v_arg = a;
              }
            }
          }
          au[b] = static_cast<std::uint16_t>(v_arg);
          if constexpr (Inner == Outer) {
            cv[b] = static_cast<double>(v_best);
          } else {
            const int cc = c + v_arg - half;
            if (row_inside && cc >= 0 && cc < w) {
              cv[b] = static_cast<double>(outer.at(p, static_cast<std::size_t>(rr) * w + cc));
              ++outer_evals;
            } else {
              cv[b] = kOutsideCost;
            }
          }

          for (int a = 0; a < D; ++a) {
            const bool better = line[a] < u_best[a];
            u_best[a] = better ? line[a] : u_best[a];
            u_arg[a] = better ? b : u_arg[a];
          }
        }
        for (int a = 0; a < D; ++a) {
          av[a] = static_cast<std::uint16_t>(u_arg[a]);
          if constexpr (Inner == Outer) {
            cu[a] = static_cast<double>(u_best[a]);
          } else {
            const int cc = c + a - half;
            const int rr = r + u_arg[a] - half;
            if (cc >= 0 && cc < w && rr >= 0 && rr < h) {
              cu[a] = static_cast<double>(outer.at(p, static_cast<std::size_t>(rr) * w + cc));
              ++outer_evals;
            } else {
              cu[a] = kOutsideCost;
            }
          }
        }
      }
    }
  }

  if (stats) {
    std::uint64_t& inner_count = Inner == CostMode::F ? stats->full_evals : stats->quant_evals;
    inner_count += inner_evals;
    std::uint64_t& outer_count = Outer == CostMode::F ? stats->full_evals : stats->quant_evals;
    outer_count += outer_evals;
  }
}

}  // namespace

template <class T>
CostProjectionPair min_project(const MatchPair<T>& pair, SearchWindow window, VariantSpec variant,
                               ProjectionStats* stats) {
  if (variant.outer == CostMode::Q && variant.inner == CostMode::F) {
    throw ConfigError("variant QF is not supported (inner must be Q when outer is Q)");
  }
  pair.require(variant.inner);
  pair.require(variant.outer);
  const int D = window.size();
  CostProjectionPair out;
  out.height = pair.height();
  out.width = pair.width();
  out.D = D;
  out.variant = variant;
  const std::size_t n = out.pixels() * static_cast<std::size_t>(D);
  out.c_u.resize(n);
  out.c_v.resize(n);
  out.argmin_v.resize(n);
  out.argmin_u.resize(n);

  if (variant == VariantSpec::FF()) {
    project_kernel<T, CostMode::F, CostMode::F>(pair, D, out, stats);
  } else if (variant == VariantSpec::FQ()) {
    project_kernel<T, CostMode::Q, CostMode::F>(pair, D, out, stats);
  } else {
    project_kernel<T, CostMode::Q, CostMode::Q>(pair, D, out, stats);
  }
  return out;
}

FlowField wta(const CostProjectionPair& projection) {
  const int D = projection.D;
  const int half = D / 2;
  FlowField flow(projection.height, projection.width);
  const auto n = static_cast<std::ptrdiff_t>(projection.pixels());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    const double* cu = &projection.c_u[static_cast<std::size_t>(p) * D];
    const double* cv = &projection.c_v[static_cast<std::size_t>(p) * D];
    int best_u = 0;
    int best_v = 0;
    for (int l = 1; l < D; ++l) {
      if (cu[l] < cu[best_u]) best_u = l;
      if (cv[l] < cv[best_v]) best_v = l;
    }
    flow.u[p] = static_cast<float>(best_u - half);
    flow.v[p] = static_cast<float>(best_v - half);
  }
  return flow;
}

ProjectedBytes projected_bytes(std::int64_t height, std::int64_t width, std::int64_t D,
                               std::int64_t bytes_per_entry) {
  if (height <= 0 || width <= 0 || D <= 0 || bytes_per_entry <= 0) {
    throw ConfigError("projected_bytes: arguments must be positive");
  }
  using wide = unsigned __int128;
  const wide pixels = static_cast<wide>(height) * static_cast<wide>(width);
  const wide full = pixels * static_cast<wide>(D) * static_cast<wide>(D) * static_cast<wide>(bytes_per_entry);
  const wide split = 2 * pixels * static_cast<wide>(D) * static_cast<wide>(bytes_per_entry);
  constexpr wide limit = std::numeric_limits<std::uint64_t>::max();
  if (full > limit || split > limit) throw NumericError("projected_bytes: size exceeds 64 bits");
  return {static_cast<std::uint64_t>(full), static_cast<std::uint64_t>(split)};
}

void save_projection(const std::string& path, const CostProjectionPair& projection) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write projection file: " + path);
  BinaryWriter writer(out);
  writer.magic4("CPV1");
  writer.i32(projection.height);
  writer.i32(projection.width);
  writer.i32(projection.D);
  for (double x : projection.c_u) writer.f32(static_cast<float>(x));
  for (double x : projection.c_v) writer.f32(static_cast<float>(x));
  if (!out) throw DataError("write failed: " + path);
}

CostProjectionPair load_projection(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open projection file: " + path);
  BinaryReader reader(in, path);
  if (reader.magic4() != "CPV1") throw DataError(path + ": bad projection magic (expected CPV1)");
  CostProjectionPair p;
  p.height = reader.i32();
  p.width = reader.i32();
  p.D = reader.i32();
  if (p.height <= 0 || p.width <= 0 || p.D <= 0) throw DataError(path + ": non-positive projection dimensions");
  const std::size_t n = p.pixels() * static_cast<std::size_t>(p.D);
  p.c_u.resize(n);
  p.c_v.resize(n);
  for (double& x : p.c_u) x = reader.f32();
  for (double& x : p.c_v) x = reader.f32();
  return p;
}

template struct MatchPair<float>;
template struct MatchPair<double>;
template double local_cost(const MatchPair<float>&, int, int, int, int, CostMode);
template double local_cost(const MatchPair<double>&, int, int, int, int, CostMode);
template CostProjectionPair min_project(const MatchPair<float>&, SearchWindow, VariantSpec, ProjectionStats*);
template CostProjectionPair min_project(const MatchPair<double>&, SearchWindow, VariantSpec, ProjectionStats*);

}  // namespace sflow
