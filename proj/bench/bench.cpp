// Times the OpenMP kernels against the serial reference implementations, and F-mode against
// Q-mode costs. Prints one CSV row per (kernel, implementation).

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "sflow/costvol.hpp"
#include "sflow/crf.hpp"
#include "sflow/descriptors.hpp"
#include "sflow/reference.hpp"

using namespace sflow;

namespace {

FloatDescriptorField random_field(int h, int w, std::mt19937_64& rng) {
  FloatDescriptorField f(h, w);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (auto& x : f.data) x = n(rng);
  return f;
}

template <class F>
double seconds(int reps, F&& f) {
  double best = 1e300;
  for (int k = 0; k < reps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* kernel, const char* impl, int h, int w, int D, double t, double baseline) {
  std::printf("%s,%s,%d,%d,%d,%d,%.6f,%.2f\n", kernel, impl, h, w, D, omp_get_max_threads(), t, baseline / t);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sflow kernel benchmark"};
  int height = 48, width = 64, D = 16, reps = 3;
  app.add_option("--height", height)->check(CLI::PositiveNumber);
  app.add_option("--width", width)->check(CLI::PositiveNumber);
  app.add_option("--d", D)->check(CLI::PositiveNumber);
  app.add_option("--reps", reps)->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  if (D % 2 != 0) {
    std::fprintf(stderr, "--d must be even\n");
    return 2;
  }

  std::mt19937_64 rng(1);
  FloatDescriptorField f1 = random_field(height, width, rng), f2 = random_field(height, width, rng);
  BinaryDescriptorField b1 = quantize(f1), b2 = quantize(f2);
  const MatchPair<float> pair{&f1, &f2, &b1, &b2};
  const SearchWindow window(D);

  std::printf("kernel,impl,height,width,D,threads,seconds,speedup\n");

  // Speedups are relative to the serial reference of the same variant.
  for (auto variant : {VariantSpec::FF(), VariantSpec::FQ(), VariantSpec::QQ()}) {
    const std::string name = "min_project_" + variant.name();
    const double ref = seconds(reps, [&] { reference::min_project(pair, window, variant); });
    const double fast = seconds(reps, [&] { min_project(pair, window, variant); });
    row(name.c_str(), "reference", height, width, D, ref, ref);
    row(name.c_str(), "openmp", height, width, D, fast, ref);
  }

  for (CostMode mode : {CostMode::F, CostMode::Q}) {
    const std::string name = std::string("pass_") + to_string(mode);
    DualState a = DualState::zeros(height, width, D), b = a;
    const double ref = seconds(reps, [&] {
      reference::pass_u_to_v(a, pair, mode);
      reference::pass_v_to_u(a, pair, mode);
    });
    const double fast = seconds(reps, [&] {
      pass_u_to_v(b, pair, mode);
      pass_v_to_u(b, pair, mode);
    });
    row(name.c_str(), "reference", height, width, D, ref, ref);
    row(name.c_str(), "openmp", height, width, D, fast, ref);
  }

  {
    const RobustPenalty penalty;
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const std::size_t chains = static_cast<std::size_t>(height) * width;
    std::vector<double> h(chains * D);
    for (auto& x : h) x = u(rng);
    std::vector<double> out(D);
    double sink = 0.0;
    const double ref = seconds(reps, [&] {
      for (std::size_t k = 0; k < chains; ++k) {
        sink += reference::dt_message(std::span<const double>(h).subspan(k * D, D), 0.7, penalty)[0];
      }
    });
    const double fast = seconds(reps, [&] {
      for (std::size_t k = 0; k < chains; ++k) {
        chain_dt_message(std::span<const double>(h).subspan(k * D, D), 0.7, penalty, out);
        sink += out[0];
      }
    });
    row("dt_message", "reference", height, width, D, ref, ref);
    row("dt_message", "linear", height, width, D, fast, ref);
    if (sink == 0.125) std::fprintf(stderr, "\n");
  }

  {
    CrfParams params;
    params.D = D;
    params.it_outer = 2;
    for (CostMode mode : {CostMode::F, CostMode::Q}) {
      params.mode = mode;
      const double t = seconds(1, [&] { optimize(pair, uniform_weights(height, width, 1.0), params); });
      const std::string name = std::string("optimize_") + to_string(mode);
      row(name.c_str(), "openmp", height, width, D, t, t);
    }
  }
  return 0;
}
