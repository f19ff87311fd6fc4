#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "sflow/crf.hpp"
#include "sflow/error.hpp"
#include "sflow/reference.hpp"
#include "support.hpp"

using namespace sflow;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Instance {
  FloatDescriptorField f1, f2;
  BinaryDescriptorField b1, b2;
  MatchPair<float> pair() const { return {&f1, &f2, &b1, &b2}; }
};

Instance random_instance(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Instance in;
  in.f1 = convert_field<float>(sflow::testing::random_field(h, w, rng));
  in.f2 = convert_field<float>(sflow::testing::random_field(h, w, rng));
  in.b1 = quantize(in.f1);
  in.b2 = quantize(in.f2);
  return in;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 5.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

EdgeWeights random_weights(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 2.0);
  EdgeWeights e = uniform_weights(h, w, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      if (c + 1 < w) e.horizontal[p] = d(rng);
      if (r + 1 < h) e.vertical[p] = d(rng);
    }
  }
  return e;
}

}  // namespace

TEST_CASE("rho examples") {
  const RobustPenalty p{0.25, 25.0};
  CHECK(rho(0, p) == 0.0);
  CHECK(rho(4, p) == 1.0);
  CHECK(rho(-4, p) == 1.0);
  CHECK(rho(200, p) == 25.0);
}

TEST_CASE("contrast weights") {
  const EdgeWeights flat = contrast_weights(Image(3, 4, 0.5f), 8.5);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * 4 + c;
      CHECK(flat.horizontal[p] == (c + 1 < 4 ? 1.0 : 0.0));
      CHECK(flat.vertical[p] == (r + 1 < 3 ? 1.0 : 0.0));
    }
  }
  Image img(1, 2, 0.0f);
  img.at(0, 1, 0) = 0.1f;
  img.at(0, 1, 1) = 0.15f;
  img.at(0, 1, 2) = 0.05f;
  const double sum = std::abs(static_cast<double>(0.1f)) + 0.15f + 0.05f;
  CHECK(contrast_weights(img, 8.5).horizontal[0] == doctest::Approx(std::exp(-8.5 / 3.0 * sum)));
  CHECK(contrast_weights(img, 8.5).horizontal[0] == doctest::Approx(0.42741).epsilon(1e-4));
  CHECK(contrast_weights(img, 0.0).horizontal[0] == 1.0);
}

TEST_CASE("CrfParams validation") {
  CrfParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.D == 128);
  CHECK(p.it_inner == 8);
  CHECK(p.it_outer == 5);
  p.penalty.tau1 = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = CrfParams{};
  p.it_inner = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = CrfParams{};
  p.D = 5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("chain_dt_message: examples and quadratic oracle") {
  const RobustPenalty p{0.25, 25.0};
  std::vector<double> out(6);
  const std::vector<double> h = {3, 1, 4, 1, 5, 9};
  chain_dt_message(h, 0.0, p, out);
  for (double x : out) CHECK(x == 1.0);

  std::vector<double> onehot(6, kInf);
  onehot[2] = 0.0;
  chain_dt_message(onehot, 2.0, RobustPenalty{1.0, 2.5}, out);
  for (int t = 0; t < 6; ++t) CHECK(out[t] == 2.0 * std::min(1.0 * std::abs(t - 2), 2.5));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> wd(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_vector(16, rng, 10.0);
    const double w = wd(rng);
    const RobustPenalty q{0.1 + wd(rng), 0.5 + 3 * wd(rng)};
    std::vector<double> fast(16);
    chain_dt_message(v, w, q, fast);
    CHECK(fast == reference::dt_message(v, w, q));
  }
}

TEST_CASE("chain_minorant: sum of minima equals the chain minimum") {
  std::mt19937_64 rng(17);
  const RobustPenalty p{0.5, 1.5};
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 4, D = 3;
    const auto unary = random_vector(static_cast<std::size_t>(n) * D, rng);
    std::vector<double> edge(n - 1);
    for (auto& e : edge) e = std::abs(random_vector(1, rng)[0]);
    if (n >= 3 && trial % 2) edge[1] = 0.0;
    std::vector<double> slack(unary.size());
    chain_minorant(unary, edge, p, D, slack);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += *std::min_element(slack.begin() + j * D, slack.begin() + (j + 1) * D);
    CHECK(sum == doctest::Approx(reference::chain_minimum_exhaustive(unary, edge, p, D)).epsilon(1e-12));
  }
}

TEST_CASE("dmm_inplane: decoupled chains return lambda_cross") {
  std::mt19937_64 rng(19);
  const int h = 3, w = 4, D = 4;
  const auto cross = random_vector(static_cast<std::size_t>(h) * w * D, rng);
  for (const EdgeWeights& weights : {uniform_weights(h, w, 0.0), uniform_weights(1, 1, 1.0)}) {
    const std::size_t n = static_cast<std::size_t>(weights.height) * weights.width * D;
    std::vector<double> plane(n, 0.0);
    const std::vector<double> lc(cross.begin(), cross.begin() + static_cast<std::ptrdiff_t>(n));
    const auto s = dmm_inplane(plane, lc, weights, RobustPenalty{}, D, 3);
    for (std::size_t k = 0; k < n; ++k) CHECK(s[k] == doctest::Approx(lc[k]).epsilon(1e-12));
    double expect = 0.0;
    for (std::size_t p = 0; p < n / D; ++p) expect += *std::min_element(lc.begin() + p * D, lc.begin() + (p + 1) * D);
    CHECK(plane_bound(plane, lc, weights, RobustPenalty{}, D) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("dmm_inplane: bound does not decrease and the slack is a minorant") {
  std::mt19937_64 rng(23);
  const int h = 3, w = 3, D = 4;
  const RobustPenalty pen{0.7, 2.0};
  for (int trial = 0; trial < 5; ++trial) {
    const EdgeWeights weights = random_weights(h, w, rng);
    auto plane = random_vector(static_cast<std::size_t>(h) * w * D, rng, 1.0);
    const auto cross = random_vector(plane.size(), rng);
    const double before = plane_bound(plane, cross, weights, pen, D);
    const auto s = dmm_inplane(plane, cross, weights, pen, D, 4);
    const double after = plane_bound(plane, cross, weights, pen, D);
    CHECK(after >= before - 1e-9 * (1 + std::abs(before)));
    double sum_min = 0.0;
    for (int p = 0; p < h * w; ++p) sum_min += *std::min_element(s.begin() + p * D, s.begin() + (p + 1) * D);
    CHECK(sum_min == doctest::Approx(after).epsilon(1e-9));
    std::uniform_int_distribution<int> lab(0, D - 1);
    for (int k = 0; k < 1000; ++k) {
      std::vector<int> x(h * w);
      for (auto& l : x) l = lab(rng);
      double lhs = 0.0;
      for (int p = 0; p < h * w; ++p) lhs += s[static_cast<std::size_t>(p) * D + x[p]];
      const double rhs = reference::plane_energy(x, cross, weights, pen, D);
      CHECK(lhs <= rhs + 1e-9 * (1 + std::abs(rhs)));
    }
  }
}

TEST_CASE("cross-plane passes match the brute-force loops") {
  const Instance in = random_instance(4, 4, 29);
  std::mt19937_64 rng(31);
  for (CostMode mode : {CostMode::F, CostMode::Q}) {
    DualState a = DualState::zeros(4, 4, 4);
    a.lambda3 = random_vector(a.lambda3.size(), rng);
    a.lambda4 = random_vector(a.lambda4.size(), rng);
    DualState b = a;
    pass_u_to_v(a, in.pair(), mode);
    reference::pass_u_to_v(b, in.pair(), mode);
    CHECK(a.lambda4 == b.lambda4);
    pass_v_to_u(a, in.pair(), mode);
    reference::pass_v_to_u(b, in.pair(), mode);
    CHECK(a.lambda3 == b.lambda3);
  }
}

TEST_CASE("cross-plane passes at zero reproduce the min-projection") {
  const Instance in = random_instance(5, 6, 37);
  for (CostMode mode : {CostMode::F, CostMode::Q}) {
    const VariantSpec variant{mode, mode};
    const auto proj = min_project(in.pair(), SearchWindow(6), variant);
    DualState s = DualState::zeros(5, 6, 6);
    pass_v_to_u(s, in.pair(), mode);
    CHECK(s.lambda3 == proj.c_u);
    s = DualState::zeros(5, 6, 6);
    pass_u_to_v(s, in.pair(), mode);
    CHECK(s.lambda4 == proj.c_v);
  }
}

TEST_CASE("pass_u_to_v: constant shift of lambda3") {
  const Instance in = random_instance(3, 3, 41);
  DualState s = DualState::zeros(3, 3, 4);
  pass_u_to_v(s, in.pair(), CostMode::Q);
  const auto base = s.lambda4;
  for (auto& x : s.lambda3) x = 2.5;
  pass_u_to_v(s, in.pair(), CostMode::Q);
  for (std::size_t k = 0; k < base.size(); ++k) CHECK(s.lambda4[k] == base[k] - 2.5);
}

TEST_CASE("pass_v_to_u: hand-computed 1x1 table") {
  // One pixel, D = 2: only displacement (0, 0) is in range, the other three cost 65.
  FloatDescriptorField f(1, 1, 0.5f);
  const MatchPair<float> pair{&f, &f, nullptr, nullptr};
  DualState s = DualState::zeros(1, 1, 2);
  s.lambda4 = {10.0, 1.0};
  pass_v_to_u(s, pair, CostMode::F);
  // c(u=-1, .) = 65, so lambda3[0] = min(65 - 10, 65 - 1) = 55.
  CHECK(s.lambda3[0] == 55.0);
  // c(0, -1) = 65, c(0, 0) = -16: lambda3[1] = min(65 - 10, -16 - 1) = -17.
  CHECK(s.lambda3[1] == -17.0);
}

TEST_CASE("lower bound with zero multipliers and no edges") {
  const Instance in = random_instance(3, 4, 43);
  const DualState s = DualState::zeros(3, 4, 4);
  const EdgeWeights w = uniform_weights(3, 4, 0.0);
  double expect = 0.0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      const auto t = reference::cost_table(in.pair(), r, c, 4, CostMode::Q);
      expect += *std::min_element(t.begin(), t.end());
    }
  }
  CHECK(lower_bound(s, in.pair(), w, RobustPenalty{}, CostMode::Q) == expect);
}

TEST_CASE("primal_energy examples") {
  BinaryDescriptorField b(2, 2);
  for (auto& x : b.words) x = 0x1234;
  const MatchPair<float> pair{nullptr, nullptr, &b, &b};
  const FlowField zero(2, 2);
  CHECK(primal_energy(zero, pair, uniform_weights(2, 2, 1.0), RobustPenalty{}, 4, CostMode::Q) == -256.0);

  BinaryDescriptorField one(1, 2);
  const MatchPair<float> p2{nullptr, nullptr, &one, &one};
  FlowField f(1, 2);
  f.u = {0.0f, -1.0f};
  const double unary = 2 * -64.0;
  CHECK(primal_energy(f, p2, uniform_weights(1, 2, 1.0), RobustPenalty{0.25, 25}, 4, CostMode::Q) == unary + 0.25);

  f.u = {0.0f, 7.0f};
  CHECK_THROWS_AS(primal_energy(f, p2, uniform_weights(1, 2, 1.0), RobustPenalty{}, 4, CostMode::Q), DataError);
}

TEST_CASE("primal_energy matches the term-by-term oracle") {
  const Instance in = random_instance(3, 3, 47);
  std::mt19937_64 rng(53);
  const EdgeWeights w = random_weights(3, 3, rng);
  const RobustPenalty pen{0.5, 1.25};
  std::uniform_int_distribution<int> lab(-2, 1);
  FlowField f(3, 3);
  for (auto& x : f.u) x = static_cast<float>(lab(rng));
  for (auto& x : f.v) x = static_cast<float>(lab(rng));
  double expect = 0.0;
  std::vector<int> us(9), vs(9);
  for (int p = 0; p < 9; ++p) {
    us[p] = static_cast<int>(f.u[p]) + 2;
    vs[p] = static_cast<int>(f.v[p]) + 2;
    expect += local_cost(in.pair(), p / 3, p % 3, us[p] - 2, vs[p] - 2, CostMode::F);
  }
  const std::vector<double> zero(9 * 4, 0.0);
  expect += reference::plane_energy(us, zero, w, pen, 4) + reference::plane_energy(vs, zero, w, pen, 4);
  CHECK(primal_energy(f, in.pair(), w, pen, 4, CostMode::F) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("decode_primal at zero equals the brute-force WTA") {
  const Instance in = random_instance(5, 5, 59);
  const FlowField d = decode_primal(DualState::zeros(5, 5, 4), in.pair(), CostMode::Q);
  const FlowField b = reference::joint_argmin(in.pair(), SearchWindow(4), CostMode::Q);
  CHECK(d.u == b.u);
  CHECK(d.v == b.v);
}

TEST_CASE("optimize: it_outer = 0 is the zero-multiplier decode") {
  const Instance in = random_instance(4, 5, 61);
  CrfParams p;
  p.D = 4;
  p.it_outer = 0;
  const CrfResult r = optimize(in.pair(), uniform_weights(4, 5, 1.0), p);
  const FlowField b = reference::joint_argmin(in.pair(), SearchWindow(4), CostMode::Q);
  CHECK(r.flow.u == b.u);
  CHECK(r.flow.v == b.v);
  REQUIRE(r.trace.steps.size() == 1);
  CHECK(r.trace.steps[0].label == "init");
}

TEST_CASE("optimize: bound is monotone and below the exhaustive minimum") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance in = random_instance(2, 2, 70 + seed);
    std::mt19937_64 rng(seed);
    const EdgeWeights w = random_weights(2, 2, rng);
    CrfParams p;
    p.D = 2;
    p.mode = CostMode::F;
    p.penalty = RobustPenalty{2.0, 5.0};
    const CrfResult r = optimize(in.pair(), w, p);
    const double emin = reference::exhaustive_minimum(in.pair(), w, p.penalty, 2, CostMode::F).energy;
    REQUIRE(r.trace.steps.size() == 1 + 4 * 5);
    for (std::size_t k = 0; k < r.trace.steps.size(); ++k) {
      const auto& s = r.trace.steps[k];
      CHECK(s.psi <= emin + 1e-9);
      REQUIRE(s.energy.has_value());
      CHECK(*s.energy >= emin - 1e-9);
      if (k > 0) CHECK(s.psi >= r.trace.steps[k - 1].psi - 1e-6 * (1 + std::abs(s.psi)));
    }
    CHECK(r.trace.steps[1].label == "1:v->u");
    CHECK(r.trace.steps.back().label == "5:v-plane");
  }
}

TEST_CASE("optimize: shape and parameter errors") {
  const Instance in = random_instance(3, 3, 80);
  CrfParams p;
  p.D = 4;
  CHECK_THROWS_AS(optimize(in.pair(), uniform_weights(2, 3, 1.0), p), DataError);
  p.it_outer = -1;
  CHECK_THROWS_AS(optimize(in.pair(), uniform_weights(3, 3, 1.0), p), ConfigError);
  const MatchPair<float> bits_only{nullptr, nullptr, &in.b1, &in.b2};
  p = CrfParams{};
  p.D = 4;
  p.mode = CostMode::F;
  CHECK_THROWS_AS(optimize(bits_only, uniform_weights(3, 3, 1.0), p), DataError);
}

TEST_CASE("bound trace CSV") {
  BoundTrace t;
  t.steps.push_back({"init", -1.5, 2.0});
  t.steps.push_back({"1:v->u", -1.0, std::nullopt});
  std::istringstream in(t.to_csv());
  std::string line;
  std::getline(in, line);
  CHECK(line == "step_label,psi,energy");
  std::getline(in, line);
  CHECK(line.rfind("init,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("1:v->u,", 0) == 0);
  CHECK(line.back() == ',');
  sflow::testing::TempDir dir("trace");
  t.write_csv(dir.file("t.csv"));
  std::ifstream f(dir.file("t.csv"));
  CHECK(std::string(std::istreambuf_iterator<char>(f), {}) == t.to_csv());
}
