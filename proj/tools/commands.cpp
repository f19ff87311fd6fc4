#include "commands.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "sflow/crf.hpp"
#include "sflow/descriptors.hpp"
#include "sflow/error.hpp"

namespace sflow::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void apply_threads(const RunConfig& config) {
  if (config.threads > 0) omp_set_num_threads(config.threads);
}

/// Descriptor fields of both images, owning the storage a MatchPair points into.
struct FeatureSet {
  FloatDescriptorField full1, full2;
  BinaryDescriptorField bits1, bits2;

  MatchPair<float> pair() const { return {&full1, &full2, &bits1, &bits2}; }
};

FeatureSet extract_features(const Image& image1, const Image& image2, const std::string& descriptor) {
  FeatureSet f;
  if (descriptor == "census") {
    f.bits1 = census_transform(image1);
    f.bits2 = census_transform(image2);
    f.full1 = embed_binary<float>(f.bits1);
    f.full2 = embed_binary<float>(f.bits2);
  } else if (descriptor.rfind("file:", 0) == 0) {
    const std::string paths = descriptor.substr(5);
    const auto comma = paths.find(',');
    f.full1 = load_descriptor_field(paths.substr(0, comma));
    f.full2 = load_descriptor_field(paths.substr(comma + 1));
    if (f.full1.height != image1.height || f.full1.width != image1.width || f.full2.height != image2.height ||
        f.full2.width != image2.width) {
      throw DataError("descriptor files do not match the image size");
    }
    f.bits1 = quantize(f.full1);
    f.bits2 = quantize(f.full2);
  } else if (descriptor.rfind("tiny:", 0) == 0) {
    const ThetaParams theta = load_theta(descriptor.substr(5));
    f.full1 = convert_field<float>(tiny_extractor_forward(image1, theta));
    f.full2 = convert_field<float>(tiny_extractor_forward(image2, theta));
    f.bits1 = quantize(f.full1);
    f.bits2 = quantize(f.full2);
  } else {
    throw ConfigError("unknown descriptor '" + descriptor + "'");
  }
  return f;
}


std::string prefixed(const std::string& prefix, const char* what) { return prefix + what; }

[[noreturn]] void rethrow_with_prefix(const Error& e, const std::string& prefix) {
  switch (e.exit_code()) {
    case 2: throw ConfigError(prefixed(prefix, e.what()));
    case 4: throw NumericError(prefixed(prefix, e.what()));
    default: throw DataError(prefixed(prefix, e.what()));
  }
}

}  // namespace

FlowTimings cmd_flow(const std::string& image1_path, const std::string& image2_path, const RunConfig& config,
                     const FlowOutputs& outputs, std::ostream& log) {
  config.validate();
  apply_threads(config);
  const Image image1 = load_image(image1_path);
  const Image image2 = load_image(image2_path);
  if (image1.height != image2.height || image1.width != image2.width) {
    throw DataError("input images differ in size: " + image1_path + " vs " + image2_path);
  }
  FlowTimings t;

  auto start = Clock::now();
  const FeatureSet features = extract_features(image1, image2, config.descriptor);
  t.features = seconds_since(start);
  const MatchPair<float> pair = features.pair();

  start = Clock::now();
  const FlowField wta_flow = wta(min_project(pair, SearchWindow(config.D), config.variant));
  t.wta = seconds_since(start);

  FlowField flow = wta_flow;
  BoundTrace trace;
  if (config.it_outer > 0) {
    start = Clock::now();
    CrfResult result = optimize(pair, image1, config.crf_params());
    t.full_model = seconds_since(start);
    flow = std::move(result.flow);
    trace = std::move(result.trace);
  }

  write_flo(outputs.flo, flow);
  write_image(outputs.color, flow_to_color(flow));
  if (!outputs.trace.empty()) trace.write_csv(outputs.trace);

  char line[160];
  std::snprintf(line, sizeof line, "feature extraction %.3f s\nWTA %.3f s\nfull model %.3f s\n", t.features, t.wta,
                t.full_model);
  log << line;
  return t;
}

EpeStats cmd_eval(const std::string& flow_path, const std::string& gt_path, const std::optional<std::string>& mask,
                  std::ostream& out) {
  const FlowField flow = read_flo(flow_path);
  const FlowField gt = read_flo(gt_path);
  const EpeStats stats = mask ? endpoint_error(flow, gt, load_mask(*mask)) : endpoint_error(flow, gt);
  char line[64];
  std::snprintf(line, sizeof line, "%.2f (%.2f)\n", stats.epe_noc, stats.epe_all);
  out << line;
  return stats;
}

std::vector<std::pair<int, int>> parse_sizes(const std::string& text) {
  std::vector<std::pair<int, int>> sizes;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    int h = 0;
    int w = 0;
    char x = 0;
    std::istringstream is(item);
    if (!(is >> h >> x >> w) || x != 'x' || !is.eof() || h <= 0 || w <= 0) {
      throw ConfigError("invalid size '" + item + "' (expected HxW)");
    }
    sizes.emplace_back(h, w);
  }
  return sizes;
}

std::vector<BenchRow> cmd_bench(const RunConfig& config, const std::vector<std::pair<int, int>>& sizes,
                                std::ostream& csv) {
  config.validate();
  apply_threads(config);
  const SearchWindow window(config.D);
  std::vector<BenchRow> rows;
  csv << "kernel,H,W,D,seconds,speedup\n";
  auto emit = [&](BenchRow row) {
    char line[200];
    std::snprintf(line, sizeof line, "%s,%d,%d,%d,%.6f,%.3f\n", row.kernel.c_str(), row.height, row.width, row.D,
                  row.seconds, row.speedup);
    csv << line;
    rows.push_back(std::move(row));
  };

  for (const auto& [h, w] : sizes) {
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    FloatDescriptorField phi1(h, w);
    FloatDescriptorField phi2(h, w);
    for (auto& x : phi1.data) x = normal(rng);
    for (auto& x : phi2.data) x = normal(rng);
    // F mode runs on the +-1 embedding of the quantized fields, so both modes see the same costs.
    const BinaryDescriptorField bits1 = quantize(phi1);
    const BinaryDescriptorField bits2 = quantize(phi2);
    const FloatDescriptorField full1 = embed_binary<float>(bits1);
    const FloatDescriptorField full2 = embed_binary<float>(bits2);
    const MatchPair<float> pair{&full1, &full2, &bits1, &bits2};

    auto start = Clock::now();
    const CostProjectionPair proj_f = min_project(pair, window, VariantSpec::FF());
    const double t_f = seconds_since(start);
    start = Clock::now();
    const CostProjectionPair proj_q = min_project(pair, window, VariantSpec::QQ());
    const double t_q = seconds_since(start);
    const FlowField wta_f = wta(proj_f);
    const FlowField wta_q = wta(proj_q);
    if (wta_f.u != wta_q.u || wta_f.v != wta_q.v) {
      throw NumericError("bench: F and Q min-projection disagree on quantized input");
    }
    emit({"min_project_F", h, w, config.D, t_f, 1.0});
    emit({"min_project_Q", h, w, config.D, t_q, t_q > 0 ? t_f / t_q : 0.0});

    DualState state = DualState::zeros(h, w, config.D);
    start = Clock::now();
    pass_v_to_u(state, pair, CostMode::F);
    const double p_f = seconds_since(start);
    start = Clock::now();
    pass_v_to_u(state, pair, CostMode::Q);
    const double p_q = seconds_since(start);
    emit({"pass_v_to_u_F", h, w, config.D, p_f, 1.0});
    emit({"pass_v_to_u_Q", h, w, config.D, p_q, p_q > 0 ? p_f / p_q : 0.0});
  }
  return rows;
}

TrainResult cmd_train(const std::string& dataset, const TrainConfig& config, const std::string& theta_out,
                      const std::string& loss_csv, std::ostream& log) {
  config.validate();
  if (!fs::is_directory(dataset)) throw DataError("dataset directory not found: " + dataset);
  std::vector<fs::path> samples;
  for (const auto& entry : fs::directory_iterator(dataset)) {
    if (entry.is_directory()) samples.push_back(entry.path());
  }
  std::sort(samples.begin(), samples.end());
  if (samples.empty()) throw DataError("dataset is empty: " + dataset);

  std::vector<TrainingPair> pairs;
  const SearchWindow window(config.D);
  for (const auto& dir : samples) {
    const std::string name = dir.filename().string();
    try {
      TrainingPair p;
      p.image1 = load_image((dir / "img1.ppm").string());
      p.image2 = load_image((dir / "img2.ppm").string());
      const FlowField gt = read_flo((dir / "gt.flo").string());
      if (gt.height != p.image1.height || gt.width != p.image1.width || p.image2.height != p.image1.height ||
          p.image2.width != p.image1.width) {
        throw DataError("image and flow sizes differ");
      }
      p.target = TargetFlow::from_flow(gt, window);
      pairs.push_back(std::move(p));
    } catch (const Error& e) {
      rethrow_with_prefix(e, "sample " + name + ": ");
    }
  }

  TrainResult result = train(pairs, config);
  save_theta(theta_out, result.theta);
  write_loss_csv(loss_csv, result.loss_trace);
  char line[128];
  std::snprintf(line, sizeof line, "loss %.6g -> %.6g over %d steps\n", result.loss_trace.front(),
                result.loss_trace.back(), config.steps);
  log << line;
  return result;
}

namespace {

/// String-valued config flags shared by all subcommands; only flags actually given override the config.
struct ConfigFlags {
  std::string config_path;
  std::deque<std::pair<std::string, std::string>> values;  // key, text; deque keeps bound references stable
  std::vector<std::pair<std::string, CLI::Option*>> options;
  bool dump = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key=value config file");
    add(app, "--d", "d", "search window size D (even)");
    add(app, "--alpha", "alpha", "contrast sensitivity");
    add(app, "--tau1", "tau1", "penalty slope");
    add(app, "--tau2", "tau2", "penalty truncation");
    add(app, "--it-inner", "it_inner", "in-plane sweeps per outer iteration");
    add(app, "--it-outer", "it_outer", "outer iterations (0: WTA only)");
    add(app, "--mode", "mode", "CRF cost mode F or Q");
    add(app, "--variant", "variant", "min-projection variant FF, FQ or QQ");
    add(app, "--descriptor", "descriptor", "census | file:<a>,<b> | tiny:<theta>");
    add(app, "--threads", "threads", "worker threads (0: default)");
    add(app, "--seed", "seed", "random seed");
    add(app, "--trace", "trace", "bound trace CSV path");
    app.add_flag("--dump-config", dump, "print the effective config");
  }

  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    values.emplace_back(key, std::string{});
    options.emplace_back(key, nullptr);
    options.back().second = app.add_option(flag, values.back().second, help);
  }

  RunConfig resolve(RunConfig base) const {
    RunConfig cfg = config_path.empty() ? base : RunConfig::load(config_path, base);
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (options[i].second->count() > 0) cfg.set(values[i].first, values[i].second);
    }
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Large-displacement optical flow with min-projected cost volumes"};
  app.require_subcommand(1);

  ConfigFlags flow_flags, bench_flags, train_flags;

  std::string img1, img2, flo_out, color_out;
  auto* flow = app.add_subcommand("flow", "estimate flow for an image pair");
  flow->add_option("image1", img1)->required();
  flow->add_option("image2", img2)->required();
  flow->add_option("flo", flo_out, "output .flo")->required();
  flow->add_option("color", color_out, "output color image (.png or .ppm)")->required();
  flow_flags.attach(*flow);

  std::string eval_flow, eval_gt, eval_mask;
  auto* eval = app.add_subcommand("eval", "endpoint error against ground truth");
  eval->add_option("flow", eval_flow)->required();
  eval->add_option("gt", eval_gt)->required();
  auto* mask_opt = eval->add_option("--mask", eval_mask, "non-occlusion mask image");

  std::string sizes_text = "256x128";
  auto* bench = app.add_subcommand("bench", "time F- and Q-mode kernels");
  bench->add_option("--sizes", sizes_text, "comma-separated HxW list");
  bench_flags.attach(*bench);

  std::string dataset, theta_out, loss_out;
  TrainConfig tcfg;
  std::string scheme_text = to_string(tcfg.scheme);
  auto* trainc = app.add_subcommand("train", "train the tiny descriptor extractor");
  trainc->add_option("dataset", dataset)->required();
  trainc->add_option("theta", theta_out, "output THT1 checkpoint")->required();
  trainc->add_option("--loss", loss_out, "loss CSV (default: <theta>.loss.csv)");
  trainc->add_option("--steps", tcfg.steps);
  trainc->add_option("--lr", tcfg.learning_rate);
  trainc->add_option("--scheme", scheme_text, "FF, FQ or QQ");
  trainc->add_option("--k", tcfg.k, "hidden width");
  train_flags.attach(*trainc);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? 0 : 2;
    }

    auto dump_if = [&](const ConfigFlags& f, const RunConfig& cfg) {
      if (f.dump) out << cfg.dump();
    };

    if (*flow) {
      const RunConfig cfg = flow_flags.resolve(RunConfig{});
      dump_if(flow_flags, cfg);
      cmd_flow(img1, img2, cfg, {flo_out, color_out, cfg.trace}, out);
    } else if (*eval) {
      std::optional<std::string> mask;
      if (mask_opt->count() > 0) mask = eval_mask;
      cmd_eval(eval_flow, eval_gt, mask, out);
    } else if (*bench) {
      const RunConfig cfg = bench_flags.resolve(RunConfig{});
      dump_if(bench_flags, cfg);
      cmd_bench(cfg, parse_sizes(sizes_text), out);
    } else if (*trainc) {
      RunConfig base;
      base.D = TrainConfig{}.D;
      const RunConfig cfg = train_flags.resolve(base);
      dump_if(train_flags, cfg);
      apply_threads(cfg);
      tcfg.scheme = parse_grad_scheme(scheme_text);
      tcfg.seed = cfg.seed;
      tcfg.D = cfg.D;
      if (loss_out.empty()) loss_out = theta_out + ".loss.csv";
      cmd_train(dataset, tcfg, theta_out, loss_out, out);
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace sflow::cli
