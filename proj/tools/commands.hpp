#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sflow/config.hpp"
#include "sflow/image.hpp"
#include "sflow/learn.hpp"

namespace sflow::cli {

struct FlowOutputs {
  std::string flo;
  std::string color;
  std::string trace;  // empty: none
};

struct FlowTimings {
  double features = 0.0;
  double wta = 0.0;
  double full_model = 0.0;
};

/// it_outer = 0 writes the WTA flow of the configured variant; otherwise the CRF flow.
FlowTimings cmd_flow(const std::string& image1, const std::string& image2, const RunConfig& config,
                     const FlowOutputs& outputs, std::ostream& log);

/// Prints "noc (all)" as "%.2f (%.2f)". Without a mask noc equals all.
EpeStats cmd_eval(const std::string& flow, const std::string& gt, const std::optional<std::string>& mask,
                  std::ostream& out);

struct BenchRow {
  std::string kernel;
  int height = 0;
  int width = 0;
  int D = 0;
  double seconds = 0.0;
  double speedup = 1.0;
};

/// Times F- and Q-mode min-projection and the cross-plane pass on synthetic fields and
/// writes CSV "kernel,H,W,D,seconds,speedup". Q rows report time_F / time_Q.
/// Throws NumericError if F and Q disagree on the WTA of the same quantized input.
std::vector<BenchRow> cmd_bench(const RunConfig& config, const std::vector<std::pair<int, int>>& sizes,
                                std::ostream& csv);

/// Parses "HxW,HxW,...". Empty text gives an empty list.
std::vector<std::pair<int, int>> parse_sizes(const std::string& text);

/// Samples are the subdirectories of `dataset` in name order, each with img1.ppm, img2.ppm, gt.flo.
/// Writes the THT1 checkpoint to `theta_out` and the loss trace to `loss_csv`.
TrainResult cmd_train(const std::string& dataset, const TrainConfig& config, const std::string& theta_out,
                      const std::string& loss_csv, std::ostream& log);

/// Full command line front end. Returns the process exit status (0, 2, 3 or 4).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sflow::cli
