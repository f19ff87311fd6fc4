#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sflow/costvol.hpp"
#include "sflow/crf.hpp"

namespace sflow {

/// Effective run configuration. Keys of the text form match the field names.
struct RunConfig {
  int D = 128;
  double alpha = 8.5;
  double tau1 = 0.25;
  double tau2 = 25.0;
  int it_inner = 8;
  int it_outer = 5;
  CostMode mode = CostMode::Q;
  VariantSpec variant = VariantSpec::QQ();
  /// census | file:<image1 fdf>,<image2 fdf> | tiny:<theta path>
  std::string descriptor = "census";
  int threads = 0;  // 0: runtime default
  std::uint64_t seed = 0;
  std::string trace;  // empty: no trace file

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  CrfParams crf_params() const;

  /// Applies one key=value assignment. Unknown keys and malformed values throw ConfigError.
  void set(const std::string& key, const std::string& value);
  /// Flat key=value text; '#' starts a comment, blank lines are ignored.
  /// Assignments in `text` override `base`.
  static RunConfig parse(const std::string& text, const RunConfig& base);
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path, const RunConfig& base);
  /// Round-trips through parse().
  std::string dump() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

}  // namespace sflow
