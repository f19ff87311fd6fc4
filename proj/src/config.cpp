#include "sflow/config.hpp"

#include <charconv>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sflow/error.hpp"

namespace sflow {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end || value.empty()) {
    throw ConfigError("config: invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ConfigError("config: invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

std::string real_text(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (D <= 0 || D % 2 != 0 || D > 65535) throw ConfigError("config: d must be a positive even integer, got " + std::to_string(D));
  if (!std::isfinite(alpha) || alpha < 0) throw ConfigError("config: alpha must be finite and >= 0");
  if (!std::isfinite(tau1) || !(tau1 > 0)) throw ConfigError("config: tau1 must be finite and > 0");
  if (!std::isfinite(tau2) || !(tau2 > 0)) throw ConfigError("config: tau2 must be finite and > 0");
  if (it_inner < 1) throw ConfigError("config: it_inner must be >= 1");
  if (it_outer < 0) throw ConfigError("config: it_outer must be >= 0");
  if (threads < 0) throw ConfigError("config: threads must be >= 0");
  const bool known = descriptor == "census" || descriptor.rfind("file:", 0) == 0 || descriptor.rfind("tiny:", 0) == 0;
  if (!known) throw ConfigError("config: descriptor must be census, file:<a>,<b> or tiny:<theta>, got '" + descriptor + "'");
  if (descriptor.rfind("file:", 0) == 0 && descriptor.find(',') == std::string::npos) {
    throw ConfigError("config: descriptor file: needs two paths separated by ','");
  }
}

CrfParams RunConfig::crf_params() const {
  CrfParams p;
  p.alpha = alpha;
  p.penalty = {tau1, tau2};
  p.D = D;
  p.it_inner = it_inner;
  p.it_outer = it_outer;
  p.mode = mode;
  return p;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "d") D = parse_number<int>(key, value);
  else if (key == "alpha") alpha = parse_real(key, value);
  else if (key == "tau1") tau1 = parse_real(key, value);
  else if (key == "tau2") tau2 = parse_real(key, value);
  else if (key == "it_inner") it_inner = parse_number<int>(key, value);
  else if (key == "it_outer") it_outer = parse_number<int>(key, value);
  else if (key == "mode") {
    try { mode = parse_cost_mode(value); } catch (const Error&) { throw ConfigError("config: invalid value for mode: '" + value + "'"); }
  } else if (key == "variant") {
    try { variant = VariantSpec::parse(value); } catch (const Error&) { throw ConfigError("config: invalid value for variant: '" + value + "'"); }
  } else if (key == "descriptor") descriptor = value;
  else if (key == "threads") threads = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "trace") trace = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig RunConfig::parse(const std::string& text, const RunConfig& base) {
  RunConfig cfg = base;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::parse(const std::string& text) { return parse(text, RunConfig{}); }

RunConfig RunConfig::load(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), base);
}

std::string RunConfig::dump() const {
  std::ostringstream out;
  out << "d=" << D << '\n'
      << "alpha=" << real_text(alpha) << '\n'
      << "tau1=" << real_text(tau1) << '\n'
      << "tau2=" << real_text(tau2) << '\n'
      << "it_inner=" << it_inner << '\n'
      << "it_outer=" << it_outer << '\n'
      << "mode=" << to_string(mode) << '\n'
      << "variant=" << variant.name() << '\n'
      << "descriptor=" << descriptor << '\n'
      << "threads=" << threads << '\n'
      << "seed=" << seed << '\n'
      << "trace=" << trace << '\n';
  return out.str();
}

}  // namespace sflow
