#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbs/closed_form.hpp"
#include "mbs/fitting.hpp"
#include "mbs/fock_oracle.hpp"
#include "mbs/modes.hpp"
#include "mbs/montecarlo.hpp"

namespace CLI {
class App;
}

namespace mbs::cli {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat run configuration; every field is a `key=value` line in a config
/// file and a `--key` flag on the command line.
struct RunConfig {
  std::string state = "PhiMinus";
  double gamma = kUnset;
  double n_mean = kUnset;  // 0.8 when neither gamma nor n_mean is given
  std::vector<double> eta{0.4};  // one value or four (AH AV BH BV)
  int schmidt_modes = mc::kDeskScaleModes;
  int n_max = fock::kDefaultNMax;
  std::uint64_t seed = 1;
  std::vector<std::string> angles{"0:180:15"};  // degrees; items are values or start:stop:step
  int pulses = 10000;

  std::string observable = "nrf_hwp";
  int branch = 1;
  double base_deg = 0.0;
  std::string port = "reflect";

  std::string setting = "witness";  // simulate: S1, S2, S3, witness or sweep
  double noise_sd = 0.0;
  int resamples = 1000;
  double significance = kUnset;
  std::string weighting = "inverse_variance";
  int configs = 20;
  double threshold = 1e-8;

  std::string records;
  std::string sweep;
  std::string output;

  static constexpr double kUnset = -1.0;

  BellStateKind kind() const;
  SourceParams source() const;
  Efficiencies efficiencies() const;
  bool uniform_eta() const;
  std::vector<double> angle_list() const;
  closed_form::CurveModel model() const;
  fitting::Weighting weighting_mode() const;
};

/// Registers every RunConfig field as an option of `app`.
void add_options(CLI::App& app, RunConfig& config);

/// Throws ConfigError on the first invalid field.
void validate(const RunConfig& config);

}  // namespace mbs::cli
