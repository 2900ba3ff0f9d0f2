#include "run_config.hpp"

#include <cmath>

#include <fmt/format.h>

#include "CLI11.hpp"

namespace mbs::cli {

namespace {

template <typename F>
auto wrap(F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError(fmt::format("angles: cannot parse '{}'", text));
  return v;
}

}  // namespace

BellStateKind RunConfig::kind() const {
  return wrap([&] { return kind_from_string(state); });
}

SourceParams RunConfig::source() const {
  if (gamma != kUnset && n_mean != kUnset) throw ConfigError("give exactly one of gamma and n_mean");
  if (gamma != kUnset) {
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    return SourceParams{gamma, schmidt_modes};
  }
  const double n = n_mean == kUnset ? 0.8 : n_mean;
  if (!(n >= 0.0)) throw ConfigError("n_mean must be >= 0");
  return SourceParams::from_mean_photons(n, schmidt_modes);
}

Efficiencies RunConfig::efficiencies() const {
  Efficiencies e{};
  if (eta.size() == 1) {
    e = uniform_efficiency(eta.front());
  } else if (eta.size() == 4) {
    std::copy(eta.begin(), eta.end(), e.begin());
  } else {
    throw ConfigError(fmt::format("eta takes 1 or 4 values, got {}", eta.size()));
  }
  wrap([&] {
    validate_efficiencies(e);
    return 0;
  });
  return e;
}

bool RunConfig::uniform_eta() const {
  const auto e = efficiencies();
  return e[0] == e[1] && e[1] == e[2] && e[2] == e[3];
}

std::vector<double> RunConfig::angle_list() const {
  std::vector<double> out;
  for (const auto& item : angles) {
    const auto first = item.find(':');
    if (first == std::string::npos) {
      out.push_back(parse_double(item));
      continue;
    }
    const auto second = item.find(':', first + 1);
    if (second == std::string::npos) throw ConfigError(fmt::format("angles: range '{}' needs start:stop:step", item));
    const double start = parse_double(item.substr(0, first));
    const double stop = parse_double(item.substr(first + 1, second - first - 1));
    const double step = parse_double(item.substr(second + 1));
    if (!(step > 0.0) || stop < start) throw ConfigError(fmt::format("angles: bad range '{}'", item));
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    if (count > 100000) throw ConfigError("angles: range too long");
    for (long k = 0; k <= count; ++k) out.push_back(start + static_cast<double>(k) * step);
  }
  if (out.empty()) throw ConfigError("angles: empty list");
  return out;
}

closed_form::CurveModel RunConfig::model() const {
  return wrap([&] {
    closed_form::CurveModel m;
    m.kind = kind();
    m.observable = closed_form::observable_from_string(observable);
    if (branch != 1 && branch != -1) throw ConfigError("branch must be +1 or -1");
    m.branch = branch;
    m.base = deg_to_rad(base_deg);
    m.port = closed_form::port_from_string(port);
    closed_form::validate(m);
    return m;
  });
}

fitting::Weighting RunConfig::weighting_mode() const {
  if (weighting == "inverse_variance") return fitting::Weighting::InverseVariance;
  if (weighting == "uniform") return fitting::Weighting::Uniform;
  throw ConfigError(fmt::format("weighting must be inverse_variance or uniform, got '{}'", weighting));
}

void add_options(CLI::App& app, RunConfig& c) {
  app.add_option("--state", c.state, "PhiPlus, PhiMinus, PsiPlus or PsiMinus");
  app.add_option("--gamma", c.gamma, "parametric gain");
  app.add_option("--n_mean", c.n_mean, "mean photons per mode (default 0.8)");
  app.add_option("--eta", c.eta, "detection efficiency, 1 or 4 values")->delimiter(',');
  app.add_option("--schmidt_modes", c.schmidt_modes, "cells per pulse");
  app.add_option("--n_max", c.n_max, "Fock truncation per mode");
  app.add_option("--seed", c.seed);
  app.add_option("--angles", c.angles, "degrees; values or start:stop:step")->delimiter(',');
  app.add_option("--pulses", c.pulses, "pulses per setting or angle");
  app.add_option("--observable", c.observable, "nrf_hwp, var_hwp_pair, var_qwp_triplet, var_qwp_global");
  app.add_option("--branch", c.branch, "+1 or -1");
  app.add_option("--base_deg", c.base_deg, "arm-A plate angle for var_hwp_pair");
  app.add_option("--port", c.port, "transmit or reflect (nrf_hwp)");
  app.add_option("--setting", c.setting, "S1, S2, S3, witness (pulse records) or sweep (curve CSV)");
  app.add_option("--noise_sd", c.noise_sd, "electronic noise per port, counts");
  app.add_option("--resamples", c.resamples, "bootstrap resamples");
  app.add_option("--significance", c.significance, "witness margin in std errors");
  app.add_option("--weighting", c.weighting, "inverse_variance or uniform");
  app.add_option("--configs", c.configs, "random crosscheck configurations");
  app.add_option("--threshold", c.threshold, "crosscheck discrepancy threshold");
  app.add_option("--records", c.records, "pulse record CSV");
  app.add_option("--sweep", c.sweep, "sweep CSV");
  app.add_option("--output", c.output, "output path (default stdout)");
}

void validate(const RunConfig& c) {
  c.kind();
  wrap([&] {
    validate(c.source());
    return 0;
  });
  c.efficiencies();
  c.angle_list();
  c.weighting_mode();
  if (c.schmidt_modes < 1) throw ConfigError("schmidt_modes must be >= 1");
  if (c.n_max < 1) throw ConfigError("n_max must be >= 1");
  if (c.pulses < 0) throw ConfigError("pulses must be >= 0");
  if (c.noise_sd < 0.0) throw ConfigError("noise_sd must be >= 0");
  if (c.resamples < 2) throw ConfigError("resamples must be >= 2");
  if (c.significance != RunConfig::kUnset && c.significance < 0.0) throw ConfigError("significance must be >= 0");
  if (c.configs < 1) throw ConfigError("configs must be >= 1");
  if (!(c.threshold > 0.0)) throw ConfigError("threshold must be > 0");
}

}  // namespace mbs::cli
