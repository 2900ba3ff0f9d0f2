#include "mbs/montecarlo.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace mbs::mc {

namespace {

std::int64_t thin(std::int64_t n, double eta, Rng& rng) {
  if (eta >= 1.0 || n == 0) return n;
  if (eta <= 0.0) return 0;
  return std::binomial_distribution<std::int64_t>(n, eta)(rng);
}

void add_noise(std::array<std::int64_t, 4>& counts, double sd, Rng& rng) {
  if (sd <= 0.0) return;
  std::normal_distribution<double> noise(0.0, sd);
  for (auto& c : counts) c = std::max<std::int64_t>(0, c + std::llround(noise(rng)));
}

PulseRecord simulate_pulse(const CellSampler& sampler, const std::string& id, int cells,
                           const DetectionModel& detection, std::uint64_t seed, int pulse) {
  Rng rng = make_stream(seed, static_cast<std::uint64_t>(pulse));
  std::array<std::int64_t, 4> photons{};
  for (int c = 0; c < cells; ++c) {
    const auto& occ = sampler.draw(rng);
    for (int m = 0; m < 4; ++m) photons[m] += occ[m];
  }
  PulseRecord rec{id, {}};
  for (int m = 0; m < 4; ++m) rec.counts[m] = thin(photons[m], detection.eta[m], rng);
  add_noise(rec.counts, detection.electronic_noise_sd, rng);
  return rec;
}

void check_run(const DetectionModel& detection, int cells, int pulses) {
  validate_efficiencies(detection.eta);
  if (cells < 1) throw std::invalid_argument("number of Schmidt modes must be >= 1");
  if (pulses < 1) throw std::invalid_argument("number of pulses must be >= 1");
  if (detection.electronic_noise_sd < 0.0) throw std::invalid_argument("electronic noise sd must be >= 0");
}

template <bool Parallel>
std::vector<PulseRecord> sample_impl(const CellSampler& sampler, const std::string& id, int cells,
                                     const DetectionModel& detection, int pulses, std::uint64_t seed) {
  check_run(detection, cells, pulses);
  std::vector<PulseRecord> out(static_cast<std::size_t>(pulses));
  if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < pulses; ++p) out[static_cast<std::size_t>(p)] = simulate_pulse(sampler, id, cells, detection, seed, p);
  } else {
    for (int p = 0; p < pulses; ++p) out[static_cast<std::size_t>(p)] = simulate_pulse(sampler, id, cells, detection, seed, p);
  }
  return out;
}

double variance(std::span<const double> x, const std::vector<std::size_t>* idx) {
  const std::size_t n = idx ? idx->size() : x.size();
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += x[idx ? (*idx)[k] : k];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[idx ? (*idx)[k] : k] - mean;
    ss += d * d;
  }
  return ss / static_cast<double>(n - 1);
}

double mean_of(std::span<const double> x, const std::vector<std::size_t>* idx) {
  const std::size_t n = idx ? idx->size() : x.size();
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += x[idx ? (*idx)[k] : k];
  return s / static_cast<double>(n);
}

}  // namespace

MeasurementSetting stokes_setting(int component) {
  MeasurementSetting s;
  s.id = fmt::format("S{}", component);
  switch (component) {
    case 1: break;
    case 2:
      s.plates.a.plates = {WavePlate::half(std::numbers::pi / 8, Arm::A)};
      s.plates.b.plates = {WavePlate::half(std::numbers::pi / 8, Arm::B)};
      break;
    case 3:
      s.plates.a.plates = {WavePlate::quarter(std::numbers::pi / 4, Arm::A)};
      s.plates.b.plates = {WavePlate::quarter(std::numbers::pi / 4, Arm::B)};
      break;
    default: throw std::invalid_argument(fmt::format("Stokes component {} not in 1..3", component));
  }
  return s;
}

std::vector<MeasurementSetting> witness_settings() { return {stokes_setting(1), stokes_setting(2), stokes_setting(3)}; }

CellSampler::CellSampler(const fock::NumberDistribution& dist) {
  const std::size_t k = dist.entries.size();
  if (k == 0) throw std::invalid_argument("cannot sample from an empty distribution");
  const double total = dist.total();
  outcomes_.reserve(k);
  std::vector<double> scaled(k);
  for (std::size_t i = 0; i < k; ++i) {
    outcomes_.push_back(dist.entries[i].first);
    scaled[i] = dist.entries[i].second / total * static_cast<double>(k);
  }
  accept_.assign(k, 1.0);
  alias_.resize(k);
  for (std::size_t i = 0; i < k; ++i) alias_[i] = static_cast<std::uint32_t>(i);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < k; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back(), l = large.back();
    small.pop_back();
    accept_[s] = scaled[s];
    alias_[s] = static_cast<std::uint32_t>(l);
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
}

const fock::Occupation& CellSampler::draw(Rng& rng) const {
  const std::uint64_t r = rng();
  const auto column = static_cast<std::size_t>((static_cast<unsigned __int128>(r) * outcomes_.size()) >> 64);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return outcomes_[u < accept_[column] ? column : alias_[column]];
}

CellSampler make_cell_sampler(BellStateKind kind, const SourceParams& params, const ArmSettings& setting, int n_max) {
  fock::FockState state = fock::build_state(kind, params, n_max);
  if (state.norm_deficit > kMaxCellDeficit) {
    throw std::invalid_argument(fmt::format("cell truncation deficit {:.3g} at n_max={} exceeds {:g}",
                                            state.norm_deficit, n_max, kMaxCellDeficit));
  }
  state = fock::apply_arm_unitary(state, Arm::A, compose_analyzer(setting.a));
  state = fock::apply_arm_unitary(state, Arm::B, compose_analyzer(setting.b));
  return CellSampler(fock::number_distribution(state));
}

std::vector<PulseRecord> sample_pulses(BellStateKind kind, const SourceParams& params,
                                       const MeasurementSetting& setting, const DetectionModel& detection, int pulses,
                                       std::uint64_t seed, int n_max) {
  validate(params);
  check_run(detection, params.schmidt_modes, pulses);
  const CellSampler sampler = make_cell_sampler(kind, params, setting.plates, n_max);
  return sample_pulses(sampler, setting.id, params.schmidt_modes, detection, pulses, seed);
}

std::vector<PulseRecord> sample_pulses(const CellSampler& sampler, const std::string& setting_id, int cells,
                                       const DetectionModel& detection, int pulses, std::uint64_t seed) {
  return sample_impl<true>(sampler, setting_id, cells, detection, pulses, seed);
}

std::vector<PulseRecord> sample_coherent_pulses(const std::array<Complex, 2>& jones_a,
                                                const std::array<Complex, 2>& jones_b, double mean_photons_per_arm,
                                                const MeasurementSetting& setting, const DetectionModel& detection,
                                                int pulses, std::uint64_t seed) {
  check_run(detection, 1, pulses);
  if (!(mean_photons_per_arm >= 0.0)) throw std::invalid_argument("mean photon number must be >= 0");
  std::array<double, 4> port_mean{};
  for (Arm arm : {Arm::A, Arm::B}) {
    const auto& j = arm == Arm::A ? jones_a : jones_b;
    Eigen::Vector2cd v(j[0], j[1]);
    if (v.norm() == 0.0) continue;  // dark arm
    v.normalize();
    const Eigen::Vector2cd out = compose_analyzer(arm == Arm::A ? setting.plates.a : setting.plates.b) * v;
    const int off = arm == Arm::A ? 0 : 2;
    port_mean[off] = mean_photons_per_arm * std::norm(out(0));
    port_mean[off + 1] = mean_photons_per_arm * std::norm(out(1));
  }
  std::vector<PulseRecord> out(static_cast<std::size_t>(pulses));
#pragma omp parallel for schedule(static)
  for (int p = 0; p < pulses; ++p) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(p));
    PulseRecord rec{setting.id, {}};
    for (int m = 0; m < 4; ++m) {
      const std::int64_t n = port_mean[m] > 0 ? std::poisson_distribution<std::int64_t>(port_mean[m])(rng) : 0;
      rec.counts[m] = thin(n, detection.eta[m], rng);
    }
    add_noise(rec.counts, detection.electronic_noise_sd, rng);
    out[static_cast<std::size_t>(p)] = std::move(rec);
  }
  return out;
}

double snl_calibrate(double mean_photons_per_pulse, int pulses, std::uint64_t seed) {
  if (!(mean_photons_per_pulse > 0.0)) throw std::invalid_argument("SNL calibration needs a positive mean photon number");
  if (pulses < 2) throw std::invalid_argument("SNL calibration needs at least 2 pulses");
  MeasurementSetting balanced{"snl", {}};
  // A diagonal coherent beam splits evenly on the polarizing splitter.
  const double r = 1.0 / std::sqrt(2.0);
  const auto records = sample_coherent_pulses({r, r}, {0.0, 0.0}, mean_photons_per_pulse, balanced, DetectionModel{},
                                              pulses, seed);
  std::vector<double> diff(records.size()), sum(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    diff[k] = static_cast<double>(records[k].counts[0] - records[k].counts[1]);
    sum[k] = static_cast<double>(records[k].counts[0] + records[k].counts[1]);
  }
  return variance(diff, nullptr) / mean_of(sum, nullptr);
}

int port_index(std::string_view name) {
  static constexpr std::array<std::string_view, 4> kNames{"a_t", "a_r", "b_t", "b_r"};
  for (int i = 0; i < 4; ++i) {
    if (kNames[i] == name) return i;
  }
  throw std::invalid_argument(fmt::format("unknown port '{}' (expected a_t, a_r, b_t or b_r)", name));
}

NrfEstimate estimate_nrf(std::span<const PulseRecord> records, int port_i, int port_j,
                         const EstimateOptions& options) {
  if (port_i < 0 || port_i > 3 || port_j < 0 || port_j > 3 || port_i == port_j) {
    throw std::invalid_argument("NRF needs two distinct ports in 0..3");
  }
  return estimate_readout(records, Readout::nrf(kModes[port_i], kModes[port_j]), options);
}

NrfEstimate estimate_readout(std::span<const PulseRecord> records, const Readout& readout,
                             const EstimateOptions& options) {
  if (records.size() < 2) throw std::invalid_argument("estimate needs at least 2 pulse records");
  if (!(options.snl_factor > 0.0)) throw std::invalid_argument("SNL factor must be positive");
  std::vector<double> x(records.size()), y(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    double xv = 0.0, yv = 0.0;
    for (int m = 0; m < 4; ++m) {
      xv += readout.weights[m] * static_cast<double>(records[k].counts[m]);
      yv += readout.norm[m] * static_cast<double>(records[k].counts[m]);
    }
    x[k] = xv;
    y[k] = yv;
  }
  const double norm = mean_of(y, nullptr);
  if (!(norm > 0.0)) throw UndefinedNrfError("mean normalizing photon number of the records is zero");

  NrfEstimate est;
  est.pulses = static_cast<int>(records.size());
  const double var = variance(x, nullptr);
  est.value = var / norm / options.snl_factor;
  est.degenerate = var == 0.0;
  const std::array<std::size_t, 1> groups{records.size()};
  est.std_err = bootstrap_std_err(groups, options.resamples, options.seed, [&](const ResampleIndices& idx) {
    const double m = mean_of(y, &idx[0]);
    return m > 0.0 ? variance(x, &idx[0]) / m / options.snl_factor : 0.0;
  });
  return est;
}

std::vector<SweepPoint> sweep_curve(const closed_form::CurveModel& model, std::span<const double> angles_deg,
                                    const SourceParams& params, const DetectionModel& detection, int pulses_per_point,
                                    std::uint64_t seed, const EstimateOptions& options, int n_max) {
  if (angles_deg.empty()) throw std::invalid_argument("sweep needs at least one angle");
  closed_form::validate(model);
  std::vector<SweepPoint> out;
  out.reserve(angles_deg.size());
  for (std::size_t k = 0; k < angles_deg.size(); ++k) {
    const auto geo = closed_form::geometry(model, deg_to_rad(angles_deg[k]));
    const MeasurementSetting setting{fmt::format("{:.12g}", angles_deg[k]), geo.settings};
    const auto records =
        sample_pulses(model.kind, params, setting, detection, pulses_per_point, stream_seed(seed, k), n_max);
    EstimateOptions opts = options;
    opts.seed = stream_seed(options.seed, k);
    out.push_back({angles_deg[k], estimate_readout(records, geo.readout, opts)});
  }
  return out;
}

namespace serial {

std::vector<PulseRecord> sample_pulses(const CellSampler& sampler, const std::string& setting_id, int cells,
                                       const DetectionModel& detection, int pulses, std::uint64_t seed) {
  return sample_impl<false>(sampler, setting_id, cells, detection, pulses, seed);
}

}  // namespace serial

}  // namespace mbs::mc
