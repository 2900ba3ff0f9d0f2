#pragma once

// Pulse-level simulation of the detection chain: per pulse, `schmidt_modes`
// independent cells are drawn from the exact single-cell photon-number law
// behind the analyzers, summed, thinned by the detection efficiency and
// optionally blurred by additive electronic noise.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mbs/bootstrap.hpp"
#include "mbs/closed_form.hpp"
#include "mbs/fock_oracle.hpp"
#include "mbs/modes.hpp"

namespace mbs::mc {

inline constexpr int kDeskScaleModes = 1250;
inline constexpr double kMaxCellDeficit = 1e-9;

/// Detected photon numbers at (A transmit, A reflect, B transmit, B reflect).
struct PulseRecord {
  std::string setting_id;
  std::array<std::int64_t, 4> counts{};
};

struct MeasurementSetting {
  std::string id;
  ArmSettings plates;
};

/// "S1", "S2" or "S3": both arms analyzed in the given Stokes basis.
MeasurementSetting stokes_setting(int component);
std::vector<MeasurementSetting> witness_settings();

struct DetectionModel {
  Efficiencies eta = uniform_efficiency(1.0);
  double electronic_noise_sd = 0.0;  // counts, per port
};

/// Walker alias table over a single-cell number distribution.
class CellSampler {
 public:
  explicit CellSampler(const fock::NumberDistribution& dist);

  const fock::Occupation& draw(Rng& rng) const;
  std::size_t size() const { return outcomes_.size(); }

 private:
  std::vector<fock::Occupation> outcomes_;
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
};

/// Single-cell sampler behind the analyzers of `setting`; rejects truncations
/// whose deficit exceeds kMaxCellDeficit.
CellSampler make_cell_sampler(BellStateKind kind, const SourceParams& params, const ArmSettings& setting,
                              int n_max = fock::kDefaultNMax);

std::vector<PulseRecord> sample_pulses(BellStateKind kind, const SourceParams& params,
                                       const MeasurementSetting& setting, const DetectionModel& detection, int pulses,
                                       std::uint64_t seed, int n_max = fock::kDefaultNMax);

/// Sampling kernel; pulse p uses random stream p of `seed`.
std::vector<PulseRecord> sample_pulses(const CellSampler& sampler, const std::string& setting_id, int cells,
                                       const DetectionModel& detection, int pulses, std::uint64_t seed);

/// Independent coherent beams with the given Jones vectors and mean photon
/// number per arm; a separable reference source. A zero Jones vector leaves
/// that arm dark.
std::vector<PulseRecord> sample_coherent_pulses(const std::array<Complex, 2>& jones_a,
                                                const std::array<Complex, 2>& jones_b, double mean_photons_per_arm,
                                                const MeasurementSetting& setting, const DetectionModel& detection,
                                                int pulses, std::uint64_t seed);

/// Shot-noise calibration: Poissonian pulses on a balanced port pair;
/// returns Var(N1 - N2) / <N1 + N2>.
double snl_calibrate(double mean_photons_per_pulse, int pulses, std::uint64_t seed);

struct EstimateOptions {
  double snl_factor = 1.0;
  int resamples = 1000;
  std::uint64_t seed = 1;
};

struct NrfEstimate {
  double value = 0.0;
  double std_err = 0.0;
  int pulses = 0;
  bool degenerate = false;  // zero sample variance
};

/// Ports are indexed 0..3 as (a_t, a_r, b_t, b_r).
int port_index(std::string_view name);

NrfEstimate estimate_nrf(std::span<const PulseRecord> records, int port_i, int port_j,
                         const EstimateOptions& options = {});

/// Sample Var(w . N) / mean(norm . N), bootstrap error.
NrfEstimate estimate_readout(std::span<const PulseRecord> records, const Readout& readout,
                             const EstimateOptions& options = {});

struct SweepPoint {
  double angle_deg = 0.0;
  NrfEstimate estimate;
};

std::vector<SweepPoint> sweep_curve(const closed_form::CurveModel& model, std::span<const double> angles_deg,
                                    const SourceParams& params, const DetectionModel& detection, int pulses_per_point,
                                    std::uint64_t seed, const EstimateOptions& options = {},
                                    int n_max = fock::kDefaultNMax);

namespace serial {
std::vector<PulseRecord> sample_pulses(const CellSampler& sampler, const std::string& setting_id, int cells,
                                       const DetectionModel& detection, int pulses, std::uint64_t seed);
}  // namespace serial

}  // namespace mbs::mc
