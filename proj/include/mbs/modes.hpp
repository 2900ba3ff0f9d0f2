#pragma once

#include <array>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mbs {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;

/// Raised when an NRF is requested for modes with zero mean photon number.
class UndefinedNrfError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Arm { A, B };  // A: 635 nm arm, B: 805 nm arm
enum class Pol { H, V };

struct ModeId {
  Arm arm;
  Pol pol;

  /// Position in the canonical order (AH, AV, BH, BV).
  constexpr int index() const { return (arm == Arm::B ? 2 : 0) + (pol == Pol::V ? 1 : 0); }
  friend constexpr bool operator==(ModeId, ModeId) = default;
};

inline constexpr ModeId kAH{Arm::A, Pol::H};
inline constexpr ModeId kAV{Arm::A, Pol::V};
inline constexpr ModeId kBH{Arm::B, Pol::H};
inline constexpr ModeId kBV{Arm::B, Pol::V};
inline constexpr std::array<ModeId, 4> kModes{kAH, kAV, kBH, kBV};

std::string to_string(ModeId mode);
ModeId mode_from_string(std::string_view text);

/// Per-mode detection efficiencies in canonical order. After an analyzer the
/// H slot of an arm is its transmitted port and the V slot its reflected port.
using Efficiencies = std::array<double, 4>;

inline Efficiencies uniform_efficiency(double eta) { return {eta, eta, eta, eta}; }
void validate_efficiencies(const Efficiencies& eta);

struct SourceParams {
  double gamma = 0.0;     // parametric gain
  int schmidt_modes = 1;  // independent four-mode cells per pulse

  double mean_photons() const;  // sinh^2(gamma), per mode and cell
  static SourceParams from_mean_photons(double n_mean, int schmidt_modes = 1);
};
void validate(const SourceParams& params);

enum class BellStateKind { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

inline constexpr std::array<BellStateKind, 4> kKinds{BellStateKind::PhiPlus, BellStateKind::PhiMinus,
                                                     BellStateKind::PsiPlus, BellStateKind::PsiMinus};

constexpr bool is_phi(BellStateKind k) { return k == BellStateKind::PhiPlus || k == BellStateKind::PhiMinus; }
/// The +-1 base of the (+-1)^m factor in the state coefficients.
constexpr int coefficient_sign(BellStateKind k) {
  return (k == BellStateKind::PhiPlus || k == BellStateKind::PsiPlus) ? 1 : -1;
}
/// Arm-B partner of an arm-A mode in the photon-number pairing of the state.
ModeId paired_mode(BellStateKind kind, Pol arm_a_pol);

std::string to_string(BellStateKind kind);
BellStateKind kind_from_string(std::string_view text);

enum class PlateKind { Half, Quarter };

struct WavePlate {
  PlateKind kind = PlateKind::Half;
  double angle = 0.0;  // fast axis from H, radians, reduced to [0, pi)
  Arm arm = Arm::A;

  static WavePlate half(double angle, Arm arm);
  static WavePlate quarter(double angle, Arm arm);
};

/// Plates in light-propagation order, followed by a polarizing splitter
/// (transmit = H, reflect = V).
struct AnalyzerSetting {
  Arm arm = Arm::A;
  std::vector<WavePlate> plates;
};

struct ArmSettings {
  AnalyzerSetting a{Arm::A, {}};
  AnalyzerSetting b{Arm::B, {}};
};

/// Jones matrix acting on (H, V) amplitudes.
///   Half(t)    = [[cos 2t, sin 2t], [sin 2t, -cos 2t]]
///   Quarter(t) = R(t) diag(1, i) R(-t)
Mat2 jones_matrix(const WavePlate& plate);

/// Product of the plate matrices in application order; throws if a plate
/// belongs to the other arm.
Mat2 compose_analyzer(const AnalyzerSetting& setting);

bool is_unitary(const Mat2& u, double tol);

struct PortReading {
  double s0;
  double s;
};
PortReading stokes_from_port_numbers(double n_transmit, double n_reflect);

/// Analyzer unitary whose transmit-minus-reflect reading is the Stokes
/// component 1 (H/V), 2 (diagonal, HWP at 22.5 deg) or 3 (circular, QWP at 45 deg).
Mat2 stokes_basis(int component);

/// Analyzer unitary reading u1*S1 + u2*S2 + u3*S3 for a unit vector u.
Mat2 analyzer_for_direction(const std::array<double, 3>& u);

/// First and second moments of the four port photon numbers.
struct PhotonMoments {
  std::array<double, 4> mean{};
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  double deficit = 0.0;  // truncated probability mass, if any
};

/// Var(w . N) / (norm . <N>).
struct Readout {
  std::array<double, 4> weights{};
  std::array<double, 4> norm{};

  static Readout nrf(ModeId i, ModeId j);
  /// Var(S^a + sign S^b) / <S0^a + S0^b> with S = transmit - reflect.
  static Readout stokes_pair(int sign);

  double evaluate(const PhotonMoments& m) const;
};

/// Var(N_i - N_j) / <N_i + N_j>.
double nrf(const PhotonMoments& m, ModeId i, ModeId j);

/// Stokes vector (S0..S3 arm A, S0..S3 arm B) moments.
///
/// Entries between different Stokes components of one arm are symmetrized
/// covariances, obtained from the variance along the bisecting polarization
/// direction: Cov(Si, Sk) = Var((Si + Sk)/sqrt2) - (Var Si + Var Sk)/2.
struct StokesMoments {
  std::array<double, 8> mean{};
  Eigen::Matrix<double, 8, 8> cov = Eigen::Matrix<double, 8, 8>::Zero();
  double deficit = 0.0;

  static constexpr int index(Arm arm, int component) { return (arm == Arm::B ? 4 : 0) + component; }
  /// Var(S_k^a + sign * S_k^b).
  double var_combination(int component, int sign) const;
  double total_s0() const { return mean[0] + mean[4]; }
};

/// Measures port moments with analyzer unitaries (arm A, arm B).
using PortMeasurement = std::function<PhotonMoments(const Mat2&, const Mat2&)>;

/// Runs the twelve joint basis measurements needed for a full StokesMoments,
/// after the plates in `settings`.
StokesMoments assemble_stokes_moments(const PortMeasurement& measure, const ArmSettings& settings);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace mbs
