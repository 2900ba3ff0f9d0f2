#pragma once

// Exact reference engine over a truncated Fock basis.
//
// A state is stored per photon-number sector (na, nb): a dense block indexed
// by (n_AH, n_BH); the vertical occupations follow from the arm totals.
// Local passive optics never mix sectors, so every kernel here works sector
// by sector.

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mbs/modes.hpp"

namespace mbs::fock {

using Occupation = std::array<int, 4>;  // (n_AH, n_AV, n_BH, n_BV)

inline constexpr int kDefaultNMax = 40;
inline constexpr double kDeficitWarning = 1e-6;

struct SectorBlock {
  int na = 0;
  int nb = 0;
  Eigen::MatrixXcd amp;  // amp(n_AH, n_BH)
};

struct FockState {
  std::vector<SectorBlock> sectors;
  int n_max = 0;
  double norm_deficit = 0.0;

  Complex amplitude(const Occupation& occ) const;
  double norm_squared() const;
};

struct NumberDistribution {
  std::vector<std::pair<Occupation, double>> entries;  // sorted by occupation
  double deficit = 0.0;

  double probability(const Occupation& occ) const;
  double total() const;
};

/// A_nm = sinh^n / cosh^(n+2) * (+-1)^m.
Complex coefficient(BellStateKind kind, int n, int m, double gamma);

/// Probability outside the retained sectors n <= n_max.
double truncation_deficit(double gamma, int n_max);

/// Smallest n_max whose tail contribution to second moments of the per-arm
/// totals stays below `tol`.
int recommended_n_max(double gamma, double tol = 1e-12);

FockState build_state(BellStateKind kind, const SourceParams& params, int n_max = kDefaultNMax);

/// Matrices of the linear-optics map on each n-photon sector of one arm.
/// Column k is the image of |k, n-k>; built by repeated creation-operator
/// action, which stays stable for large n.
std::vector<Eigen::MatrixXcd> sector_maps(const Mat2& u, int n_max);

/// a+_H -> U11 a+_H' + U21 a+_V',  a+_V -> U12 a+_H' + U22 a+_V' on `arm`.
FockState apply_arm_unitary(const FockState& state, Arm arm, const Mat2& u);

NumberDistribution number_distribution(const FockState& state);

/// Independent binomial thinning of every mode.
NumberDistribution apply_loss(const NumberDistribution& dist, const Efficiencies& eta);

PhotonMoments moments(const NumberDistribution& dist);

/// Moments of apply_loss(dist, eta) through the factorial-moment identities
/// of binomial thinning, without expanding the distribution.
PhotonMoments moments_after_loss(const NumberDistribution& dist, const Efficiencies& eta);

double nrf(const NumberDistribution& dist, ModeId i, ModeId j);

/// Port moments after analyzers `ua`, `ub` and detection efficiencies `eta`.
PhotonMoments measure(const FockState& state, const Mat2& ua, const Mat2& ub, const Efficiencies& eta);

StokesMoments stokes_moments(const FockState& state, const ArmSettings& settings, const Efficiencies& eta);

/// <a+_i a_j> and <a_i a_j> evaluated from the amplitudes.
struct Correlators {
  Eigen::Matrix4cd normal = Eigen::Matrix4cd::Zero();
  Eigen::Matrix4cd anomalous = Eigen::Matrix4cd::Zero();
};
Correlators correlators(const FockState& state);

namespace serial {
FockState apply_arm_unitary(const FockState& state, Arm arm, const Mat2& u);
NumberDistribution apply_loss(const NumberDistribution& dist, const Efficiencies& eta);
}  // namespace serial

}  // namespace mbs::fock
