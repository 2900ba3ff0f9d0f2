#pragma once

#include <Eigen/Dense>

#include "mbs/modes.hpp"

namespace mbs::gaussian {

/// Zero-mean four-mode Gaussian state of one Schmidt cell.
struct GaussianState {
  Eigen::Matrix4cd normal = Eigen::Matrix4cd::Zero();     // <a+_i a_j>
  Eigen::Matrix4cd anomalous = Eigen::Matrix4cd::Zero();  // <a_i a_j>
};

GaussianState build_gaussian(BellStateKind kind, const SourceParams& params);

/// Heisenberg update a -> U a on the two modes of `arm`.
GaussianState apply_passive(const GaussianState& state, Arm arm, const Mat2& u);

GaussianState apply_loss(const GaussianState& state, const Efficiencies& eta);

/// Checks the bosonic uncertainty bound: [[1 + N^T, M], [M*, N]] >= 0.
bool is_physical(const GaussianState& state, double tol = 1e-10);

PhotonMoments photon_moments(const GaussianState& state);

/// Per-pulse moments of `cells` independent identical cells.
PhotonMoments scale_cells(PhotonMoments single, int cells);

PhotonMoments measure(const GaussianState& state, const Mat2& ua, const Mat2& ub, const Efficiencies& eta);

StokesMoments stokes_moments(const GaussianState& state, const ArmSettings& settings, const Efficiencies& eta);

}  // namespace mbs::gaussian
