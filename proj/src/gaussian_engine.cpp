#include "mbs/gaussian_engine.hpp"

#include <cmath>

namespace mbs::gaussian {

namespace {

Eigen::Matrix4cd embed(Arm arm, const Mat2& u) {
  Eigen::Matrix4cd v = Eigen::Matrix4cd::Identity();
  const int off = arm == Arm::A ? 0 : 2;
  v.block<2, 2>(off, off) = u;
  return v;
}

}  // namespace

GaussianState build_gaussian(BellStateKind kind, const SourceParams& params) {
  validate(params);
  const double s = std::sinh(params.gamma), c = std::cosh(params.gamma);
  GaussianState g;
  for (int i = 0; i < 4; ++i) g.normal(i, i) = s * s;
  // The pair carrying n-m photons has amplitude sign +1, the pair carrying m
  // photons picks up the (+-1)^m factor.
  const int h_partner = paired_mode(kind, Pol::H).index();
  const int v_partner = paired_mode(kind, Pol::V).index();
  const double sc = s * c;
  g.anomalous(kAH.index(), h_partner) = g.anomalous(h_partner, kAH.index()) = sc;
  g.anomalous(kAV.index(), v_partner) = g.anomalous(v_partner, kAV.index()) = coefficient_sign(kind) * sc;
  return g;
}

GaussianState apply_passive(const GaussianState& state, Arm arm, const Mat2& u) {
  if (!is_unitary(u, 1e-10)) throw std::invalid_argument("analyzer matrix is not unitary");
  const Eigen::Matrix4cd v = embed(arm, u);
  GaussianState out;
  out.normal = v.conjugate() * state.normal * v.transpose();
  out.anomalous = v * state.anomalous * v.transpose();
  return out;
}

GaussianState apply_loss(const GaussianState& state, const Efficiencies& eta) {
  validate_efficiencies(eta);
  Eigen::Matrix4d scale;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) scale(i, j) = std::sqrt(eta[i] * eta[j]);
  GaussianState out;
  out.normal = state.normal.cwiseProduct(scale.cast<Complex>());
  out.anomalous = state.anomalous.cwiseProduct(scale.cast<Complex>());
  return out;
}

bool is_physical(const GaussianState& state, double tol) {
  Eigen::Matrix<Complex, 8, 8> g;
  g.block<4, 4>(0, 0) = Eigen::Matrix4cd::Identity() + state.normal.transpose();
  g.block<4, 4>(0, 4) = state.anomalous;
  g.block<4, 4>(4, 0) = state.anomalous.conjugate();
  g.block<4, 4>(4, 4) = state.normal;
  if ((g - g.adjoint()).norm() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Complex, 8, 8>> eig(g, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

PhotonMoments photon_moments(const GaussianState& state) {
  PhotonMoments m;
  for (int i = 0; i < 4; ++i) m.mean[i] = state.normal(i, i).real();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      m.cov(i, j) = std::norm(state.normal(i, j)) + std::norm(state.anomalous(i, j));
    }
    m.cov(i, i) += m.mean[i];
  }
  return m;
}

PhotonMoments scale_cells(PhotonMoments single, int cells) {
  if (cells < 1) throw std::invalid_argument("cell count must be >= 1");
  for (double& v : single.mean) v *= cells;
  single.cov *= static_cast<double>(cells);
  return single;
}

PhotonMoments measure(const GaussianState& state, const Mat2& ua, const Mat2& ub, const Efficiencies& eta) {
  return photon_moments(apply_loss(apply_passive(apply_passive(state, Arm::A, ua), Arm::B, ub), eta));
}

StokesMoments stokes_moments(const GaussianState& state, const ArmSettings& settings, const Efficiencies& eta) {
  validate_efficiencies(eta);
  return assemble_stokes_moments([&](const Mat2& ua, const Mat2& ub) { return measure(state, ua, ub, eta); },
                                 settings);
}

}  // namespace mbs::gaussian
