#include "mbs/modes.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace mbs {

namespace {

constexpr double kPi = std::numbers::pi;

double reduce_angle(double angle) {
  double r = std::fmod(angle, kPi);
  if (r < 0) r += kPi;
  return r;
}

Eigen::Matrix2d rotation(double t) {
  Eigen::Matrix2d r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

}  // namespace

std::string to_string(ModeId mode) {
  return fmt::format("{}{}", mode.arm == Arm::A ? 'A' : 'B', mode.pol == Pol::H ? 'H' : 'V');
}

ModeId mode_from_string(std::string_view text) {
  for (auto m : kModes) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument(fmt::format("unknown mode '{}' (expected AH, AV, BH or BV)", text));
}

void validate_efficiencies(const Efficiencies& eta) {
  for (double e : eta) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw std::invalid_argument(fmt::format("efficiency {} outside [0, 1]", e));
    }
  }
}

double SourceParams::mean_photons() const {
  const double s = std::sinh(gamma);
  return s * s;
}

SourceParams SourceParams::from_mean_photons(double n_mean, int schmidt_modes) {
  if (!(n_mean >= 0.0)) throw std::invalid_argument("mean photon number must be >= 0");
  return SourceParams{std::asinh(std::sqrt(n_mean)), schmidt_modes};
}

void validate(const SourceParams& params) {
  if (!(params.gamma >= 0.0) || !std::isfinite(params.gamma)) {
    throw std::invalid_argument(fmt::format("parametric gain {} must be finite and >= 0", params.gamma));
  }
  if (params.schmidt_modes < 1) {
    throw std::invalid_argument(fmt::format("schmidt_modes {} must be >= 1", params.schmidt_modes));
  }
}

ModeId paired_mode(BellStateKind kind, Pol arm_a_pol) {
  if (is_phi(kind)) return ModeId{Arm::B, arm_a_pol};
  return ModeId{Arm::B, arm_a_pol == Pol::H ? Pol::V : Pol::H};
}

std::string to_string(BellStateKind kind) {
  switch (kind) {
    case BellStateKind::PhiPlus: return "PhiPlus";
    case BellStateKind::PhiMinus: return "PhiMinus";
    case BellStateKind::PsiPlus: return "PsiPlus";
    case BellStateKind::PsiMinus: return "PsiMinus";
  }
  return "?";
}

BellStateKind kind_from_string(std::string_view text) {
  for (auto k : kKinds) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument(
      fmt::format("unknown state '{}' (expected PhiPlus, PhiMinus, PsiPlus or PsiMinus)", text));
}

WavePlate WavePlate::half(double angle, Arm arm) { return {PlateKind::Half, reduce_angle(angle), arm}; }

WavePlate WavePlate::quarter(double angle, Arm arm) { return {PlateKind::Quarter, reduce_angle(angle), arm}; }

Mat2 jones_matrix(const WavePlate& plate) {
  const double t = plate.angle;
  Mat2 u;
  if (plate.kind == PlateKind::Half) {
    const double c = std::cos(2 * t), s = std::sin(2 * t);
    u << c, s, s, -c;
    return u;
  }
  Mat2 retarder = Mat2::Zero();
  retarder(0, 0) = 1.0;
  retarder(1, 1) = Complex(0.0, 1.0);
  u = rotation(t).cast<Complex>() * retarder * rotation(-t).cast<Complex>();
  return u;
}

Mat2 compose_analyzer(const AnalyzerSetting& setting) {
  Mat2 u = Mat2::Identity();
  for (const auto& plate : setting.plates) {
    if (plate.arm != setting.arm) {
      throw std::invalid_argument(fmt::format("plate for arm {} placed in analyzer of arm {}",
                                              plate.arm == Arm::A ? 'A' : 'B', setting.arm == Arm::A ? 'A' : 'B'));
    }
    u = jones_matrix(plate) * u;
  }
  return u;
}

bool is_unitary(const Mat2& u, double tol) {
  return (u.adjoint() * u - Mat2::Identity()).norm() < tol;
}

PortReading stokes_from_port_numbers(double n_transmit, double n_reflect) {
  return {n_transmit + n_reflect, n_transmit - n_reflect};
}

Mat2 stokes_basis(int component) {
  switch (component) {
    case 1: return Mat2::Identity();
    case 2: return jones_matrix(WavePlate::half(kPi / 8, Arm::A));
    case 3: return jones_matrix(WavePlate::quarter(kPi / 4, Arm::A));
    default: throw std::invalid_argument(fmt::format("Stokes component {} not in 1..3", component));
  }
}

Mat2 analyzer_for_direction(const std::array<double, 3>& u) {
  Mat2 sigma_z = Mat2::Zero();
  sigma_z(0, 0) = 1.0;
  sigma_z(1, 1) = -1.0;
  Mat2 op = Mat2::Zero();
  for (int k = 0; k < 3; ++k) {
    const Mat2 b = stokes_basis(k + 1);
    op += u[k] * (b.adjoint() * sigma_z * b);
  }
  Eigen::SelfAdjointEigenSolver<Mat2> eig(op);
  // Eigenvalues ascending: (-1, +1). Transmit row projects on the +1 state.
  Mat2 result;
  result.row(0) = eig.eigenvectors().col(1).adjoint();
  result.row(1) = eig.eigenvectors().col(0).adjoint();
  return result;
}

Readout Readout::nrf(ModeId i, ModeId j) {
  Readout r;
  r.weights[i.index()] += 1.0;
  r.weights[j.index()] -= 1.0;
  r.norm[i.index()] += 1.0;
  r.norm[j.index()] += 1.0;
  return r;
}

Readout Readout::stokes_pair(int sign) {
  const double s = sign >= 0 ? 1.0 : -1.0;
  return Readout{{1.0, -1.0, s, -s}, {1.0, 1.0, 1.0, 1.0}};
}

double Readout::evaluate(const PhotonMoments& m) const {
  const Eigen::Vector4d w(weights.data());
  const Eigen::Vector4d mean(m.mean.data());
  const double denom = Eigen::Vector4d(norm.data()).dot(mean);
  if (!(denom > 0.0)) throw UndefinedNrfError("normalizing photon number is zero");
  return w.dot(m.cov * w) / denom;
}

double nrf(const PhotonMoments& m, ModeId i, ModeId j) {
  if (!(m.mean[i.index()] + m.mean[j.index()] > 0.0)) {
    throw UndefinedNrfError(fmt::format("NRF({}, {}) undefined: zero mean photon number", to_string(i), to_string(j)));
  }
  return Readout::nrf(i, j).evaluate(m);
}

double StokesMoments::var_combination(int component, int sign) const {
  const int a = index(Arm::A, component), b = index(Arm::B, component);
  return cov(a, a) + cov(b, b) + 2.0 * (sign >= 0 ? 1.0 : -1.0) * cov(a, b);
}

StokesMoments assemble_stokes_moments(const PortMeasurement& measure, const ArmSettings& settings) {
  const Mat2 wa = compose_analyzer(settings.a);
  const Mat2 wb = compose_analyzer(settings.b);

  Eigen::Matrix4d to_stokes;
  to_stokes << 1, 1, 0, 0,
               1, -1, 0, 0,
               0, 0, 1, 1,
               0, 0, 1, -1;

  StokesMoments out;
  // (ia, ib) -> moments of (S0a, S_ia^a, S0b, S_ib^b).
  std::array<std::array<Eigen::Vector4d, 3>, 3> mean;
  std::array<std::array<Eigen::Matrix4d, 3>, 3> cov;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const PhotonMoments m = measure(stokes_basis(i + 1) * wa, stokes_basis(j + 1) * wb);
      out.deficit = std::max(out.deficit, m.deficit);
      mean[i][j] = to_stokes * Eigen::Vector4d(m.mean.data());
      cov[i][j] = to_stokes * m.cov * to_stokes.transpose();
    }
  }

  const int a0 = StokesMoments::index(Arm::A, 0), b0 = StokesMoments::index(Arm::B, 0);
  auto set = [&](int r, int c, double v) {
    out.cov(r, c) = v;
    out.cov(c, r) = v;
  };

  out.mean[a0] = mean[0][0](0);
  out.mean[b0] = mean[0][0](2);
  set(a0, a0, cov[0][0](0, 0));
  set(b0, b0, cov[0][0](2, 2));
  set(a0, b0, cov[0][0](0, 2));
  for (int k = 0; k < 3; ++k) {
    const int ak = StokesMoments::index(Arm::A, k + 1), bk = StokesMoments::index(Arm::B, k + 1);
    out.mean[ak] = mean[k][0](1);
    set(ak, ak, cov[k][0](1, 1));
    set(a0, ak, cov[k][0](0, 1));
    set(ak, b0, cov[k][0](1, 2));
    out.mean[bk] = mean[0][k](3);
    set(bk, bk, cov[0][k](3, 3));
    set(b0, bk, cov[0][k](2, 3));
    set(a0, bk, cov[0][k](0, 3));
    for (int j = 0; j < 3; ++j) {
      set(ak, StokesMoments::index(Arm::B, j + 1), cov[k][j](1, 3));
    }
  }

  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 1; i <= 3; ++i) {
    for (int k = i + 1; k <= 3; ++k) {
      std::array<double, 3> u{0.0, 0.0, 0.0};
      u[i - 1] = r;
      u[k - 1] = r;
      const Mat2 d = analyzer_for_direction(u);
      const PhotonMoments m = measure(d * wa, d * wb);
      out.deficit = std::max(out.deficit, m.deficit);
      const Eigen::Matrix4d c = to_stokes * m.cov * to_stokes.transpose();
      for (Arm arm : {Arm::A, Arm::B}) {
        const int p = StokesMoments::index(arm, i), q = StokesMoments::index(arm, k);
        const double var_u = arm == Arm::A ? c(1, 1) : c(3, 3);
        set(p, q, var_u - 0.5 * (out.cov(p, p) + out.cov(q, q)));
      }
    }
  }
  return out;
}

double deg_to_rad(double deg) { return deg * kPi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace mbs
