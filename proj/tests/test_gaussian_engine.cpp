#include <cmath>
#include <numbers>

#include "doctest.h"

#include "mbs/fock_oracle.hpp"
#include "mbs/gaussian_engine.hpp"

using namespace mbs;
using std::numbers::pi;

namespace {

const auto kP08 = SourceParams::from_mean_photons(0.8);

bool psi_support(const Eigen::Matrix4cd& m, double tol) {
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const bool allowed = (i == 0 && j == 3) || (i == 3 && j == 0) || (i == 1 && j == 2) || (i == 2 && j == 1);
      if (!allowed && std::abs(m(i, j)) > tol) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("building gaussian states") {
  const auto vac = gaussian::build_gaussian(BellStateKind::PhiMinus, {0.0, 1});
  CHECK(vac.normal.cwiseAbs().maxCoeff() == 0.0);
  CHECK(vac.anomalous.cwiseAbs().maxCoeff() == 0.0);

  const auto g = gaussian::build_gaussian(BellStateKind::PhiMinus, kP08);
  const double amp = std::sqrt(0.8 * 1.8);
  CHECK(g.anomalous(0, 2).real() == doctest::Approx(amp));
  CHECK(g.anomalous(1, 3).real() == doctest::Approx(-amp));
  for (int i = 0; i < 4; ++i) CHECK(g.normal(i, i).real() == doctest::Approx(0.8));
  CHECK((g.anomalous - g.anomalous.transpose()).norm() == 0.0);

  CHECK(psi_support(gaussian::build_gaussian(BellStateKind::PsiPlus, kP08).anomalous, 0.0));
  CHECK(gaussian::is_physical(g));
}

TEST_CASE("passive transformations") {
  const auto g = gaussian::build_gaussian(BellStateKind::PhiMinus, kP08);
  const auto same = gaussian::apply_passive(g, Arm::A, Mat2::Identity());
  CHECK((same.normal - g.normal).norm() == 0.0);
  CHECK((same.anomalous - g.anomalous).norm() == 0.0);

  const auto swapped = gaussian::apply_passive(g, Arm::B, jones_matrix(WavePlate::half(pi / 4, Arm::B)));
  CHECK(psi_support(swapped.anomalous, 1e-15));

  for (double t : {0.1, 0.5, 1.3}) {
    const Mat2 u = compose_analyzer({Arm::A, {WavePlate::quarter(t, Arm::A), WavePlate::half(2 * t, Arm::A)}});
    const auto r = gaussian::apply_passive(g, Arm::A, u);
    CHECK(r.normal.trace().real() == doctest::Approx(g.normal.trace().real()).epsilon(1e-14));
    CHECK(gaussian::is_physical(r));
  }

  Mat2 bad = Mat2::Identity() * 2.0;
  CHECK_THROWS(gaussian::apply_passive(g, Arm::A, bad));
}

TEST_CASE("loss on gaussian states") {
  const auto g = gaussian::build_gaussian(BellStateKind::PsiMinus, kP08);
  const auto same = gaussian::apply_loss(g, uniform_efficiency(1.0));
  CHECK((same.normal - g.normal).norm() == 0.0);
  const auto zero = gaussian::apply_loss(g, uniform_efficiency(0.0));
  CHECK(zero.normal.norm() == 0.0);
  CHECK(zero.anomalous.norm() == 0.0);
  for (double eta : {0.0, 0.25, 0.5, 1.0}) {
    const auto m = gaussian::photon_moments(gaussian::apply_loss(g, uniform_efficiency(eta)));
    for (int i = 0; i < 4; ++i) CHECK(m.mean[i] == doctest::Approx(eta * 0.8));
  }
  CHECK_THROWS(gaussian::apply_loss(g, {1.0, 1.0, 1.1, 1.0}));
}

TEST_CASE("physicality check rejects an oversized anomalous correlator") {
  auto g = gaussian::build_gaussian(BellStateKind::PhiPlus, kP08);
  CHECK(gaussian::is_physical(g));
  g.anomalous(0, 2) *= 1.5;
  g.anomalous(2, 0) *= 1.5;
  CHECK_FALSE(gaussian::is_physical(g));
}

TEST_CASE("photon moments by factorization") {
  // Single thermal mode: geometric law p_k = n^k / (1+n)^(k+1).
  gaussian::GaussianState th;
  const double n = 0.7;
  th.normal(0, 0) = n;
  double s1 = 0, s2 = 0;
  for (int k = 0; k < 2000; ++k) {
    const double p = std::pow(n / (1 + n), k) / (1 + n);
    s1 += k * p;
    s2 += double(k) * k * p;
  }
  const auto m = gaussian::photon_moments(th);
  CHECK(m.cov(0, 0) == doctest::Approx(s2 - s1 * s1).epsilon(1e-12));
  CHECK(m.cov(0, 0) == doctest::Approx(n * (1 + n)));

  const auto tms = gaussian::photon_moments(gaussian::build_gaussian(BellStateKind::PhiPlus, kP08));
  CHECK(std::abs(tms.cov(0, 0) + tms.cov(2, 2) - 2 * tms.cov(0, 2)) < 1e-12);

  const auto id = Mat2::Identity();
  const auto lossy = gaussian::measure(gaussian::build_gaussian(BellStateKind::PhiMinus, kP08), id, id, uniform_efficiency(0.4));
  CHECK(nrf(lossy, kAH, kBH) == doctest::Approx(0.60).epsilon(1e-12));
}

TEST_CASE("cell scaling") {
  const auto one = gaussian::photon_moments(gaussian::build_gaussian(BellStateKind::PsiPlus, kP08));
  const auto many = gaussian::scale_cells(one, 250);
  for (int i = 0; i < 4; ++i) CHECK(many.mean[i] == doctest::Approx(250 * one.mean[i]));
  CHECK((many.cov - 250 * one.cov).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS(gaussian::scale_cells(one, 0));
}

TEST_CASE("gaussian stokes moments") {
  const auto vac = gaussian::stokes_moments(gaussian::build_gaussian(BellStateKind::PsiMinus, {0.0, 1}), {}, uniform_efficiency(0.4));
  for (double v : vac.mean) CHECK(v == 0.0);
  CHECK(vac.cov.cwiseAbs().maxCoeff() == 0.0);

  const auto phi = gaussian::stokes_moments(gaussian::build_gaussian(BellStateKind::PhiMinus, kP08), {}, uniform_efficiency(0.4));
  CHECK(phi.var_combination(2, +1) / phi.total_s0() == doctest::Approx(0.60).epsilon(1e-12));
  CHECK(phi.cov.isApprox(phi.cov.transpose()));

  const auto g = gaussian::build_gaussian(BellStateKind::PsiMinus, kP08);
  const auto ref = gaussian::stokes_moments(g, {}, uniform_efficiency(0.4));
  ArmSettings global;
  global.a.plates = {WavePlate::quarter(0.37, Arm::A), WavePlate::half(1.2, Arm::A)};
  global.b.plates = {WavePlate::quarter(0.37, Arm::B), WavePlate::half(1.2, Arm::B)};
  const auto rot = gaussian::stokes_moments(g, global, uniform_efficiency(0.4));
  for (int c = 1; c <= 3; ++c) CHECK(std::abs(rot.var_combination(c, +1) - ref.var_combination(c, +1)) < 1e-10);
}

TEST_CASE("gaussian and fock moments agree under random analyzers") {
  ArmSettings st;
  st.a.plates = {WavePlate::half(0.31, Arm::A), WavePlate::quarter(1.9, Arm::A)};
  st.b.plates = {WavePlate::quarter(0.8, Arm::B)};
  const Efficiencies eta{0.9, 0.6, 0.45, 0.75};
  for (auto kind : kKinds) {
    const auto gs = gaussian::stokes_moments(gaussian::build_gaussian(kind, kP08), st, eta);
    const auto fs = fock::stokes_moments(fock::build_state(kind, kP08, 40), st, eta);
    for (int i = 0; i < 8; ++i) CHECK(std::abs(gs.mean[i] - fs.mean[i]) < 1e-8);
    CHECK((gs.cov - fs.cov).cwiseAbs().maxCoeff() < 1e-8);
  }
}
