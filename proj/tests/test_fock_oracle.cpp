#include <cmath>
#include <numbers>

#include "doctest.h"

#include "mbs/fock_oracle.hpp"
#include "mbs/gaussian_engine.hpp"
#include "oracles.hpp"

using namespace mbs;
using std::numbers::pi;

namespace {

const double kGamma08 = std::asinh(std::sqrt(0.8));

bool pattern_ok(BellStateKind kind, const fock::Occupation& o) {
  return is_phi(kind) ? (o[0] == o[2] && o[1] == o[3]) : (o[0] == o[3] && o[1] == o[2]);
}

fock::NumberDistribution single(const fock::Occupation& occ) {
  fock::NumberDistribution d;
  d.entries.push_back({occ, 1.0});
  return d;
}

}  // namespace

TEST_CASE("coefficients") {
  CHECK(fock::coefficient(BellStateKind::PhiMinus, 0, 0, 0.0) == Complex(1.0));

  // -sinh / cosh^3 at mean 0.8: sqrt(0.8) / 1.8^1.5 = 10/27.
  const Complex a11 = fock::coefficient(BellStateKind::PhiMinus, 1, 1, kGamma08);
  CHECK(a11.real() == doctest::Approx(-std::sinh(kGamma08) / std::pow(std::cosh(kGamma08), 3)).epsilon(1e-14));
  CHECK(a11.real() == doctest::Approx(-10.0 / 27.0).epsilon(1e-13));
  CHECK(a11.imag() == 0.0);

  const double g = 0.7;
  const Complex a21 = fock::coefficient(BellStateKind::PsiPlus, 2, 1, g);
  CHECK(a21.real() == doctest::Approx(std::pow(std::sinh(g), 2) / std::pow(std::cosh(g), 4)).epsilon(1e-14));
  CHECK(fock::coefficient(BellStateKind::PsiMinus, 2, 1, g).real() == doctest::Approx(-a21.real()));

  CHECK_THROWS(fock::coefficient(BellStateKind::PhiPlus, 1, 2, g));
}

TEST_CASE("building states") {
  for (auto kind : kKinds) {
    const auto s = fock::build_state(kind, {0.0, 1}, 5);
    CHECK(s.norm_deficit == 0.0);
    CHECK(std::abs(s.amplitude({0, 0, 0, 0})) == doctest::Approx(1.0));
    CHECK(s.norm_squared() == doctest::Approx(1.0));
  }

  const auto s = fock::build_state(BellStateKind::PhiMinus, SourceParams::from_mean_photons(0.8), 40);
  CHECK(s.norm_deficit < 1e-9);
  // Geometric tail x^(N+1) [(N+2) - (N+1) x] with x = tanh^2 = 4/9.
  const double x = 0.8 / 1.8;
  CHECK(s.norm_deficit == doctest::Approx(std::pow(x, 41) * (42 - 41 * x)).epsilon(1e-9));
  CHECK(std::abs(s.norm_squared() + s.norm_deficit - 1.0) < 1e-12);

  const auto psi = fock::build_state(BellStateKind::PsiMinus, SourceParams::from_mean_photons(0.8), 40);
  const auto d = fock::number_distribution(psi);
  for (const auto& [occ, p] : d.entries) {
    if (p > 0) CHECK(pattern_ok(BellStateKind::PsiMinus, occ));
  }
  CHECK_THROWS(fock::build_state(BellStateKind::PhiPlus, {0.3, 1}, -1));
}

TEST_CASE("recommended truncation") {
  CHECK(fock::recommended_n_max(0.0) == 0);
  const int n = fock::recommended_n_max(1.2);
  CHECK(fock::truncation_deficit(1.2, n) < 1e-12);
  CHECK(n > fock::kDefaultNMax);
}

TEST_CASE("arm unitaries") {
  const auto s = fock::build_state(BellStateKind::PhiMinus, SourceParams::from_mean_photons(0.8), 30);

  const auto same = fock::apply_arm_unitary(s, Arm::B, Mat2::Identity());
  for (std::size_t k = 0; k < s.sectors.size(); ++k) CHECK((same.sectors[k].amp - s.sectors[k].amp).norm() < 1e-14);

  // A 45 degree half plate swaps H and V on arm B: Phi support becomes Psi support.
  const auto swapped = fock::apply_arm_unitary(s, Arm::B, jones_matrix(WavePlate::half(pi / 4, Arm::B)));
  const auto d = fock::number_distribution(swapped);
  int off = 0;
  for (const auto& [occ, p] : d.entries) {
    if (p > 1e-15 && !pattern_ok(BellStateKind::PsiMinus, occ)) ++off;
  }
  CHECK(off == 0);

  const Mat2 u = compose_analyzer({Arm::A, {WavePlate::quarter(0.3, Arm::A), WavePlate::half(1.1, Arm::A)}});
  const auto fwd = fock::apply_arm_unitary(s, Arm::A, u);
  CHECK(std::abs(fwd.norm_squared() - s.norm_squared()) < 1e-10);
  const auto back = fock::apply_arm_unitary(fwd, Arm::A, u.adjoint());
  for (std::size_t k = 0; k < s.sectors.size(); ++k) CHECK((back.sectors[k].amp - s.sectors[k].amp).cwiseAbs().maxCoeff() < 1e-10);

  Mat2 bad = Mat2::Identity();
  bad(0, 1) = 0.3;
  CHECK_THROWS(fock::apply_arm_unitary(s, Arm::A, bad));
}

TEST_CASE("arm unitaries agree with a dense binomial expansion") {
  const Mat2 u = compose_analyzer({Arm::B, {WavePlate::quarter(0.7, Arm::B), WavePlate::half(0.2, Arm::B)}});
  for (auto kind : {BellStateKind::PhiMinus, BellStateKind::PsiPlus}) {
    const auto s = fock::build_state(kind, SourceParams::from_mean_photons(0.8), 10);
    for (Arm arm : {Arm::A, Arm::B}) {
      const auto engine = fock::apply_arm_unitary(s, arm, u);
      const auto dense = oracle::dense_arm_unitary(s, arm, u);
      double worst = 0.0;
      for (const auto& [occ, amp] : dense) worst = std::max(worst, std::abs(engine.amplitude(occ) - amp));
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("number distributions") {
  const auto vac = fock::number_distribution(fock::build_state(BellStateKind::PhiMinus, {0.0, 1}, 4));
  CHECK(vac.probability({0, 0, 0, 0}) == doctest::Approx(1.0));
  CHECK(vac.total() == doctest::Approx(1.0));

  const auto d = fock::number_distribution(fock::build_state(BellStateKind::PhiMinus, SourceParams::from_mean_photons(0.8), 40));
  double mean_ah = 0.0;
  for (const auto& [occ, p] : d.entries) mean_ah += occ[0] * p;
  CHECK(mean_ah == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(d.total() + d.deficit == doctest::Approx(1.0).epsilon(1e-12));

  const auto dp = fock::number_distribution(fock::build_state(BellStateKind::PsiMinus, SourceParams::from_mean_photons(0.8), 20));
  for (const auto& [occ, p] : dp.entries) {
    if (occ[0] != occ[3]) CHECK(p == 0.0);
  }
}

TEST_CASE("binomial loss") {
  const auto d = fock::number_distribution(fock::build_state(BellStateKind::PsiPlus, SourceParams::from_mean_photons(0.5), 12));
  const auto same = fock::apply_loss(d, uniform_efficiency(1.0));
  double worst = 0.0;
  for (const auto& [occ, p] : d.entries) worst = std::max(worst, std::abs(p - same.probability(occ)));
  CHECK(worst < 1e-14);

  const auto dark = fock::apply_loss(d, uniform_efficiency(0.0));
  CHECK(dark.probability({0, 0, 0, 0}) == doctest::Approx(d.total()).epsilon(1e-12));

  const auto pair = fock::apply_loss(single({1, 0, 1, 0}), uniform_efficiency(0.5));
  CHECK(pair.probability({1, 0, 1, 0}) == doctest::Approx(0.25));
  CHECK(pair.probability({1, 0, 0, 0}) == doctest::Approx(0.25));
  CHECK(pair.probability({0, 0, 1, 0}) == doctest::Approx(0.25));
  CHECK(pair.probability({0, 0, 0, 0}) == doctest::Approx(0.25));

  CHECK_THROWS(fock::apply_loss(d, {0.5, 1.2, 0.5, 0.5}));
  CHECK_THROWS(fock::apply_loss(d, {0.5, -0.1, 0.5, 0.5}));
}

TEST_CASE("photon number moments") {
  const auto vac = fock::moments(fock::number_distribution(fock::build_state(BellStateKind::PhiMinus, {0.0, 1}, 3)));
  for (int i = 0; i < 4; ++i) CHECK(vac.mean[i] == 0.0);
  CHECK(vac.cov.cwiseAbs().maxCoeff() == 0.0);

  const auto m = fock::moments(fock::number_distribution(fock::build_state(BellStateKind::PhiMinus, SourceParams::from_mean_photons(0.8), 40)));
  CHECK(m.cov(0, 2) == doctest::Approx(m.cov(0, 0)).epsilon(1e-12));
  CHECK(m.cov(0, 0) == doctest::Approx(0.8 * 1.8).epsilon(1e-9));

  // Independent direct-sum reference.
  const auto ref = oracle::direct_moments(BellStateKind::PhiMinus, 0.8, {1, 1, 1, 1});
  CHECK((m.cov - ref.cov).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("thinned moments match the expanded distribution") {
  const auto s = fock::apply_arm_unitary(fock::build_state(BellStateKind::PhiPlus, SourceParams::from_mean_photons(0.8), 14),
                                         Arm::B, jones_matrix(WavePlate::quarter(0.4, Arm::B)));
  const auto d = fock::number_distribution(s);
  const Efficiencies eta{0.3, 0.9, 0.55, 0.7};
  const auto direct = fock::moments(fock::apply_loss(d, eta));
  const auto fast = fock::moments_after_loss(d, eta);
  for (int i = 0; i < 4; ++i) CHECK(direct.mean[i] == doctest::Approx(fast.mean[i]).epsilon(1e-12));
  CHECK((direct.cov - fast.cov).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("noise reduction factors") {
  const auto p = SourceParams::from_mean_photons(0.8);
  const auto phi = fock::build_state(BellStateKind::PhiMinus, p, 40);
  const auto psi = fock::build_state(BellStateKind::PsiMinus, p, 40);
  CHECK(fock::nrf(fock::number_distribution(phi), kAH, kBH) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(fock::nrf(fock::apply_loss(fock::number_distribution(phi), uniform_efficiency(0.4)), kAH, kBV) ==
        doctest::Approx(1.32).epsilon(1e-9));
  const auto id = Mat2::Identity();
  CHECK(nrf(fock::measure(psi, id, id, uniform_efficiency(0.4)), kAH, kBV) == doctest::Approx(0.60).epsilon(1e-9));

  const auto vac = fock::number_distribution(fock::build_state(BellStateKind::PhiMinus, {0.0, 1}, 3));
  CHECK_THROWS_AS(fock::nrf(vac, kAH, kBH), UndefinedNrfError);
}

TEST_CASE("pairing table against the direct-sum reference") {
  const auto id = Mat2::Identity();
  for (double n : {0.1, 0.8}) {
    for (double eta : {0.4, 1.0}) {
      for (auto kind : kKinds) {
        const auto m = fock::measure(fock::build_state(kind, SourceParams::from_mean_photons(n), 40), id, id,
                                     uniform_efficiency(eta));
        const auto ref = oracle::direct_moments(kind, n, {eta, eta, eta, eta});
        for (int i : {0, 1}) {
          for (int j : {2, 3}) CHECK(nrf(m, kModes[i], kModes[j]) == doctest::Approx(oracle::nrf(ref, i, j)).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("stokes moments") {
  const auto vac = fock::stokes_moments(fock::build_state(BellStateKind::PhiMinus, {0.0, 1}, 3), {}, uniform_efficiency(0.4));
  for (double v : vac.mean) CHECK(v == 0.0);
  CHECK(vac.cov.cwiseAbs().maxCoeff() == 0.0);

  const auto p = SourceParams::from_mean_photons(0.8);
  const auto phi = fock::stokes_moments(fock::build_state(BellStateKind::PhiMinus, p, 40), {}, uniform_efficiency(1.0));
  CHECK(std::abs(phi.var_combination(1, -1)) < 1e-9);

  const auto psi = fock::stokes_moments(fock::build_state(BellStateKind::PsiMinus, p, 40), {}, uniform_efficiency(0.4));
  CHECK(psi.var_combination(1, +1) / psi.total_s0() == doctest::Approx(0.60).epsilon(1e-9));

  // Direct-sum check of the H/V terms.
  const auto ref = oracle::direct_moments(BellStateKind::PsiMinus, 0.8, {0.4, 0.4, 0.4, 0.4});
  CHECK(psi.var_combination(1, +1) / psi.total_s0() == doctest::Approx(oracle::readout(ref, {1, -1, 1, -1}, {1, 1, 1, 1})).epsilon(1e-9));
}

TEST_CASE("anomalous correlators fix the sign table") {
  const auto s = fock::build_state(BellStateKind::PhiMinus, SourceParams::from_mean_photons(0.8), 40);
  const auto c = fock::correlators(s);
  const double amp = std::sqrt(0.8 * 1.8);
  CHECK(c.anomalous(0, 2).real() == doctest::Approx(amp).epsilon(1e-9));
  CHECK(c.anomalous(1, 3).real() == doctest::Approx(-amp).epsilon(1e-9));
  for (auto kind : kKinds) {
    const auto g = gaussian::build_gaussian(kind, SourceParams::from_mean_photons(0.8));
    const auto f = fock::correlators(fock::build_state(kind, SourceParams::from_mean_photons(0.8), 40));
    CHECK((f.anomalous - g.anomalous).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((f.normal - g.normal).cwiseAbs().maxCoeff() < 1e-8);
  }
}
