#include <cmath>

#include "doctest.h"

#include "mbs/fock_oracle.hpp"
#include "mbs/gaussian_engine.hpp"
#include "mbs/montecarlo.hpp"
#include "mbs/witness.hpp"

using namespace mbs;

namespace {

StokesMoments exact(BellStateKind kind, double eta, double n = 0.8) {
  return gaussian::stokes_moments(gaussian::build_gaussian(kind, SourceParams::from_mean_photons(n)), {},
                                  uniform_efficiency(eta));
}

std::vector<mc::PulseRecord> simulate(BellStateKind kind, int pulses_per_setting, int cells, std::uint64_t seed) {
  std::vector<mc::PulseRecord> out;
  const auto p = SourceParams::from_mean_photons(0.8, cells);
  const auto settings = mc::witness_settings();
  for (std::size_t k = 0; k < settings.size(); ++k) {
    auto r = mc::sample_pulses(kind, p, settings[k], {uniform_efficiency(0.4), 0.0}, pulses_per_setting,
                               stream_seed(seed, k));
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace

TEST_CASE("combination signs") {
  CHECK(witness::combination_signs(BellStateKind::PhiMinus) == std::array<int, 3>{-1, +1, -1});
  CHECK(witness::combination_signs(BellStateKind::PsiMinus) == std::array<int, 3>{+1, +1, +1});
}

TEST_CASE("exact-moment witness") {
  for (auto kind : {BellStateKind::PhiMinus, BellStateKind::PsiMinus, BellStateKind::PhiPlus, BellStateKind::PsiPlus}) {
    const auto r = witness::witness_from_moments(exact(kind, 0.4), kind);
    CHECK(r.lhs == doctest::Approx(1.80).epsilon(1e-12));
    CHECK(r.verdict == witness::Verdict::Entangled);
    CHECK_FALSE(r.std_err.has_value());
    double sum = 0.0;
    for (const auto& t : r.terms) sum += t.value;
    CHECK(r.lhs == doctest::Approx(sum / r.normalization));
    CHECK(r.threshold == 2.0);
  }
  const auto faint = witness::witness_from_moments(exact(BellStateKind::PhiMinus, 1e-6), BellStateKind::PhiMinus);
  CHECK(faint.lhs == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(faint.verdict == witness::Verdict::Inconclusive);
  const auto weak = witness::witness_from_moments(exact(BellStateKind::PhiMinus, 0.05), BellStateKind::PhiMinus);
  CHECK(weak.lhs == doctest::Approx(2.85));
  CHECK(weak.verdict == witness::Verdict::Inconclusive);

  CHECK_THROWS_AS(witness::witness_from_moments(exact(BellStateKind::PhiMinus, 0.0), BellStateKind::PhiMinus),
                  UndefinedNrfError);
}

TEST_CASE("term names") {
  const auto r = witness::witness_from_moments(exact(BellStateKind::PhiMinus, 0.4), BellStateKind::PhiMinus);
  CHECK(r.terms[0].name == "Var(S1a-S1b)");
  CHECK(r.terms[1].name == "Var(S2a+S2b)");
  CHECK(r.terms[2].name == "Var(S3a-S3b)");
}

TEST_CASE("fock and gaussian witness agree") {
  for (auto kind : kKinds) {
    const auto f = fock::stokes_moments(fock::build_state(kind, SourceParams::from_mean_photons(0.8), 40), {},
                                        uniform_efficiency(0.4));
    const double lf = witness::witness_from_moments(f, kind).lhs;
    const double lg = witness::witness_from_moments(exact(kind, 0.4), kind).lhs;
    CHECK(std::abs(lf - lg) < 1e-8);
  }
}

TEST_CASE("verdict rule with significance") {
  CHECK(witness::decide(1.9, 0.03, 3.0) == witness::Verdict::Entangled);
  CHECK(witness::decide(1.95, 0.03, 3.0) == witness::Verdict::Inconclusive);
  CHECK(witness::decide(1.95, std::nullopt, 3.0) == witness::Verdict::Entangled);
  CHECK(witness::decide(2.0, std::nullopt, 0.0) == witness::Verdict::Inconclusive);
}

TEST_CASE("witness from simulated records") {
  // 10^5 pulses in total, 1000 cells per pulse.
  const auto recs = simulate(BellStateKind::PhiMinus, 33334, 1000, 21);
  const auto r = witness::witness_from_records(recs, BellStateKind::PhiMinus, {300, 4, 3.0});
  REQUIRE(r.std_err.has_value());
  CHECK(*r.std_err > 0.0);
  CHECK(std::abs(r.lhs - 1.80) < 3 * *r.std_err);
  CHECK(r.verdict == witness::Verdict::Entangled);
}

TEST_CASE("coherent light sits at the shot-noise level in every term") {
  const auto settings = mc::witness_settings();
  std::vector<mc::PulseRecord> recs;
  const std::array<Complex, 2> ja{1.0, 0.0}, jb{std::sqrt(0.5), Complex(0, std::sqrt(0.5))};
  for (std::size_t k = 0; k < 3; ++k) {
    auto r = mc::sample_coherent_pulses(ja, jb, 2000.0, settings[k], {uniform_efficiency(0.5), 0.0}, 20000,
                                        stream_seed(9, k));
    recs.insert(recs.end(), r.begin(), r.end());
  }
  const auto r = witness::witness_from_records(recs, BellStateKind::PsiMinus, {300, 2, 3.0});
  CHECK(std::abs(r.lhs - 3.0) < 3 * *r.std_err);
  for (const auto& t : r.terms) CHECK(t.value / r.normalization == doctest::Approx(1.0).epsilon(0.05));
  CHECK(r.verdict == witness::Verdict::Inconclusive);
}

TEST_CASE("record input errors") {
  auto recs = simulate(BellStateKind::PhiMinus, 5, 10, 1);
  CHECK_NOTHROW(witness::witness_from_records(recs, BellStateKind::PhiMinus, {20, 1, 3.0}));

  std::vector<mc::PulseRecord> one_each;
  for (const char* id : {"S1", "S2", "S3"}) one_each.push_back({id, {1, 2, 3, 4}});
  CHECK_THROWS_AS(witness::witness_from_records(one_each, BellStateKind::PhiMinus), std::invalid_argument);

  auto bad = recs;
  bad[0].setting_id = "S4";
  CHECK_THROWS_AS(witness::witness_from_records(bad, BellStateKind::PhiMinus), std::invalid_argument);

  std::vector<mc::PulseRecord> dark;
  for (const char* id : {"S1", "S1", "S2", "S2", "S3", "S3"}) dark.push_back({id, {0, 0, 0, 0}});
  CHECK_THROWS_AS(witness::witness_from_records(dark, BellStateKind::PhiMinus), UndefinedNrfError);
}

TEST_CASE("record witness is deterministic for a fixed seed") {
  const auto recs = simulate(BellStateKind::PsiMinus, 200, 50, 3);
  const auto a = witness::witness_from_records(recs, BellStateKind::PsiMinus, {100, 8, 3.0});
  const auto b = witness::witness_from_records(recs, BellStateKind::PsiMinus, {100, 8, 3.0});
  CHECK(a.lhs == b.lhs);
  CHECK(*a.std_err == *b.std_err);
}

TEST_CASE("json field names") {
  const auto j = witness::to_json(witness::witness_from_moments(exact(BellStateKind::PhiMinus, 0.4), BellStateKind::PhiMinus));
  for (const char* key : {"kind", "terms", "normalization", "lhs", "threshold", "verdict", "std_err"}) CHECK(j.contains(key));
  CHECK(j["std_err"].is_null());
  CHECK(j["verdict"] == "Entangled");
  CHECK(j["terms"].size() == 3);
}
