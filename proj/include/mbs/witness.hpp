#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"

#include "mbs/modes.hpp"
#include "mbs/montecarlo.hpp"

namespace mbs::witness {

inline constexpr double kThreshold = 2.0;

enum class Verdict { Entangled, Inconclusive };

std::string to_string(Verdict v);

struct Term {
  std::string name;  // e.g. "Var(S1a-S1b)"
  double value = 0.0;
};

struct WitnessReport {
  BellStateKind kind = BellStateKind::PhiMinus;
  std::array<Term, 3> terms;
  double normalization = 0.0;  // <S0^a + S0^b>
  double lhs = 0.0;
  double threshold = kThreshold;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<double> std_err;  // set for estimated inputs
};

/// Sign s_k of S_k^b in the squeezed combination Var(S_k^a + s_k S_k^b).
std::array<int, 3> combination_signs(BellStateKind kind);

/// Entangled iff lhs + significance * std_err < 2.
Verdict decide(double lhs, std::optional<double> std_err, double significance);

WitnessReport witness_from_moments(const StokesMoments& moments, BellStateKind kind);

struct RecordOptions {
  int resamples = 1000;
  std::uint64_t seed = 1;
  double significance = 3.0;
};

/// Records must carry setting ids S1, S2 and S3 only, each with >= 2 pulses.
WitnessReport witness_from_records(std::span<const mc::PulseRecord> records, BellStateKind kind,
                                   const RecordOptions& options = {});

nlohmann::json to_json(const WitnessReport& report);

}  // namespace mbs::witness
