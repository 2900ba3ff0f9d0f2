#include "mbs/witness.hpp"

#include <vector>

#include <fmt/format.h>

namespace mbs::witness {

namespace {

std::string term_name(int component, int sign) {
  return fmt::format("Var(S{0}a{1}S{0}b)", component, sign > 0 ? '+' : '-');
}

void check_normalization(double normalization) {
  if (!(normalization > 0.0)) throw UndefinedNrfError("witness normalization <S0a + S0b> is zero");
}

}  // namespace

std::string to_string(Verdict v) { return v == Verdict::Entangled ? "Entangled" : "Inconclusive"; }

std::array<int, 3> combination_signs(BellStateKind kind) {
  switch (kind) {
    case BellStateKind::PhiMinus: return {-1, +1, -1};
    case BellStateKind::PsiMinus: return {+1, +1, +1};
    case BellStateKind::PhiPlus: return {-1, -1, +1};
    case BellStateKind::PsiPlus: return {+1, -1, -1};
  }
  return {};
}

Verdict decide(double lhs, std::optional<double> std_err, double significance) {
  const double margin = std_err ? significance * *std_err : 0.0;
  return lhs + margin < kThreshold ? Verdict::Entangled : Verdict::Inconclusive;
}

WitnessReport witness_from_moments(const StokesMoments& moments, BellStateKind kind) {
  WitnessReport r;
  r.kind = kind;
  r.normalization = moments.total_s0();
  check_normalization(r.normalization);
  const auto signs = combination_signs(kind);
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    r.terms[k] = {term_name(k + 1, signs[k]), moments.var_combination(k + 1, signs[k])};
    sum += r.terms[k].value;
  }
  r.lhs = sum / r.normalization;
  r.verdict = decide(r.lhs, std::nullopt, 0.0);
  return r;
}

WitnessReport witness_from_records(std::span<const mc::PulseRecord> records, BellStateKind kind,
                                   const RecordOptions& options) {
  const auto signs = combination_signs(kind);
  // Per setting: combination values x = S^a + s S^b and normalizers y = S0^a + S0^b.
  std::array<std::vector<double>, 3> x, y;
  for (const auto& rec : records) {
    int k = -1;
    for (int c = 0; c < 3; ++c) {
      if (rec.setting_id == fmt::format("S{}", c + 1)) k = c;
    }
    if (k < 0) {
      throw std::invalid_argument(fmt::format("record setting '{}' is not one of S1, S2, S3", rec.setting_id));
    }
    const auto& n = rec.counts;
    const double sa = static_cast<double>(n[0] - n[1]), sb = static_cast<double>(n[2] - n[3]);
    x[k].push_back(sa + signs[k] * sb);
    y[k].push_back(static_cast<double>(n[0] + n[1] + n[2] + n[3]));
  }
  for (int k = 0; k < 3; ++k) {
    if (x[k].size() < 2) {
      throw std::invalid_argument(fmt::format("setting S{} has {} pulse records; at least 2 required", k + 1, x[k].size()));
    }
  }

  struct Parts {
    std::array<double, 3> terms;
    double normalization;
  };
  auto evaluate = [&](const ResampleIndices* idx) {
    Parts p{};
    double ysum = 0.0;
    std::size_t ycount = 0;
    for (int k = 0; k < 3; ++k) {
      const std::size_t n = idx ? (*idx)[k].size() : x[k].size();
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = idx ? (*idx)[k][i] : i;
        mean += x[k][j];
        ysum += y[k][j];
      }
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = x[k][idx ? (*idx)[k][i] : i] - mean;
        ss += d * d;
      }
      p.terms[k] = ss / static_cast<double>(n - 1);
      ycount += n;
    }
    p.normalization = ysum / static_cast<double>(ycount);
    return p;
  };

  const Parts full = evaluate(nullptr);
  WitnessReport r;
  r.kind = kind;
  r.normalization = full.normalization;
  check_normalization(r.normalization);
  for (int k = 0; k < 3; ++k) r.terms[k] = {term_name(k + 1, signs[k]), full.terms[k]};
  r.lhs = (full.terms[0] + full.terms[1] + full.terms[2]) / full.normalization;

  const std::array<std::size_t, 3> groups{x[0].size(), x[1].size(), x[2].size()};
  r.std_err = bootstrap_std_err(groups, options.resamples, options.seed, [&](const ResampleIndices& idx) {
    const Parts p = evaluate(&idx);
    return p.normalization > 0.0 ? (p.terms[0] + p.terms[1] + p.terms[2]) / p.normalization : 0.0;
  });
  r.verdict = decide(r.lhs, r.std_err, options.significance);
  return r;
}

nlohmann::json to_json(const WitnessReport& report) {
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& t : report.terms) terms[t.name] = t.value;
  nlohmann::json j;
  j["kind"] = to_string(report.kind);
  j["terms"] = terms;
  j["normalization"] = report.normalization;
  j["lhs"] = report.lhs;
  j["threshold"] = report.threshold;
  j["verdict"] = to_string(report.verdict);
  j["std_err"] = report.std_err ? nlohmann::json(*report.std_err) : nlohmann::json(nullptr);
  return j;
}

}  // namespace mbs::witness
