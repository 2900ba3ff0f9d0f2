#include "mbs/fock_oracle.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace mbs::fock {

namespace {

constexpr std::size_t kMaxDenseEntries = 60'000'000;

const SectorBlock* find_sector(const FockState& state, int na, int nb) {
  auto it = std::lower_bound(state.sectors.begin(), state.sectors.end(), std::pair{na, nb},
                             [](const SectorBlock& s, const std::pair<int, int>& key) {
                               return std::pair{s.na, s.nb} < key;
                             });
  if (it == state.sectors.end() || it->na != na || it->nb != nb) return nullptr;
  return &*it;
}

int max_arm_total(const FockState& state, Arm arm) {
  int n = 0;
  for (const auto& s : state.sectors) n = std::max(n, arm == Arm::A ? s.na : s.nb);
  return n;
}

void transform_sector(SectorBlock& block, Arm arm, const std::vector<Eigen::MatrixXcd>& maps) {
  if (arm == Arm::A) {
    block.amp = maps[block.na] * block.amp;
  } else {
    block.amp = block.amp * maps[block.nb].transpose();
  }
}

void check_unitary(const Mat2& u) {
  if (!is_unitary(u, 1e-10)) throw std::invalid_argument("analyzer matrix is not unitary");
}

// Binomial thinning matrix B(k, n) = C(n, k) eta^k (1 - eta)^(n - k).
Eigen::MatrixXd thinning_matrix(double eta, int dim) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) {
    if (eta <= 0.0) {
      b(0, n) = 1.0;
      continue;
    }
    if (eta >= 1.0) {
      b(n, n) = 1.0;
      continue;
    }
    const double le = std::log(eta), lq = std::log1p(-eta);
    for (int k = 0; k <= n; ++k) {
      const double lchoose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
      b(k, n) = std::exp(lchoose + k * le + (n - k) * lq);
    }
  }
  return b;
}

struct DenseGrid {
  std::array<int, 4> dims{};
  std::array<std::size_t, 4> strides{};
  std::vector<double> values;

  std::size_t offset(const Occupation& occ) const {
    std::size_t off = 0;
    for (int m = 0; m < 4; ++m) off += static_cast<std::size_t>(occ[m]) * strides[m];
    return off;
  }
};

DenseGrid to_dense(const NumberDistribution& dist) {
  DenseGrid g;
  g.dims = {1, 1, 1, 1};
  for (const auto& [occ, p] : dist.entries) {
    for (int m = 0; m < 4; ++m) g.dims[m] = std::max(g.dims[m], occ[m] + 1);
  }
  std::size_t size = 1;
  for (int m = 3; m >= 0; --m) {
    g.strides[m] = size;
    size *= static_cast<std::size_t>(g.dims[m]);
  }
  if (size > kMaxDenseEntries) {
    throw std::length_error(fmt::format("distribution too large for dense thinning ({} cells); use moments_after_loss",
                                        size));
  }
  g.values.assign(size, 0.0);
  for (const auto& [occ, p] : dist.entries) g.values[g.offset(occ)] += p;
  return g;
}

NumberDistribution from_dense(const DenseGrid& g, double deficit) {
  NumberDistribution out;
  out.deficit = deficit;
  Occupation occ{};
  for (occ[0] = 0; occ[0] < g.dims[0]; ++occ[0])
    for (occ[1] = 0; occ[1] < g.dims[1]; ++occ[1])
      for (occ[2] = 0; occ[2] < g.dims[2]; ++occ[2])
        for (occ[3] = 0; occ[3] < g.dims[3]; ++occ[3]) {
          const double p = g.values[g.offset(occ)];
          if (p > 0.0) out.entries.emplace_back(occ, p);
        }
  return out;
}

// One output line of the thinning along `axis`: the line is addressed by its
// flattened index over the remaining axes.
inline void thin_line(const DenseGrid& in, std::vector<double>& out, int axis, const Eigen::MatrixXd& b,
                      std::size_t line) {
  const std::size_t stride = in.strides[axis];
  const std::size_t dim = static_cast<std::size_t>(in.dims[axis]);
  const std::size_t outer = line / stride, inner = line % stride;
  const std::size_t base = outer * stride * dim + inner;
  for (std::size_t k = 0; k < dim; ++k) {
    double acc = 0.0;
    for (std::size_t n = k; n < dim; ++n) acc += b(k, n) * in.values[base + n * stride];
    out[base + k * stride] = acc;
  }
}

template <bool Parallel>
NumberDistribution apply_loss_impl(const NumberDistribution& dist, const Efficiencies& eta) {
  validate_efficiencies(eta);
  DenseGrid grid = to_dense(dist);
  std::vector<double> scratch(grid.values.size());
  for (int axis = 0; axis < 4; ++axis) {
    if (eta[axis] >= 1.0) continue;
    const Eigen::MatrixXd b = thinning_matrix(eta[axis], grid.dims[axis]);
    const long lines = static_cast<long>(grid.values.size() / static_cast<std::size_t>(grid.dims[axis]));
    if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
      for (long line = 0; line < lines; ++line) thin_line(grid, scratch, axis, b, static_cast<std::size_t>(line));
    } else {
      for (long line = 0; line < lines; ++line) thin_line(grid, scratch, axis, b, static_cast<std::size_t>(line));
    }
    grid.values.swap(scratch);
  }
  return from_dense(grid, dist.deficit);
}

template <bool Parallel>
FockState apply_arm_unitary_impl(const FockState& state, Arm arm, const Mat2& u) {
  check_unitary(u);
  const auto maps = sector_maps(u, max_arm_total(state, arm));
  FockState out = state;
  const long count = static_cast<long>(out.sectors.size());
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long s = 0; s < count; ++s) transform_sector(out.sectors[s], arm, maps);
  } else {
    for (long s = 0; s < count; ++s) transform_sector(out.sectors[s], arm, maps);
  }
  return out;
}

}  // namespace

Complex FockState::amplitude(const Occupation& occ) const {
  for (int v : occ) {
    if (v < 0) return 0.0;
  }
  const SectorBlock* s = find_sector(*this, occ[0] + occ[1], occ[2] + occ[3]);
  return s ? s->amp(occ[0], occ[2]) : Complex(0.0);
}

double FockState::norm_squared() const {
  double total = 0.0;
  for (const auto& s : sectors) total += s.amp.squaredNorm();
  return total;
}

double NumberDistribution::probability(const Occupation& occ) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), occ,
                             [](const auto& e, const Occupation& key) { return e.first < key; });
  return (it != entries.end() && it->first == occ) ? it->second : 0.0;
}

double NumberDistribution::total() const {
  double t = 0.0;
  for (const auto& e : entries) t += e.second;
  return t;
}

Complex coefficient(BellStateKind kind, int n, int m, double gamma) {
  if (m < 0 || m > n) throw std::invalid_argument(fmt::format("coefficient index m={} outside [0, n={}]", m, n));
  if (gamma < 0.0) throw std::invalid_argument("parametric gain must be >= 0");
  const double c = std::cosh(gamma);
  const double magnitude = std::pow(std::tanh(gamma), n) / (c * c);
  const double sign = (coefficient_sign(kind) < 0 && (m % 2 == 1)) ? -1.0 : 1.0;
  return sign * magnitude;
}

double truncation_deficit(double gamma, int n_max) {
  if (n_max < 0) return 1.0;
  const double x = std::tanh(gamma) * std::tanh(gamma);
  // sum_{n > N} (n+1) x^n (1-x)^2 = x^(N+1) [(N+2) - (N+1) x]
  return std::pow(x, n_max + 1) * ((n_max + 2) - (n_max + 1) * x);
}

int recommended_n_max(double gamma, double tol) {
  const double x = std::tanh(gamma) * std::tanh(gamma);
  if (x == 0.0) return 0;
  constexpr int kLimit = 2000;
  std::vector<double> terms(kLimit + 1);
  for (int n = 0; n <= kLimit; ++n) {
    terms[n] = (n + 1) * std::pow(x, n) * (1 - x) * (1 - x) * 4.0 * n * n;
  }
  double tail = 0.0;
  for (int n = kLimit; n >= 1; --n) {
    tail += terms[n];
    if (tail >= tol) return n;
  }
  return 0;
}

FockState build_state(BellStateKind kind, const SourceParams& params, int n_max) {
  validate(params);
  if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  FockState state;
  state.n_max = n_max;
  state.norm_deficit = truncation_deficit(params.gamma, n_max);
  state.sectors.reserve(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    SectorBlock block{n, n, Eigen::MatrixXcd::Zero(n + 1, n + 1)};
    for (int m = 0; m <= n; ++m) {
      // Phi: |n-m>_AH |m>_AV |n-m>_BH |m>_BV;  Psi: |n-m>_AH |m>_AV |m>_BH |n-m>_BV.
      const int bh = is_phi(kind) ? n - m : m;
      block.amp(n - m, bh) = coefficient(kind, n, m, params.gamma);
    }
    state.sectors.push_back(std::move(block));
  }
  return state;
}

std::vector<Eigen::MatrixXcd> sector_maps(const Mat2& u, int n_max) {
  std::vector<Eigen::MatrixXcd> maps;
  maps.reserve(static_cast<std::size_t>(n_max) + 1);
  maps.push_back(Eigen::MatrixXcd::Ones(1, 1));
  for (int n = 1; n <= n_max; ++n) {
    const Eigen::MatrixXcd& prev = maps.back();
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    // Column k is the image of |k, n-k>: a+_H |k-1, n-k> / sqrt(k), or
    // a+_V |0, n-1> / sqrt(n) for k = 0.
    for (int k = 0; k <= n; ++k) {
      const bool add_h = k > 0;
      const int src = add_h ? k - 1 : 0;
      const Complex alpha = add_h ? u(0, 0) : u(0, 1);  // onto H'
      const Complex beta = add_h ? u(1, 0) : u(1, 1);   // onto V'
      const double norm = 1.0 / std::sqrt(static_cast<double>(add_h ? k : n));
      for (int kp = 0; kp < n; ++kp) {
        const Complex x = prev(kp, src);
        if (x == Complex(0.0)) continue;
        t(kp + 1, k) += alpha * std::sqrt(kp + 1.0) * x * norm;
        t(kp, k) += beta * std::sqrt(static_cast<double>(n - kp)) * x * norm;
      }
    }
    maps.push_back(std::move(t));
  }
  return maps;
}

FockState apply_arm_unitary(const FockState& state, Arm arm, const Mat2& u) {
  return apply_arm_unitary_impl<true>(state, arm, u);
}

NumberDistribution number_distribution(const FockState& state) {
  NumberDistribution dist;
  dist.deficit = state.norm_deficit;
  for (const auto& s : state.sectors) {
    for (int ha = 0; ha <= s.na; ++ha) {
      for (int hb = 0; hb <= s.nb; ++hb) {
        const double p = std::norm(s.amp(ha, hb));
        if (p > 0.0) dist.entries.push_back({Occupation{ha, s.na - ha, hb, s.nb - hb}, p});
      }
    }
  }
  std::sort(dist.entries.begin(), dist.entries.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  return dist;
}

NumberDistribution apply_loss(const NumberDistribution& dist, const Efficiencies& eta) {
  return apply_loss_impl<true>(dist, eta);
}

PhotonMoments moments(const NumberDistribution& dist) {
  return moments_after_loss(dist, uniform_efficiency(1.0));
}

PhotonMoments moments_after_loss(const NumberDistribution& dist, const Efficiencies& eta) {
  validate_efficiencies(eta);
  Eigen::Vector4d first = Eigen::Vector4d::Zero();
  Eigen::Matrix4d second = Eigen::Matrix4d::Zero();
  double total = 0.0;
  for (const auto& [occ, p] : dist.entries) {
    const Eigen::Vector4d n(occ[0], occ[1], occ[2], occ[3]);
    total += p;
    first += p * n;
    second += p * n * n.transpose();
  }
  PhotonMoments out;
  out.deficit = dist.deficit;
  if (total <= 0.0) return out;
  first /= total;
  second /= total;

  // Thinned moments: E[k_i] = e_i E[n_i], E[k_i k_j] = e_i e_j E[n_i n_j]
  // for i != j, E[k_i^2] = e_i^2 E[n_i^2] + e_i (1 - e_i) E[n_i].
  Eigen::Vector4d e(eta.data());
  Eigen::Vector4d mean = e.cwiseProduct(first);
  Eigen::Matrix4d raw = (e * e.transpose()).cwiseProduct(second);
  for (int i = 0; i < 4; ++i) raw(i, i) += e(i) * (1.0 - e(i)) * first(i);
  Eigen::Matrix4d cov = raw - mean * mean.transpose();
  for (int i = 0; i < 4; ++i) out.mean[i] = mean(i);
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

double nrf(const NumberDistribution& dist, ModeId i, ModeId j) { return mbs::nrf(moments(dist), i, j); }

PhotonMoments measure(const FockState& state, const Mat2& ua, const Mat2& ub, const Efficiencies& eta) {
  FockState s = apply_arm_unitary(state, Arm::A, ua);
  s = apply_arm_unitary(s, Arm::B, ub);
  return moments_after_loss(number_distribution(s), eta);
}

StokesMoments stokes_moments(const FockState& state, const ArmSettings& settings, const Efficiencies& eta) {
  validate_efficiencies(eta);
  return assemble_stokes_moments([&](const Mat2& ua, const Mat2& ub) { return measure(state, ua, ub, eta); },
                                 settings);
}

Correlators correlators(const FockState& state) {
  Correlators c;
  for (const auto& s : state.sectors) {
    for (int ha = 0; ha <= s.na; ++ha) {
      for (int hb = 0; hb <= s.nb; ++hb) {
        const Complex amp = s.amp(ha, hb);
        if (amp == Complex(0.0)) continue;
        const Occupation occ{ha, s.na - ha, hb, s.nb - hb};
        for (int j = 0; j < 4; ++j) {
          if (occ[j] == 0) continue;
          Occupation lowered = occ;
          lowered[j] -= 1;
          const double fj = std::sqrt(static_cast<double>(occ[j]));
          for (int i = 0; i < 4; ++i) {
            // <psi| a+_i a_j |occ> amp
            Occupation raised = lowered;
            raised[i] += 1;
            c.normal(i, j) += std::conj(state.amplitude(raised)) * amp * fj * std::sqrt(static_cast<double>(raised[i]));
            // <psi| a_i a_j |occ> amp
            if (lowered[i] == 0) continue;
            Occupation twice = lowered;
            twice[i] -= 1;
            c.anomalous(i, j) +=
                std::conj(state.amplitude(twice)) * amp * fj * std::sqrt(static_cast<double>(lowered[i]));
          }
        }
      }
    }
  }
  return c;
}

namespace serial {

FockState apply_arm_unitary(const FockState& state, Arm arm, const Mat2& u) {
  return apply_arm_unitary_impl<false>(state, arm, u);
}

NumberDistribution apply_loss(const NumberDistribution& dist, const Efficiencies& eta) {
  return apply_loss_impl<false>(dist, eta);
}

}  // namespace serial

}  // namespace mbs::fock
