#include "mbs/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

namespace mbs::fitting {

namespace {

constexpr int kGridEta = 21;
constexpr int kGridN = 26;
constexpr double kGridNMax = 5.0;

double weight_of(const FitPoint& p, Weighting w) { return w == Weighting::InverseVariance ? p.std_err : 1.0; }

Eigen::VectorXd residuals(std::span<const FitPoint> points, const closed_form::CurveModel& model, double eta, double n,
                          Weighting weighting) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto f = closed_form::affine_form(model, points[i].angle);
    const double predicted = 1.0 + eta * (f.a + n * f.b);
    r(static_cast<Eigen::Index>(i)) = (points[i].value - predicted) / weight_of(points[i], weighting);
  }
  return r;
}

void check_points(std::span<const FitPoint> points, Weighting weighting) {
  if (points.size() < 3) throw std::invalid_argument(fmt::format("fit needs at least 3 points, got {}", points.size()));
  for (const auto& p : points) {
    if (!std::isfinite(p.value) || !std::isfinite(p.angle)) throw std::invalid_argument("fit point is not finite");
    if (weighting == Weighting::InverseVariance && !(p.std_err > 0.0)) {
      throw std::invalid_argument("inverse-variance fit needs std_err > 0 at every point");
    }
  }
  const bool all_equal = std::all_of(points.begin(), points.end(),
                                     [&](const FitPoint& p) { return p.value == points.front().value; });
  if (all_equal) throw std::invalid_argument("degenerate fit input: all values are equal");
}

}  // namespace

Eigen::MatrixXd jacobian(std::span<const FitPoint> points, const closed_form::CurveModel& model, double eta, double n,
                         Weighting weighting) {
  Eigen::MatrixXd j(static_cast<Eigen::Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto f = closed_form::affine_form(model, points[i].angle);
    const double w = weight_of(points[i], weighting);
    const auto row = static_cast<Eigen::Index>(i);
    j(row, 0) = -(f.a + n * f.b) / w;
    j(row, 1) = -eta * f.b / w;
  }
  return j;
}

double weighted_sse(std::span<const FitPoint> points, const closed_form::CurveModel& model, double eta, double n,
                    Weighting weighting) {
  return residuals(points, model, eta, n, weighting).squaredNorm();
}

FitResult fit_curve(std::span<const FitPoint> points, const closed_form::CurveModel& model,
                    const FitOptions& options) {
  closed_form::validate(model);
  check_points(points, options.weighting);

  FitResult result;
  result.model = model;

  std::vector<double> grid(kGridEta * kGridN);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < kGridEta * kGridN; ++k) {
    const double eta = static_cast<double>(k / kGridN) / (kGridEta - 1);
    const double n = kGridNMax * static_cast<double>(k % kGridN) / (kGridN - 1);
    grid[static_cast<std::size_t>(k)] = weighted_sse(points, model, eta, n, options.weighting);
  }
  const auto best = static_cast<int>(std::min_element(grid.begin(), grid.end()) - grid.begin());
  Eigen::Vector2d p(static_cast<double>(best / kGridN) / (kGridEta - 1),
                    kGridNMax * static_cast<double>(best % kGridN) / (kGridN - 1));

  auto clamp = [&](Eigen::Vector2d v) {
    v(0) = std::clamp(v(0), 0.0, 1.0);
    v(1) = std::clamp(v(1), 0.0, options.n_upper);
    return v;
  };

  double sse = grid[static_cast<std::size_t>(best)];
  double lambda = 1e-3;
  for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
    if (sse == 0.0) {
      result.converged = true;
      break;
    }
    const Eigen::MatrixXd j = jacobian(points, model, p(0), p(1), options.weighting);
    const Eigen::VectorXd r = residuals(points, model, p(0), p(1), options.weighting);
    const Eigen::Matrix2d h = j.transpose() * j;
    const Eigen::Vector2d g = j.transpose() * r;

    bool accepted = false;
    Eigen::Vector2d candidate = p;
    double candidate_sse = sse;
    while (lambda < 1e16) {
      Eigen::Matrix2d damped = h;
      for (int i = 0; i < 2; ++i) damped(i, i) += lambda * std::max(h(i, i), 1e-12);
      candidate = clamp(p - damped.ldlt().solve(g));
      candidate_sse = weighted_sse(points, model, candidate(0), candidate(1), options.weighting);
      if (candidate_sse < sse) {
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent direction left inside the bounds.
      result.converged = true;
      break;
    }
    const Eigen::Vector2d step = candidate - p;
    const double rel = std::max(std::abs(step(0)) / std::max(std::abs(p(0)), 1e-8),
                                std::abs(step(1)) / std::max(std::abs(p(1)), 1e-8));
    p = candidate;
    sse = candidate_sse;
    lambda = std::max(lambda / 10.0, 1e-12);
    if (rel < options.tolerance) {
      result.converged = true;
      ++result.iterations;
      break;
    }
  }

  result.eta = p(0);
  result.n = p(1);
  result.residual = sse;
  result.at_bound = p(0) <= 0.0 || p(0) >= 1.0 || p(1) <= 0.0 || p(1) >= options.n_upper;

  const Eigen::MatrixXd j = jacobian(points, model, p(0), p(1), options.weighting);
  const Eigen::Matrix2d h = j.transpose() * j;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(h);
  if (lu.isInvertible()) {
    result.covariance = lu.inverse();
    if (options.weighting == Weighting::Uniform && points.size() > 2) {
      result.covariance *= sse / static_cast<double>(points.size() - 2);
    }
  } else {
    result.covariance.setConstant(std::numeric_limits<double>::infinity());
  }
  return result;
}

nlohmann::json fit_report(const FitResult& result) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["model"] = closed_form::convention_id(result.model);
  j["state"] = to_string(result.model.kind);
  j["eta"] = result.eta;
  j["eta_sigma"] = finite_or_null(std::sqrt(result.covariance(0, 0)));
  j["n"] = result.n;
  j["n_sigma"] = finite_or_null(std::sqrt(result.covariance(1, 1)));
  j["covariance"] = {{finite_or_null(result.covariance(0, 0)), finite_or_null(result.covariance(0, 1))},
                     {finite_or_null(result.covariance(1, 0)), finite_or_null(result.covariance(1, 1))}};
  j["residual"] = result.residual;
  j["converged"] = result.converged;
  j["at_bound"] = result.at_bound;
  j["iterations"] = result.iterations;
  return j;
}

}  // namespace mbs::fitting
