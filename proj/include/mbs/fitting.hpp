#pragma once

#include <span>

#include <Eigen/Dense>

#include "json.hpp"

#include "mbs/closed_form.hpp"

namespace mbs::fitting {

struct FitPoint {
  double angle = 0.0;  // radians
  double value = 0.0;
  double std_err = 0.0;
};

enum class Weighting { InverseVariance, Uniform };

struct FitOptions {
  Weighting weighting = Weighting::InverseVariance;
  int max_iterations = 200;
  double tolerance = 1e-8;  // relative parameter change
  double n_upper = 50.0;
};

struct FitResult {
  double eta = 0.0;
  double n = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double residual = 0.0;  // weighted SSE
  bool converged = false;
  bool at_bound = false;
  int iterations = 0;
  closed_form::CurveModel model;
};

/// Weighted least squares of a closed-form curve in (eta, n): coarse grid
/// over [0,1] x [0,5] (21 x 26), then damped Gauss-Newton with parameters
/// clamped to eta in [0,1], n in [0, n_upper].
FitResult fit_curve(std::span<const FitPoint> points, const closed_form::CurveModel& model,
                    const FitOptions& options = {});

/// Weighted residual Jacobian d r / d(eta, n) at the given parameters.
Eigen::MatrixXd jacobian(std::span<const FitPoint> points, const closed_form::CurveModel& model, double eta, double n,
                         Weighting weighting = Weighting::InverseVariance);

double weighted_sse(std::span<const FitPoint> points, const closed_form::CurveModel& model, double eta, double n,
                    Weighting weighting = Weighting::InverseVariance);

nlohmann::json fit_report(const FitResult& result);

}  // namespace mbs::fitting
