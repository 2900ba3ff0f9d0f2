#pragma once

// Printed closed-form predictions for the macroscopic Bell states and the
// convention ledger that maps each formula angle onto a physical analyzer
// geometry.

#include <string>
#include <vector>

#include "mbs/modes.hpp"

namespace mbs::closed_form {

/// NRF for the cross-arm pairing (i, j): 1 - eta for paired modes, 1 + n eta otherwise.
double nrf_pairing(BellStateKind kind, ModeId i, ModeId j, double eta, double n);

/// NRF[N_AH, N_B(theta)] behind a half-wave plate in arm B.
///   PsiMinus: 1 + eta[(1+n) cos^2 2t - 1];  PhiMinus: cos -> sin.
double nrf_hwp(BellStateKind kind, double theta, double eta, double n);

/// Var[S^a(ta) +- S^b(tb)] / <S0^a + S0^b> for PhiMinus:
///   1 + eta[n +- (1+n) cos 4(ta + tb)].
double var_hwp_triplet(double theta_a, double theta_b, int branch, double eta, double n);

/// Var[S3^a - S^b(phi)] / <S0^a + S0^b> for PhiMinus, as printed:
///   1 + n eta - ((1+n) eta / 4) [1 - 4 cos 2phi - cos 4phi].
double var_qwp_triplet(double phi, double eta, double n);

/// Var[S^a(ta) +- S^b(tb)] / <S0^a + S0^b> for PsiMinus:
///   1 + eta[n -+ (1+n) cos 4(ta - tb)].
double var_hwp_singlet(double theta_a, double theta_b, int branch, double eta, double n);

/// Separability-condition value at the optimal settings: 3 (1 - eta).
double witness_prediction(BellStateKind kind, double eta, double n);

enum class Observable {
  NrfHwp,         // HWP in arm B, NRF between A transmit and one arm-B port
  VarHwpPair,     // HWPs at base (arm A) and base + theta (arm B)
  VarQwpTriplet,  // S3 in arm A, rotating QWP in arm B
  VarQwpGlobal,   // identical QWP rotation in both arms
};

enum class Port { Transmit, Reflect };

struct CurveModel {
  BellStateKind kind = BellStateKind::PsiMinus;
  Observable observable = Observable::NrfHwp;
  int branch = +1;        // +-: sign of S^b in VarHwpPair
  double base = 0.0;      // arm-A plate angle for VarHwpPair, radians
  Port port = Port::Reflect;  // arm-B port for NrfHwp
};

std::string to_string(Observable obs);
Observable observable_from_string(std::string_view text);
std::string to_string(Port port);
Port port_from_string(std::string_view text);

/// Throws std::invalid_argument if no printed formula covers the model.
void validate(const CurveModel& model);

/// Closed-form value at scan angle `angle` (radians).
double evaluate(const CurveModel& model, double angle, double eta, double n);

/// Every supported curve has the form 1 + eta (a + n b).
struct AffineForm {
  double a = 0.0;
  double b = 0.0;
};
AffineForm affine_form(const CurveModel& model, double angle);

/// Physical analyzers and readout realizing a model at scan angle `angle`.
struct Geometry {
  ArmSettings settings;
  Readout readout;
};
Geometry geometry(const CurveModel& model, double angle);

/// Identifier of the formula-to-geometry mapping, stamped on curve outputs.
std::string convention_id(const CurveModel& model);

struct CurveStats {
  double min = 0.0;
  double max = 0.0;
  double visibility = 0.0;
  double squeezing_db = 0.0;
};
CurveStats curve_stats(const CurveModel& model, double eta, double n);

/// -10 log10(value).
double to_db(double value);

}  // namespace mbs::closed_form
