#include "mbs/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace mbs::closed_form {

namespace {

constexpr double kPi = std::numbers::pi;

void check_params(double eta, double n) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument(fmt::format("eta {} outside [0, 1]", eta));
  if (!(n >= 0.0)) throw std::invalid_argument(fmt::format("mean photon number {} must be >= 0", n));
}

double sign_of(int branch) { return branch >= 0 ? 1.0 : -1.0; }

// The default geometry reads the reflected arm-B port, which is the transmitted
// port of the printed formula with the plate turned by a further 45 degrees.
double formula_angle(const CurveModel& model, double angle) {
  return model.port == Port::Reflect ? angle + kPi / 4 : angle;
}

// Scan angle origin of the rotating arm-B quarter-wave plate for the
// S3 - S(phi) curve: the plate sits at phi - 45 degrees.
constexpr double kQwpTripletOffset = -kPi / 4;

}  // namespace

double nrf_pairing(BellStateKind kind, ModeId i, ModeId j, double eta, double n) {
  check_params(eta, n);
  if (i.arm == j.arm) {
    throw std::invalid_argument(fmt::format("pairing ({}, {}) is not cross-arm", to_string(i), to_string(j)));
  }
  const ModeId a = i.arm == Arm::A ? i : j;
  const ModeId b = i.arm == Arm::A ? j : i;
  const bool paired = paired_mode(kind, a.pol) == b;
  return paired ? 1.0 - eta : 1.0 + n * eta;
}

double nrf_hwp(BellStateKind kind, double theta, double eta, double n) {
  check_params(eta, n);
  if (kind == BellStateKind::PsiMinus) {
    const double c = std::cos(2 * theta);
    return 1.0 + eta * ((1.0 + n) * c * c - 1.0);
  }
  if (kind == BellStateKind::PhiMinus) {
    const double s = std::sin(2 * theta);
    return 1.0 + eta * ((1.0 + n) * s * s - 1.0);
  }
  throw std::invalid_argument(fmt::format("no HWP NRF formula for {}", to_string(kind)));
}

double var_hwp_triplet(double theta_a, double theta_b, int branch, double eta, double n) {
  check_params(eta, n);
  return 1.0 + eta * (n + sign_of(branch) * (1.0 + n) * std::cos(4 * (theta_a + theta_b)));
}

double var_qwp_triplet(double phi, double eta, double n) {
  check_params(eta, n);
  return 1.0 + n * eta - ((1.0 + n) * eta / 4.0) * (1.0 - 4.0 * std::cos(2 * phi) - std::cos(4 * phi));
}

double var_hwp_singlet(double theta_a, double theta_b, int branch, double eta, double n) {
  check_params(eta, n);
  return 1.0 + eta * (n - sign_of(branch) * (1.0 + n) * std::cos(4 * (theta_a - theta_b)));
}

double witness_prediction(BellStateKind /*kind*/, double eta, double n) {
  check_params(eta, n);
  return 3.0 * (1.0 - eta);
}

std::string to_string(Observable obs) {
  switch (obs) {
    case Observable::NrfHwp: return "nrf_hwp";
    case Observable::VarHwpPair: return "var_hwp_pair";
    case Observable::VarQwpTriplet: return "var_qwp_triplet";
    case Observable::VarQwpGlobal: return "var_qwp_global";
  }
  return "?";
}

Observable observable_from_string(std::string_view text) {
  for (auto o : {Observable::NrfHwp, Observable::VarHwpPair, Observable::VarQwpTriplet, Observable::VarQwpGlobal}) {
    if (to_string(o) == text) return o;
  }
  throw std::invalid_argument(fmt::format(
      "unknown model '{}' (expected nrf_hwp, var_hwp_pair, var_qwp_triplet or var_qwp_global)", text));
}

std::string to_string(Port port) { return port == Port::Transmit ? "transmit" : "reflect"; }

Port port_from_string(std::string_view text) {
  if (text == "transmit") return Port::Transmit;
  if (text == "reflect") return Port::Reflect;
  throw std::invalid_argument(fmt::format("unknown port '{}' (expected transmit or reflect)", text));
}

void validate(const CurveModel& model) {
  const auto k = model.kind;
  bool ok = false;
  switch (model.observable) {
    case Observable::NrfHwp:
    case Observable::VarHwpPair: ok = k == BellStateKind::PhiMinus || k == BellStateKind::PsiMinus; break;
    case Observable::VarQwpTriplet: ok = k == BellStateKind::PhiMinus; break;
    case Observable::VarQwpGlobal: ok = k == BellStateKind::PsiMinus; break;
  }
  if (!ok) {
    throw std::invalid_argument(
        fmt::format("no closed-form curve '{}' for state {}", to_string(model.observable), to_string(k)));
  }
}

double evaluate(const CurveModel& model, double angle, double eta, double n) {
  validate(model);
  switch (model.observable) {
    case Observable::NrfHwp: return nrf_hwp(model.kind, formula_angle(model, angle), eta, n);
    case Observable::VarHwpPair:
      return model.kind == BellStateKind::PhiMinus
                 ? var_hwp_triplet(model.base, model.base + angle, model.branch, eta, n)
                 : var_hwp_singlet(model.base, model.base + angle, model.branch, eta, n);
    case Observable::VarQwpTriplet: return var_qwp_triplet(angle, eta, n);
    case Observable::VarQwpGlobal: return var_hwp_singlet(angle, angle, +1, eta, n);
  }
  return 0.0;
}

AffineForm affine_form(const CurveModel& model, double angle) {
  validate(model);
  switch (model.observable) {
    case Observable::NrfHwp: {
      const double t = formula_angle(model, angle);
      const double w = model.kind == BellStateKind::PsiMinus ? std::pow(std::cos(2 * t), 2) : std::pow(std::sin(2 * t), 2);
      return {w - 1.0, w};
    }
    case Observable::VarHwpPair: {
      const double s = sign_of(model.branch);
      if (model.kind == BellStateKind::PhiMinus) {
        const double x = s * std::cos(4 * (2 * model.base + angle));
        return {x, 1.0 + x};
      }
      const double x = -s * std::cos(4 * angle);
      return {x, 1.0 + x};
    }
    case Observable::VarQwpTriplet: {
      const double q = (1.0 - 4.0 * std::cos(2 * angle) - std::cos(4 * angle)) / 4.0;
      return {-q, 1.0 - q};
    }
    case Observable::VarQwpGlobal: return {-1.0, 0.0};
  }
  return {};
}

Geometry geometry(const CurveModel& model, double angle) {
  validate(model);
  Geometry g;
  switch (model.observable) {
    case Observable::NrfHwp:
      g.settings.b.plates = {WavePlate::half(angle, Arm::B)};
      g.readout = Readout::nrf(kAH, model.port == Port::Transmit ? kBH : kBV);
      break;
    case Observable::VarHwpPair:
      g.settings.a.plates = {WavePlate::half(model.base, Arm::A)};
      g.settings.b.plates = {WavePlate::half(model.base + angle, Arm::B)};
      g.readout = Readout::stokes_pair(model.branch);
      break;
    case Observable::VarQwpTriplet:
      g.settings.a.plates = {WavePlate::quarter(kPi / 4, Arm::A)};
      g.settings.b.plates = {WavePlate::quarter(angle + kQwpTripletOffset, Arm::B)};
      g.readout = Readout::stokes_pair(-1);
      break;
    case Observable::VarQwpGlobal:
      g.settings.a.plates = {WavePlate::quarter(angle, Arm::A)};
      g.settings.b.plates = {WavePlate::quarter(angle, Arm::B)};
      g.readout = Readout::stokes_pair(+1);
      break;
  }
  return g;
}

std::string convention_id(const CurveModel& model) {
  validate(model);
  switch (model.observable) {
    case Observable::NrfHwp:
      return model.port == Port::Transmit ? "nrf_hwp:A_transmit/B_transmit:hwp_b=theta:formula_angle=theta"
                                          : "nrf_hwp:A_transmit/B_reflect:hwp_b=theta:formula_angle=theta+45";
    case Observable::VarHwpPair:
      return fmt::format("var_hwp_pair:hwp_a={:g}:hwp_b={:g}+theta:readout=Sa{}Sb", rad_to_deg(model.base),
                         rad_to_deg(model.base), model.branch >= 0 ? '+' : '-');
    case Observable::VarQwpTriplet: return "var_qwp_triplet:qwp_a=45:qwp_b=phi-45:readout=Sa-Sb";
    case Observable::VarQwpGlobal: return "var_qwp_global:qwp_a=phi:qwp_b=phi:readout=Sa+Sb";
  }
  return "?";
}

CurveStats curve_stats(const CurveModel& model, double eta, double n) {
  // Every printed curve has period pi (in fact pi/2 for most); the grid steps
  // by 1/8 degree so all multiples of 22.5 degrees are sampled exactly.
  constexpr int kSteps = 1440;
  CurveStats st;
  st.min = std::numeric_limits<double>::infinity();
  st.max = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kSteps; ++k) {
    const double v = evaluate(model, kPi * k / kSteps, eta, n);
    st.min = std::min(st.min, v);
    st.max = std::max(st.max, v);
  }
  st.visibility = (st.max + st.min) > 0 ? (st.max - st.min) / (st.max + st.min) : 0.0;
  st.squeezing_db = to_db(st.min);
  return st;
}

double to_db(double value) { return -10.0 * std::log10(value); }

}  // namespace mbs::closed_form
