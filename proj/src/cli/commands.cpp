#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "mbs/closed_form.hpp"
#include "mbs/fitting.hpp"
#include "mbs/fock_oracle.hpp"
#include "mbs/gaussian_engine.hpp"
#include "mbs/records_io.hpp"
#include "mbs/witness.hpp"

namespace mbs::cli {

namespace {

using io::format_float;

constexpr std::array<std::pair<ModeId, ModeId>, 4> kCrossPairs{
    {{kAH, kBH}, {kAH, kBV}, {kAV, kBH}, {kAV, kBV}}};

void warn_deficit(double gamma, int n_max, std::ostream& err) {
  const double d = fock::truncation_deficit(gamma, n_max);
  if (d > fock::kDeficitWarning) {
    err << fmt::format("warning: truncation deficit {:.3g} at n_max={} exceeds {:g}\n", d, n_max,
                       fock::kDeficitWarning);
  }
}

double scalar_eta(const RunConfig& c) {
  if (!c.uniform_eta()) throw ConfigError("this command compares against closed forms and needs a single eta");
  return c.efficiencies()[0];
}

std::optional<double> try_value(const std::function<double()>& f) {
  try {
    return f();
  } catch (const UndefinedNrfError&) {
    return std::nullopt;
  }
}

std::string cell(const std::optional<double>& v) { return v ? format_float(*v) : "undefined"; }

void write_json(std::ostream& out, const nlohmann::json& j) { out << round_floats(j).dump(2) << '\n'; }

std::string slurp_path(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(fmt::format("--{} path is required", what));
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {} file '{}'", what, path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

nlohmann::json round_floats(nlohmann::json j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) return nullptr;
    return std::stod(fmt::format("{:.12g}", v));
  }
  if (j.is_object() || j.is_array()) {
    for (auto& item : j) item = round_floats(item);
  }
  return j;
}

int cmd_table1(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const double eta = scalar_eta(c);
  const auto src = c.source();
  const double n = src.mean_photons();
  warn_deficit(src.gamma, c.n_max, err);
  const Mat2 id = Mat2::Identity();
  const auto effs = uniform_efficiency(eta);

  out << fmt::format("# eta={} n_mean={} n_max={}\n", format_float(eta), format_float(n), c.n_max);
  out << "kind,mode_i,mode_j,formula,closed_form,fock,gaussian,max_discrepancy\n";
  for (auto kind : kKinds) {
    const auto fm = fock::measure(fock::build_state(kind, src, c.n_max), id, id, effs);
    const auto gm = gaussian::measure(gaussian::build_gaussian(kind, src), id, id, effs);
    for (const auto& [i, j] : kCrossPairs) {
      const bool paired = paired_mode(kind, i.pol) == j;
      const double cf = closed_form::nrf_pairing(kind, i, j, eta, n);
      const auto fv = try_value([&] { return nrf(fm, i, j); });
      const auto gv = try_value([&] { return nrf(gm, i, j); });
      std::optional<double> disc;
      if (fv && gv) disc = std::max({std::abs(*fv - cf), std::abs(*gv - cf), std::abs(*fv - *gv)});
      out << fmt::format("{},{},{},{},{},{},{},{}\n", to_string(kind), to_string(i), to_string(j),
                         paired ? "1-eta" : "1+n*eta", format_float(cf), cell(fv), cell(gv), cell(disc));
    }
  }
  return kExitOk;
}

int cmd_curve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const double eta = scalar_eta(c);
  const auto model = c.model();
  const auto src = c.source();
  const double n = src.mean_photons();
  const auto angles = c.angle_list();
  const auto effs = uniform_efficiency(eta);
  warn_deficit(src.gamma, c.n_max, err);

  const auto fstate = fock::build_state(model.kind, src, c.n_max);
  const auto gstate = gaussian::build_gaussian(model.kind, src);

  std::vector<mc::SweepPoint> sweep;
  if (c.pulses > 0) {
    mc::EstimateOptions opts;
    opts.resamples = c.resamples;
    opts.seed = c.seed;
    sweep = mc::sweep_curve(model, angles, src, {effs, c.noise_sd}, c.pulses, c.seed, opts, c.n_max);
  }

  out << fmt::format("# convention={}\n", closed_form::convention_id(model));
  out << fmt::format("# state={} eta={} n_mean={} n_max={} pulses={} schmidt_modes={} seed={}\n",
                     to_string(model.kind), format_float(eta), format_float(n), c.n_max, c.pulses, c.schmidt_modes,
                     c.seed);
  out << "angle_deg,closed_form,fock,gaussian,montecarlo_value,montecarlo_err\n";
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const double t = deg_to_rad(angles[k]);
    const auto geo = closed_form::geometry(model, t);
    const Mat2 ua = compose_analyzer(geo.settings.a), ub = compose_analyzer(geo.settings.b);
    const double cf = closed_form::evaluate(model, t, eta, n);
    const auto fv = try_value([&] { return geo.readout.evaluate(fock::measure(fstate, ua, ub, effs)); });
    const auto gv = try_value([&] { return geo.readout.evaluate(gaussian::measure(gstate, ua, ub, effs)); });
    std::string mc_value, mc_err;
    if (!sweep.empty()) {
      mc_value = format_float(sweep[k].estimate.value);
      mc_err = format_float(sweep[k].estimate.std_err);
    }
    out << fmt::format("{},{},{},{},{},{}\n", format_float(angles[k]), format_float(cf), cell(fv), cell(gv), mc_value,
                       mc_err);
  }
  return kExitOk;
}

int cmd_witness(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto kind = c.kind();
  witness::WitnessReport report;
  nlohmann::json extra;
  if (c.records.empty()) {
    const auto src = c.source();
    const auto effs = c.efficiencies();
    report = witness::witness_from_moments(gaussian::stokes_moments(gaussian::build_gaussian(kind, src), {}, effs), kind);
    extra["mode"] = "exact";
    extra["significance"] = 0.0;
    if (c.uniform_eta()) extra["prediction"] = closed_form::witness_prediction(kind, effs[0], src.mean_photons());
  } else {
    std::istringstream in(slurp_path(c.records, "records"));
    const auto records = io::read_records(in);
    witness::RecordOptions opts;
    opts.resamples = c.resamples;
    opts.seed = c.seed;
    opts.significance = c.significance == RunConfig::kUnset ? 3.0 : c.significance;
    report = witness::witness_from_records(records, kind, opts);
    extra["mode"] = "records";
    extra["significance"] = opts.significance;
    extra["pulses"] = records.size();
  }
  (void)err;
  auto j = witness::to_json(report);
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_json(out, j);
  return kExitOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& /*err*/) {
  if (c.pulses < 1) throw ConfigError("simulate needs pulses >= 1");
  const auto kind = c.kind();
  const auto src = c.source();
  const mc::DetectionModel detection{c.efficiencies(), c.noise_sd};
  if (c.setting == "sweep") {
    mc::EstimateOptions opts;
    opts.resamples = c.resamples;
    opts.seed = c.seed;
    const auto angles = c.angle_list();
    const auto points = mc::sweep_curve(c.model(), angles, src, detection, c.pulses, c.seed, opts, c.n_max);
    std::vector<io::SweepRow> rows;
    for (const auto& p : points) rows.push_back({p.angle_deg, p.estimate.value, p.estimate.std_err, p.estimate.pulses});
    io::write_sweep(out, rows);
    return kExitOk;
  }
  std::vector<int> components;
  if (c.setting == "witness") {
    components = {1, 2, 3};
  } else if (c.setting == "S1" || c.setting == "S2" || c.setting == "S3") {
    components = {c.setting[1] - '0'};
  } else {
    throw ConfigError(fmt::format("setting must be S1, S2, S3, witness or sweep, got '{}'", c.setting));
  }
  std::vector<mc::PulseRecord> all;
  for (int comp : components) {
    auto recs = mc::sample_pulses(kind, src, mc::stokes_setting(comp), detection, c.pulses,
                                  stream_seed(c.seed, static_cast<std::uint64_t>(comp - 1)), c.n_max);
    all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  io::write_records(out, all);
  return kExitOk;
}

int cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& /*err*/) {
  const auto model = c.model();
  std::istringstream in(slurp_path(c.sweep, "sweep"));
  const auto rows = io::read_sweep(in);
  std::vector<fitting::FitPoint> points;
  for (const auto& r : rows) points.push_back({deg_to_rad(r.angle_deg), r.value, r.std_err});
  fitting::FitOptions opts;
  opts.weighting = c.weighting_mode();
  const auto result = fitting::fit_curve(points, model, opts);
  auto j = fitting::fit_report(result);
  j["weighting"] = c.weighting;
  j["points"] = points.size();
  write_json(out, j);
  return kExitOk;
}

namespace {

struct ClassStat {
  double max_discrepancy = 0.0;
  double max_allowed = 0.0;
  double worst_margin = -1.0;  // discrepancy - allowed, largest seen
  int comparisons = 0;

  void add(double disc, double allowed) {
    max_discrepancy = std::max(max_discrepancy, disc);
    max_allowed = std::max(max_allowed, allowed);
    if (comparisons == 0 || disc - allowed > worst_margin) worst_margin = disc - allowed;
    ++comparisons;
  }
  bool pass() const { return comparisons == 0 || worst_margin <= 0.0; }
  nlohmann::json to_json() const {
    return {{"max_discrepancy", max_discrepancy}, {"max_allowed", max_allowed}, {"comparisons", comparisons},
            {"pass", pass()}};
  }
};

double stokes_scale(const StokesMoments& m) {
  double s = 1.0;
  for (double v : m.mean) s = std::max(s, std::abs(v));
  return std::max(s, m.cov.cwiseAbs().maxCoeff());
}

// Truncation allowance: ten times the dropped mass, times the moment scale.
double allowance(double threshold, double deficit, double scale) { return threshold + 10.0 * deficit * scale; }

WavePlate random_plate(Rng& rng, Arm arm) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::bernoulli_distribution half(0.5);
  return half(rng) ? WavePlate::half(angle(rng), arm) : WavePlate::quarter(angle(rng), arm);
}

}  // namespace

int cmd_crosscheck(const RunConfig& c, std::ostream& out, std::ostream& err) {
  ClassStat mean_stat, cov_stat, nrf_stat, cf_stat;
  nlohmann::json warnings = nlohmann::json::array();
  nlohmann::json configs = nlohmann::json::array();

  for (int k = 0; k < c.configs; ++k) {
    Rng rng = make_stream(c.seed, static_cast<std::uint64_t>(k));
    const auto kind = kKinds[std::uniform_int_distribution<int>(0, 3)(rng)];
    const SourceParams src{std::uniform_real_distribution<double>(0.0, 1.2)(rng), 1};
    ArmSettings settings;
    std::uniform_int_distribution<int> plate_count(0, 2);
    for (int p = plate_count(rng); p > 0; --p) settings.a.plates.push_back(random_plate(rng, Arm::A));
    for (int p = plate_count(rng); p > 0; --p) settings.b.plates.push_back(random_plate(rng, Arm::B));
    Efficiencies effs{};
    for (auto& e : effs) e = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
    const double scan = std::uniform_real_distribution<double>(0.0, std::numbers::pi)(rng);

    const int n_max = std::max(c.n_max, fock::recommended_n_max(src.gamma));
    const auto fstate = fock::build_state(kind, src, n_max);
    const auto gstate = gaussian::build_gaussian(kind, src);
    const auto fs = fock::stokes_moments(fstate, settings, effs);
    const auto gs = gaussian::stokes_moments(gstate, settings, effs);
    const double allowed = allowance(c.threshold, fstate.norm_deficit, stokes_scale(gs));
    double dmean = 0.0;
    for (int i = 0; i < 8; ++i) dmean = std::max(dmean, std::abs(fs.mean[i] - gs.mean[i]));
    const double dcov = (fs.cov - gs.cov).cwiseAbs().maxCoeff();
    mean_stat.add(dmean, allowed);
    cov_stat.add(dcov, allowed);

    const Mat2 ua = compose_analyzer(settings.a), ub = compose_analyzer(settings.b);
    const auto fm = fock::measure(fstate, ua, ub, effs);
    const auto gm = gaussian::measure(gstate, ua, ub, effs);
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        const auto fv = try_value([&] { return nrf(fm, kModes[i], kModes[j]); });
        const auto gv = try_value([&] { return nrf(gm, kModes[i], kModes[j]); });
        if (fv && gv) nrf_stat.add(std::abs(*fv - *gv), allowance(c.threshold, fstate.norm_deficit, 1.0 + *gv));
      }
    }

    // Closed forms at a single efficiency.
    const double eta0 = effs[0];
    const double n = src.mean_photons();
    const auto uni = uniform_efficiency(eta0);
    const Mat2 id = Mat2::Identity();
    const auto g0 = gaussian::measure(gstate, id, id, uni);
    for (const auto& [i, j] : kCrossPairs) {
      const auto gv = try_value([&] { return nrf(g0, i, j); });
      if (gv) cf_stat.add(std::abs(*gv - closed_form::nrf_pairing(kind, i, j, eta0, n)), c.threshold);
    }
    std::vector<closed_form::CurveModel> models;
    if (kind == BellStateKind::PhiMinus || kind == BellStateKind::PsiMinus) {
      models.push_back({kind, closed_form::Observable::NrfHwp, 1, 0.0, closed_form::Port::Reflect});
      models.push_back({kind, closed_form::Observable::NrfHwp, 1, 0.0, closed_form::Port::Transmit});
      models.push_back({kind, closed_form::Observable::VarHwpPair, 1, scan / 2, closed_form::Port::Reflect});
      models.push_back({kind, closed_form::Observable::VarHwpPair, -1, scan / 3, closed_form::Port::Reflect});
      models.push_back({kind,
                        kind == BellStateKind::PhiMinus ? closed_form::Observable::VarQwpTriplet
                                                        : closed_form::Observable::VarQwpGlobal,
                        1, 0.0, closed_form::Port::Reflect});
    }
    for (const auto& m : models) {
      // The printed QWP triplet formula is reproducible only at its end points.
      std::vector<double> ts{scan};
      if (m.observable == closed_form::Observable::VarQwpTriplet) ts = {0.0, std::numbers::pi / 2};
      for (double t : ts) {
        const auto geo = closed_form::geometry(m, t);
        const auto gv = try_value([&] {
          return geo.readout.evaluate(
              gaussian::measure(gstate, compose_analyzer(geo.settings.a), compose_analyzer(geo.settings.b), uni));
        });
        if (gv) cf_stat.add(std::abs(*gv - closed_form::evaluate(m, t, eta0, n)), c.threshold);
      }
    }

    configs.push_back({{"kind", to_string(kind)},
                       {"gamma", src.gamma},
                       {"n_max", n_max},
                       {"deficit", fstate.norm_deficit},
                       {"stokes_mean", dmean},
                       {"stokes_cov", dcov}});
  }

  // The configured state itself, at the configured truncation.
  nlohmann::json configured;
  {
    const auto kind = c.kind();
    const auto src = c.source();
    const auto effs = c.efficiencies();
    const auto fstate = fock::build_state(kind, src, c.n_max);
    const auto gstate = gaussian::build_gaussian(kind, src);
    const auto fs = fock::stokes_moments(fstate, {}, effs);
    const auto gs = gaussian::stokes_moments(gstate, {}, effs);
    double dmean = 0.0;
    for (int i = 0; i < 8; ++i) dmean = std::max(dmean, std::abs(fs.mean[i] - gs.mean[i]));
    const double dcov = (fs.cov - gs.cov).cwiseAbs().maxCoeff();
    const bool truncated = fstate.norm_deficit > fock::kDeficitWarning;
    if (truncated) {
      const auto msg = fmt::format("truncation deficit {:.3g} at n_max={} exceeds {:g}", fstate.norm_deficit, c.n_max,
                                   fock::kDeficitWarning);
      warnings.push_back(msg);
      err << "warning: " << msg << '\n';
    }
    const Mat2 id = Mat2::Identity();
    const auto fm = fock::measure(fstate, id, id, effs);
    const auto gm = gaussian::measure(gstate, id, id, effs);
    nlohmann::json nrfs = nlohmann::json::array();
    for (const auto& [i, j] : kCrossPairs) {
      const auto fv = try_value([&] { return nrf(fm, i, j); });
      const auto gv = try_value([&] { return nrf(gm, i, j); });
      nlohmann::json e{{"pair", to_string(i) + "-" + to_string(j)}};
      e["fock"] = fv ? nlohmann::json(*fv) : nlohmann::json(nullptr);
      e["gaussian"] = gv ? nlohmann::json(*gv) : nlohmann::json(nullptr);
      e["undefined"] = !(fv && gv);
      nrfs.push_back(e);
    }
    const double allowed = allowance(c.threshold, fstate.norm_deficit, stokes_scale(gs));
    configured = {{"kind", to_string(kind)},
                  {"gamma", src.gamma},
                  {"n_max", c.n_max},
                  {"deficit", fstate.norm_deficit},
                  {"truncated", truncated},
                  {"stokes_mean", dmean},
                  {"stokes_cov", dcov},
                  {"max_allowed", allowed},
                  {"nrf", nrfs}};
    // A truncated configuration is reported, not judged.
    configured["pass"] = truncated || std::max(dmean, dcov) <= allowed;
  }

  const bool pass = mean_stat.pass() && cov_stat.pass() && nrf_stat.pass() && cf_stat.pass() &&
                    configured["pass"].get<bool>();
  nlohmann::json report{{"seed", c.seed},
                        {"configs", c.configs},
                        {"threshold", c.threshold},
                        {"classes",
                         {{"stokes_mean", mean_stat.to_json()},
                          {"stokes_cov", cov_stat.to_json()},
                          {"nrf", nrf_stat.to_json()},
                          {"closed_form", cf_stat.to_json()}}},
                        {"random_configs", configs},
                        {"configured", configured},
                        {"warnings", warnings},
                        {"pass", pass}};
  write_json(out, report);
  return pass ? kExitOk : kExitCrosscheck;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Macroscopic Bell state engines: closed forms, Fock and Gaussian moments, pulse simulation"};
  app.set_config("--config", "", "flat key=value configuration file");
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  RunConfig config;
  add_options(app, config);

  using Command = int (*)(const RunConfig&, std::ostream&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands{
      {"table1", "NRF table for all states and cross-arm pairings", cmd_table1},
      {"curve", "closed-form, engine and Monte-Carlo curve over plate angles", cmd_curve},
      {"witness", "separability witness from exact moments or pulse records", cmd_witness},
      {"simulate", "pulse records CSV", cmd_simulate},
      {"fit", "fit (eta, n) to a sweep CSV", cmd_fit},
      {"crosscheck", "engine equivalence suite", cmd_crosscheck},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) subs.push_back(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    const auto fn = std::get<2>(commands[k]);
    try {
      validate(config);
      std::ostringstream buffer;
      const int code = fn(config, buffer, err);
      if (config.output.empty()) {
        out << buffer.str();
      } else {
        std::ofstream file(config.output);
        if (!file) throw ConfigError(fmt::format("cannot write '{}'", config.output));
        file << buffer.str();
      }
      return code;
    } catch (const io::SchemaError& e) {
      err << "schema error in column '" << e.column() << "': " << e.what() << '\n';
      return kExitInvalid;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitInvalid;
    }
  }
  return kExitInvalid;
}

}  // namespace mbs::cli
