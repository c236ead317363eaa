#include "cavlock/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "cavlock/analysis.hpp"
#include "cavlock/discretize.hpp"
#include "cavlock/errors.hpp"
#include "cavlock/freq_csv.hpp"
#include "cavlock/model_io.hpp"
#include "cavlock/reduction.hpp"
#include "cavlock/rng.hpp"

namespace cavlock {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Reads `key` from `obj` into `out` when present, with a typed error otherwise.
template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError("config: '" + where + "." + key + "' has the wrong type");
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) throw InputError(std::string("config: '") + key + "' must be an object");
  return doc.at(key);
}

const char* mode_name(AntialiasMode m) {
  switch (m) {
    case AntialiasMode::kProduct:
      return "product";
    case AntialiasMode::kSeries:
      return "series";
    case AntialiasMode::kNone:
      return "none";
  }
  return "none";
}

AntialiasMode parse_mode(const std::string& s) {
  if (s == "product") return AntialiasMode::kProduct;
  if (s == "series") return AntialiasMode::kSeries;
  if (s == "none") return AntialiasMode::kNone;
  throw InputError("config: antialias.mode must be product, series or none (got '" + s + "')");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json spectrum_json(const std::vector<Complex>& s) {
  json out = json::array();
  for (const Complex& l : s) out.push_back(json::array({l.real(), l.imag()}));
  return out;
}

std::vector<Complex> sorted(std::vector<Complex> s) {
  std::sort(s.begin(), s.end(), [](const Complex& a, const Complex& b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() < b.imag();
  });
  return s;
}

json margins_json(const MarginReport& r) {
  json crossings_g = json::array(), crossings_p = json::array();
  for (const auto& c : r.gain_crossings) crossings_g.push_back({{"freq_hz", c.freq_hz}, {"phase_margin_deg", c.margin}});
  for (const auto& c : r.phase_crossings) crossings_p.push_back({{"freq_hz", c.freq_hz}, {"gain_margin_db", c.margin}});
  return {{"gain_margin_db", finite_or_null(r.gain_margin_db)},
          {"phase_margin_deg", finite_or_null(r.phase_margin_deg)},
          {"gain_crossover_hz", optional_number(r.gain_crossover_hz)},
          {"phase_crossover_hz", optional_number(r.phase_crossover_hz)},
          {"gain_crossings", crossings_g},
          {"phase_crossings", crossings_p}};
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void write_json(const PipelineConfig& cfg, const char* name, const json& doc) {
  write_text_file(cfg.output(name), dump_json(doc));
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p))
    throw InputError(std::string("missing ") + what + ": " + p.string() + " (run the earlier stage first)");
}

StateSpaceModel load_model(const fs::path& p, const char* what) {
  require_file(p, what);
  return read_continuous_model(p);
}

DiscreteStateSpaceModel load_discrete(const fs::path& p, const char* what) {
  require_file(p, what);
  return read_discrete_model(p);
}

StateSpaceModel plant_siso(const StateSpaceModel& plant) {
  if (plant.inputs() != 1 || plant.outputs() != 1)
    throw InputError("plant model must be SISO (u -> y)");
  return plant;
}

}  // namespace

Complex discrete_loop_response(const DiscreteStateSpaceModel& plant_d,
                               const DiscreteStateSpaceModel& controller_d, double omega) {
  const double ts = controller_d.ts();
  const Complex z = std::exp(Complex(0.0, omega * ts));
  const Complex p = eval_response(plant_d, omega)(0, 0);
  const CMatrix c = eval_response(controller_d, omega);
  // Front end: y1 = y, y2 = trapezoidal integral of y.
  const Complex integ = ts * (z + 1.0) / (2.0 * (z - 1.0));
  const Complex ctrl = c(0, 0) + c(0, 1) * integ;
  // Stored controllers act in positive feedback; the loop gain uses u = -C' y.
  return -ctrl * p;
}

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  cfg.sysid.model_order = 13;
  cfg.sysid.weighting = SampleWeighting::kRelative;
  cfg.sysid.strictly_proper = true;
  cfg.simulation.noise.process_std = 1e-5;
  cfg.simulation.noise.sensor_std = 1e-3;
  cfg.simulation.noise.integral_std = 0.0;
  return cfg;
}

void PipelineConfig::validate() const {
  if (!(ts > 0.0) || !std::isfinite(ts)) throw InputError("config: ts must be positive");
  cavity.validate();
  synthetic.validate();
  sysid.validate();
  design.validate();
  if (antialias.order < 1) throw InputError("config: antialias.order must be >= 1");
  if (!(antialias.corner_hz > 0.0)) throw InputError("config: antialias.corner_hz must be positive");
  if (target_order < 1) throw InputError("config: reduction.target_order must be >= 1");
  if (!(analysis.f_min_hz > 0.0) || !(analysis.f_max_hz > analysis.f_min_hz) || analysis.points < 2)
    throw InputError("config: analysis grid requires 0 < f_min_hz < f_max_hz and points >= 2");
  if (discretization != "zoh" && discretization != "tustin")
    throw InputError("config: discretization must be zoh or tustin");
  if (!(simulation.duration_s > 0.0)) throw InputError("config: simulation.duration_s must be positive");
  if (simulation.plant_substeps < 1) throw InputError("config: simulation.plant_substeps must be >= 1");
  if (!(simulation.steady_state_fraction > 0.0))
    throw InputError("config: simulation.steady_state_fraction must be positive");
  simulation.noise.validate();
}

fs::path PipelineConfig::resolve(const fs::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

fs::path PipelineConfig::output(const std::string& name) const { return out_dir / name; }

PipelineConfig config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw InputError("config: top level must be an object");
  PipelineConfig cfg = PipelineConfig::defaults();
  cfg.base_dir = base_dir;

  std::string s;
  const json& paths = section(doc, "paths");
  s = cfg.frequency_data.string();
  read(paths, "frequency_data", s, "paths");
  cfg.frequency_data = s;
  s = cfg.out_dir.string();
  read(paths, "out_dir", s, "paths");
  cfg.out_dir = s;

  read(doc, "seed", cfg.seed, "");
  read(doc, "ts", cfg.ts, "");
  read(doc, "discretization", cfg.discretization, "");

  const json& cav = section(doc, "cavity");
  if (cav.contains("kappa_half_hz")) {
    // Convenience: total decay rate given as the corner frequency kappa/2 in Hz.
    double corner = 0.0;
    read(cav, "kappa_half_hz", corner, "cavity");
    const double kappa = 2.0 * kTwoPi * corner;
    cfg.cavity.kappa0 = 0.5 * kappa;
    cfg.cavity.kappa1 = 0.3 * kappa;
    cfg.cavity.kappaL = 0.2 * kappa;
  }
  read(cav, "kappa0", cfg.cavity.kappa0, "cavity");
  read(cav, "kappa1", cfg.cavity.kappa1, "cavity");
  read(cav, "kappaL", cfg.cavity.kappaL, "cavity");
  read(cav, "alpha", cfg.cavity.alpha, "cavity");
  read(cav, "phi", cfg.cavity.phi, "cavity");
  read(cav, "k2", cfg.cavity.k2, "cavity");
  read(cav, "beta", cfg.cavity.beta, "cavity");

  const json& det = section(doc, "detuning");
  read(det, "q", cfg.detuning.q, "detuning");
  read(det, "n_index", cfg.detuning.n_index, "detuning");
  read(det, "length_m", cfg.detuning.length_m, "detuning");
  read(det, "omega_laser", cfg.detuning.omega_laser, "detuning");
  read(det, "c", cfg.detuning.c, "detuning");

  const json& syn = section(doc, "synthetic");
  if (syn.contains("modes")) {
    cfg.synthetic.modes.clear();
    if (!syn.at("modes").is_array()) throw InputError("config: synthetic.modes must be an array");
    for (const json& m : syn.at("modes")) {
      ResonantMode mode;
      read(m, "freq_hz", mode.freq_hz, "synthetic.modes");
      read(m, "damping", mode.damping, "synthetic.modes");
      read(m, "gain", mode.gain, "synthetic.modes");
      cfg.synthetic.modes.push_back(mode);
    }
  }
  read(syn, "f_min_hz", cfg.grid.f_min_hz, "synthetic");
  read(syn, "f_max_hz", cfg.grid.f_max_hz, "synthetic");
  read(syn, "points", cfg.grid.points, "synthetic");
  read(syn, "relative_noise", cfg.grid.relative_noise, "synthetic");

  const json& id = section(doc, "sysid");
  read(id, "model_order", cfg.sysid.model_order, "sysid");
  read(id, "block_rows", cfg.sysid.block_rows, "sysid");
  read(id, "use_bilinear_map", cfg.sysid.use_bilinear_map, "sysid");
  read(id, "bilinear_scale", cfg.sysid.bilinear_scale, "sysid");
  read(id, "rank_tol", cfg.sysid.rank_tol, "sysid");
  read(id, "allow_unstable", cfg.sysid.allow_unstable, "sysid");
  read(id, "strictly_proper", cfg.sysid.strictly_proper, "sysid");
  if (id.contains("weighting")) {
    read(id, "weighting", s, "sysid");
    if (s == "uniform")
      cfg.sysid.weighting = SampleWeighting::kUniform;
    else if (s == "relative")
      cfg.sysid.weighting = SampleWeighting::kRelative;
    else
      throw InputError("config: sysid.weighting must be uniform or relative");
  }

  const json& aa = section(doc, "antialias");
  read(aa, "order", cfg.antialias.order, "antialias");
  read(aa, "corner_hz", cfg.antialias.corner_hz, "antialias");
  if (aa.contains("mode")) {
    read(aa, "mode", s, "antialias");
    cfg.antialias.mode = parse_mode(s);
  }

  const json& dp = section(doc, "design");
  read(dp, "eps1", cfg.design.eps1, "design");
  read(dp, "eps2", cfg.design.eps2, "design");
  read(dp, "eps3", cfg.design.eps3, "design");
  read(dp, "r", cfg.design.r, "design");
  read(dp, "q_bar", cfg.design.q_bar, "design");
  read(dp, "z_weight", cfg.design.z_weight, "design");

  read(section(doc, "reduction"), "target_order", cfg.target_order, "reduction");

  const json& an = section(doc, "analysis");
  read(an, "f_min_hz", cfg.analysis.f_min_hz, "analysis");
  read(an, "f_max_hz", cfg.analysis.f_max_hz, "analysis");
  read(an, "points", cfg.analysis.points, "analysis");

  const json& sim = section(doc, "simulation");
  read(sim, "duration_s", cfg.simulation.duration_s, "simulation");
  read(sim, "step_amplitude", cfg.simulation.step_amplitude, "simulation");
  read(sim, "plant_substeps", cfg.simulation.plant_substeps, "simulation");
  read(sim, "steady_state_fraction", cfg.simulation.steady_state_fraction, "simulation");
  if (sim.contains("injection")) {
    read(sim, "injection", s, "simulation");
    if (s == "plant_input")
      cfg.simulation.injection = Injection::kPlantInput;
    else if (s == "reference")
      cfg.simulation.injection = Injection::kReference;
    else
      throw InputError("config: simulation.injection must be plant_input or reference");
  }
  const json& noise = section(sim, "noise");
  read(noise, "process_std", cfg.simulation.noise.process_std, "simulation.noise");
  read(noise, "sensor_std", cfg.simulation.noise.sensor_std, "simulation.noise");
  read(noise, "integral_std", cfg.simulation.noise.integral_std, "simulation.noise");
  read(noise, "scale_process_by_rate", cfg.simulation.noise.scale_process_by_rate,
       "simulation.noise");

  cfg.validate();
  return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
  json modes = json::array();
  for (const auto& m : cfg.synthetic.modes)
    modes.push_back({{"freq_hz", m.freq_hz}, {"damping", m.damping}, {"gain", m.gain}});
  return {
      {"seed", cfg.seed},
      {"ts", cfg.ts},
      {"discretization", cfg.discretization},
      {"paths", {{"frequency_data", cfg.frequency_data.generic_string()}, {"out_dir", cfg.out_dir.generic_string()}}},
      {"cavity",
       {{"kappa0", cfg.cavity.kappa0},
        {"kappa1", cfg.cavity.kappa1},
        {"kappaL", cfg.cavity.kappaL},
        {"alpha", cfg.cavity.alpha},
        {"phi", cfg.cavity.phi},
        {"k2", cfg.cavity.k2},
        {"beta", cfg.cavity.beta}}},
      {"detuning",
       {{"q", cfg.detuning.q},
        {"n_index", cfg.detuning.n_index},
        {"length_m", cfg.detuning.length_m},
        {"omega_laser", cfg.detuning.omega_laser},
        {"c", cfg.detuning.c}}},
      {"synthetic",
       {{"modes", modes},
        {"f_min_hz", cfg.grid.f_min_hz},
        {"f_max_hz", cfg.grid.f_max_hz},
        {"points", cfg.grid.points},
        {"relative_noise", cfg.grid.relative_noise}}},
      {"sysid",
       {{"model_order", cfg.sysid.model_order},
        {"block_rows", cfg.sysid.block_rows},
        {"use_bilinear_map", cfg.sysid.use_bilinear_map},
        {"bilinear_scale", cfg.sysid.bilinear_scale},
        {"rank_tol", cfg.sysid.rank_tol},
        {"weighting", cfg.sysid.weighting == SampleWeighting::kRelative ? "relative" : "uniform"},
        {"strictly_proper", cfg.sysid.strictly_proper},
        {"allow_unstable", cfg.sysid.allow_unstable}}},
      {"antialias",
       {{"order", cfg.antialias.order},
        {"corner_hz", cfg.antialias.corner_hz},
        {"mode", mode_name(cfg.antialias.mode)}}},
      {"design",
       {{"eps1", cfg.design.eps1},
        {"eps2", cfg.design.eps2},
        {"eps3", cfg.design.eps3},
        {"r", cfg.design.r},
        {"q_bar", cfg.design.q_bar},
        {"z_weight", cfg.design.z_weight}}},
      {"reduction", {{"target_order", cfg.target_order}}},
      {"analysis",
       {{"f_min_hz", cfg.analysis.f_min_hz},
        {"f_max_hz", cfg.analysis.f_max_hz},
        {"points", cfg.analysis.points}}},
      {"simulation",
       {{"duration_s", cfg.simulation.duration_s},
        {"step_amplitude", cfg.simulation.step_amplitude},
        {"plant_substeps", cfg.simulation.plant_substeps},
        {"injection", cfg.simulation.injection == Injection::kReference ? "reference" : "plant_input"},
        {"steady_state_fraction", cfg.simulation.steady_state_fraction},
        {"noise",
         {{"process_std", cfg.simulation.noise.process_std},
          {"sensor_std", cfg.simulation.noise.sensor_std},
          {"integral_std", cfg.simulation.noise.integral_std},
          {"scale_process_by_rate", cfg.simulation.noise.scale_process_by_rate}}}}},
  };
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("config file not found: " + path.string());
  const json doc = read_json_file(path);
  fs::path base = path.parent_path();
  if (base.empty()) base = ".";
  return config_from_json(doc, base);
}

std::vector<Check> run_synth(const PipelineConfig& cfg, const fs::path& csv_out, std::ostream& log) {
  SyntheticGrid grid = cfg.grid;
  grid.seed = cfg.seed;
  const StateSpaceModel plant = synthetic_plant(cfg.synthetic);
  write_frequency_csv(csv_out, sample_response(plant, grid));
  log << "synth: " << grid.points << " samples of a " << plant.states() << "-state plant ("
      << cfg.synthetic.modes.size() << " modes) -> " << csv_out.string() << "\n";
  return {};
}

std::vector<Check> run_cavity(const PipelineConfig& cfg, std::ostream& log) {
  const StateSpaceModel model = build_cavity_model(cfg.cavity);
  const double corner = cfg.cavity.kappa() / 2.0;
  const double dc = cavity_dc_gain(cfg.cavity);
  write_json(cfg, artifact::kCavityModel, model_to_json(model));
  json report = {{"kappa", cfg.cavity.kappa()},
                 {"corner_rad_s", corner},
                 {"corner_hz", corner / kTwoPi},
                 {"dc_gain_delta_to_z", dc},
                 {"detuning_rad_s", detuning(cfg.detuning)}};
  write_json(cfg, artifact::kCavityReport, report);
  log << "cavity: corner kappa/2 = " << format_double(corner) << " rad/s ("
      << format_double(corner / kTwoPi) << " Hz), DC gain delta->z = " << format_double(dc) << "\n";
  return {};
}

std::vector<Check> run_identify(const PipelineConfig& cfg, std::ostream& log) {
  const fs::path csv = cfg.resolve(cfg.frequency_data);
  require_file(csv, "frequency data");
  const FrequencyResponseData raw = read_frequency_csv(csv);
  const StateSpaceModel aa = antialias_filter(cfg.antialias.order, cfg.antialias.corner_hz);

  FrequencyResponseData data = raw;
  if (cfg.antialias.mode == AntialiasMode::kProduct)
    data = raw.multiplied_by(frequency_response(aa, raw.freqs_hz()));

  IdentificationResult id = identify(data, cfg.sysid);
  StateSpaceModel plant = id.model;
  if (cfg.antialias.mode == AntialiasMode::kSeries) plant = series(id.model, aa);
  plant = plant.with_labels({"u"}, {"y"});

  // Reported against the composed data the design plant has to match.
  FitReport composed = id.report;
  if (cfg.antialias.mode == AntialiasMode::kSeries) {
    const FrequencyResponseData target = raw.multiplied_by(frequency_response(aa, raw.freqs_hz()));
    const FitReport e = fit_error(plant, target);
    composed.relative_rms_error = e.relative_rms_error;
    composed.max_abs_error_db = e.max_abs_error_db;
  }
  write_json(cfg, artifact::kPlantModel, model_to_json(plant));
  json report = {{"samples", data.size()},
                 {"model_order", cfg.sysid.model_order},
                 {"plant_states", plant.states()},
                 {"antialias_mode", mode_name(cfg.antialias.mode)},
                 {"relative_rms_error", composed.relative_rms_error},
                 {"max_abs_error_db", composed.max_abs_error_db},
                 {"trailing_sv_ratio", id.report.trailing_sv_ratio},
                 {"singular_values", id.report.singular_values},
                 {"warnings", id.report.warnings},
                 {"poles", spectrum_json(sorted(poles(plant)))}};
  write_json(cfg, artifact::kFitReport, report);
  log << "identify: " << data.size() << " samples, order " << cfg.sysid.model_order
      << " fit, relative RMS " << format_double(composed.relative_rms_error) << ", max "
      << format_double(composed.max_abs_error_db) << " dB; design plant has " << plant.states()
      << " states\n";
  return {};
}

std::vector<Check> run_design(const PipelineConfig& cfg, std::ostream& log) {
  const StateSpaceModel plant = plant_siso(load_model(cfg.output(artifact::kPlantModel), "plant model"));
  const ControllerRealization c = design_integral_lqg(plant, cfg.design);
  write_json(cfg, artifact::kController, model_to_json(c.model));

  double abscissa = -std::numeric_limits<double>::infinity();
  for (const Complex& l : c.closed_loop_spectrum) abscissa = std::max(abscissa, l.real());
  json report = {{"plant_states", c.plant.plant_states},
                 {"controller_order", c.model.states()},
                 {"design",
                  {{"eps1", cfg.design.eps1},
                   {"eps2", cfg.design.eps2},
                   {"eps3", cfg.design.eps3},
                   {"r", cfg.design.r},
                   {"q_bar", cfg.design.q_bar},
                   {"z_weight", cfg.design.z_weight}}},
                 {"F", matrix_to_json(c.f)},
                 {"K", matrix_to_json(c.k)},
                 {"F_norm", c.f.norm()},
                 {"regulator",
                  {{"method", c.regulator.method},
                   {"relative_residual", c.regulator.relative_residual},
                   {"newton_steps", c.regulator.newton_steps}}},
                 {"estimator",
                  {{"method", c.estimator.method},
                   {"relative_residual", c.estimator.relative_residual},
                   {"newton_steps", c.estimator.newton_steps}}},
                 {"closed_loop_abscissa", abscissa},
                 {"closed_loop_stable", abscissa < 0.0},
                 {"closed_loop_spectrum", spectrum_json(sorted(c.closed_loop_spectrum))}};
  write_json(cfg, artifact::kDesignReport, report);
  log << "design: " << c.model.states() << "-state integral LQG controller for a "
      << c.plant.plant_states << "-state plant, |F| = " << format_double(c.f.norm())
      << ", CARE residuals " << format_double(c.regulator.relative_residual) << " / "
      << format_double(c.estimator.relative_residual) << ", closed-loop abscissa "
      << format_double(abscissa) << " rad/s\n";
  return {{"design closed loop stable", abscissa < 0.0, "abscissa " + format_double(abscissa) + " rad/s"}};
}

std::vector<Check> run_reduce(const PipelineConfig& cfg, std::ostream& log) {
  const StateSpaceModel plant = plant_siso(load_model(cfg.output(artifact::kPlantModel), "plant model"));
  const StateSpaceModel controller = load_model(cfg.output(artifact::kController), "controller");
  const AugmentedPlant aug = augment_integrator(plant);
  if (controller.inputs() != 2 || controller.outputs() != 1)
    throw InputError("controller must have inputs [y1, y2] and one output");

  const WeightedReduction red = weighted_reduce(controller, aug.model, cfg.target_order, +1);
  const ReductionCheck chk = verify_reduced(aug.model, controller, red.reduced, +1);
  write_json(cfg, artifact::kReducedController, model_to_json(red.reduced));
  json report = {{"full_order", controller.states()},
                 {"target_order", cfg.target_order},
                 {"reduced_order", red.reduced.states()},
                 {"unstable_states_kept", red.unstable_states},
                 {"weighted_hsv", red.weighted_hsv},
                 {"weighted_error", finite_or_null(chk.weighted_error)},
                 {"closed_loop_abscissa", chk.closed_loop_abscissa},
                 {"closed_loop_stable", chk.stable},
                 {"warnings", red.warnings}};
  write_json(cfg, artifact::kReductionReport, report);
  log << "reduce: " << controller.states() << " -> " << red.reduced.states()
      << " states, weighted error " << format_double(chk.weighted_error)
      << ", closed loop " << (chk.stable ? "stable" : "UNSTABLE") << " (abscissa "
      << format_double(chk.closed_loop_abscissa) << " rad/s)\n";
  if (!chk.stable)
    throw VerificationError("reduced controller does not stabilize the design plant (abscissa " +
                            format_double(chk.closed_loop_abscissa) + ")");
  return {{"reduced closed loop stable", chk.stable,
           "order " + std::to_string(red.reduced.states()) + ", abscissa " +
               format_double(chk.closed_loop_abscissa) + " rad/s"}};
}

namespace {

DiscreteStateSpaceModel discretize_controller(const PipelineConfig& cfg, const StateSpaceModel& c) {
  return cfg.discretization == "tustin" ? discretize_tustin(c, cfg.ts) : discretize_zoh(c, cfg.ts);
}

}  // namespace

std::vector<Check> run_analyze(const PipelineConfig& cfg, std::ostream& log) {
  const StateSpaceModel plant = plant_siso(load_model(cfg.output(artifact::kPlantModel), "plant model"));
  const StateSpaceModel full = load_model(cfg.output(artifact::kController), "controller");
  const StateSpaceModel reduced =
      load_model(cfg.output(artifact::kReducedController), "reduced controller");

  const std::vector<double> freqs =
      log_space(cfg.analysis.f_min_hz, cfg.analysis.f_max_hz, cfg.analysis.points);
  const StateSpaceModel loop = loop_gain(plant, loop_controller(reduced));
  const StateSpaceModel loop_full = loop_gain(plant, loop_controller(full));
  write_text_file(cfg.output(artifact::kLoopBode), format_bode_csv(bode(loop, freqs)));
  write_text_file(cfg.output(artifact::kControllerBode),
                  format_bode_csv(bode(loop_controller(reduced), freqs)));

  const MarginReport m = margins(loop);
  const MarginReport m_full = margins(loop_full);

  // Sampled-data loop: discrete controller with its trapezoidal integrator and
  // the ZOH-sampled plant, evaluated up to Nyquist.
  const DiscreteStateSpaceModel cd = discretize_controller(cfg, reduced);
  const DiscreteStateSpaceModel pd = discretize_zoh(plant, cfg.ts);
  const double nyquist_hz = 0.5 / cfg.ts;
  std::vector<double> dfreqs;
  for (double f : freqs)
    if (f < nyquist_hz * (1.0 - 1e-9)) dfreqs.push_back(f);
  BodeData dbode;
  for (double f : dfreqs) {
    const Complex l = discrete_loop_response(pd, cd, kTwoPi * f);
    dbode.freqs_hz.push_back(f);
    dbode.mag_db.push_back(20.0 * std::log10(std::abs(l)));
    dbode.phase_deg.push_back(std::arg(l) * 180.0 / std::numbers::pi);
  }
  // Unwrap for plotting continuity.
  for (std::size_t k = 1; k < dbode.phase_deg.size(); ++k) {
    while (dbode.phase_deg[k] - dbode.phase_deg[k - 1] > 180.0) dbode.phase_deg[k] -= 360.0;
    while (dbode.phase_deg[k] - dbode.phase_deg[k - 1] < -180.0) dbode.phase_deg[k] += 360.0;
  }
  write_text_file(cfg.output(artifact::kLoopBodeDiscrete), format_bode_csv(dbode));
  const double w_lo = std::min(kTwoPi * cfg.analysis.f_min_hz, 1e-2);
  const MarginReport md = margins_of(
      [&](double w) { return discrete_loop_response(pd, cd, w); }, w_lo,
      kTwoPi * nyquist_hz * (1.0 - 1e-9), 400);

  json doc = {{"continuous_reduced", margins_json(m)},
              {"continuous_full", margins_json(m_full)},
              {"discrete_reduced", margins_json(md)},
              {"ts", cfg.ts},
              {"discretization", cfg.discretization}};
  write_json(cfg, artifact::kMargins, doc);
  auto show = [](const MarginReport& r) {
    return "GM " + format_double(r.gain_margin_db) + " dB, PM " + format_double(r.phase_margin_deg) + " deg";
  };
  log << "analyze: reduced loop " << show(m) << "; full-order loop " << show(m_full)
      << "; sampled loop " << show(md) << "\n";
  const bool ok = m.gain_margin_db > 0.0 && m.phase_margin_deg > 0.0;
  return {{"loop margins positive", ok, show(m)}};
}

std::vector<Check> run_discretize(const PipelineConfig& cfg, std::ostream& log) {
  const StateSpaceModel reduced =
      load_model(cfg.output(artifact::kReducedController), "reduced controller");
  const DiscreteStateSpaceModel cd = discretize_controller(cfg, reduced);
  write_json(cfg, artifact::kDiscreteController, model_to_json(cd));
  double radius = 0.0;
  for (const Complex& p : poles(cd)) radius = std::max(radius, std::abs(p));
  log << "discretize: " << cfg.discretization << " at Ts = " << format_double(cfg.ts) << " s ("
      << format_double(1.0 / cfg.ts) << " Hz), spectral radius " << format_double(radius) << "\n";
  return {};
}

std::vector<Check> run_simulate(const PipelineConfig& cfg, std::ostream& log) {
  const StateSpaceModel plant = plant_siso(load_model(cfg.output(artifact::kPlantModel), "plant model"));
  const DiscreteStateSpaceModel cd =
      load_discrete(cfg.output(artifact::kDiscreteController), "discrete controller");
  if (std::abs(cd.ts() - cfg.ts) > 1e-12 * cfg.ts)
    throw InputError("discrete controller sample period differs from the configured ts");

  SimConfig sc;
  sc.duration_s = cfg.simulation.duration_s;
  sc.plant_substeps = cfg.simulation.plant_substeps;
  sc.injection = cfg.simulation.injection;
  const auto r = step_signal(cfg.simulation.step_amplitude, 0.0);

  const SimTrace clean = simulate_closed_loop(plant, cd, NoiseSpec{}, r, sc);
  NoiseSpec noise = cfg.simulation.noise;
  noise.seed = cfg.seed;
  const SimTrace noisy = simulate_closed_loop(plant, cd, noise, r, sc);
  write_text_file(cfg.output(artifact::kTrace), format_trace_csv(clean));
  write_text_file(cfg.output(artifact::kNoisyTrace), format_trace_csv(noisy));

  const StepMetrics m = step_response_metrics(clean);
  const StepMetrics mn = step_response_metrics(noisy);
  auto metrics_json = [](const StepMetrics& s) {
    return json{{"rise_time_s", optional_number(s.rise_time)},
                {"settling_time_2pct_s", optional_number(s.settling_time_2pct)},
                {"overshoot_pct", optional_number(s.overshoot_pct)},
                {"steady_state_value", s.steady_state_value},
                {"peak_value", s.peak_value},
                {"peak_time_s", s.peak_time}};
  };
  const double limit = cfg.simulation.steady_state_fraction * std::abs(cfg.simulation.step_amplitude);
  const bool settled = m.settling_time_2pct.has_value() && std::abs(m.steady_state_value) < limit;
  json doc = {{"step_amplitude", cfg.simulation.step_amplitude},
              {"duration_s", cfg.simulation.duration_s},
              {"samples", clean.size()},
              {"noise_free", metrics_json(m)},
              {"noisy", metrics_json(mn)},
              {"noise_seed", cfg.seed},
              {"rng", "cavlock-rng v" + std::to_string(NoiseStream::kVersion)},
              {"steady_state_limit", limit},
              {"settled", settled}};
  write_json(cfg, artifact::kStepMetrics, doc);
  log << "simulate: " << clean.size() << " samples, steady state " << format_double(m.steady_state_value)
      << " (limit " << format_double(limit) << "), settling "
      << (m.settling_time_2pct ? format_double(*m.settling_time_2pct) + " s" : std::string("unavailable"))
      << ", peak " << format_double(m.peak_value) << "\n";
  return {{"step disturbance rejected", settled,
           "steady state " + format_double(m.steady_state_value) + ", settling " +
               (m.settling_time_2pct ? format_double(*m.settling_time_2pct) + " s" : "unavailable")}};
}

std::vector<Check> run_pipeline(const PipelineConfig& cfg, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Check> checks;
  json stage_times = json::object();
  auto stage = [&](const char* name, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Check> c;
    try {
      c = fn(cfg, log);
    } catch (const VerificationError& e) {
      c.push_back({name, false, e.what()});
    }
    stage_times[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    checks.insert(checks.end(), c.begin(), c.end());
  };
  stage("cavity", run_cavity);
  stage("identify", run_identify);
  stage("design", run_design);
  stage("reduce", run_reduce);
  stage("analyze", run_analyze);
  stage("discretize", run_discretize);
  stage("simulate", run_simulate);

  bool all = true;
  log << "summary:\n";
  for (const Check& c : checks) {
    all = all && c.pass;
    log << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name << " (" << c.detail << ")\n";
  }
  log << (all ? "PASS" : "FAIL") << "\n";

  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json meta = {{"finished_utc", stamp},
               {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
               {"stage_time_s", stage_times},
               {"seed", cfg.seed},
               {"result", all ? "PASS" : "FAIL"},
               {"config", config_to_json(cfg)}};
  write_json(cfg, artifact::kMetadata, meta);
  if (!all) throw VerificationError("pipeline checks failed");
  return checks;
}

}  // namespace cavlock
