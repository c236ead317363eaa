#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavlock/cavity.hpp"
#include "cavlock/lqg.hpp"
#include "cavlock/simulate.hpp"
#include "cavlock/synthetic.hpp"
#include "cavlock/sysid.hpp"

namespace cavlock {

/// How the separately identified anti-aliasing filter enters the design plant.
enum class AntialiasMode {
  kProduct,  ///< multiply each data sample by the filter response before fitting
  kSeries,   ///< fit the raw data, then cascade the fitted model with the filter model
  kNone,
};

struct AntialiasConfig {
  int order = 8;
  double corner_hz = 2500.0;
  AntialiasMode mode = AntialiasMode::kProduct;
};

struct AnalysisConfig {
  double f_min_hz = 0.1;
  double f_max_hz = 20000.0;
  std::size_t points = 600;
};

struct SimulationConfig {
  double duration_s = 0.3;
  double step_amplitude = 0.1;
  int plant_substeps = 20;
  Injection injection = Injection::kPlantInput;
  /// Noise for the second (noisy) trace; the step-metric trace is noise free.
  NoiseSpec noise;
  /// Steady-state |y| must stay below this fraction of the step amplitude.
  double steady_state_fraction = 1e-3;
};

/// All stage settings. The frequency data path is resolved against base_dir
/// (the config file's directory); out_dir is used as given.
struct PipelineConfig {
  std::filesystem::path base_dir = ".";
  std::filesystem::path frequency_data = "synthetic_plant.csv";
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 42;
  double ts = 2e-5;
  CavityParams cavity = CavityParams::demo();
  DetuningParams detuning;
  SyntheticPlantParams synthetic = SyntheticPlantParams::standard();
  SyntheticGrid grid;
  SysIdConfig sysid;
  AntialiasConfig antialias;
  DesignParams design;
  Index target_order = 6;
  AnalysisConfig analysis;
  std::string discretization = "zoh";
  SimulationConfig simulation;

  /// Defaults used when no config file is given.
  static PipelineConfig defaults();
  void validate() const;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path output(const std::string& name) const;
};

PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

/// Stage artifact names inside out_dir.
namespace artifact {
inline constexpr const char* kCavityModel = "cavity_model.json";
inline constexpr const char* kCavityReport = "cavity_report.json";
inline constexpr const char* kPlantModel = "plant_model.json";
inline constexpr const char* kFitReport = "fit_report.json";
inline constexpr const char* kController = "controller.json";
inline constexpr const char* kDesignReport = "design_report.json";
inline constexpr const char* kReducedController = "controller_reduced.json";
inline constexpr const char* kReductionReport = "reduction_report.json";
inline constexpr const char* kLoopBode = "loop_bode.csv";
inline constexpr const char* kLoopBodeDiscrete = "loop_bode_discrete.csv";
inline constexpr const char* kControllerBode = "controller_bode.csv";
inline constexpr const char* kMargins = "margins.json";
inline constexpr const char* kDiscreteController = "controller_discrete.json";
inline constexpr const char* kTrace = "trace.csv";
inline constexpr const char* kNoisyTrace = "trace_noisy.csv";
inline constexpr const char* kStepMetrics = "step_metrics.json";
inline constexpr const char* kMetadata = "run_metadata.json";
}  // namespace artifact

/// Result line of a pass/fail check.
struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Each stage reads the artifacts of earlier stages from out_dir, writes its
/// own and returns its checks. Progress goes to `log`.
std::vector<Check> run_synth(const PipelineConfig& cfg, const std::filesystem::path& csv_out,
                             std::ostream& log);
std::vector<Check> run_cavity(const PipelineConfig& cfg, std::ostream& log);
std::vector<Check> run_identify(const PipelineConfig& cfg, std::ostream& log);
std::vector<Check> run_design(const PipelineConfig& cfg, std::ostream& log);
std::vector<Check> run_reduce(const PipelineConfig& cfg, std::ostream& log);
std::vector<Check> run_analyze(const PipelineConfig& cfg, std::ostream& log);
std::vector<Check> run_discretize(const PipelineConfig& cfg, std::ostream& log);
std::vector<Check> run_simulate(const PipelineConfig& cfg, std::ostream& log);

/// All stages in order, a PASS/FAIL summary on `log` and run_metadata.json.
/// Throws VerificationError when any check fails.
std::vector<Check> run_pipeline(const PipelineConfig& cfg, std::ostream& log);

/// Deployed discrete loop gain at omega (rad/s): ZOH plant, discrete controller
/// fed by [y, trapezoidal integral of y], negative feedback convention.
Complex discrete_loop_response(const DiscreteStateSpaceModel& plant_d,
                               const DiscreteStateSpaceModel& controller_d, double omega);

}  // namespace cavlock
