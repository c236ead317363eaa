// cavlock: file-based stages of the cavity-locking controller workflow.
//
//   cavlock synth | cavity | identify | design | reduce | analyze | discretize | simulate
//   cavlock pipeline run
//
// Exit codes: 0 success, 2 input error, 3 numerical failure, 4 verification failure.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cavlock/errors.hpp"
#include "cavlock/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cavlock;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

PipelineConfig make_config(const GlobalOptions& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig::defaults() : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  cfg.validate();
  return cfg;
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "cavlock: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integral LQG cavity-locking toolkit"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Pipeline config (JSON)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out-dir", g.out_dir, "Directory for stage artifacts");

  std::function<void(const PipelineConfig&)> action;
  auto stage = [&](const char* name, const char* help,
                   std::vector<Check> (*fn)(const PipelineConfig&, std::ostream&)) {
    app.add_subcommand(name, help)->callback([&action, fn] {
      action = [fn](const PipelineConfig& cfg) { fn(cfg, std::cout); };
    });
  };

  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write the synthetic frequency-response dataset");
  synth->add_option("-o,--output", synth_out, "CSV path (default: the config's frequency data)");
  synth->callback([&] {
    action = [&synth_out](const PipelineConfig& cfg) {
      run_synth(cfg, synth_out.empty() ? cfg.resolve(cfg.frequency_data) : fs::path(synth_out),
                std::cout);
    };
  });
  stage("cavity", "Build the cavity quadrature model", run_cavity);
  stage("identify", "Fit the plant model to frequency-response data", run_identify);
  stage("design", "Synthesize the integral LQG controller", run_design);
  stage("reduce", "Weighted balanced reduction and closed-loop check", run_reduce);
  stage("analyze", "Bode data and stability margins", run_analyze);
  stage("discretize", "Discretize the reduced controller", run_discretize);
  stage("simulate", "Closed-loop step-disturbance simulation", run_simulate);

  auto* pipeline = app.add_subcommand("pipeline", "Multi-stage runs");
  pipeline->require_subcommand(1);
  pipeline->add_subcommand("run", "Run every stage and print a PASS/FAIL summary")->callback([&] {
    action = [](const PipelineConfig& cfg) { run_pipeline(cfg, std::cout); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    action(make_config(g));
  } catch (const InputError& e) {
    return report("input error", e, 2);
  } catch (const NumericalError& e) {
    return report("numerical failure", e, 3);
  } catch (const VerificationError& e) {
    return report("verification failure", e, 4);
  } catch (const nlohmann::json::exception& e) {
    return report("input error", e, 2);
  } catch (const std::exception& e) {
    return report("error", e, 3);
  }
  return 0;
}
