#pragma once

#include <string>
#include <vector>

#include "cavlock/linsys.hpp"

namespace cavlock {

enum class SampleWeighting {
  kUniform,   ///< every sample weighted 1 (or by SysIdConfig::weights)
  kRelative,  ///< sample k weighted by 1 / ||H_k||
};

struct SysIdConfig {
  Index model_order = 1;
  /// Block rows of the data matrices; 0 selects 2 * model_order + 2.
  Index block_rows = 0;
  bool use_bilinear_map = true;
  /// Bilinear map scale (rad/s); 0 selects the geometric mean of the grid.
  double bilinear_scale = 0.0;
  double rank_tol = 1e-8;
  SampleWeighting weighting = SampleWeighting::kUniform;
  /// Optional explicit per-sample weights (must match the sample count).
  std::vector<double> weights;
  bool allow_unstable = false;
  /// Constrain the feedthrough to zero (strictly proper model).
  bool strictly_proper = false;

  Index effective_block_rows() const { return block_rows > 0 ? block_rows : 2 * model_order + 2; }
  void validate() const;
};

struct FitReport {
  double relative_rms_error = 0.0;
  double max_abs_error_db = 0.0;
  /// Singular values of the projected data matrix, nonincreasing.
  std::vector<double> singular_values;
  /// sigma_n relative to the norm of the real data matrix.
  double trailing_sv_ratio = 0.0;
  std::vector<std::string> warnings;
};

struct IdentificationResult {
  StateSpaceModel model;
  FitReport report;
};

/// Frequency-domain subspace identification (arbitrary frequency spacing).
IdentificationResult identify(const FrequencyResponseData& data, const SysIdConfig& cfg);

/// Relative RMS error ||H_model - H_data|| / ||H_data|| and worst magnitude
/// error in dB over the grid.
FitReport fit_error(const StateSpaceModel& model, const FrequencyResponseData& data);

}  // namespace cavlock
