#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "cavlock/linsys.hpp"

namespace cavlock {

/// Column layout of a SISO frequency-response CSV, declared by its header row.
enum class FreqCsvLayout {
  kRealImag,     ///< freq_hz,real,imag
  kMagDbPhaseDeg ///< freq_hz,mag_db,phase_deg
};

FrequencyResponseData parse_frequency_csv(std::istream& in, const std::string& source = "<stream>");
FrequencyResponseData read_frequency_csv(const std::filesystem::path& path);

/// Writes the freq_hz,real,imag layout with 17 significant digits.
std::string format_frequency_csv(const FrequencyResponseData& data);
void write_frequency_csv(const std::filesystem::path& path, const FrequencyResponseData& data);

}  // namespace cavlock
