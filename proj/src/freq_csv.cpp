#include "cavlock/freq_csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "cavlock/errors.hpp"
#include "cavlock/model_io.hpp"

namespace cavlock {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

}  // namespace

FrequencyResponseData parse_frequency_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw InputError(source + ":" + std::to_string(line_no) + ": " + what);
  };

  FreqCsvLayout layout{};
  bool have_header = false;
  std::vector<double> freqs;
  std::vector<CMatrix> values;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split(t);
    if (!have_header) {
      if (cells == std::vector<std::string>{"freq_hz", "real", "imag"}) {
        layout = FreqCsvLayout::kRealImag;
      } else if (cells == std::vector<std::string>{"freq_hz", "mag_db", "phase_deg"}) {
        layout = FreqCsvLayout::kMagDbPhaseDeg;
      } else {
        fail("unrecognized header (expected 'freq_hz,real,imag' or 'freq_hz,mag_db,phase_deg')");
      }
      have_header = true;
      continue;
    }
    if (cells.size() != 3) fail("expected 3 columns, found " + std::to_string(cells.size()));
    double v[3];
    for (int i = 0; i < 3; ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stod(cells[static_cast<std::size_t>(i)], &used);
        if (used != cells[static_cast<std::size_t>(i)].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail("malformed number '" + cells[static_cast<std::size_t>(i)] + "'");
      }
      if (!std::isfinite(v[i])) fail("non-finite value");
    }
    if (!freqs.empty() && !(v[0] > freqs.back())) fail("frequencies must be strictly increasing");
    if (!(v[0] > 0.0)) fail("frequency must be positive");
    Complex h;
    if (layout == FreqCsvLayout::kRealImag) {
      h = Complex(v[1], v[2]);
    } else {
      h = std::polar(std::pow(10.0, v[1] / 20.0), v[2] * std::numbers::pi / 180.0);
    }
    freqs.push_back(v[0]);
    values.push_back(CMatrix::Constant(1, 1, h));
  }
  if (!have_header) throw InputError(source + ": empty CSV (no header row)");
  if (freqs.empty()) throw InputError(source + ": CSV contains no data rows");
  return {std::move(freqs), std::move(values)};
}

FrequencyResponseData read_frequency_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open frequency data file: " + path.string());
  return parse_frequency_csv(in, path.string());
}

std::string format_frequency_csv(const FrequencyResponseData& data) {
  if (data.inputs() != 1 || data.outputs() != 1)
    throw InputError("frequency CSV holds SISO data only");
  std::string out = "freq_hz,real,imag\n";
  char buf[128];
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Complex h = data.response()[k](0, 0);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", data.freqs_hz()[k], h.real(), h.imag());
    out += buf;
  }
  return out;
}

void write_frequency_csv(const std::filesystem::path& path, const FrequencyResponseData& data) {
  write_text_file(path, format_frequency_csv(data));
}

}  // namespace cavlock
