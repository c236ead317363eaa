#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cavlock/linsys.hpp"

namespace cavlock {

/// Serializes JSON with every floating-point number written as %.17g so that
/// doubles round-trip exactly. Objects keep nlohmann's (sorted) key order.
std::string dump_json(const nlohmann::json& doc, int indent = 2);

/// Model document: {n, m, p, A, B, C, D (row-major flat arrays),
/// input_labels, output_labels, ts (null for continuous)}.
nlohmann::json model_to_json(const StateSpaceModel& model);
nlohmann::json model_to_json(const DiscreteStateSpaceModel& model);

StateSpaceModel continuous_model_from_json(const nlohmann::json& doc);
DiscreteStateSpaceModel discrete_model_from_json(const nlohmann::json& doc);
bool is_discrete_model(const nlohmann::json& doc);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& flat, Index rows, Index cols, const char* what);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

StateSpaceModel read_continuous_model(const std::filesystem::path& path);
DiscreteStateSpaceModel read_discrete_model(const std::filesystem::path& path);

}  // namespace cavlock
