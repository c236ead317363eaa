#include "cavlock/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cavlock/errors.hpp"

namespace cavlock {

namespace {

void emit(const nlohmann::json& j, std::ostringstream& os, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string pad_close(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        os << "null";
        break;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string s(buf);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      os << s;
      break;
    }
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        break;
      }
      os << "{" << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << "," << nl;
        first = false;
        os << pad << nlohmann::json(it.key()).dump() << (indent > 0 ? ": " : ":");
        emit(it.value(), os, indent, depth + 1);
      }
      os << nl << pad_close << "}";
      break;
    }
    case nlohmann::json::value_t::array: {
      // Numeric arrays stay on one line.
      bool scalar = true;
      for (const auto& e : j) scalar = scalar && e.is_primitive();
      os << "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << (scalar ? ", " : ",");
        if (!scalar) os << nl << pad;
        first = false;
        emit(e, os, indent, depth + 1);
      }
      if (!scalar && !j.empty()) os << nl << pad_close;
      os << "]";
      break;
    }
    default:
      os << j.dump();
  }
}

void check_shape(const nlohmann::json& doc, Index& n, Index& m, Index& p) {
  for (const char* key : {"n", "m", "p", "A", "B", "C", "D"})
    if (!doc.contains(key)) throw InputError(std::string("model document missing field '") + key + "'");
  n = doc.at("n").get<Index>();
  m = doc.at("m").get<Index>();
  p = doc.at("p").get<Index>();
  if (n < 0 || m < 0 || p < 0) throw InputError("model dimensions must be non-negative");
}

Labels labels_from(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return {};
  return doc.at(key).get<Labels>();
}

template <typename Model>
nlohmann::json to_json_common(const Model& model) {
  nlohmann::json doc;
  doc["n"] = model.states();
  doc["m"] = model.inputs();
  doc["p"] = model.outputs();
  doc["A"] = matrix_to_json(model.A());
  doc["B"] = matrix_to_json(model.B());
  doc["C"] = matrix_to_json(model.C());
  doc["D"] = matrix_to_json(model.D());
  doc["input_labels"] = model.input_labels();
  doc["output_labels"] = model.output_labels();
  return doc;
}

}  // namespace

std::string dump_json(const nlohmann::json& doc, int indent) {
  std::ostringstream os;
  emit(doc, os, indent, 0);
  os << "\n";
  return os.str();
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json flat = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

Matrix matrix_from_json(const nlohmann::json& flat, Index rows, Index cols, const char* what) {
  if (!flat.is_array() || static_cast<Index>(flat.size()) != rows * cols)
    throw InputError(std::string("matrix '") + what + "' must be a flat array of " +
                     std::to_string(rows * cols) + " numbers");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const auto& v = flat.at(static_cast<std::size_t>(i * cols + j));
      if (!v.is_number()) throw InputError(std::string("matrix '") + what + "' has a non-numeric entry");
      m(i, j) = v.get<double>();
    }
  return m;
}

nlohmann::json model_to_json(const StateSpaceModel& model) {
  nlohmann::json doc = to_json_common(model);
  doc["ts"] = nullptr;
  return doc;
}

nlohmann::json model_to_json(const DiscreteStateSpaceModel& model) {
  nlohmann::json doc = to_json_common(model);
  doc["ts"] = model.ts();
  return doc;
}

bool is_discrete_model(const nlohmann::json& doc) {
  return doc.contains("ts") && !doc.at("ts").is_null();
}

StateSpaceModel continuous_model_from_json(const nlohmann::json& doc) {
  Index n, m, p;
  check_shape(doc, n, m, p);
  if (is_discrete_model(doc)) throw InputError("expected a continuous model (ts must be null)");
  return {matrix_from_json(doc["A"], n, n, "A"), matrix_from_json(doc["B"], n, m, "B"),
          matrix_from_json(doc["C"], p, n, "C"), matrix_from_json(doc["D"], p, m, "D"),
          labels_from(doc, "input_labels"), labels_from(doc, "output_labels")};
}

DiscreteStateSpaceModel discrete_model_from_json(const nlohmann::json& doc) {
  Index n, m, p;
  check_shape(doc, n, m, p);
  if (!is_discrete_model(doc)) throw InputError("expected a discrete model (ts must be a number)");
  return {matrix_from_json(doc["A"], n, n, "A"), matrix_from_json(doc["B"], n, m, "B"),
          matrix_from_json(doc["C"], p, n, "C"), matrix_from_json(doc["D"], p, m, "D"),
          doc.at("ts").get<double>(), labels_from(doc, "input_labels"),
          labels_from(doc, "output_labels")};
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path.string());
  out << text;
}

StateSpaceModel read_continuous_model(const std::filesystem::path& path) {
  try {
    return continuous_model_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("invalid model file " + path.string() + ": " + e.what());
  }
}

DiscreteStateSpaceModel read_discrete_model(const std::filesystem::path& path) {
  try {
    return discrete_model_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("invalid model file " + path.string() + ": " + e.what());
  }
}

}  // namespace cavlock
