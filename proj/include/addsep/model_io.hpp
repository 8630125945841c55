#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "addsep/io_util.hpp"
#include "addsep/mlp.hpp"

namespace addsep {

inline constexpr int kModelFormatVersion = 1;

/// Model file: {format_version, activation, layers: [{rows, cols, weights,
/// bias}]} with row-major weights. Parameters are stored as hex float
/// strings so save/load round-trips bit-exactly.
inline nlohmann::json model_to_json(const Mlp& net) {
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["activation"] = activation_name(net.activation());
  doc["layers"] = nlohmann::json::array();
  for (const Layer& l : net.layers()) {
    nlohmann::json layer;
    layer["rows"] = l.weights.rows();
    layer["cols"] = l.weights.cols();
    auto weights = nlohmann::json::array();
    for (double w : l.weights.data()) weights.push_back(double_to_hex(w));
    layer["weights"] = std::move(weights);
    auto bias = nlohmann::json::array();
    for (double b : l.bias) bias.push_back(double_to_hex(b));
    layer["bias"] = std::move(bias);
    doc["layers"].push_back(std::move(layer));
  }
  return doc;
}

inline Mlp model_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw FormatError("model: not a JSON object");
    if (doc.value("format_version", -1) != kModelFormatVersion) {
      throw FormatError("model: unsupported format_version");
    }
    const ActivationKind act = activation_from_name(doc.at("activation").get<std::string>());
    std::vector<Layer> layers;
    for (const auto& jl : doc.at("layers")) {
      const auto rows = jl.at("rows").get<std::size_t>();
      const auto cols = jl.at("cols").get<std::size_t>();
      const auto& jw = jl.at("weights");
      const auto& jb = jl.at("bias");
      if (jw.size() != rows * cols) {
        throw FormatError("model: weights length " + std::to_string(jw.size()) +
                          " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
      }
      if (jb.size() != rows) {
        throw FormatError("model: bias length does not match rows");
      }
      Layer layer{Matrix(rows, cols), Vector(rows)};
      for (std::size_t k = 0; k < jw.size(); ++k) {
        layer.weights.data()[k] = hex_to_double(jw[k].get<std::string>());
      }
      for (std::size_t k = 0; k < rows; ++k) {
        layer.bias[k] = hex_to_double(jb[k].get<std::string>());
      }
      layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers), act);
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    // Dimension/finiteness violations surface as format problems here.
    throw FormatError(std::string("model: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

inline void save_model(const Mlp& net, const std::filesystem::path& path) {
  atomic_write_file(path, model_to_json(net).dump(2) + "\n");
}

inline Mlp load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model: " + path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace addsep
