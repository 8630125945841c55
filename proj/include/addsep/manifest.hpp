#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "addsep/funcgen.hpp"
#include "addsep/io_util.hpp"

namespace addsep {

inline constexpr int kManifestFormatVersion = 1;

/// Corpus manifest: the generation config plus one entry per function with
/// {id, arity, expr (prefix grammar), partition, label, seed}.
inline nlohmann::json manifest_to_json(const CorpusConfig& cfg,
                                       const std::vector<SymbolicFunction>& corpus) {
  nlohmann::json doc;
  doc["format_version"] = kManifestFormatVersion;
  doc["seed"] = cfg.rng_seed;
  doc["balance"] = cfg.balance;
  doc["arities"] = cfg.arities;
  doc["max_functions"] = cfg.max_functions;
  doc["functions"] = nlohmann::json::array();
  for (const SymbolicFunction& f : corpus) {
    nlohmann::json jf;
    jf["id"] = f.id;
    jf["arity"] = f.arity;
    jf["expr"] = expr_to_string(*f.expr);
    jf["partition"] = nlohmann::json::array({f.partition.first, f.partition.second});
    jf["label"] = label_name(f.label);
    jf["seed"] = f.seed;
    doc["functions"].push_back(std::move(jf));
  }
  return doc;
}

struct Manifest {
  CorpusConfig config;
  std::vector<SymbolicFunction> functions;
};

inline Manifest manifest_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format_version", -1) != kManifestFormatVersion) {
      throw FormatError("manifest: unsupported format_version");
    }
    Manifest m;
    m.config.rng_seed = doc.at("seed").get<std::uint64_t>();
    m.config.balance = doc.at("balance").get<bool>();
    m.config.arities.clear();
    for (const auto& a : doc.at("arities")) m.config.arities.insert(a.get<std::size_t>());
    m.config.max_functions = doc.at("max_functions").get<std::size_t>();
    for (const auto& jf : doc.at("functions")) {
      SymbolicFunction f;
      f.id = jf.at("id").get<std::string>();
      f.arity = jf.at("arity").get<std::size_t>();
      f.expr = parse_expr(jf.at("expr").get<std::string>());
      const auto& parts = jf.at("partition");
      if (parts.size() != 2) throw FormatError("manifest: partition must have two groups");
      f.partition.first = parts[0].get<std::vector<std::size_t>>();
      f.partition.second = parts[1].get<std::vector<std::size_t>>();
      f.label = label_from_name(jf.at("label").get<std::string>());
      f.seed = jf.at("seed").get<std::uint64_t>();
      m.functions.push_back(std::move(f));
    }
    return m;
  } catch (const FormatError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

inline void save_manifest(const CorpusConfig& cfg, const std::vector<SymbolicFunction>& corpus,
                          const std::filesystem::path& path) {
  atomic_write_file(path, manifest_to_json(cfg, corpus).dump(2) + "\n");
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest: " + path.string() + ": " + e.what());
  }
  return manifest_from_json(doc);
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

inline nlohmann::json dataset_to_json(const std::string& id, const Dataset& data) {
  nlohmann::json doc;
  doc["id"] = id;
  doc["inputs"] = nlohmann::json::array();
  for (const Vector& v : data.inputs) {
    auto row = nlohmann::json::array();
    for (double x : v) row.push_back(double_to_hex(x));
    doc["inputs"].push_back(std::move(row));
  }
  doc["outputs"] = nlohmann::json::array();
  for (double y : data.outputs) doc["outputs"].push_back(double_to_hex(y));
  return doc;
}

inline Dataset dataset_from_json(const nlohmann::json& doc) {
  try {
    Dataset data;
    for (const auto& row : doc.at("inputs")) {
      Vector v;
      for (const auto& x : row) v.push_back(hex_to_double(x.get<std::string>()));
      data.inputs.push_back(std::move(v));
    }
    for (const auto& y : doc.at("outputs")) {
      data.outputs.push_back(hex_to_double(y.get<std::string>()));
    }
    data.validate();
    return data;
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
}

inline void save_dataset(const std::string& id, const Dataset& data,
                         const std::filesystem::path& path) {
  atomic_write_file(path, dataset_to_json(id, data).dump(2) + "\n");
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("dataset: " + path.string() + ": " + e.what());
  }
  return dataset_from_json(doc);
}

}  // namespace addsep
