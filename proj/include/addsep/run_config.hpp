#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "addsep/funcgen.hpp"
#include "addsep/io_util.hpp"
#include "addsep/mlp.hpp"
#include "addsep/surrogate.hpp"

namespace addsep {

/// Everything a run needs, serializable so that a run directory always
/// carries the exact config that produced it.
struct RunConfig {
  std::uint64_t seed = 42;
  CorpusConfig corpus{{2}, 60, true, 42};
  SampleConfig data{30, -3.0, 3.0, 0};
  SurrogateRecipe recipe{};
  std::vector<int> methods{1, 2, 3, 4, 5, 6, 7, 8};
  std::size_t grid_points = 30;
  std::size_t workers = 1;

  /// The one master seed feeds the corpus; per-function seeds are derived.
  void apply_seed(std::uint64_t s) {
    seed = s;
    corpus.rng_seed = s;
  }
};

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json doc;
  doc["seed"] = cfg.seed;
  doc["corpus"] = {{"arities", cfg.corpus.arities},
                   {"max_functions", cfg.corpus.max_functions},
                   {"balance", cfg.corpus.balance}};
  doc["data"] = {{"points", cfg.data.points}, {"low", cfg.data.low}, {"high", cfg.data.high}};
  doc["train"] = {{"learning_rate", cfg.recipe.train_cfg.learning_rate},
                  {"batch_size", cfg.recipe.train_cfg.batch_size},
                  {"patience", cfg.recipe.train_cfg.patience},
                  {"validation_fraction", cfg.recipe.train_cfg.validation_fraction},
                  {"max_epochs", cfg.recipe.train_cfg.max_epochs},
                  {"restarts", cfg.recipe.max_restarts},
                  {"target_mse", cfg.recipe.target_mse},
                  {"standardize", cfg.recipe.standardize}};
  doc["eval"] = {{"methods", cfg.methods}, {"grid_points", cfg.grid_points}};
  doc["workers"] = cfg.workers;
  return doc;
}

inline RunConfig run_config_from_json(const nlohmann::json& doc) {
  try {
    RunConfig cfg;
    cfg.apply_seed(doc.value("seed", cfg.seed));
    if (doc.contains("corpus")) {
      const auto& c = doc["corpus"];
      if (c.contains("arities")) {
        cfg.corpus.arities.clear();
        for (const auto& a : c["arities"]) cfg.corpus.arities.insert(a.get<std::size_t>());
      }
      cfg.corpus.max_functions = c.value("max_functions", cfg.corpus.max_functions);
      cfg.corpus.balance = c.value("balance", cfg.corpus.balance);
    }
    if (doc.contains("data")) {
      const auto& d = doc["data"];
      cfg.data.points = d.value("points", cfg.data.points);
      cfg.data.low = d.value("low", cfg.data.low);
      cfg.data.high = d.value("high", cfg.data.high);
    }
    if (doc.contains("train")) {
      const auto& t = doc["train"];
      TrainConfig& tc = cfg.recipe.train_cfg;
      tc.learning_rate = t.value("learning_rate", tc.learning_rate);
      tc.batch_size = t.value("batch_size", tc.batch_size);
      tc.patience = t.value("patience", tc.patience);
      tc.validation_fraction = t.value("validation_fraction", tc.validation_fraction);
      tc.max_epochs = t.value("max_epochs", tc.max_epochs);
      cfg.recipe.max_restarts = t.value("restarts", cfg.recipe.max_restarts);
      cfg.recipe.target_mse = t.value("target_mse", cfg.recipe.target_mse);
      cfg.recipe.standardize = t.value("standardize", cfg.recipe.standardize);
    }
    if (doc.contains("eval")) {
      const auto& e = doc["eval"];
      if (e.contains("methods")) cfg.methods = e["methods"].get<std::vector<int>>();
      cfg.grid_points = e.value("grid_points", cfg.grid_points);
    }
    cfg.workers = doc.value("workers", cfg.workers);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("run config: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("run config: " + path.string() + ": " + e.what());
  }
  return run_config_from_json(doc);
}

inline void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  atomic_write_file(path, run_config_to_json(cfg).dump(2) + "\n");
}

}  // namespace addsep
