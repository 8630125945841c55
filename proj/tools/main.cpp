// Command-line pipeline: generate a labeled function corpus, train one MLP
// surrogate per function, score the surrogates with the eight mixed-partial
// methods, and report per-method thresholds, accuracies and timings.

#include <chrono>
#include <deque>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "addsep/classify.hpp"
#include "addsep/io_util.hpp"
#include "addsep/manifest.hpp"
#include "addsep/model_io.hpp"
#include "addsep/parallel.hpp"
#include "addsep/report_io.hpp"
#include "addsep/run_config.hpp"
#include "addsep/selftest.hpp"
#include "addsep/surrogate.hpp"

namespace fs = std::filesystem;
using namespace addsep;

namespace {

RunConfig resolve_config(const std::optional<std::string>& config_path, const fs::path& out,
                         bool prefer_run_dir) {
  if (config_path) return load_run_config(*config_path);
  const fs::path stored = out / "config.json";
  if (prefer_run_dir && fs::exists(stored)) return load_run_config(stored);
  return RunConfig{};
}

int cmd_generate(RunConfig cfg, const fs::path& out) {
  cfg.corpus.rng_seed = cfg.seed;
  const auto corpus = generate_corpus(cfg.corpus);
  fs::create_directories(out / "data");
  save_run_config(cfg, out / "config.json");
  save_manifest(cfg.corpus, corpus, out / "manifest.json");
  for (const SymbolicFunction& fn : corpus) {
    SampleConfig scfg = cfg.data;
    scfg.rng_seed = fn.seed;
    save_dataset(fn.id, sample_training_data(fn, scfg), out / "data" / (fn.id + ".json"));
  }
  std::cout << "wrote " << corpus.size() << " functions to " << out.string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const fs::path& out) {
  const Manifest manifest = load_manifest(out / "manifest.json");
  fs::create_directories(out / "models");
  fs::create_directories(out / "logs");
  // Keep the run directory self-describing under flag overrides.
  save_run_config(cfg, out / "config.json");

  std::mutex io_mutex;
  std::size_t trained = 0, skipped = 0, failed = 0;

  parallel_for_index(manifest.functions.size(), cfg.workers, [&](std::size_t idx) {
    const SymbolicFunction& fn = manifest.functions[idx];
    const fs::path model_path = out / "models" / (fn.id + ".json");
    const fs::path log_path = out / "logs" / (fn.id + ".json");
    if (fs::exists(model_path)) {
      try {
        (void)load_model(model_path);
        std::lock_guard lock(io_mutex);
        ++skipped;
        return;  // resumable: a valid model is not retrained
      } catch (const Error&) {
        // fall through and retrain over the corrupt file
      }
    }
    nlohmann::json log;
    log["function_id"] = fn.id;
    try {
      const Dataset data = load_dataset(out / "data" / (fn.id + ".json"));
      const auto t0 = std::chrono::steady_clock::now();
      const SurrogateResult result = fit_surrogate(data, fn.seed, cfg.recipe);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save_model(result.model, model_path);
      log["epochs"] = result.report.epochs_run;
      log["best_val_loss"] = result.report.best_validation_loss;
      log["final_train_loss"] = result.report.final_training_loss;
      log["full_mse"] = result.full_mse;
      log["restarts"] = result.restarts_used;
      log["output_mean"] = result.stats.mean;
      log["output_scale"] = result.stats.scale;
      log["seconds"] = seconds;
      atomic_write_file(log_path, log.dump(2) + "\n");
      std::lock_guard lock(io_mutex);
      ++trained;
    } catch (const Error& e) {
      log["error"] = e.what();
      atomic_write_file(log_path, log.dump(2) + "\n");
      std::lock_guard lock(io_mutex);
      ++failed;
      std::cerr << fn.id << ": " << e.what() << "\n";
    }
  });

  // The CSV log covers the whole corpus, rebuilt from the per-function logs.
  std::string csv = "function_id,epochs,best_val_loss\n";
  for (const SymbolicFunction& fn : manifest.functions) {
    const fs::path log_path = out / "logs" / (fn.id + ".json");
    if (!fs::exists(log_path)) continue;
    const nlohmann::json log = nlohmann::json::parse(read_file(log_path));
    if (log.contains("error")) {
      csv += fn.id + ",0,nan\n";
      continue;
    }
    csv += fn.id + "," + std::to_string(log["epochs"].get<std::size_t>()) + "," +
           format_g6(log["best_val_loss"].get<double>()) + "\n";
  }
  atomic_write_file(out / "training_log.csv", csv);

  std::cout << "trained " << trained << ", skipped " << skipped << ", failed " << failed
            << "\n";
  return failed == 0 ? 0 : 2;
}

int cmd_evaluate(const RunConfig& cfg, const fs::path& out, bool oracle, bool partial) {
  const Manifest manifest = load_manifest(out / "manifest.json");
  save_run_config(cfg, out / "config.json");
  std::deque<Mlp> model_storage;
  std::vector<EvalItem> items;
  for (const SymbolicFunction& fn : manifest.functions) {
    EvalItem item;
    item.fn = &fn;
    item.testset = build_grid_testset(fn.arity, cfg.grid_points, cfg.data.low, cfg.data.high);
    if (!oracle) {
      const fs::path model_path = out / "models" / (fn.id + ".json");
      if (!fs::exists(model_path)) {
        if (!partial) {
          throw MissingModel("no model file for " + fn.id +
                             " (run the train command, or pass --partial)");
        }
      } else {
        model_storage.push_back(load_model(model_path));
        item.model = &model_storage.back();
      }
    }
    items.push_back(std::move(item));
  }
  const EvaluationReport report = run_evaluation(items, cfg.methods, oracle, cfg.workers);
  save_report(report, out);
  for (const std::string& f : report.failures) std::cerr << "failed: " << f << "\n";
  std::cout << "scored " << items.size() << " functions with " << cfg.methods.size()
            << " methods" << (oracle ? " (oracle mode)" : "") << "; reports in "
            << out.string() << "\n";
  return 0;
}

int cmd_report(const fs::path& out) {
  const fs::path summary_path = out / "summary.csv";
  const fs::path report_path = out / "report.json";
  if (!fs::exists(summary_path) || !fs::exists(report_path)) {
    throw IncompleteRun("no evaluation outputs in " + out.string() +
                        " (run the evaluate command first)");
  }

  struct Row {
    std::string method, threshold, accuracy, mean_time;
  };
  std::vector<Row> rows;
  {
    std::istringstream in(read_file(summary_path));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      Row r;
      std::istringstream cells(line);
      std::getline(cells, r.method, ',');
      std::getline(cells, r.threshold, ',');
      std::getline(cells, r.accuracy, ',');
      std::getline(cells, r.mean_time, ',');
      rows.push_back(std::move(r));
    }
  }
  if (rows.empty()) throw IncompleteRun("summary.csv has no rows");

  const nlohmann::json doc = nlohmann::json::parse(read_file(report_path));
  std::cout << "# " << doc.value("note", "") << "\n\n";

  std::vector<Row> by_accuracy = rows;
  std::stable_sort(by_accuracy.begin(), by_accuracy.end(), [](const Row& a, const Row& b) {
    return std::stod(a.accuracy) > std::stod(b.accuracy);
  });
  std::cout << "classification (best accuracy first)\n";
  std::printf("  %-8s %-10s %-12s\n", "method", "accuracy", "threshold");
  for (const Row& r : by_accuracy) {
    std::printf("  %-8s %-10s %-12s\n", r.method.c_str(), r.accuracy.c_str(),
                r.threshold.c_str());
  }

  std::cout << "\nscoring time per surrogate\n";
  std::printf("  %-8s %-12s\n", "method", "mean_time_s");
  for (const Row& r : rows) {
    std::printf("  %-8s %-12s\n", r.method.c_str(), r.mean_time.c_str());
  }

  std::string dist = "method,label,score\n";
  for (const auto& rec : doc.at("records")) {
    dist += std::to_string(rec.at("method").get<int>()) + "," +
            rec.at("label").get<std::string>() + "," +
            format_g6(rec.at("score").get<double>()) + "\n";
  }
  atomic_write_file(out / "score_distributions.csv", dist);
  std::cout << "\nscore distribution data: " << (out / "score_distributions.csv").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"additive separability tests over MLP surrogates"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::vector<int>> methods_override;
  std::optional<std::size_t> workers_override;
  std::string out_dir = "run";
  bool oracle = false;
  bool partial = false;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", seed_override, "master seed override");
    cmd->add_option("--workers", workers_override, "worker thread count");
    cmd->add_option("--out", out_dir, "run directory");
  };

  CLI::App* generate = app.add_subcommand("generate", "create the corpus and datasets");
  add_common(generate);

  CLI::App* train_cmd = app.add_subcommand("train", "train one surrogate per function");
  add_common(train_cmd);

  CLI::App* evaluate = app.add_subcommand("evaluate", "score surrogates with methods 1-8");
  add_common(evaluate);
  evaluate->add_option("--methods", methods_override, "methods to run (e.g. 1,5,8)")
      ->delimiter(',');
  evaluate->add_flag("--oracle", oracle, "score the analytic functions, no surrogates");
  evaluate->add_flag("--partial", partial, "skip functions whose model files are missing");

  CLI::App* report = app.add_subcommand("report", "print accuracy/threshold/timing tables");
  report->add_option("--out", out_dir, "run directory");

  CLI::App* selftest = app.add_subcommand("selftest", "run the invariant suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  try {
    const fs::path out(out_dir);
    if (selftest->parsed()) {
      const int failures = print_selftest(std::cout);
      if (failures != 0) {
        std::cerr << failures << " check(s) failed\n";
        return 2;
      }
      return 0;
    }

    RunConfig cfg = resolve_config(config_path, out, /*prefer_run_dir=*/!generate->parsed());
    if (seed_override) cfg.apply_seed(*seed_override);
    if (methods_override) cfg.methods = *methods_override;
    if (workers_override) cfg.workers = *workers_override;

    if (generate->parsed()) return cmd_generate(cfg, out);
    if (train_cmd->parsed()) return cmd_train(cfg, out);
    if (evaluate->parsed()) return cmd_evaluate(cfg, out, oracle, partial);
    if (report->parsed()) return cmd_report(out);
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
}
