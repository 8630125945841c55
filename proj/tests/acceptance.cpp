// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Heavier than the unit tests; expect a few minutes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "addsep/autodiff.hpp"
#include "addsep/classify.hpp"
#include "addsep/derivative_net.hpp"
#include "addsep/finite_diff.hpp"
#include "addsep/funcgen.hpp"
#include "addsep/mlp.hpp"
#include "addsep/parallel.hpp"
#include "addsep/rng.hpp"
#include "addsep/selftest.hpp"
#include "addsep/surrogate.hpp"

using namespace addsep;

namespace {

struct TrainedCorpus {
  std::vector<SymbolicFunction> functions;
  std::vector<Mlp> models;
};

/// One surrogate per corpus function, trained in parallel with per-function
/// seeds so the schedule cannot change results.
TrainedCorpus train_corpus(const CorpusConfig& corpus_cfg, const SurrogateRecipe& recipe,
                           std::size_t workers) {
  TrainedCorpus out;
  out.functions = generate_corpus(corpus_cfg);
  out.models.resize(out.functions.size());
  parallel_for_index(out.functions.size(), workers, [&](std::size_t idx) {
    const SymbolicFunction& fn = out.functions[idx];
    SampleConfig scfg;
    scfg.rng_seed = fn.seed;
    out.models[idx] = fit_surrogate(sample_training_data(fn, scfg), fn.seed, recipe).model;
  });
  return out;
}

template <class F>
double central_mixed(F&& f, const Vector& p, std::size_t i, std::size_t j, double h, double k) {
  const auto at = [&](double di, double dj) {
    Vector q = p;
    q[i] += di;
    q[j] += dj;
    return f(q);
  };
  return (at(h, k) - at(h, -k) - at(-h, k) + at(-h, -k)) / (4.0 * h * k);
}

// --------------------------------------------------------------------------
// Criteria
// --------------------------------------------------------------------------

bool criterion1(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  CorpusConfig cfg;
  cfg.arities = {2};
  cfg.balance = true;
  cfg.max_functions = 50;
  cfg.rng_seed = 510;
  SurrogateRecipe recipe;  // brief fits; the agreement is about the math
  recipe.train_cfg.patience = 50;
  recipe.train_cfg.max_epochs = 500;
  recipe.max_restarts = 1;
  const TrainedCorpus tc = train_corpus(cfg, recipe, 4);

  const TestSet grid = build_grid_testset(2, 30);
  double worst_pairwise = 0.0, worst_fd = 0.0;
  for (std::size_t k = 0; k < tc.models.size(); ++k) {
    const Mlp& net = tc.models[k];
    const DerivativeNet dnet(net, 0, 1);
    for (const Vector& p : grid) {
      const double m5 = mixed_partial_nested(net, p, 0, 1);
      const double m6 = mixed_partial_nested(net, p, 1, 0);
      const double m7 = hessian(net, p)(0, 1);
      const double m8 = dnet.eval(p);
      const double fd =
          central_mixed([&](const Vector& v) { return net.forward(v); }, p, 0, 1, 1e-4, 1e-4);
      const double vals[4] = {m5, m6, m7, m8};
      for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
          worst_pairwise = std::max(worst_pairwise, std::abs(vals[a] - vals[b]));
        }
        worst_fd = std::max(worst_fd, std::abs(vals[a] - fd));
      }
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream msg;
  msg << "worst pairwise |diff| " << worst_pairwise << " (<= 1e-8), worst vs central FD "
      << worst_fd << " (<= 1e-4) over 50 surrogates x 30 points, " << seconds << "s (< 120s)";
  detail = msg.str();
  return worst_pairwise <= 1e-8 && worst_fd <= 1e-4 && seconds < 120.0;
}

bool criterion2(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  CorpusConfig cfg;
  cfg.arities = {2};
  cfg.balance = true;
  cfg.max_functions = 200;
  cfg.rng_seed = 520;
  const auto corpus = generate_corpus(cfg);
  std::vector<EvalItem> items;
  for (const auto& fn : corpus) items.push_back({&fn, nullptr, build_grid_testset(2, 30)});
  const auto report = run_evaluation(items, {1, 2, 3, 4, 5, 6, 7, 8}, /*oracle=*/true, 4);

  double min_accuracy = 1.0, max_threshold = 0.0;
  for (const MethodSummary& s : report.summaries) {
    min_accuracy = std::min(min_accuracy, s.accuracy);
    max_threshold = std::max(max_threshold, s.threshold);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream msg;
  msg << "200-function balanced corpus, oracle mode: min accuracy " << min_accuracy
      << " (= 1.0), max threshold " << max_threshold << " (< 1e-8), " << seconds
      << "s (< 60s)";
  detail = msg.str();
  return report.failures.empty() && min_accuracy == 1.0 && max_threshold < 1e-8 &&
         seconds < 60.0;
}

// Trained artifacts from the first criterion-3 seed, reused by criterion 4.
TrainedCorpus g_seed1_corpus;
EvaluationReport g_seed1_report;

bool criterion3(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream msg;
  bool ok = true;
  for (int seed_round = 0; seed_round < 3; ++seed_round) {
    CorpusConfig cfg;
    cfg.arities = {2};
    cfg.balance = true;
    cfg.max_functions = 60;
    cfg.rng_seed = 1000 + static_cast<std::uint64_t>(seed_round);
    SurrogateRecipe recipe;  // experiment recipe; capped so a run stays desk-sized
    recipe.train_cfg.max_epochs = 12000;
    TrainedCorpus tc = train_corpus(cfg, recipe, 4);

    std::vector<EvalItem> items;
    for (std::size_t k = 0; k < tc.functions.size(); ++k) {
      items.push_back({&tc.functions[k], &tc.models[k], build_grid_testset(2, 30)});
    }
    const auto report = run_evaluation(items, {1, 2, 3, 4, 5, 6, 7, 8}, false, 1);

    double acc1 = 0.0, acc5 = 0.0;
    for (const MethodSummary& s : report.summaries) {
      if (s.method == 1) acc1 = s.accuracy;
      if (s.method == 5) acc5 = s.accuracy;
    }
    const bool round_ok = acc1 >= 0.75 && acc1 >= acc5;
    ok = ok && round_ok;
    msg << "seed " << cfg.rng_seed << ": C1 " << acc1 << ", C5 " << acc5
        << (round_ok ? "" : " <-- fails") << (seed_round < 2 ? "; " : "");
    if (seed_round == 0) {
      g_seed1_corpus = std::move(tc);
      g_seed1_report = report;
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream elapsed;
  elapsed << "; " << seconds << "s (< 1800s)";
  detail = "C1 >= 0.75 and C1 >= C5 required per seed -- " + msg.str() + elapsed.str();
  return ok && seconds < 1800.0;
}

bool criterion4(std::string& detail) {
  if (g_seed1_corpus.models.empty()) {
    detail = "criterion 3 artifacts unavailable";
    return false;
  }
  double mean[9] = {0};
  for (const MethodSummary& s : g_seed1_report.summaries) mean[s.method] = s.mean_time_s;
  const bool timing_ok = mean[7] > mean[5] && mean[7] > mean[6] && mean[7] > mean[8];

  bool counts_ok = true;
  for (std::size_t k = 0; k < g_seed1_corpus.models.size() && counts_ok; ++k) {
    const Mlp& net = g_seed1_corpus.models[k];
    const TestSet grid = build_grid_testset(2, 30);
    std::size_t calls = 0;
    const auto counted = [&](const Vector& v) {
      ++calls;
      return net.forward(v);
    };
    for (int m : {1, 2}) {
      calls = 0;
      const FdScore s = score_fd_method(m, counted, grid, 0, 1);
      counts_ok = counts_ok && s.quads == 435 && calls == 4 * 435;
    }
    for (int m : {3, 4}) {
      calls = 0;
      const FdScore s = score_fd_method(m, counted, grid, 0, 1);
      counts_ok = counts_ok && s.quads == 30 && calls == 4 * 30;
    }
  }
  std::ostringstream msg;
  msg << "mean scoring time M7 " << mean[7] << "s vs M5 " << mean[5] << "s, M6 " << mean[6]
      << "s, M8 " << mean[8] << "s; corner counts 435/435/30/30 per function: "
      << (counts_ok ? "exact" : "WRONG");
  detail = msg.str();
  return timing_ok && counts_ok;
}

bool criterion5(std::string& detail) {
  Rng arch(550);
  double worst_rel = 0.0, worst_route = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t dim = 1 + arch.below(3);
    const std::size_t depth = 1 + arch.below(3);
    const std::size_t width = 1 + arch.below(5);
    Rng net_rng(5600 + t);
    const Mlp net = Mlp::random(dim, std::vector<std::size_t>(depth, width), net_rng);

    Rng rng(5700 + t);
    Dataset batch;
    for (int s = 0; s < 4; ++s) {
      Vector x(dim);
      for (double& c : x) c = rng.uniform(-3.0, 3.0);
      batch.inputs.push_back(x);
      batch.outputs.push_back(rng.uniform(-2.0, 2.0));
    }
    const Gradients g = backward(net, batch);
    const double h = 1e-5;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      for (std::size_t k = 0; k < net.layers()[l].weights.size(); ++k) {
        auto shifted = [&](double eps) {
          std::vector<Layer> layers = net.layers();
          layers[l].weights.data()[k] += eps;
          return mse(Mlp(layers, net.activation()), batch);
        };
        const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        const double an = g.layers[l].weights.data()[k];
        worst_rel = std::max(worst_rel, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
      }
    }

    Vector p(dim);
    for (double& c : p) c = rng.uniform(-3.0, 3.0);
    const Vector tape_grad = gradient(net, p);
    const Vector chain_grad = input_gradient(net, p);
    for (std::size_t i = 0; i < dim; ++i) {
      worst_route = std::max(worst_route, std::abs(tape_grad[i] - chain_grad[i]));
    }
  }
  std::ostringstream msg;
  msg << "backprop vs central FD worst relative error " << worst_rel
      << " (<= 1e-6); tape vs chain-rule gradient worst |diff| " << worst_route
      << " (<= 1e-10), 100 random nets";
  detail = msg.str();
  return worst_rel <= 1e-6 && worst_route <= 1e-10;
}

bool criterion6(std::string& detail) {
  // f1 = sin(x) + y^2 and f2 = exp(x) + log(y+4) are separable; so are
  // f1 + f2 and c * f1. All four corner methods must score them ~0.
  SymbolicFunction f1, f2;
  f1.arity = f2.arity = 2;
  f1.partition = f2.partition = {{0}, {1}};
  f1.expr = Expr::sum(Expr::leaf(SubKind::Sin, 0), Expr::leaf(SubKind::Square, 1));
  f2.expr = Expr::sum(Expr::leaf(SubKind::Exp, 0), Expr::leaf(SubKind::Log, 1));
  const double c = 2.5;

  const auto sum_f = [&](const Vector& v) { return f1.eval_symbolic(v) + f2.eval_symbolic(v); };
  const auto scaled_f = [&](const Vector& v) { return c * f1.eval_symbolic(v); };
  const TestSet grid = build_grid_testset(2, 30);

  double worst = 0.0;
  for (int m = 1; m <= 4; ++m) {
    worst = std::max(worst, score_fd_method(m, sum_f, grid, 0, 1).mean_abs);
    worst = std::max(worst, score_fd_method(m, scaled_f, grid, 0, 1).mean_abs);
  }
  std::ostringstream msg;
  msg << "f1+f2 and c*f1 worst score " << worst << " (< 1e-10) across methods 1-4";
  detail = msg.str();
  return worst < 1e-10;
}

bool criterion7(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_selftest();
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::size_t failed = 0;
  std::string first;
  for (const CheckResult& r : results) {
    if (!r.pass) {
      ++failed;
      if (first.empty()) first = r.name + ": " + r.detail;
    }
  }
  std::ostringstream msg;
  msg << results.size() << " invariant checks, " << failed << " failed, " << seconds
      << "s (< 300s)";
  if (failed > 0) msg << " -- first failure: " << first;
  detail = msg.str();
  return failed == 0 && seconds < 300.0;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<bool(std::string&)> body;
  };
  const std::vector<Criterion> criteria = {
      {"derivative-engine cross-agreement (methods 5-8 + finite difference)", criterion1},
      {"analytic-oracle classification accuracy 1.0 at thresholds < 1e-8", criterion2},
      {"desk-scale accuracy: classifier 1 >= 0.75 and >= classifier 5, 3 seeds", criterion3},
      {"cost structure: hessian slowest of 5-8; corner counts 435 vs 30", criterion4},
      {"gradient correctness: backprop vs finite differences vs tape", criterion5},
      {"separability closure: sums and scalings stay separable", criterion6},
      {"module invariant suites (selftest) within five minutes", criterion7},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = criteria[k].body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %zu: %s -- %s (%.1fs)\n", pass ? "PASS" : "FAIL", k + 1,
                criteria[k].name, detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}
