#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "addsep/autodiff.hpp"
#include "addsep/classify.hpp"
#include "addsep/derivative_net.hpp"
#include "addsep/finite_diff.hpp"
#include "addsep/funcgen.hpp"
#include "addsep/mlp.hpp"
#include "addsep/rng.hpp"
#include "addsep/surrogate.hpp"

namespace addsep {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // first failure, or empty
  double seconds = 0.0;
};

namespace selftest_detail {

/// Accumulates expectation failures inside one named check.
class Expect {
 public:
  void that(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (detail_.empty()) detail_ = what;
  }

  void close(double got, double want, double tol, const std::string& what) {
    std::ostringstream msg;
    msg << what << ": got " << got << ", want " << want << " within " << tol;
    that(std::abs(got - want) <= tol, msg.str());
  }

  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    if (ok()) return "";
    return detail_ + " (" + std::to_string(failed_) + "/" + std::to_string(total_) +
           " expectations failed)";
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::string detail_;
};

inline Mlp small_net(std::size_t dim, std::size_t depth, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  return Mlp::random(dim, std::vector<std::size_t>(depth, width), rng);
}

inline Dataset sample_dataset(const SymbolicFunction& fn, std::uint64_t seed) {
  SampleConfig cfg;
  cfg.rng_seed = seed;
  return sample_training_data(fn, cfg);
}

}  // namespace selftest_detail

/// Runs every module's invariant suite. Each entry prints as one line; the
/// whole run is deterministic and finishes within a few minutes.
inline std::vector<CheckResult> run_selftest() {
  using selftest_detail::Expect;
  using selftest_detail::sample_dataset;
  using selftest_detail::small_net;

  std::vector<std::pair<std::string, std::function<void(Expect&)>>> checks;

  // ---- core_math ----------------------------------------------------------
  checks.emplace_back("core_math: softplus identities on 1000 points", [](Expect& e) {
    Rng rng(101);
    for (int t = 0; t < 1000; ++t) {
      const double x = rng.uniform(-10.0, 10.0);
      e.close(softplus_prime(x) + softplus_prime(-x), 1.0, 1e-12, "sigmoid complement");
      const double p = softplus_prime(x);
      e.close(softplus_double_prime(x), p * (1.0 - p), 1e-12, "second derivative product form");
      e.close(softplus(x) - softplus(-x), x, 1e-10, "softplus odd part");
    }
  });

  checks.emplace_back("core_math: derivatives match central differences", [](Expect& e) {
    Rng rng(102);
    for (int t = 0; t < 1000; ++t) {
      const double x = rng.uniform(-10.0, 10.0);
      const double h = 1e-5;
      const double d1 = (softplus(x + h) - softplus(x - h)) / (2.0 * h);
      const double d2 = (softplus_prime(x + h) - softplus_prime(x - h)) / (2.0 * h);
      e.that(std::abs(softplus_prime(x) - d1) <= 1e-7 * std::max(1.0, std::abs(d1)),
             "softplus' vs finite difference");
      e.that(std::abs(softplus_double_prime(x) - d2) <= 1e-7 * std::max(1.0, std::abs(d2)),
             "softplus'' vs finite difference");
    }
  });

  // ---- mlp -----------------------------------------------------------------
  checks.emplace_back("mlp: backprop matches finite differences on small nets", [](Expect& e) {
    Rng arch(103);
    for (int t = 0; t < 10; ++t) {
      const std::size_t dim = 1 + arch.below(3);
      const Mlp net = small_net(dim, 1 + arch.below(3), 1 + arch.below(5), 9100 + t);
      Rng rng(9200 + t);
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
          auto shift = [&](double eps) {
            std::vector<Layer> layers = net.layers();
            layers[l].weights.data()[k] += eps;
            return mse(Mlp(layers, net.activation()), batch);
          };
          const double fd = (shift(h) - shift(-h)) / (2.0 * h);
          const double an = g.layers[l].weights.data()[k];
          e.that(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)) + 1e-9,
                 "weight gradient vs finite difference");
        }
      }
    }
  });

  checks.emplace_back("mlp: early stopping and best-loss bookkeeping", [](Expect& e) {
    SymbolicFunction fn;
    fn.arity = 2;
    fn.expr = Expr::sum(Expr::leaf(SubKind::Sin, 0), Expr::leaf(SubKind::Square, 1));
    fn.partition = {{0}, {1}};
    const Dataset data = sample_dataset(fn, 104);
    TrainConfig cfg;
    cfg.rng_seed = 105;
    cfg.patience = 40;
    cfg.max_epochs = 500;
    const auto [model, report] = train(Mlp::default_surrogate(2, 106), data, cfg);
    e.that(report.epochs_run <= report.best_epoch + cfg.patience + 1, "patience bound");
    e.that(report.epochs_run <= cfg.max_epochs, "max epoch bound");
    double min_val = std::numeric_limits<double>::infinity();
    for (const EpochLoss& l : report.loss_history) min_val = std::min(min_val, l.val_loss);
    e.that(report.best_validation_loss == min_val, "best loss is not the history minimum");
  });

  checks.emplace_back("mlp: forward is deterministic under concurrency", [](Expect& e) {
    const Mlp net = Mlp::default_surrogate(2, 107);
    const Vector x{1.1, -0.7};
    const double want = net.forward(x);
    std::vector<double> got(6, 0.0);
    std::vector<std::thread> pool;
    for (int t = 0; t < 6; ++t) {
      pool.emplace_back([&, t] {
        double acc = 0.0;
        for (int k = 0; k < 100; ++k) acc = net.forward(x);
        got[t] = acc;
      });
    }
    for (auto& th : pool) th.join();
    for (double v : got) e.that(v == want, "concurrent forward differs");
  });

  // ---- autodiff ------------------------------------------------------------
  checks.emplace_back("autodiff: nested order symmetry and hessian agreement", [](Expect& e) {
    Rng rng(108);
    for (int t = 0; t < 25; ++t) {
      const std::size_t dim = 2 + rng.below(2);
      const Mlp net = small_net(dim, 2, 5, 9300 + t);
      Vector p(dim);
      for (double& c : p) c = rng.uniform(-2.0, 2.0);
      const Matrix h = hessian(net, p);
      for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) {
          const double ij = mixed_partial_nested(net, p, i, j);
          const double ji = mixed_partial_nested(net, p, j, i);
          e.that(std::abs(ij - ji) < 1e-10, "nested order symmetry");
          e.that(std::abs(h(i, j) - ij) < 1e-10, "hessian vs nested (i,j)");
          e.that(std::abs(h(j, i) - ji) < 1e-10, "hessian vs nested (j,i)");
        }
      }
    }
  });

  checks.emplace_back("autodiff: agrees with derivative network at 1000 points", [](Expect& e) {
    const Mlp net = Mlp::default_surrogate(2, 109);
    const DerivativeNet dnet(net, 0, 1);
    Rng rng(110);
    for (int t = 0; t < 1000; ++t) {
      const Vector p{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
      e.that(std::abs(mixed_partial_nested(net, p, 0, 1) - dnet.eval(p)) < 1e-8,
             "nested vs derivative network");
      e.that(std::abs(hessian(net, p)(0, 1) - dnet.eval(p)) < 1e-8,
             "hessian vs derivative network");
    }
  });

  checks.emplace_back("autodiff: numeric sweeps are repeatable", [](Expect& e) {
    const Mlp net = small_net(2, 2, 4, 111);
    Tape tape;
    const Recording rec = record_forward(net, tape, {0.2, -0.9});
    const auto a = tape.adjoints(rec.output.index());
    const auto b = tape.adjoints(rec.output.index());
    e.that(a == b, "repeated sweep differs");
  });

  // ---- derivative_net --------------------------------------------------------
  checks.emplace_back("derivative_net: output-layer linearity and bias invariance", [](Expect& e) {
    const Mlp net = Mlp::default_surrogate(2, 112);
    std::vector<Layer> scaled = net.layers();
    for (double& w : scaled.back().weights.data()) w *= 2.5;
    scaled.back().bias[0] += 11.0;
    const Mlp net2(scaled, ActivationKind::Softplus);
    const DerivativeNet d1(net, 0, 1);
    const DerivativeNet d2(net2, 0, 1);
    const DerivativeNet d1_swapped(net, 1, 0);
    Rng rng(113);
    for (int t = 0; t < 200; ++t) {
      const Vector p{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
      e.that(std::abs(d2.eval(p) - 2.5 * d1.eval(p)) < 1e-12, "output scaling linearity");
      e.that(std::abs(d1_swapped.eval(p) - d1.eval(p)) < 1e-12, "variable swap symmetry");
    }
  });

  // ---- finite_diff -----------------------------------------------------------
  checks.emplace_back("finite_diff: additive corpus forms score < 1e-10 everywhere",
                      [](Expect& e) {
    CorpusConfig cfg;
    cfg.arities = {2};
    cfg.balance = false;
    cfg.rng_seed = 114;
    const TestSet grid = build_grid_testset(2, 30);
    for (const SymbolicFunction& fn : generate_corpus(cfg)) {
      if (fn.label != Label::Separable) continue;
      const auto f = [&](const Vector& v) { return fn.eval_symbolic(v); };
      for (int m = 1; m <= 4; ++m) {
        e.that(score_fd_method(m, f, grid, 0, 1).mean_abs < 1e-10,
               "additive form scored above 1e-10 by method " + std::to_string(m));
      }
    }
  });

  checks.emplace_back("finite_diff: rectangle test equals the corner numerator", [](Expect& e) {
    const Mlp net = Mlp::default_surrogate(2, 115);
    const auto f = [&](const Vector& v) { return net.forward(v); };
    Rng rng(116);
    for (int t = 0; t < 100; ++t) {
      const Vector a{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
      const Vector b{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
      const CornerQuad quad{a, 0, 1, a[0], a[1], b[0], b[1]};
      const double numerator =
          corner_mixed_partial(f, quad, {StepRule::UnitStep, AnchorRule::AllPairs});
      e.that(std::abs(corner_test(f, a, b, 0, 1) - numerator) < 1e-12,
             "rectangle identity violated");
    }
  });

  checks.emplace_back("finite_diff: quadratic vs linear evaluation counts", [](Expect& e) {
    const Mlp net = Mlp::default_surrogate(2, 117);
    const TestSet grid = build_grid_testset(2, 30);
    std::size_t calls = 0;
    const auto counted = [&](const Vector& v) {
      ++calls;
      return net.forward(v);
    };
    const FdScore s1 = score_method1(counted, grid, 0, 1);
    e.that(s1.quads == 435 && calls == 4 * 435, "method 1 must evaluate n(n-1)/2 rectangles");
    calls = 0;
    const FdScore s3 = score_method3(counted, grid, 0, 1);
    e.that(s3.quads == 30 && calls == 4 * 30, "method 3 must evaluate n rectangles");
  });

  checks.emplace_back("finite_diff: swapping the varied coordinates preserves scores",
                      [](Expect& e) {
    const Mlp net = Mlp::default_surrogate(2, 118);
    const auto f = [&](const Vector& v) { return net.forward(v); };
    const TestSet grid = build_grid_testset(2, 30);
    for (int m = 1; m <= 4; ++m) {
      const double ij = score_fd_method(m, f, grid, 0, 1).mean_abs;
      const double ji = score_fd_method(m, f, grid, 1, 0).mean_abs;
      e.that(std::abs(ij - ji) < 1e-12, "coordinate swap changed method " + std::to_string(m));
    }
  });

  checks.emplace_back("finite_diff: pinned-coordinate value is irrelevant for separable forms",
                      [](Expect& e) {
    const auto f = [](const Vector& v) { return v[0] * v[0] + v[1] * v[2]; };
    const TestSet grid = build_grid_testset(3, 30);
    for (double z : {-2.5, -1.0, 0.0, 2.0}) {
      Vector context{0.0, 0.0, z};
      for (int m = 1; m <= 4; ++m) {
        e.that(score_fd_method(m, f, grid, 0, 1, &context).mean_abs < 1e-10,
               "x^2 + y z scored above 1e-10 across {x}|{y,z}");
      }
    }
  });

  // ---- funcgen ---------------------------------------------------------------
  checks.emplace_back("funcgen: labels sound against the analytic mixed partial", [](Expect& e) {
    CorpusConfig cfg;
    cfg.arities = {2, 3};
    cfg.balance = true;
    cfg.max_functions = 200;
    cfg.rng_seed = 119;
    Rng rng(120);
    std::size_t separable = 0;
    const auto corpus = generate_corpus(cfg);
    for (const SymbolicFunction& fn : corpus) {
      double max_abs = 0.0;
      for (int t = 0; t < 100; ++t) {
        Vector p(fn.arity);
        for (double& c : p) c = rng.uniform(-3.0, 3.0);
        max_abs = std::max(max_abs, std::abs(fn.mixed_partial(p)));
      }
      if (fn.label == Label::Separable) {
        ++separable;
        e.that(max_abs < 1e-12, "separable function with nonzero mixed partial: " + fn.id);
      } else {
        e.that(max_abs > 1e-6, "non-separable function with vanishing mixed partial: " + fn.id);
      }
    }
    e.that(separable * 2 == corpus.size(), "balanced corpus is not half separable");
  });

  checks.emplace_back("funcgen: generation and sampling are deterministic", [](Expect& e) {
    CorpusConfig cfg;
    cfg.arities = {2};
    cfg.balance = true;
    cfg.max_functions = 30;
    cfg.rng_seed = 121;
    const auto a = generate_corpus(cfg);
    const auto b = generate_corpus(cfg);
    e.that(a.size() == b.size(), "corpus size differs between runs");
    for (std::size_t k = 0; k < a.size(); ++k) {
      e.that(expr_to_string(*a[k].expr) == expr_to_string(*b[k].expr), "expression differs");
      const Dataset da = sample_dataset(a[k], a[k].seed);
      const Dataset db = sample_dataset(b[k], b[k].seed);
      e.that(da.inputs == db.inputs && da.outputs == db.outputs, "dataset differs");
    }
  });

  // ---- classify ---------------------------------------------------------------
  checks.emplace_back("classify: zero false positives at the optimal threshold", [](Expect& e) {
    Rng rng(122);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<ScoreRecord> records;
      const std::size_t ns = 1 + rng.below(10), nn = 1 + rng.below(10);
      for (std::size_t k = 0; k < ns + nn; ++k) {
        ScoreRecord r;
        r.method = 1;
        r.score = rng.uniform(0.0, 1.0);
        r.label = k < ns ? Label::Separable : Label::NonSeparable;
        records.push_back(r);
      }
      const double t = optimal_threshold(records);
      for (const auto& r : records) {
        if (r.label == Label::NonSeparable) {
          e.that(classify(r.score, t) == Label::NonSeparable, "false positive at threshold");
        }
      }
    }
  });

  checks.emplace_back("classify: raising the threshold is monotone", [](Expect& e) {
    Rng rng(123);
    std::vector<ScoreRecord> records;
    for (int k = 0; k < 40; ++k) {
      ScoreRecord r;
      r.method = 1;
      r.score = rng.uniform(0.0, 1.0);
      r.label = k % 2 == 0 ? Label::Separable : Label::NonSeparable;
      records.push_back(r);
    }
    std::size_t prev = 0;
    for (double t = 0.0; t <= 1.01; t += 0.02) {
      std::size_t now = 0;
      for (const auto& r : records) {
        if (classify(r.score, t) == Label::Separable) ++now;
      }
      e.that(now >= prev, "separable count dropped as the threshold rose");
      prev = now;
    }
  });

  checks.emplace_back("classify: methods 5-8 agree pairwise and in ordering", [](Expect& e) {
    CorpusConfig cfg;
    cfg.arities = {2};
    cfg.balance = true;
    cfg.max_functions = 8;
    cfg.rng_seed = 124;
    const auto corpus = generate_corpus(cfg);
    std::vector<Mlp> models;
    for (std::size_t k = 0; k < corpus.size(); ++k) {
      models.push_back(Mlp::default_surrogate(2, 12500 + k));
    }
    std::vector<EvalItem> items;
    for (std::size_t k = 0; k < corpus.size(); ++k) {
      items.push_back({&corpus[k], &models[k], build_grid_testset(2, 30)});
    }
    const auto report = run_evaluation(items, {5, 6, 7, 8}, false);
    std::vector<std::vector<double>> scores(9);
    for (const auto& r : report.records) scores[r.method].push_back(r.score);
    for (int m : {6, 7, 8}) {
      for (std::size_t k = 0; k < scores[5].size(); ++k) {
        e.that(std::abs(scores[m][k] - scores[5][k]) < 1e-8,
               "method " + std::to_string(m) + " differs from method 5");
      }
      std::vector<std::size_t> o5(scores[5].size()), om(scores[m].size());
      std::iota(o5.begin(), o5.end(), 0u);
      std::iota(om.begin(), om.end(), 0u);
      std::sort(o5.begin(), o5.end(), [&](auto a, auto b) { return scores[5][a] < scores[5][b]; });
      std::sort(om.begin(), om.end(), [&](auto a, auto b) { return scores[m][a] < scores[m][b]; });
      e.that(o5 == om, "method " + std::to_string(m) + " orders functions differently");
    }
  });

  checks.emplace_back("classify: additive surrogates score below their product twins",
                      [](Expect& e) {
    // Matched pairs g+h vs g*h over the same sub-functions; method 1 must
    // rank the additive surrogate lower for at least 90% of pairs. Each
    // surrogate keeps the best validation loss of three restarts, since a
    // single run on 24 training points is occasionally a bad fit on either
    // side of a pair.
    const std::vector<std::pair<SubKind, SubKind>> pairs = {
        {SubKind::Sin, SubKind::Square},  {SubKind::Exp, SubKind::Cos},
        {SubKind::Identity, SubKind::Log}, {SubKind::CubeThird, SubKind::SinSq},
        {SubKind::Reciprocal, SubKind::Identity}, {SubKind::Cos, SubKind::Cos},
        {SubKind::SqrtAbs, SubKind::Square}, {SubKind::Sin, SubKind::Sin},
        {SubKind::Log, SubKind::CosSq}, {SubKind::Square, SubKind::Square}};
    const TestSet grid = build_grid_testset(2, 30);
    std::size_t wins = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      double score[2];
      for (int variant = 0; variant < 2; ++variant) {
        SymbolicFunction fn;
        fn.arity = 2;
        fn.partition = {{0}, {1}};
        const ExprPtr g = Expr::leaf(pairs[k].first, 0);
        const ExprPtr h = Expr::leaf(pairs[k].second, 1);
        fn.expr = variant == 0 ? Expr::sum(g, h) : Expr::product(g, h);
        fn.label = variant == 0 ? Label::Separable : Label::NonSeparable;
        const Dataset data = sample_dataset(fn, 12600 + 2 * k + variant);
        SurrogateRecipe recipe;
        recipe.max_restarts = 3;
        recipe.train_cfg.max_epochs = 8000;
        const Mlp best = fit_surrogate(data, 12700 + 2 * k + variant, recipe).model;
        score[variant] =
            score_method1([&](const Vector& v) { return best.forward(v); }, grid, 0, 1)
                .mean_abs;
      }
      if (score[0] < score[1]) ++wins;
    }
    e.that(wins * 10 >= pairs.size() * 9,
           "additive beat multiplicative only " + std::to_string(wins) + "/" +
               std::to_string(pairs.size()) + " times");
  });

  // ---- cli-level determinism ---------------------------------------------------
  checks.emplace_back("pipeline: identical config reproduces identical scores", [](Expect& e) {
    const auto run_once = [&]() {
      CorpusConfig cfg;
      cfg.arities = {2};
      cfg.balance = true;
      cfg.max_functions = 4;
      cfg.rng_seed = 126;
      const auto corpus = generate_corpus(cfg);
      std::vector<Mlp> models;
      std::vector<EvalItem> items;
      models.reserve(corpus.size());
      for (const auto& fn : corpus) {
        SurrogateRecipe recipe;
        recipe.train_cfg.patience = 30;
        recipe.train_cfg.max_epochs = 250;
        recipe.max_restarts = 1;
        models.push_back(fit_surrogate(sample_dataset(fn, fn.seed), fn.seed, recipe).model);
      }
      for (std::size_t k = 0; k < corpus.size(); ++k) {
        items.push_back({&corpus[k], &models[k], build_grid_testset(2, 30)});
      }
      std::vector<double> out;
      for (const auto& r : run_evaluation(items, {1, 5, 8}, false, 2).records) {
        out.push_back(r.score);
      }
      return out;
    };
    const auto a = run_once();
    const auto b = run_once();
    e.that(a == b, "two identical pipeline runs disagree");
  });

  // Run everything.
  std::vector<CheckResult> results;
  results.reserve(checks.size());
  for (auto& [name, body] : checks) {
    CheckResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Expect e;
      body(e);
      r.pass = e.ok();
      r.detail = e.summary();
    } catch (const std::exception& ex) {
      r.pass = false;
      r.detail = std::string("exception: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(std::move(r));
  }
  return results;
}

/// Prints one line per check; returns the number of failures.
inline int print_selftest(std::ostream& out) {
  int failures = 0;
  for (const CheckResult& r : run_selftest()) {
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] %-70s (%.2fs)", r.pass ? "PASS" : "FAIL",
                  r.name.c_str(), r.seconds);
    out << line << "\n";
    if (!r.pass) {
      out << "       " << r.detail << "\n";
      ++failures;
    }
  }
  return failures;
}

}  // namespace addsep
