#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "addsep/funcgen.hpp"
#include "addsep/manifest.hpp"
#include "addsep/rng.hpp"

using namespace addsep;
namespace fs = std::filesystem;

TEST_CASE("sub-function values from the table of forms") {
  CHECK(eval_subfunction(SubKind::Reciprocal, 0.0) == 0.25);
  CHECK(eval_subfunction(SubKind::SqrtAbs, -9.0) == 3.0);
  CHECK(eval_subfunction(SubKind::CubeThird, 3.0) == 1.0);
  CHECK(eval_subfunction(SubKind::CubeRoot, -8.0) == -2.0);  // real signed root
  CHECK(eval_subfunction(SubKind::SinSq, 1.3) ==
        Catch::Approx(std::sin(1.3) * std::sin(1.3)).margin(1e-15));
}

TEST_CASE("sub-functions are finite across the sampling range") {
  for (SubKind k : kAllSubKinds) {
    for (double n = -3.0; n <= 3.0; n += 0.0625) {
      CHECK(std::isfinite(eval_subfunction(k, n)));
    }
  }
}

TEST_CASE("sub-function domain violations raise NonFinite") {
  CHECK_THROWS_AS(eval_subfunction(SubKind::Reciprocal, -4.0), NonFinite);
  CHECK_THROWS_AS(eval_subfunction(SubKind::Log, -4.0), NonFinite);
  CHECK_THROWS_AS(eval_subfunction(SubKind::Exp, 1e9), NonFinite);
}

TEST_CASE("sub-function derivatives match central differences") {
  Rng rng(1999);
  for (SubKind k : kAllSubKinds) {
    for (int t = 0; t < 100; ++t) {
      double n = rng.uniform(-3.0, 3.0);
      // Step away from the kink/cusp of the |.|-based forms.
      if ((k == SubKind::SqrtAbs || k == SubKind::CubeRoot) && std::abs(n) < 0.05) n += 0.1;
      const double h = 1e-6;
      const double fd = (eval_subfunction(k, n + h) - eval_subfunction(k, n - h)) / (2.0 * h);
      CHECK(subfunction_derivative(k, n) == Catch::Approx(fd).epsilon(1e-5).margin(1e-7));
    }
  }
}

TEST_CASE("two-variable enumeration yields 144 additive and 144 multiplicative") {
  CorpusConfig cfg;
  cfg.arities = {2};
  cfg.balance = false;
  cfg.rng_seed = 1;
  const auto corpus = generate_corpus(cfg);
  REQUIRE(corpus.size() == 288);
  std::size_t separable = 0;
  for (const auto& f : corpus) {
    if (f.label == Label::Separable) ++separable;
  }
  CHECK(separable == 144);

  std::set<std::string> exprs;
  for (const auto& f : corpus) exprs.insert(expr_to_string(*f.expr));
  CHECK(exprs.size() == 288);
  CHECK(exprs.count("(+ (sub sin x0) (sub square x1))") == 1);   // separable
  CHECK(exprs.count("(* (sub exp x0) (sub log4 x1))") == 1);     // not separable
}

TEST_CASE("labels follow the top-level combinator") {
  CorpusConfig cfg;
  cfg.arities = {2};
  cfg.balance = false;
  cfg.rng_seed = 5;
  for (const auto& f : generate_corpus(cfg)) {
    const std::string s = expr_to_string(*f.expr);
    CHECK((f.label == Label::Separable) == (s.rfind("(+", 0) == 0));
  }
}

TEST_CASE("three-variable forms pair a univariate with a bivariate group") {
  CorpusConfig cfg;
  cfg.arities = {3};
  cfg.balance = true;
  cfg.max_functions = 40;
  cfg.rng_seed = 17;
  const auto corpus = generate_corpus(cfg);
  REQUIRE(corpus.size() == 40);
  for (const auto& f : corpus) {
    CHECK(f.arity == 3);
    CHECK(f.partition.first == std::vector<std::size_t>{0});
    CHECK(f.partition.second == std::vector<std::size_t>{1, 2});
  }
}

TEST_CASE("symbolic evaluation and analytic mixed partials") {
  SymbolicFunction sum;
  sum.arity = 2;
  sum.expr = Expr::sum(Expr::leaf(SubKind::Identity, 0), Expr::leaf(SubKind::Identity, 1));
  sum.partition = {{0}, {1}};
  CHECK(sum.eval_symbolic({1.0, 2.0}) == 3.0);
  CHECK(sum.mixed_partial({1.0, 2.0}, 0, 1) == 0.0);

  SymbolicFunction prod;
  prod.arity = 2;
  prod.expr = Expr::product(Expr::leaf(SubKind::Identity, 0), Expr::leaf(SubKind::Identity, 1));
  prod.partition = {{0}, {1}};
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    const Vector p{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    CHECK(prod.mixed_partial(p, 0, 1) == 1.0);
  }

  // sin(x) cos(y): the mixed partial cos(x) * (-sin(y)) vanishes at the
  // origin although the function is not separable.
  SymbolicFunction sincos;
  sincos.arity = 2;
  sincos.expr = Expr::product(Expr::leaf(SubKind::Sin, 0), Expr::leaf(SubKind::Cos, 1));
  sincos.partition = {{0}, {1}};
  CHECK(sincos.mixed_partial({0.0, 0.0}, 0, 1) == 0.0);
  CHECK(sincos.mixed_partial({1.0, 1.0}, 0, 1) ==
        Catch::Approx(std::cos(1.0) * -std::sin(1.0)).margin(1e-15));
}

TEST_CASE("label soundness: analytic mixed partial agrees with the label") {
  CorpusConfig cfg;
  cfg.arities = {2, 3};
  cfg.balance = true;
  cfg.max_functions = 200;
  cfg.rng_seed = 31;
  const auto corpus = generate_corpus(cfg);
  REQUIRE(corpus.size() == 200);
  Rng rng(32);
  for (const auto& f : corpus) {
    double max_abs = 0.0;
    for (int t = 0; t < 100; ++t) {
      Vector p(f.arity);
      for (double& c : p) c = rng.uniform(-3.0, 3.0);
      max_abs = std::max(max_abs, std::abs(f.mixed_partial(p)));
    }
    if (f.label == Label::Separable) {
      CHECK(max_abs < 1e-12);
    } else {
      CHECK(max_abs > 1e-6);
    }
  }
}

TEST_CASE("corpus generation is deterministic and balanced") {
  CorpusConfig cfg;
  cfg.arities = {2, 3};
  cfg.balance = true;
  cfg.max_functions = 60;
  cfg.rng_seed = 77;
  const auto a = generate_corpus(cfg);
  const auto b = generate_corpus(cfg);
  REQUIRE(a.size() == b.size());
  std::size_t separable = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].id == b[k].id);
    CHECK(a[k].seed == b[k].seed);
    CHECK(expr_to_string(*a[k].expr) == expr_to_string(*b[k].expr));
    if (a[k].label == Label::Separable) ++separable;
  }
  CHECK(separable == 30);
}

TEST_CASE("balance is refused when unsatisfiable") {
  CorpusConfig odd;
  odd.arities = {2};
  odd.max_functions = 61;
  odd.balance = true;
  CHECK_THROWS_AS(generate_corpus(odd), UnsatisfiableBalance);

  CorpusConfig too_many;
  too_many.arities = {2};
  too_many.max_functions = 10000;
  too_many.balance = true;
  CHECK_THROWS_AS(generate_corpus(too_many), UnsatisfiableBalance);
}

TEST_CASE("training data sampling: range, determinism, outputs") {
  SymbolicFunction fn;
  fn.arity = 2;
  fn.expr = Expr::sum(Expr::leaf(SubKind::Exp, 0), Expr::leaf(SubKind::Sin, 1));
  fn.partition = {{0}, {1}};

  SampleConfig cfg;
  cfg.rng_seed = 404;
  const Dataset a = sample_training_data(fn, cfg);
  const Dataset b = sample_training_data(fn, cfg);
  REQUIRE(a.size() == 30);
  for (std::size_t s = 0; s < a.size(); ++s) {
    for (double c : a.inputs[s]) {
      CHECK(c >= -3.0);
      CHECK(c <= 3.0);
    }
    CHECK(a.inputs[s] == b.inputs[s]);
    CHECK(a.outputs[s] == fn.eval_symbolic(a.inputs[s]));
  }
}

TEST_CASE("grid test set: endpoints, spacing, fixed size") {
  for (std::size_t arity : {2ul, 3ul}) {
    const TestSet ts = build_grid_testset(arity, 30);
    REQUIRE(ts.size() == 30);
    CHECK(ts.front() == Vector(arity, -3.0));
    CHECK(ts.back() == Vector(arity, 3.0));
    for (std::size_t t = 1; t < ts.size(); ++t) {
      CHECK(ts[t][0] - ts[t - 1][0] == Catch::Approx(6.0 / 29.0).margin(1e-12));
    }
  }
}

TEST_CASE("expression grammar round-trips the whole corpus") {
  CorpusConfig cfg;
  cfg.arities = {2, 3};
  cfg.balance = true;
  cfg.max_functions = 100;
  cfg.rng_seed = 3;
  Rng rng(4);
  for (const auto& f : generate_corpus(cfg)) {
    const std::string s = expr_to_string(*f.expr);
    const ExprPtr back = parse_expr(s);
    CHECK(expr_to_string(*back) == s);
    Vector p(f.arity);
    for (double& c : p) c = rng.uniform(-3.0, 3.0);
    CHECK(eval_expr(*back, p) == f.eval_symbolic(p));
  }
}

TEST_CASE("expression parser rejects malformed input") {
  CHECK_THROWS_AS(parse_expr("(+ (sub sin x0)"), FormatError);
  CHECK_THROWS_AS(parse_expr("(? (sub sin x0) (sub cos x1))"), FormatError);
  CHECK_THROWS_AS(parse_expr("(sub frobnicate x0)"), FormatError);
  CHECK_THROWS_AS(parse_expr("(sub sin y0)"), FormatError);
  CHECK_THROWS_AS(parse_expr("(sub sin x0) trailing"), FormatError);
}

TEST_CASE("manifest round-trips the corpus through disk") {
  CorpusConfig cfg;
  cfg.arities = {2};
  cfg.balance = true;
  cfg.max_functions = 12;
  cfg.rng_seed = 555;
  const auto corpus = generate_corpus(cfg);

  const fs::path dir = fs::temp_directory_path() / "addsep_manifest_test";
  fs::create_directories(dir);
  save_manifest(cfg, corpus, dir / "manifest.json");
  const Manifest back = load_manifest(dir / "manifest.json");

  CHECK(back.config.rng_seed == cfg.rng_seed);
  CHECK(back.config.balance == cfg.balance);
  REQUIRE(back.functions.size() == corpus.size());
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    CHECK(back.functions[k].id == corpus[k].id);
    CHECK(back.functions[k].label == corpus[k].label);
    CHECK(back.functions[k].seed == corpus[k].seed);
    CHECK(expr_to_string(*back.functions[k].expr) == expr_to_string(*corpus[k].expr));
    CHECK(back.functions[k].partition.first == corpus[k].partition.first);
    CHECK(back.functions[k].partition.second == corpus[k].partition.second);
  }
  fs::remove_all(dir);
}
