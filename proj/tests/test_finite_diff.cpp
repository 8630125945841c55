#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>

#include "addsep/finite_diff.hpp"
#include "addsep/funcgen.hpp"
#include "addsep/rng.hpp"

using namespace addsep;

namespace {

double f_sum(const Vector& v) { return v[0] + v[1]; }
double f_prod(const Vector& v) { return v[0] * v[1]; }

TestSet random_testset(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  TestSet ts;
  for (std::size_t s = 0; s < n; ++s) {
    Vector v(dim);
    for (double& c : v) c = rng.uniform(-3.0, 3.0);
    ts.push_back(std::move(v));
  }
  return ts;
}

CornerQuad quad2(double bx, double by, double ox, double oy) {
  return {{0.0, 0.0}, 0, 1, bx, by, ox, oy};
}

}  // namespace

TEST_CASE("corner value vanishes for additive functions under every mode") {
  for (int method = 1; method <= 4; ++method) {
    const FdMode mode = fd_mode_for_method(method);
    // Dyadic corners: the sums are exact, so the cancellation is too.
    CHECK(corner_mixed_partial(f_sum, quad2(-1.25, 0.5, 2.0, 1.75), mode) == 0.0);
    // Arbitrary corners cancel to rounding noise.
    CHECK(std::abs(corner_mixed_partial(f_sum, quad2(-1.3, 0.4, 2.0, 1.7), mode)) < 1e-14);
  }
}

TEST_CASE("corner value on x*y: hand-evaluated rectangles") {
  // Corners (0,0) and (1,1), divisor 1: (1 - 0 - 0 + 0) / 1 = 1.
  CHECK(corner_mixed_partial(f_prod, quad2(0, 0, 1, 1),
                             {StepRule::UnitStep, AnchorRule::AllPairs}) == 1.0);
  // Corners (0,0) and (2,3), divisor h*k: (6 - 0 - 0 + 0) / 6 = 1. Bilinear
  // functions are recovered exactly for any step.
  CHECK(corner_mixed_partial(f_prod, quad2(0, 0, 2, 3),
                             {StepRule::TrueStep, AnchorRule::AllPairs}) == 1.0);
}

TEST_CASE("zero step under TrueStep is an error at the corner level") {
  CHECK_THROWS_AS(corner_mixed_partial(f_prod, quad2(1.0, 0.0, 1.0, 2.0),
                                       {StepRule::TrueStep, AnchorRule::AllPairs}),
                  ZeroStep);
}

TEST_CASE("non-varied coordinates come from the quad context") {
  // f(x,y,z) = x*y + 10*z; the z contribution cancels in the corner sum but
  // shifts each evaluation, so a wrong context handling would show up.
  const auto f = [](const Vector& v) { return v[0] * v[1] + 10.0 * v[2]; };
  CornerQuad quad{{0.0, 0.0, 2.5}, 0, 1, 0.0, 0.0, 1.0, 1.0};
  CHECK(corner_mixed_partial(f, quad, {StepRule::UnitStep, AnchorRule::AllPairs}) ==
        Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("method 1: mean |corner| over all unordered pairs") {
  const TestSet ts = random_testset(30, 2, 874);
  std::size_t calls = 0;
  const auto counted = [&](const Vector& v) {
    ++calls;
    return f_sum(v);
  };
  const FdScore s = score_method1(counted, ts, 0, 1);
  CHECK(s.quads == 435);  // n(n-1)/2 rectangles for n = 30
  CHECK(calls == 4 * 435);
  CHECK(s.mean_abs < 1e-12);
}

TEST_CASE("method 1 on x*y matches a brute-force pair enumeration") {
  const TestSet ts = random_testset(3, 2, 901);
  double expected_abs = 0.0, expected_signed = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = a + 1; b < 3; ++b) {
      const double numerator = ts[b][0] * ts[b][1] - ts[b][0] * ts[a][1] -
                               ts[a][0] * ts[b][1] + ts[a][0] * ts[a][1];
      expected_abs += std::abs(numerator);
      expected_signed += numerator;
    }
  }
  expected_abs /= 3.0;
  expected_signed /= 3.0;
  const FdScore s = score_method1(f_prod, ts, 0, 1);
  CHECK(s.quads == 3);
  CHECK(s.mean_abs == Catch::Approx(expected_abs).margin(1e-13));
  CHECK(s.mean_signed == Catch::Approx(expected_signed).margin(1e-13));
}

TEST_CASE("method 2: additive gives zero, bilinear gives exactly one") {
  const TestSet grid = build_grid_testset(2, 30);
  CHECK(score_method2(f_sum, grid, 0, 1).mean_abs < 1e-12);
  CHECK(score_method2(f_prod, grid, 0, 1).mean_abs == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("method 2 skips pairs sharing a coordinate") {
  TestSet ts = random_testset(6, 2, 77);
  ts[3][0] = ts[0][0];  // one shared x-coordinate
  std::size_t calls = 0;
  const auto counted = [&](const Vector& v) {
    ++calls;
    return f_prod(v);
  };
  const FdScore s = score_method2(counted, ts, 0, 1);
  CHECK(s.quads == 14);  // 15 pairs minus the degenerate one
  CHECK(s.skipped == 1);
  CHECK(calls == 4 * 14);
  CHECK(s.mean_abs == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("method 3: hand-evaluated median-anchored rectangles") {
  const TestSet ts = {{-1.0, -1.0}, {0.0, 0.0}, {1.0, 1.0}};
  std::size_t calls = 0;
  const auto counted = [&](const Vector& v) {
    ++calls;
    return f_prod(v);
  };
  // Medians are (0, 0). Rectangles: (-1,-1)->(0,0) gives |0-0-0+1| = 1;
  // (0,0)->(0,0) gives 0; (1,1)->(0,0) gives |0-0-0+1| = 1. Mean 2/3.
  const FdScore s = score_method3(counted, ts, 0, 1);
  CHECK(s.quads == 3);
  CHECK(calls == 12);
  CHECK(s.mean_abs == Catch::Approx(2.0 / 3.0).margin(1e-13));
  CHECK(score_method3(f_sum, ts, 0, 1).mean_abs < 1e-12);
}

TEST_CASE("method 3: a single sample equal to the median scores zero") {
  const TestSet ts = {{0.5, -0.5}};
  const FdScore s = score_method3(f_prod, ts, 0, 1);
  CHECK(s.quads == 1);
  CHECK(s.mean_abs == 0.0);
}

TEST_CASE("method 4: additive zero, bilinear exact, degenerate samples skipped") {
  const TestSet grid = build_grid_testset(2, 30);
  CHECK(score_method4(f_sum, grid, 0, 1).mean_abs < 1e-12);
  CHECK(score_method4(f_prod, grid, 0, 1).mean_abs == Catch::Approx(1.0).margin(1e-12));

  // 29-point grid has an odd count, so the middle sample IS the median.
  const TestSet odd_grid = build_grid_testset(2, 29);
  const FdScore s = score_method4(f_prod, odd_grid, 0, 1);
  CHECK(s.quads == 28);
  CHECK(s.skipped == 1);
}

TEST_CASE("method 4: all samples degenerate is an error") {
  const TestSet ts = {{0.0, 0.0}};
  CHECK_THROWS_AS(score_method4(f_prod, ts, 0, 1), AllSamplesDegenerate);
}

TEST_CASE("pairwise scoring requires two samples") {
  const TestSet ts = {{0.0, 0.0}};
  CHECK_THROWS_AS(score_method1(f_prod, ts, 0, 1), InsufficientSamples);
}

TEST_CASE("corner test: separable zero, x*y unit square, Eq-numerator identity") {
  CHECK(corner_test(f_sum, {0.25, -2.0}, {1.5, 0.75}, 0, 1) == 0.0);
  CHECK(std::abs(corner_test(f_sum, {0.3, -2.0}, {1.5, 0.7}, 0, 1)) < 1e-14);
  CHECK(corner_test(f_prod, {0.0, 0.0}, {1.0, 1.0}, 0, 1) == 1.0);

  // The rectangle test equals the UnitStep corner numerator with context
  // taken from the first point.
  Rng rng(1861);
  const Mlp net = Mlp::default_surrogate(2, 1862);
  const auto f = [&](const Vector& v) { return net.forward(v); };
  for (int t = 0; t < 100; ++t) {
    const Vector a{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const Vector b{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const CornerQuad quad{a, 0, 1, a[0], a[1], b[0], b[1]};
    const double numerator =
        corner_mixed_partial(f, quad, {StepRule::UnitStep, AnchorRule::AllPairs});
    CHECK(corner_test(f, a, b, 0, 1) == Catch::Approx(numerator).margin(1e-12));
  }
}

TEST_CASE("corner test validates dimensions") {
  CHECK_THROWS_AS(corner_test(f_sum, {0.0, 1.0}, {0.0, 1.0, 2.0}, 0, 1), DimensionMismatch);
  CHECK_THROWS_AS(corner_test(f_sum, {0.0, 1.0}, {0.0, 1.0}, 0, 7), DimensionMismatch);
}

TEST_CASE("all four scores vanish on every additive two-variable corpus form") {
  CorpusConfig cfg;
  cfg.arities = {2};
  cfg.balance = false;
  cfg.rng_seed = 99;
  const auto corpus = generate_corpus(cfg);
  const TestSet grid = build_grid_testset(2, 30);
  std::size_t additive_seen = 0;
  for (const SymbolicFunction& fn : corpus) {
    if (fn.label != Label::Separable) continue;
    ++additive_seen;
    const auto f = [&](const Vector& v) { return fn.eval_symbolic(v); };
    for (int method = 1; method <= 4; ++method) {
      CHECK(score_fd_method(method, f, grid, 0, 1).mean_abs < 1e-10);
    }
  }
  CHECK(additive_seen == 144);
}

TEST_CASE("swapping the varied coordinate roles leaves scores unchanged") {
  const TestSet ts = random_testset(12, 2, 321);
  const Mlp net = Mlp::default_surrogate(2, 322);
  const auto f = [&](const Vector& v) { return net.forward(v); };
  for (int method = 1; method <= 4; ++method) {
    const double ij = score_fd_method(method, f, ts, 0, 1).mean_abs;
    const double ji = score_fd_method(method, f, ts, 1, 0).mean_abs;
    CHECK(ij == Catch::Approx(ji).margin(1e-12));
  }
}

TEST_CASE("held-constant coordinate value does not affect separable scores") {
  // f(x,y,z) = x^2 + y*z is separable across {x} | {y,z}; scoring (i=0,
  // j=1) must vanish for any fixed z.
  const auto f = [](const Vector& v) { return v[0] * v[0] + v[1] * v[2]; };
  const TestSet grid = build_grid_testset(3, 30);
  for (double z_fixed : {-2.5, 0.0, 1.75}) {
    Vector context{0.0, 0.0, z_fixed};
    for (int method = 1; method <= 4; ++method) {
      CHECK(score_fd_method(method, f, grid, 0, 1, &context).mean_abs < 1e-10);
    }
  }
}
