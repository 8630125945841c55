#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "addsep/core_math.hpp"
#include "addsep/errors.hpp"

namespace addsep {

// ---------------------------------------------------------------------------
// Corner evaluation
// ---------------------------------------------------------------------------

/// One rectangle (x_N, y_M) .. (x_N + h, y_M + k) in the plane of the two
/// varied coordinates. All other coordinates are fixed to `context` at all
/// four corner evaluations.
struct CornerQuad {
  Vector context;     // full input vector; entries i and j are overwritten
  std::size_t i = 0;  // index of the first varied coordinate
  std::size_t j = 1;  // index of the second varied coordinate
  double base_x = 0.0;
  double base_y = 0.0;
  double off_x = 0.0;  // base_x + h
  double off_y = 0.0;  // base_y + k
};

/// UnitStep divides the corner sum by 1 (a pure corner test); TrueStep
/// divides by h*k (a mixed-partial estimate).
enum class StepRule { UnitStep, TrueStep };

/// AllPairs ranges the rectangle over every unordered pair of samples;
/// MedianAnchor spans each sample to the per-coordinate median.
enum class AnchorRule { AllPairs, MedianAnchor };

/// The four (denominator, anchor) combinations map one-to-one onto scoring
/// methods 1-4.
struct FdMode {
  StepRule denominator = StepRule::UnitStep;
  AnchorRule anchor = AnchorRule::AllPairs;
};

inline FdMode fd_mode_for_method(int method) {
  switch (method) {
    case 1: return {StepRule::UnitStep, AnchorRule::AllPairs};
    case 2: return {StepRule::TrueStep, AnchorRule::AllPairs};
    case 3: return {StepRule::UnitStep, AnchorRule::MedianAnchor};
    case 4: return {StepRule::TrueStep, AnchorRule::MedianAnchor};
  }
  throw Error("finite-difference methods are numbered 1-4, got " + std::to_string(method));
}

/// Four-corner estimate of the mixed partial:
/// [f(x+h, y+k) - f(x+h, y) - f(x, y+k) + f(x, y)] / D
/// with D = 1 (UnitStep) or D = h*k (TrueStep).
template <class F>
double corner_mixed_partial(F&& f, const CornerQuad& quad, FdMode mode) {
  Vector p = quad.context;
  const auto eval = [&](double x, double y) {
    p[quad.i] = x;
    p[quad.j] = y;
    return f(static_cast<const Vector&>(p));
  };
  const double numerator = eval(quad.off_x, quad.off_y) - eval(quad.off_x, quad.base_y) -
                           eval(quad.base_x, quad.off_y) + eval(quad.base_x, quad.base_y);
  if (mode.denominator == StepRule::UnitStep) return numerator;
  const double h = quad.off_x - quad.base_x;
  const double k = quad.off_y - quad.base_y;
  if (h == 0.0 || k == 0.0) {
    throw ZeroStep("corner_mixed_partial: zero step under TrueStep (h=" + std::to_string(h) +
                   ", k=" + std::to_string(k) + ")");
  }
  return numerator / (h * k);
}

/// Four-point rectangle test: (f(a) + f(b')) - (f(a_i, b_j) + f(b_i, a_j)),
/// where every coordinate other than i and j is taken from `a`. Vanishes
/// identically on functions additively separable across i|j, and equals the
/// UnitStep corner numerator with base a and offset b.
template <class F>
double corner_test(F&& f, const Vector& a, const Vector& b, std::size_t i, std::size_t j) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("corner_test: point dimensions differ");
  }
  if (i >= a.size() || j >= a.size()) {
    throw DimensionMismatch("corner_test: variable index out of range");
  }
  Vector p = a;
  const auto eval = [&](double x, double y) {
    p[i] = x;
    p[j] = y;
    return f(static_cast<const Vector&>(p));
  };
  return (eval(a[i], a[j]) + eval(b[i], b[j])) - (eval(a[i], b[j]) + eval(b[i], a[j]));
}

// ---------------------------------------------------------------------------
// Test-set scores
// ---------------------------------------------------------------------------

/// Mean of |corner value| over the evaluated rectangles. The signed mean is
/// carried along for reporting; the classification score is mean_abs.
struct FdScore {
  double mean_abs = 0.0;
  double mean_signed = 0.0;
  std::size_t quads = 0;    // rectangles contributing to the mean
  std::size_t skipped = 0;  // degenerate rectangles dropped under TrueStep
};

/// Median of each coordinate across the test set (average of the two middle
/// order statistics for even counts).
inline Vector coordinate_medians(const TestSet& samples) {
  if (samples.empty()) throw InsufficientSamples("median of an empty test set");
  const std::size_t d = samples.front().size();
  Vector medians(d);
  std::vector<double> column(samples.size());
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t s = 0; s < samples.size(); ++s) column[s] = samples[s][c];
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    medians[c] = (n % 2 == 1) ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return medians;
}

namespace detail {

template <class F>
FdScore score_all_pairs(F&& f, const TestSet& samples, std::size_t i, std::size_t j,
                        StepRule rule, const Vector* context) {
  if (samples.size() < 2) {
    throw InsufficientSamples("pairwise scoring needs at least 2 samples, got " +
                              std::to_string(samples.size()));
  }
  const Vector ctx = context ? *context : coordinate_medians(samples);
  FdScore score;
  double sum_abs = 0.0, sum_signed = 0.0;
  for (std::size_t a = 0; a < samples.size(); ++a) {
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      CornerQuad quad{ctx, i, j, samples[a][i], samples[a][j], samples[b][i], samples[b][j]};
      if (rule == StepRule::TrueStep &&
          (quad.off_x == quad.base_x || quad.off_y == quad.base_y)) {
        ++score.skipped;
        continue;
      }
      const double v = corner_mixed_partial(f, quad, {rule, AnchorRule::AllPairs});
      sum_abs += std::abs(v);
      sum_signed += v;
      ++score.quads;
    }
  }
  if (score.quads == 0) {
    throw AllSamplesDegenerate("every sample pair has a zero step in coordinate " +
                               std::to_string(i) + " or " + std::to_string(j));
  }
  score.mean_abs = sum_abs / static_cast<double>(score.quads);
  score.mean_signed = sum_signed / static_cast<double>(score.quads);
  return score;
}

template <class F>
FdScore score_median_anchor(F&& f, const TestSet& samples, std::size_t i, std::size_t j,
                            StepRule rule, const Vector* context) {
  if (samples.empty()) {
    throw InsufficientSamples("median-anchor scoring needs at least 1 sample");
  }
  const Vector medians = coordinate_medians(samples);
  const Vector ctx = context ? *context : medians;
  FdScore score;
  double sum_abs = 0.0, sum_signed = 0.0;
  for (const Vector& s : samples) {
    CornerQuad quad{ctx, i, j, s[i], s[j], medians[i], medians[j]};
    if (rule == StepRule::TrueStep && (quad.off_x == quad.base_x || quad.off_y == quad.base_y)) {
      ++score.skipped;
      continue;
    }
    const double v = corner_mixed_partial(f, quad, {rule, AnchorRule::MedianAnchor});
    sum_abs += std::abs(v);
    sum_signed += v;
    ++score.quads;
  }
  if (score.quads == 0) {
    throw AllSamplesDegenerate("every sample coincides with the median in coordinate " +
                               std::to_string(i) + " or " + std::to_string(j));
  }
  score.mean_abs = sum_abs / static_cast<double>(score.quads);
  score.mean_signed = sum_signed / static_cast<double>(score.quads);
  return score;
}

}  // namespace detail

/// Method 1: every unordered sample pair as (base, offset), divisor 1.
/// Exactly n(n-1)/2 rectangles.
template <class F>
FdScore score_method1(F&& f, const TestSet& samples, std::size_t i, std::size_t j,
                      const Vector* context = nullptr) {
  return detail::score_all_pairs(f, samples, i, j, StepRule::UnitStep, context);
}

/// Method 2: as method 1 but divided by h*k; pairs sharing a coordinate are
/// skipped and the mean is over the survivors.
template <class F>
FdScore score_method2(F&& f, const TestSet& samples, std::size_t i, std::size_t j,
                      const Vector* context = nullptr) {
  return detail::score_all_pairs(f, samples, i, j, StepRule::TrueStep, context);
}

/// Method 3: each sample spans a rectangle to the per-coordinate median,
/// divisor 1. Exactly n rectangles (linear cost).
template <class F>
FdScore score_method3(F&& f, const TestSet& samples, std::size_t i, std::size_t j,
                      const Vector* context = nullptr) {
  return detail::score_median_anchor(f, samples, i, j, StepRule::UnitStep, context);
}

/// Method 4: as method 3 but divided by h*k; samples matching the median in
/// either varied coordinate are skipped.
template <class F>
FdScore score_method4(F&& f, const TestSet& samples, std::size_t i, std::size_t j,
                      const Vector* context = nullptr) {
  return detail::score_median_anchor(f, samples, i, j, StepRule::TrueStep, context);
}

template <class F>
FdScore score_fd_method(int method, F&& f, const TestSet& samples, std::size_t i, std::size_t j,
                        const Vector* context = nullptr) {
  const FdMode mode = fd_mode_for_method(method);
  if (mode.anchor == AnchorRule::AllPairs) {
    return detail::score_all_pairs(f, samples, i, j, mode.denominator, context);
  }
  return detail::score_median_anchor(f, samples, i, j, mode.denominator, context);
}

}  // namespace addsep
