#pragma once

#include <cstdint>
#include <limits>
#include <utility>

#include "addsep/mlp.hpp"
#include "addsep/rng.hpp"

namespace addsep {

// Seed streams hanging off a function's manifest seed, one pair per restart.
inline constexpr std::uint64_t kStreamTrainShuffle = 2;
inline constexpr std::uint64_t kStreamInit = 3;

/// How a surrogate is produced from a training set. One `train` run uses the
/// validation-based recipe; runs are restarted (fresh init and shuffle
/// stream) until the best model fits the full dataset to `target_mse` or
/// `max_restarts` is exhausted. Restart selection uses the full-dataset MSE
/// rather than each run's own validation loss: the six-point validation
/// splits differ per restart, and comparing losses across different splits
/// systematically favors flat, underfit models.
struct SurrogateRecipe {
  TrainConfig train_cfg{};
  std::size_t max_restarts = 6;
  double target_mse = 1e-4;  // on the standardized scale
  bool standardize = true;
};

struct SurrogateResult {
  Mlp model;
  TrainReport report;     // report of the selected restart
  OutputStats stats;      // identity (mean 0, scale 1) when not standardized
  double full_mse = std::numeric_limits<double>::infinity();
  std::size_t restarts_used = 0;
};

/// Trains the surrogate for one function. `data` is taken by value because
/// standardization rescales the outputs; the caller's dataset is untouched.
/// Deterministic in (data, seed, recipe) regardless of scheduling.
inline SurrogateResult fit_surrogate(Dataset data, std::uint64_t seed,
                                     const SurrogateRecipe& recipe) {
  SurrogateResult out;
  if (recipe.standardize) out.stats = standardize_outputs(data);
  for (std::size_t r = 0; r < std::max<std::size_t>(recipe.max_restarts, 1); ++r) {
    TrainConfig tcfg = recipe.train_cfg;
    tcfg.rng_seed = derive_seed(seed, r, kStreamTrainShuffle);
    const Mlp init = Mlp::default_surrogate(data.dim(), derive_seed(seed, r, kStreamInit));
    auto [model, report] = train(init, data, tcfg);
    const double full = mse(model, data);
    ++out.restarts_used;
    if (full < out.full_mse) {
      out.full_mse = full;
      out.model = std::move(model);
      out.report = std::move(report);
    }
    if (out.full_mse <= recipe.target_mse) break;
  }
  return out;
}

}  // namespace addsep
