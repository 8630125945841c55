#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "addsep/core_math.hpp"
#include "addsep/errors.hpp"
#include "addsep/rng.hpp"

namespace addsep {

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

struct Layer {
  Matrix weights;  // out x in
  Vector bias;     // out
};

namespace detail {

/// Forward pass over bare layers; hidden layers apply softplus after the
/// affine transform, the final layer is affine only.
inline double forward_layers(const std::vector<Layer>& layers, const Vector& input) {
  Vector a = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Vector z = matvec(layers[l].weights, a);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += layers[l].bias[i];
    if (l + 1 < layers.size()) {
      for (double& x : z) x = softplus(x);
    }
    a = std::move(z);
  }
  return a[0];
}

}  // namespace detail

/// Feed-forward scalar regressor. Immutable after construction; concurrent
/// evaluation from many threads is safe.
class Mlp {
 public:
  Mlp() = default;

  Mlp(std::vector<Layer> layers, ActivationKind activation)
      : layers_(std::move(layers)), activation_(activation) {
    validate();
  }

  /// Builds a network with the given hidden widths and scalar output, all
  /// parameters drawn uniformly from [-sqrt(1/fan_in), +sqrt(1/fan_in)].
  static Mlp random(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                    Rng& rng, ActivationKind activation = ActivationKind::Softplus) {
    std::vector<Layer> layers;
    std::size_t fan_in = input_dim;
    for (std::size_t width : hidden_widths) {
      layers.push_back(random_layer(width, fan_in, rng));
      fan_in = width;
    }
    layers.push_back(random_layer(1, fan_in, rng));
    return Mlp(std::move(layers), activation);
  }

  /// The experiment architecture: two hidden layers of width 26, softplus.
  static Mlp default_surrogate(std::size_t input_dim, std::uint64_t seed) {
    Rng rng(seed);
    return random(input_dim, {26, 26}, rng);
  }

  const std::vector<Layer>& layers() const { return layers_; }
  ActivationKind activation() const { return activation_; }
  std::size_t depth() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().weights.cols(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  double forward(const Vector& input) const {
    if (input.size() != input_dim()) {
      throw DimensionMismatch("forward: input size " + std::to_string(input.size()) +
                              ", network expects " + std::to_string(input_dim()));
    }
    return detail::forward_layers(layers_, input);
  }

  void validate() const {
    if (layers_.empty()) throw DimensionMismatch("network has no layers");
    for (std::size_t l = 1; l < layers_.size(); ++l) {
      if (layers_[l].weights.cols() != layers_[l - 1].weights.rows()) {
        throw DimensionMismatch("layer " + std::to_string(l) + " expects input " +
                                std::to_string(layers_[l].weights.cols()) +
                                ", previous layer outputs " +
                                std::to_string(layers_[l - 1].weights.rows()));
      }
    }
    for (const Layer& l : layers_) {
      if (l.bias.size() != l.weights.rows()) {
        throw DimensionMismatch("bias size does not match weight rows");
      }
      for (double w : l.weights.data()) {
        if (!std::isfinite(w)) throw NonFinite("non-finite weight");
      }
      if (!all_finite(l.bias)) throw NonFinite("non-finite bias");
    }
    if (layers_.back().weights.rows() != 1) {
      throw DimensionMismatch("output dimension must be 1");
    }
  }

 private:
  static Layer random_layer(std::size_t out, std::size_t in, Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(in));
    Layer layer{Matrix(out, in), Vector(out)};
    for (double& w : layer.weights.data()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    return layer;
  }

  std::vector<Layer> layers_;
  ActivationKind activation_ = ActivationKind::Softplus;
};

/// Gradient of f-hat with respect to its inputs by the explicit layerwise
/// chain rule. The closed-form counterpart of the tape-based gradient.
inline Vector input_gradient(const Mlp& net, const Vector& input) {
  if (input.size() != net.input_dim()) {
    throw DimensionMismatch("input_gradient: dimension mismatch");
  }
  const auto& layers = net.layers();
  std::vector<Vector> zs;  // pre-activations per layer
  Vector a = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Vector z = matvec(layers[l].weights, a);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += layers[l].bias[i];
    zs.push_back(z);
    if (l + 1 < layers.size()) {
      for (double& x : z) x = softplus(x);
    }
    a = std::move(z);
  }
  Vector delta{1.0};
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& w = layers[l].weights;
    Vector down(w.cols(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) down[j] += w(i, j) * delta[i];
    }
    if (l > 0) {
      for (std::size_t j = 0; j < down.size(); ++j) down[j] *= softplus_prime(zs[l - 1][j]);
    }
    delta = std::move(down);
  }
  return delta;
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

struct Dataset {
  std::vector<Vector> inputs;
  Vector outputs;

  std::size_t size() const { return inputs.size(); }
  std::size_t dim() const { return inputs.empty() ? 0 : inputs.front().size(); }

  void validate() const {
    if (inputs.empty()) throw DimensionMismatch("dataset is empty");
    if (inputs.size() != outputs.size()) {
      throw DimensionMismatch("dataset inputs/outputs length mismatch");
    }
    const std::size_t d = inputs.front().size();
    for (const Vector& v : inputs) {
      if (v.size() != d) throw DimensionMismatch("dataset input dimension varies");
      if (!all_finite(v)) throw NonFinite("non-finite dataset input");
    }
    if (!all_finite(outputs)) throw NonFinite("non-finite dataset output");
  }
};

/// Mean and standard deviation of the outputs (the scale is clamped away
/// from zero so near-constant targets stay trainable).
struct OutputStats {
  double mean = 0.0;
  double scale = 1.0;
};

/// Rescales the outputs in place to zero mean and unit variance. Training
/// surrogates of functions whose ranges differ by orders of magnitude on a
/// common scale is what makes their scores comparable under one threshold;
/// separability itself is unaffected, since g + h stays additively
/// separable under any affine transform of the output.
inline OutputStats standardize_outputs(Dataset& data) {
  OutputStats stats;
  for (double y : data.outputs) stats.mean += y;
  stats.mean /= static_cast<double>(data.outputs.size());
  double var = 0.0;
  for (double y : data.outputs) var += (y - stats.mean) * (y - stats.mean);
  var /= static_cast<double>(data.outputs.size());
  stats.scale = std::sqrt(std::max(var, 1e-12));
  for (double& y : data.outputs) y = (y - stats.mean) / stats.scale;
  return stats;
}

namespace detail {

inline double mse_layers(const std::vector<Layer>& layers, const Dataset& data,
                         const std::vector<std::size_t>& idx) {
  double acc = 0.0;
  for (std::size_t i : idx) {
    const double r = forward_layers(layers, data.inputs[i]) - data.outputs[i];
    acc += r * r;
  }
  return acc / static_cast<double>(idx.size());
}

}  // namespace detail

inline double mse_over(const Mlp& net, const Dataset& data, const std::vector<std::size_t>& idx) {
  return detail::mse_layers(net.layers(), data, idx);
}

inline double mse(const Mlp& net, const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return mse_over(net, data, idx);
}

// ---------------------------------------------------------------------------
// Backpropagation
// ---------------------------------------------------------------------------

/// Same shape as the parameters; entry order mirrors Mlp::layers().
struct Gradients {
  std::vector<Layer> layers;
};

namespace detail {

inline Gradients backward_layers(const std::vector<Layer>& layers, const Dataset& batch) {
  Gradients grads;
  grads.layers.reserve(layers.size());
  for (const Layer& l : layers) {
    grads.layers.push_back(
        {Matrix(l.weights.rows(), l.weights.cols()), Vector(l.bias.size(), 0.0)});
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<Vector> acts(layers.size() + 1);
  std::vector<Vector> zs(layers.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    acts[0] = batch.inputs[s];
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Vector z = matvec(layers[l].weights, acts[l]);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += layers[l].bias[i];
      zs[l] = z;
      if (l + 1 < layers.size()) {
        for (double& x : z) x = softplus(x);
      }
      acts[l + 1] = std::move(z);
    }
    // MSE = mean((f(x) - y)^2): each sample seeds 2 * residual / B.
    Vector delta{2.0 * (acts.back()[0] - batch.outputs[s]) * inv_b};
    for (std::size_t l = layers.size(); l-- > 0;) {
      const Matrix& w = layers[l].weights;
      Matrix& gw = grads.layers[l].weights;
      Vector& gb = grads.layers[l].bias;
      for (std::size_t i = 0; i < w.rows(); ++i) {
        const double di = delta[i];
        gb[i] += di;
        for (std::size_t j = 0; j < w.cols(); ++j) gw(i, j) += di * acts[l][j];
      }
      if (l == 0) break;
      Vector down(w.cols(), 0.0);
      for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) down[j] += w(i, j) * delta[i];
      }
      for (std::size_t j = 0; j < down.size(); ++j) down[j] *= softplus_prime(zs[l - 1][j]);
      delta = std::move(down);
    }
  }
  return grads;
}

}  // namespace detail

/// d(MSE)/d(theta) for every parameter, averaged over the batch.
inline Gradients backward(const Mlp& net, const Dataset& batch) {
  batch.validate();
  if (batch.dim() != net.input_dim()) {
    throw DimensionMismatch("backward: batch dimension does not match network");
  }
  return detail::backward_layers(net.layers(), batch);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 128;  // clamped to the training split size
  std::size_t patience = 500;    // epochs without validation improvement
  double validation_fraction = 0.2;
  std::size_t max_epochs = 50000;  // safety cap
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw Error("validation_fraction must be in (0, 1)");
    }
    if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
    if (patience < 1) throw Error("patience must be >= 1");
    if (batch_size < 1) throw Error("batch_size must be >= 1");
  }
};

struct EpochLoss {
  std::size_t epoch;  // 1-based
  double train_loss;
  double val_loss;
};

struct TrainReport {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();
  double final_training_loss = std::numeric_limits<double>::infinity();
  std::vector<EpochLoss> loss_history;
};

/// Adam (beta1=0.9, beta2=0.999, eps=1e-8) over shuffled mini-batches.
/// The split is the first ceil(validation_fraction * n) samples of one
/// seeded shuffle; training stops once the validation loss has not improved
/// by more than 1e-12 for `patience` consecutive epochs, or at max_epochs.
/// Returns the parameters that achieved the best validation loss.
inline std::pair<Mlp, TrainReport> train(const Mlp& net, const Dataset& data,
                                         const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.dim() != net.input_dim()) {
    throw DimensionMismatch("train: dataset dimension does not match network");
  }
  const std::size_t n = data.size();
  const std::size_t n_val =
      static_cast<std::size_t>(std::ceil(cfg.validation_fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val >= n) {
    throw EmptySplit("dataset of size " + std::to_string(n) +
                     " cannot be split with validation fraction " +
                     std::to_string(cfg.validation_fraction));
  }

  Rng rng(cfg.rng_seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(n_val), order.end());
  const std::size_t batch = std::min(cfg.batch_size, train_idx.size());

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::vector<Layer> params = net.layers();
  std::vector<Layer> m, v;
  for (const Layer& l : params) {
    m.push_back({Matrix(l.weights.rows(), l.weights.cols()), Vector(l.bias.size(), 0.0)});
    v.push_back({Matrix(l.weights.rows(), l.weights.cols()), Vector(l.bias.size(), 0.0)});
  }

  TrainReport report;
  std::vector<Layer> best_params = params;
  std::size_t stale = 0;
  std::size_t adam_step = 0;
  Dataset mini;

  const auto adam_update = [&](double& p, double& mm, double& vv, double g, double corr1,
                               double corr2) {
    mm = kBeta1 * mm + (1.0 - kBeta1) * g;
    vv = kBeta2 * vv + (1.0 - kBeta2) * g * g;
    p -= cfg.learning_rate * (mm / corr1) / (std::sqrt(vv / corr2) + kEps);
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    for (std::size_t start = 0; start < train_idx.size(); start += batch) {
      const std::size_t stop = std::min(start + batch, train_idx.size());
      mini.inputs.clear();
      mini.outputs.clear();
      for (std::size_t k = start; k < stop; ++k) {
        mini.inputs.push_back(data.inputs[train_idx[k]]);
        mini.outputs.push_back(data.outputs[train_idx[k]]);
      }
      const Gradients grads = detail::backward_layers(params, mini);
      ++adam_step;
      const double corr1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam_step));
      const double corr2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam_step));
      for (std::size_t l = 0; l < params.size(); ++l) {
        auto& wd = params[l].weights.data();
        const auto& gw = grads.layers[l].weights.data();
        auto& mw = m[l].weights.data();
        auto& vw = v[l].weights.data();
        for (std::size_t k = 0; k < wd.size(); ++k) {
          adam_update(wd[k], mw[k], vw[k], gw[k], corr1, corr2);
        }
        for (std::size_t k = 0; k < params[l].bias.size(); ++k) {
          adam_update(params[l].bias[k], m[l].bias[k], v[l].bias[k], grads.layers[l].bias[k],
                      corr1, corr2);
        }
      }
    }

    const double train_loss = detail::mse_layers(params, data, train_idx);
    const double val_loss = detail::mse_layers(params, data, val_idx);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw NonFiniteLoss("training diverged at epoch " + std::to_string(epoch) +
                          " (train=" + std::to_string(train_loss) +
                          ", val=" + std::to_string(val_loss) + ")");
    }
    report.loss_history.push_back({epoch, train_loss, val_loss});
    report.epochs_run = epoch;

    if (val_loss < report.best_validation_loss - 1e-12) {
      report.best_validation_loss = val_loss;
      report.best_epoch = epoch;
      best_params = params;
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= cfg.patience) break;
  }

  Mlp best(std::move(best_params), net.activation());
  std::vector<std::size_t> all_train(train_idx.begin(), train_idx.end());
  report.final_training_loss = mse_over(best, data, all_train);
  return {std::move(best), std::move(report)};
}

}  // namespace addsep
