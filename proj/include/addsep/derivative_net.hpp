#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "addsep/core_math.hpp"
#include "addsep/errors.hpp"
#include "addsep/mlp.hpp"

namespace addsep {

/// A second network whose forward pass evaluates the source network's mixed
/// partial derivative with respect to two chosen inputs. It owns no
/// parameters of its own: every weight is read from the source, so the
/// source must outlive the evaluator and is never modified.
///
/// Each unit carries the quadruple (u, du/dx_i, du/dx_j, d2u/dx_i dx_j).
/// Affine layers propagate all four components linearly; a softplus unit
/// with pre-activation z combines them as
///
///   u''_out = sigma''(z) * z'_i * z'_j + sigma'(z) * z''
///
/// which on a single hidden layer of width three reduces to the familiar
/// per-unit sum of "curvature x slope_i x slope_j" and "slope x carried
/// second derivative" terms.
class DerivativeNet {
 public:
  /// The source is borrowed, not copied; it must outlive the evaluator.
  DerivativeNet(const Mlp&& source, std::size_t first_var, std::size_t second_var) = delete;

  DerivativeNet(const Mlp& source, std::size_t first_var, std::size_t second_var)
      : source_(&source), first_(first_var), second_(second_var) {
    if (first_var == second_var) {
      throw SameVariable("derivative network requires two distinct variables, got index " +
                         std::to_string(first_var) + " twice");
    }
    if (first_var >= source.input_dim() || second_var >= source.input_dim()) {
      throw DimensionMismatch("derivative network: variable index out of range");
    }
    if (source.activation() != ActivationKind::Softplus) {
      throw UnsupportedActivation("derivative network requires softplus hidden activations");
    }
  }

  std::size_t first_var() const { return first_; }
  std::size_t second_var() const { return second_; }
  const Mlp& source() const { return *source_; }

  /// d2 f-hat / d x_i d x_j at `point`.
  double eval(const Vector& point) const {
    if (point.size() != source_->input_dim()) {
      throw DimensionMismatch("derivative network: point dimension " +
                              std::to_string(point.size()) + ", source expects " +
                              std::to_string(source_->input_dim()));
    }
    Vector u = point;
    Vector di(point.size(), 0.0), dj(point.size(), 0.0), dij(point.size(), 0.0);
    di[first_] = 1.0;
    dj[second_] = 1.0;

    const auto& layers = source_->layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Matrix& w = layers[l].weights;
      Vector z = matvec(w, u);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += layers[l].bias[i];
      Vector zi = matvec(w, di);
      Vector zj = matvec(w, dj);
      Vector zij = matvec(w, dij);
      if (l + 1 < layers.size()) {
        Vector next_dij(z.size());
        for (std::size_t k = 0; k < z.size(); ++k) {
          const double sp = softplus_prime(z[k]);
          const double spp = softplus_double_prime(z[k]);
          next_dij[k] = spp * zi[k] * zj[k] + sp * zij[k];
          zi[k] *= sp;
          zj[k] *= sp;
          z[k] = softplus(z[k]);
        }
        dij = std::move(next_dij);
      } else {
        dij = std::move(zij);
      }
      u = std::move(z);
      di = std::move(zi);
      dj = std::move(zj);
    }
    return dij[0];
  }

 private:
  const Mlp* source_;
  std::size_t first_;
  std::size_t second_;
};

inline DerivativeNet build_derivative_network(const Mlp& net, std::size_t i, std::size_t j) {
  return DerivativeNet(net, i, j);
}
inline DerivativeNet build_derivative_network(const Mlp&& net, std::size_t i,
                                              std::size_t j) = delete;

}  // namespace addsep
