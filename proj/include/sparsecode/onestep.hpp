#pragma once

#include <optional>
#include <string_view>

#include "sparsecode/core.hpp"

namespace sparsecode {

// Closed-form, budget-one encoders. Each one equals the first iterate of the
// corresponding solver started from z = 0, computed without an iteration loop.

/// max(0, W^T x - lambda) when non_negative, sign(W^T x) max(0, |W^T x| - lambda) otherwise.
/// This is one proximal gradient step of size 1 from z = 0, and the first SpaRSA step.
CodeBatch encode_soft_threshold(const Dictionary& dictionary, const SignalBatch& signals, double lambda,
                                bool non_negative = true);

/// (1/L) soft_lambda(W^T x): the first FISTA iterate. Throws ArgumentError when L = 0.
CodeBatch encode_fista_onestep(const Dictionary& dictionary, const SignalBatch& signals, double lambda,
                               bool non_negative = true);

/// M = (W^T W + rho I)^{-1} W^T, built through the same cached factorization the
/// ADMM solver uses.
Matrix admm_onestep_operator(const Dictionary& dictionary, double rho);

/// z_k = max(0, mu(x) - ||x - w_k||), mu(x) the mean distance to all atoms.
CodeBatch encode_triangle(const Dictionary& dictionary, const SignalBatch& signals);

/// z_k = max(0, mu2(x) - ||x - w_k||^2). For unit-norm atoms this is
/// 2 max(0, w_k^T x - mean_i w_i^T x).
CodeBatch encode_triangle_squared(const Dictionary& dictionary, const SignalBatch& signals);

/// Dictionary [W, -W]; with non-negative encoders this gives the split encoding.
Dictionary split_dictionary(const Dictionary& dictionary);

enum class OneStepKind { SoftThreshold, FistaScaled, AdmmOneStep, Triangle, TriangleSquared };

std::string_view to_string(OneStepKind kind);

class OneStepEncoder {
 public:
  static OneStepEncoder soft_threshold(Dictionary dictionary, double lambda, bool non_negative = true);
  static OneStepEncoder fista_scaled(Dictionary dictionary, double lambda, bool non_negative = true);
  static OneStepEncoder admm(Dictionary dictionary, double lambda, double rho, bool non_negative = true);
  static OneStepEncoder triangle(Dictionary dictionary);
  static OneStepEncoder triangle_squared(Dictionary dictionary);

  CodeBatch encode(const SignalBatch& signals) const;

  OneStepKind kind() const noexcept { return kind_; }
  const Dictionary& dictionary() const noexcept { return dictionary_; }
  double lambda() const noexcept { return lambda_; }
  std::optional<double> rho() const noexcept { return rho_; }
  bool non_negative() const noexcept { return non_negative_; }
  /// Present exactly for ADMM_ONESTEP.
  const std::optional<Matrix>& precomputed() const noexcept { return precomputed_; }
  /// Set for TRIANGLE_SQUARED over a dictionary that is not unit-norm: the
  /// soft-threshold form of the codes does not apply.
  bool identity_warning() const noexcept { return identity_warning_; }

 private:
  OneStepEncoder(OneStepKind kind, Dictionary dictionary) : kind_(kind), dictionary_(std::move(dictionary)) {}

  OneStepKind kind_;
  Dictionary dictionary_;
  double lambda_ = 0.0;
  std::optional<double> rho_;
  std::optional<Matrix> precomputed_;
  bool non_negative_ = true;
  bool identity_warning_ = false;

  friend CodeBatch encode_admm_onestep(const OneStepEncoder& encoder, const SignalBatch& signals);
};

/// soft_{lambda/rho}(M x). Throws StateError when the encoder has no precomputed M.
CodeBatch encode_admm_onestep(const OneStepEncoder& encoder, const SignalBatch& signals);

}  // namespace sparsecode
