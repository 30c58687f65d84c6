#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "releaseflow/rng.hpp"

namespace releaseflow::nn {

/// Fully connected tanh network mapping (x, t) to a scalar field value u.
/// Hidden layers use tanh; the output layer is affine.
struct MlpArchitecture {
  int input_dim = 2;
  int hidden_layers = 5;
  int neurons_per_layer = 20;
  int output_dim = 1;

  void validate() const;
  int layer_count() const noexcept { return hidden_layers + 1; }
  int fan_in(int layer) const noexcept {
    return layer == 0 ? input_dim : neurons_per_layer;
  }
  int fan_out(int layer) const noexcept {
    return layer == hidden_layers ? output_dim : neurons_per_layer;
  }
  /// Offset of layer `layer`'s block in the flat parameter vector. Each block is
  /// the column-major weight matrix (fan_out x fan_in) followed by the bias.
  Eigen::Index offset(int layer) const noexcept;
  Eigen::Index param_count() const noexcept { return offset(layer_count()); }
  /// Stable 64-bit fingerprint used to tag checkpoints.
  std::uint64_t digest() const noexcept;

  friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

/// Network parameters stored as one flat vector with per-layer views into it.
class MlpParams {
 public:
  explicit MlpParams(const MlpArchitecture& arch);
  MlpParams(const MlpArchitecture& arch, Eigen::VectorXd values);

  static MlpParams unflatten(const MlpArchitecture& arch, const Eigen::VectorXd& values) {
    return MlpParams(arch, values);
  }
  Eigen::VectorXd flatten() const { return values_; }

  const MlpArchitecture& arch() const noexcept { return arch_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  Eigen::VectorXd& values() noexcept { return values_; }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);

 private:
  MlpArchitecture arch_;
  Eigen::VectorXd values_;
};

/// Glorot-normal weights, N(0, 2 / (fan_in + fan_out)); zero biases.
MlpParams init_params(const MlpArchitecture& arch, std::uint64_t seed);

/// One binary keep mask per hidden layer, shared by every input of a pass
/// (a sampled sub-network). Kept units are rescaled by 1 / p_keep.
struct DropoutMask {
  double p_keep = 1.0;
  std::vector<Eigen::VectorXd> keep;

  static DropoutMask sample(const MlpArchitecture& arch, double p_keep, Rng& rng);
  static DropoutMask sample(const MlpArchitecture& arch, double p_keep, std::uint64_t seed);
  static DropoutMask all_kept(const MlpArchitecture& arch, double p_keep);
};

/// Batched evaluation result. u_x is produced as a by-product of u_xx.
struct FieldDerivatives {
  Eigen::RowVectorXd u;
  Eigen::RowVectorXd u_x;
  Eigen::RowVectorXd u_t;
  Eigen::RowVectorXd u_xx;
};

struct PointDerivatives {
  double u = 0.0;
  double u_t = 0.0;
  double u_xx = 0.0;
};

/// Recorded forward pass over a batch of (x, t) points that can be
/// differentiated with respect to the parameters afterwards. With derivatives
/// enabled, the tape carries value, d/dx, d/dt and d2/dx2 streams through every
/// layer so the backward sweep yields exact parameter gradients of any linear
/// functional of (u, u_t, u_xx).
class Tape {
 public:
  Tape(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& xs,
       const Eigen::Ref<const Eigen::VectorXd>& ts, bool with_derivatives,
       const DropoutMask* mask = nullptr);

  Eigen::Index batch_size() const noexcept { return n_; }
  bool has_derivatives() const noexcept { return streams_ == 4; }

  Eigen::RowVectorXd u() const;
  FieldDerivatives derivatives() const;

  /// Adds d/dtheta of sum_i (adj_u[i] u_i + adj_ut[i] u_t,i + adj_uxx[i] u_xx,i)
  /// into `grad`. The derivative adjoints must be empty for a value-only tape.
  void backward(const Eigen::Ref<const Eigen::RowVectorXd>& adj_u,
                const Eigen::Ref<const Eigen::RowVectorXd>& adj_ut,
                const Eigen::Ref<const Eigen::RowVectorXd>& adj_uxx,
                Eigen::Ref<Eigen::VectorXd> grad) const;
  void backward(const Eigen::Ref<const Eigen::RowVectorXd>& adj_u,
                Eigen::Ref<Eigen::VectorXd> grad) const;

 private:
  MlpParams params_;
  Eigen::Index n_ = 0;
  int streams_ = 1;
  std::vector<Eigen::VectorXd> scale_;    // per hidden layer, mask / p_keep
  std::vector<Eigen::MatrixXd> pre_;      // stacked pre-activations per layer
  std::vector<Eigen::MatrixXd> tanh_;     // tanh of the value block, hidden layers
  std::vector<Eigen::MatrixXd> post_;     // stacked layer inputs; post_[0] is the input
  Eigen::MatrixXd output_;                // 1 x (streams * n)
};

Eigen::RowVectorXd forward(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& xs,
                           const Eigen::Ref<const Eigen::VectorXd>& ts,
                           const DropoutMask* mask = nullptr);
double forward(const MlpParams& params, double x, double t, const DropoutMask* mask = nullptr);

/// Gradient of sum_i adjoints[i] * u(x_i, t_i) with respect to the flat parameters.
Eigen::VectorXd grad_params(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& xs,
                            const Eigen::Ref<const Eigen::VectorXd>& ts,
                            const Eigen::Ref<const Eigen::RowVectorXd>& adjoints,
                            const DropoutMask* mask = nullptr);

FieldDerivatives input_derivatives(const MlpParams& params,
                                   const Eigen::Ref<const Eigen::VectorXd>& xs,
                                   const Eigen::Ref<const Eigen::VectorXd>& ts,
                                   const DropoutMask* mask = nullptr);
PointDerivatives input_derivatives(const MlpParams& params, double x, double t);

/// Vectorizable tanh for doubles.
Eigen::ArrayXXd fast_tanh(const Eigen::ArrayXXd& a);

}  // namespace releaseflow::nn
